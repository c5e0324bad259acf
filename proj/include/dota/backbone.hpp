#pragma once

#include "dota/deform_conv.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dota {

/// Four-stage residual backbone; stages listed in deformable_stages (1-based) use deformable convolutions.
struct BackboneConfig {
    std::vector<std::size_t> channels{16, 32, 64, 64};
    std::vector<std::size_t> strides{1, 2, 2, 2};
    std::set<int> deformable_stages{3, 4};

    void validate() const;
    std::size_t total_stride() const;
};

struct BlockParams {
    ConvKernel conv1;  // 3x3, carries the block stride
    ConvKernel conv2;  // 3x3, stride 1
    std::optional<ConvKernel> shortcut;  // 1x1, present iff the block changes shape
    bool deformable = false;
    std::optional<ConvKernel> offset1;  // predicts conv1 offsets when deformable
    std::optional<ConvKernel> offset2;

    /// Zero-valued block mapping in_channels to out_channels with the given stride.
    static BlockParams zeros(std::size_t in_channels, std::size_t out_channels, std::size_t stride, bool deformable);
    NamedTensors tensors(const std::string& prefix);
};

struct BackboneParams {
    ConvKernel stem;  // 3x3, 1 -> channels[0]
    std::vector<BlockParams> blocks;

    static BackboneParams zeros(const BackboneConfig& cfg);
    /// Glorot-uniform convolution weights, zero biases and zero offset kernels.
    static BackboneParams init(const BackboneConfig& cfg, Prng& rng);
    NamedTensors tensors(const std::string& prefix);
};

struct ConvStageContext {
    ConvContext conv;
    ConvContext offset_conv;
    DeformContext deform;
};

struct BlockContext {
    Tensor input;
    ConvStageContext c1;
    Tensor hidden;  // relu(conv1(x))
    ConvStageContext c2;
    ConvContext shortcut;
    Tensor output;  // after the final relu
};

/// y = relu(conv2(relu(conv1(x))) + shortcut(x)); shortcut is the identity when absent.
Tensor residual_block(const Tensor& x, const BlockParams& params, BlockContext* ctx = nullptr);
/// Accumulates parameter gradients into grads; returns d/dx.
Tensor residual_block_backward(const Tensor& grad_out, const BlockParams& params, const BlockContext& ctx,
                               BlockParams& grads);

struct BackboneContext {
    ConvContext stem;
    Tensor stem_output;
    std::vector<BlockContext> blocks;
    Tensor feature_map;  // [C, H_f, W_f] before height pooling
};

/// Final feature map [C, H_f, W_f] of image [1,H,W].
Tensor backbone_features(const Tensor& image, const BackboneConfig& cfg, const BackboneParams& params,
                         BackboneContext* ctx = nullptr);
/// Mean over height: [C, H_f, W_f] -> [W_f, C].
Tensor pool_height(const Tensor& feature_map);
Tensor pool_height_backward(const Tensor& grad_sequence, const Shape& feature_shape);

/// Image [1,H,W] -> feature sequence [T = W_f, C].
Tensor backbone_forward(const Tensor& image, const BackboneConfig& cfg, const BackboneParams& params,
                        BackboneContext* ctx = nullptr);

/// Backward from d/d(feature_map); accumulates parameter gradients, returns d/d(image).
Tensor backbone_backward_from_map(const Tensor& grad_map, const BackboneParams& params, const BackboneContext& ctx,
                                  BackboneParams& grads);
Tensor backbone_backward(const Tensor& grad_sequence, const BackboneParams& params, const BackboneContext& ctx,
                         BackboneParams& grads);

}  // namespace dota
