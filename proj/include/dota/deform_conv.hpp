#pragma once

#include "dota/tensor.hpp"

#include <span>

namespace dota {

/// Convolution weights [C_out, C_in, k, k] and bias [C_out]; k is odd.
struct ConvKernel {
    Tensor weights;
    Tensor bias;
    std::size_t stride = 1;
    std::size_t padding = 0;

    static ConvKernel zeros(std::size_t out_channels, std::size_t in_channels, std::size_t k,
                            std::size_t stride, std::size_t padding);

    std::size_t out_channels() const { return weights.dim(0); }
    std::size_t in_channels() const { return weights.dim(1); }
    std::size_t size() const { return weights.dim(2); }

    /// Throws ConfigError on an even or non-square kernel or a bias of the wrong length.
    void validate() const;
};

/**
 * Sampling displacements [2*k*k, H_out, W_out]. Channel 2n holds dy and
 * channel 2n+1 holds dx for tap n = i*k + j of the kernel grid.
 */
struct OffsetField {
    Tensor offsets;
};

/// floor((in + 2 padding - k) / stride) + 1; throws ConfigError when the kernel exceeds the padded extent.
std::size_t conv_output_size(std::size_t in, std::size_t k, std::size_t stride, std::size_t padding);

/// Bilinear read of map [H,W] at fractional (y, x); out-of-range neighbours read as zero.
double bilinear_sample(const Tensor& map, double y, double x);
double bilinear_sample(std::span<const double> map, std::size_t height, std::size_t width, double y, double x);

struct ConvContext {
    Tensor columns;  // [C_in*k*k, H_out*W_out]
    Shape input_shape;
    std::size_t out_height = 0;
    std::size_t out_width = 0;
};

struct ConvGrads {
    Tensor input;  // empty when not requested
    Tensor weights;
    Tensor bias;
};

/// Cross-correlation with zero padding plus bias. input [C_in,H,W] -> [C_out,H_out,W_out].
Tensor conv2d(const Tensor& input, const ConvKernel& kernel, ConvContext* ctx = nullptr);
ConvGrads conv2d_backward(const Tensor& grad_out, const ConvKernel& kernel, const ConvContext& ctx,
                          bool need_input = true);

/// Offsets predicted by a plain convolution with 2*k*k output channels and no activation.
OffsetField offset_predict(const Tensor& input, const ConvKernel& offset_kernel, std::size_t main_kernel_size,
                           ConvContext* ctx = nullptr);

struct DeformContext {
    Tensor input;
    Tensor offsets;
    Tensor columns;  // [C_in*k*k, H_out*W_out]
    std::size_t out_height = 0;
    std::size_t out_width = 0;
};

struct DeformGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
    Tensor offsets;
};

/**
 * Deformable convolution. Tap (i, j) of output location (oy, ox) reads
 * input[c] at (oy*stride - padding + i + dy, ox*stride - padding + j + dx)
 * by bilinear interpolation; one (dy, dx) per tap is shared by all input
 * channels.
 */
Tensor deform_conv(const Tensor& input, const ConvKernel& kernel, const OffsetField& offsets,
                   DeformContext* ctx = nullptr);

/**
 * Reverse-mode gradients of deform_conv. The coordinate derivative of a
 * bilinear read uses the floor cell, so at exactly-integer coordinates it
 * is the one-sided derivative towards +y/+x.
 */
DeformGrads deform_conv_backward(const Tensor& grad_out, const ConvKernel& kernel, const DeformContext& ctx);

}  // namespace dota
