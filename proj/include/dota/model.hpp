#pragma once

#include "dota/alphabet.hpp"
#include "dota/backbone.hpp"
#include "dota/crf.hpp"
#include "dota/dropout.hpp"
#include "dota/transformer.hpp"

#include <cstdint>

namespace dota {

struct ModelConfig {
    std::size_t image_height = 32;
    std::size_t image_width = 128;
    BackboneConfig backbone;
    EncoderConfig encoder;
    std::size_t labels = kAlphabetSize;

    void validate() const;
    /// Output positions T = image_width / total backbone stride.
    std::size_t sequence_length() const;
    std::size_t feature_channels() const { return backbone.channels.back(); }
};

/// Every learnable tensor of the recognizer plus the dropout controller state.
struct ModelParams {
    BackboneParams backbone;
    Tensor embed;        // [C_last, d]
    EncoderParams encoder;
    Tensor head_weight;  // [d, L]
    Tensor head_bias;    // [L]
    CrfParams crf;
    AdaptiveDropoutState dropout;

    static ModelParams zeros(const ModelConfig& cfg);
    /// Seeded Glorot initialization; biases, the CRF and the offset kernels start at zero.
    static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);

    /// Learnable tensors in a fixed order with stable names.
    NamedTensors tensors();
};

struct ForwardContext {
    BackboneContext backbone;
    Tensor features;  // [T, C_last]
    EncoderContext encoder;
    Tensor encoded;    // encoder output before head dropout
    Tensor head_input;  // after head dropout
    Tensor head_mask;
    bool dropout_active = false;
    double dropout_rate = 0.0;
};

/**
 * image [1,H,W] -> emissions [T, L]: backbone, linear embedding, sinusoidal
 * position encoding, encoder, dropout, linear head. Dropout sites are
 * active iff `dropout` is in training mode.
 */
Emissions forward(const Tensor& image, const ModelConfig& cfg, const ModelParams& params, DropoutSites& dropout,
                  ForwardContext* ctx = nullptr);
/// Evaluation-mode forward.
Emissions forward(const Tensor& image, const ModelConfig& cfg, const ModelParams& params);

/// Backward from d/d(emissions) to d/d(final backbone feature map), accumulating head/encoder/embedding gradients.
Tensor backward_to_features(const Tensor& grad_emissions, const ModelParams& params, const ForwardContext& ctx,
                            ModelParams& grads);
/// Full backward into grads (all groups except the CRF, which the loss handles).
void backward(const Tensor& grad_emissions, const ModelParams& params, const ForwardContext& ctx, ModelParams& grads);

/// Sum over positions of softmax cross-entropy; fills grad when given.
double cross_entropy(const Emissions& e, std::span<const int> labels, Tensor* grad = nullptr);

/**
 * Per-sample training loss (CRF nll, or cross-entropy when use_crf is off)
 * for `labels`; accumulates every parameter gradient into grads.
 */
double loss_and_grad(const Tensor& image, std::span<const int> labels, const ModelConfig& cfg,
                     const ModelParams& params, bool use_crf, DropoutSites& dropout, ModelParams& grads);

/// Loss only, evaluation mode.
double sample_loss(const Tensor& image, std::span<const int> labels, const ModelConfig& cfg, const ModelParams& params,
                   bool use_crf);

}  // namespace dota
