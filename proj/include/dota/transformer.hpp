#pragma once

#include "dota/dropout.hpp"
#include "dota/tensor.hpp"

#include <string>
#include <vector>

namespace dota {

struct EncoderConfig {
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t d_model = 64;
    std::size_t d_ff = 128;
    double ln_eps = 1e-5;

    void validate() const;
    std::size_t head_dim() const { return d_model / heads; }
};

/// One pre-norm encoder layer. Projections act on row vectors: y = x W + b.
struct EncoderLayerParams {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;  // [d,d] and [d]
    Tensor w1, b1;                          // [d,d_ff], [d_ff]
    Tensor w2, b2;                          // [d_ff,d], [d]
    Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;

    static EncoderLayerParams zeros(const EncoderConfig& cfg);
    NamedTensors tensors(const std::string& prefix);
};

struct EncoderParams {
    EncoderConfig config;
    std::vector<EncoderLayerParams> layers;

    /// Glorot-uniform projections, zero biases, unit layer-norm gains.
    static EncoderParams init(const EncoderConfig& cfg, Prng& rng);
    static EncoderParams zeros(const EncoderConfig& cfg);
    NamedTensors tensors(const std::string& prefix);
};

/// PE[t,2i] = sin(t / 10000^(2i/d)), PE[t,2i+1] = cos(t / 10000^(2i/d)).
Tensor sinusoidal_pe(std::size_t steps, std::size_t d);

struct AttentionContext {
    Tensor input;
    Tensor q, k, v;
    std::vector<Tensor> weights;  // per head, [T,T]
    Tensor concat;                // heads side by side before Wo
};

/// Bidirectional multi-head self-attention of layer `layer` on X [T,d].
Tensor multi_head_attention(const Tensor& x, const EncoderParams& params, std::size_t layer,
                            AttentionContext* ctx = nullptr);
/// Accumulates parameter gradients into grads.layers[layer]; returns d/dX.
Tensor multi_head_attention_backward(const Tensor& grad_out, const EncoderParams& params, std::size_t layer,
                                     const AttentionContext& ctx, EncoderParams& grads);

struct EncoderLayerContext {
    LayerNormContext ln1;
    AttentionContext attention;
    Tensor attention_mask;
    LayerNormContext ln2;
    Tensor ffn_input;
    Tensor ffn_hidden;  // relu output
    Tensor ffn_mask;
};

struct EncoderContext {
    std::vector<EncoderLayerContext> layers;
    double dropout_rate = 0.0;
    bool dropout_active = false;
};

/**
 * N pre-norm layers: X += drop(MHA(LN1(X))); X += drop(FFN(LN2(X))) with
 * FFN(x) = relu(x W1 + b1) W2 + b2. X must already carry the positional
 * encoding.
 */
Tensor encoder_forward(const Tensor& x, const EncoderParams& params, DropoutSites& dropout,
                       EncoderContext* ctx = nullptr);
Tensor encoder_forward(const Tensor& x, const EncoderParams& params);
/// Accumulates parameter gradients into grads; returns d/dX.
Tensor encoder_backward(const Tensor& grad_out, const EncoderParams& params, const EncoderContext& ctx,
                        EncoderParams& grads);

}  // namespace dota
