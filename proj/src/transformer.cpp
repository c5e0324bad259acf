#include "dota/transformer.hpp"

#include <cmath>

namespace dota {

namespace {

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    Tensor y = matmul(x, w);
    add_row_bias(y, b);
    return y;
}

Tensor head_slice(const Tensor& x, std::size_t head, std::size_t dh) {
    const std::size_t rows = x.dim(0);
    Tensor s({rows, dh});
    for (std::size_t t = 0; t < rows; ++t)
        for (std::size_t j = 0; j < dh; ++j) s(t, j) = x(t, head * dh + j);
    return s;
}

void head_scatter(Tensor& x, const Tensor& part, std::size_t head, std::size_t dh) {
    for (std::size_t t = 0; t < part.dim(0); ++t)
        for (std::size_t j = 0; j < dh; ++j) x(t, head * dh + j) += part(t, j);
}

// Accumulates the gradients of y = x W + b and returns d/dx.
Tensor linear_backward(const Tensor& grad_out, const Tensor& x, const Tensor& w, Tensor& grad_w, Tensor& grad_b) {
    grad_w += matmul_tn(x, grad_out);
    grad_b += sum_rows(grad_out);
    return matmul_nt(grad_out, w);
}

}  // namespace

void EncoderConfig::validate() const {
    if (heads == 0 || d_model == 0 || d_model % heads != 0) {
        throw ConfigError("model dim " + std::to_string(d_model) + " is not divisible by " + std::to_string(heads) +
                          " heads");
    }
    if (d_model % 2 != 0) throw ConfigError("model dim must be even for sinusoidal position encoding");
    if (d_ff == 0) throw ConfigError("feed-forward width must be positive");
    if (!(ln_eps > 0.0)) throw ConfigError("layer-norm eps must be positive");
}

EncoderLayerParams EncoderLayerParams::zeros(const EncoderConfig& cfg) {
    const std::size_t d = cfg.d_model, f = cfg.d_ff;
    EncoderLayerParams p;
    p.wq = p.wk = p.wv = p.wo = Tensor({d, d});
    p.bq = p.bk = p.bv = p.bo = Tensor({d});
    p.w1 = Tensor({d, f});
    p.b1 = Tensor({f});
    p.w2 = Tensor({f, d});
    p.b2 = Tensor({d});
    p.ln1_gain = p.ln1_bias = p.ln2_gain = p.ln2_bias = Tensor({d});
    return p;
}

NamedTensors EncoderLayerParams::tensors(const std::string& prefix) {
    return {
        {prefix + "wq", &wq}, {prefix + "bq", &bq}, {prefix + "wk", &wk}, {prefix + "bk", &bk},
        {prefix + "wv", &wv}, {prefix + "bv", &bv}, {prefix + "wo", &wo}, {prefix + "bo", &bo},
        {prefix + "w1", &w1}, {prefix + "b1", &b1}, {prefix + "w2", &w2}, {prefix + "b2", &b2},
        {prefix + "ln1.gain", &ln1_gain}, {prefix + "ln1.bias", &ln1_bias},
        {prefix + "ln2.gain", &ln2_gain}, {prefix + "ln2.bias", &ln2_bias},
    };
}

EncoderParams EncoderParams::zeros(const EncoderConfig& cfg) {
    cfg.validate();
    EncoderParams p{cfg, {}};
    for (std::size_t l = 0; l < cfg.layers; ++l) p.layers.push_back(EncoderLayerParams::zeros(cfg));
    return p;
}

EncoderParams EncoderParams::init(const EncoderConfig& cfg, Prng& rng) {
    EncoderParams p = zeros(cfg);
    const std::size_t d = cfg.d_model, f = cfg.d_ff;
    for (auto& layer : p.layers) {
        for (Tensor* w : {&layer.wq, &layer.wk, &layer.wv, &layer.wo}) glorot_uniform(*w, d, d, rng);
        glorot_uniform(layer.w1, d, f, rng);
        glorot_uniform(layer.w2, f, d, rng);
        layer.ln1_gain.fill(1.0);
        layer.ln2_gain.fill(1.0);
    }
    return p;
}

NamedTensors EncoderParams::tensors(const std::string& prefix) {
    NamedTensors out;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto part = layers[l].tensors(prefix + "layer" + std::to_string(l) + ".");
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

Tensor sinusoidal_pe(std::size_t steps, std::size_t d) {
    if (d == 0 || d % 2 != 0) throw ConfigError("positional encoding width must be even, got " + std::to_string(d));
    Tensor pe({steps, d});
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t i = 0; i < d / 2; ++i) {
            const double angle =
                static_cast<double>(t) / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d));
            pe(t, 2 * i) = std::sin(angle);
            pe(t, 2 * i + 1) = std::cos(angle);
        }
    }
    return pe;
}

Tensor multi_head_attention(const Tensor& x, const EncoderParams& params, std::size_t layer, AttentionContext* ctx) {
    const auto& cfg = params.config;
    if (x.rank() != 2 || x.dim(1) != cfg.d_model) {
        throw DimensionError("attention input " + shape_string(x.shape()) + " vs model dim " +
                             std::to_string(cfg.d_model));
    }
    const auto& p = params.layers.at(layer);
    const std::size_t steps = x.dim(0), dh = cfg.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor q = linear(x, p.wq, p.bq);
    Tensor k = linear(x, p.wk, p.bk);
    Tensor v = linear(x, p.wv, p.bv);
    Tensor concat({steps, cfg.d_model});
    std::vector<Tensor> weights;
    weights.reserve(cfg.heads);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
        Tensor scores = matmul_nt(head_slice(q, h, dh), head_slice(k, h, dh));
        scores *= scale;
        Tensor a = softmax_rows(scores);
        head_scatter(concat, matmul(a, head_slice(v, h, dh)), h, dh);
        weights.push_back(std::move(a));
    }
    Tensor out = linear(concat, p.wo, p.bo);
    if (ctx) {
        ctx->input = x;
        ctx->q = std::move(q);
        ctx->k = std::move(k);
        ctx->v = std::move(v);
        ctx->weights = std::move(weights);
        ctx->concat = std::move(concat);
    }
    return out;
}

Tensor multi_head_attention_backward(const Tensor& grad_out, const EncoderParams& params, std::size_t layer,
                                     const AttentionContext& ctx, EncoderParams& grads) {
    const auto& cfg = params.config;
    const auto& p = params.layers.at(layer);
    auto& g = grads.layers.at(layer);
    const std::size_t steps = ctx.input.dim(0), dh = cfg.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    const Tensor grad_concat = linear_backward(grad_out, ctx.concat, p.wo, g.wo, g.bo);
    Tensor gq({steps, cfg.d_model}), gk({steps, cfg.d_model}), gv({steps, cfg.d_model});
    for (std::size_t h = 0; h < cfg.heads; ++h) {
        const Tensor& a = ctx.weights[h];
        const Tensor go = head_slice(grad_concat, h, dh);
        const Tensor vh = head_slice(ctx.v, h, dh);
        head_scatter(gv, matmul_tn(a, go), h, dh);
        Tensor gs = softmax_rows_backward(a, matmul_nt(go, vh));
        gs *= scale;
        head_scatter(gq, matmul(gs, head_slice(ctx.k, h, dh)), h, dh);
        head_scatter(gk, matmul_tn(gs, head_slice(ctx.q, h, dh)), h, dh);
    }
    Tensor gx = linear_backward(gq, ctx.input, p.wq, g.wq, g.bq);
    gx += linear_backward(gk, ctx.input, p.wk, g.wk, g.bk);
    gx += linear_backward(gv, ctx.input, p.wv, g.wv, g.bv);
    return gx;
}

Tensor encoder_forward(const Tensor& x, const EncoderParams& params, DropoutSites& dropout, EncoderContext* ctx) {
    const auto& cfg = params.config;
    if (x.rank() != 2 || x.dim(1) != cfg.d_model) {
        throw DimensionError("encoder input " + shape_string(x.shape()) + " vs model dim " +
                             std::to_string(cfg.d_model));
    }
    if (ctx) {
        ctx->layers.assign(params.layers.size(), {});
        ctx->dropout_rate = dropout.rate();
        ctx->dropout_active = dropout.training();
    }
    Tensor h = x;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& p = params.layers[l];
        EncoderLayerContext* lc = ctx ? &ctx->layers[l] : nullptr;

        Tensor normed = layer_norm_rows(h, p.ln1_gain, p.ln1_bias, cfg.ln_eps, lc ? &lc->ln1 : nullptr);
        Tensor att = dropout.apply(multi_head_attention(normed, params, l, lc ? &lc->attention : nullptr),
                                   lc ? &lc->attention_mask : nullptr);
        h += att;

        Tensor normed2 = layer_norm_rows(h, p.ln2_gain, p.ln2_bias, cfg.ln_eps, lc ? &lc->ln2 : nullptr);
        Tensor hidden = relu(linear(normed2, p.w1, p.b1));
        Tensor ffn = dropout.apply(linear(hidden, p.w2, p.b2), lc ? &lc->ffn_mask : nullptr);
        if (lc) {
            lc->ffn_input = std::move(normed2);
            lc->ffn_hidden = std::move(hidden);
        }
        h += ffn;
    }
    return h;
}

Tensor encoder_forward(const Tensor& x, const EncoderParams& params) {
    DropoutSites off = DropoutSites::inactive();
    return encoder_forward(x, params, off);
}

Tensor encoder_backward(const Tensor& grad_out, const EncoderParams& params, const EncoderContext& ctx,
                        EncoderParams& grads) {
    Tensor g = grad_out;
    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const auto& p = params.layers[l];
        auto& gp = grads.layers[l];
        const auto& lc = ctx.layers[l];

        Tensor g_ffn = ctx.dropout_active ? dropout_backward(g, lc.ffn_mask, ctx.dropout_rate) : g;
        Tensor g_hidden = relu_backward(linear_backward(g_ffn, lc.ffn_hidden, p.w2, gp.w2, gp.b2), lc.ffn_hidden);
        Tensor g_normed2 = linear_backward(g_hidden, lc.ffn_input, p.w1, gp.w1, gp.b1);
        auto ln2 = layer_norm_rows_backward(g_normed2, p.ln2_gain, lc.ln2);
        gp.ln2_gain += ln2.gain;
        gp.ln2_bias += ln2.bias;
        g += ln2.input;

        Tensor g_att = ctx.dropout_active ? dropout_backward(g, lc.attention_mask, ctx.dropout_rate) : g;
        Tensor g_normed = multi_head_attention_backward(g_att, params, l, lc.attention, grads);
        auto ln1 = layer_norm_rows_backward(g_normed, p.ln1_gain, lc.ln1);
        gp.ln1_gain += ln1.gain;
        gp.ln1_bias += ln1.bias;
        g += ln1.input;
    }
    return g;
}

}  // namespace dota
