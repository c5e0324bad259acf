#include "dota/model.hpp"

#include <cmath>

namespace dota {

void ModelConfig::validate() const {
    backbone.validate();
    encoder.validate();
    if (labels < 2) throw ConfigError("model needs at least two labels");
    const std::size_t stride = backbone.total_stride();
    if (image_height == 0 || image_width == 0 || image_height % stride != 0 || image_width % stride != 0) {
        throw ConfigError("image " + std::to_string(image_height) + "x" + std::to_string(image_width) +
                          " is not divisible by the backbone stride " + std::to_string(stride));
    }
}

std::size_t ModelConfig::sequence_length() const { return image_width / backbone.total_stride(); }

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
    cfg.validate();
    ModelParams p;
    p.backbone = BackboneParams::zeros(cfg.backbone);
    p.embed = Tensor({cfg.feature_channels(), cfg.encoder.d_model});
    p.encoder = EncoderParams::zeros(cfg.encoder);
    p.head_weight = Tensor({cfg.encoder.d_model, cfg.labels});
    p.head_bias = Tensor({cfg.labels});
    p.crf = CrfParams::zeros(cfg.labels);
    return p;
}

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ModelParams p;
    Prng rng(seed);
    p.backbone = BackboneParams::init(cfg.backbone, rng);
    p.embed = Tensor({cfg.feature_channels(), cfg.encoder.d_model});
    glorot_uniform(p.embed, cfg.feature_channels(), cfg.encoder.d_model, rng);
    p.encoder = EncoderParams::init(cfg.encoder, rng);
    p.head_weight = Tensor({cfg.encoder.d_model, cfg.labels});
    glorot_uniform(p.head_weight, cfg.encoder.d_model, cfg.labels, rng);
    p.head_bias = Tensor({cfg.labels});
    p.crf = CrfParams::zeros(cfg.labels);
    return p;
}

NamedTensors ModelParams::tensors() {
    NamedTensors out = backbone.tensors("backbone.");
    out.push_back({"embed", &embed});
    auto enc = encoder.tensors("encoder.");
    out.insert(out.end(), enc.begin(), enc.end());
    out.push_back({"head.weight", &head_weight});
    out.push_back({"head.bias", &head_bias});
    auto crf_tensors = crf.tensors("crf.");
    out.insert(out.end(), crf_tensors.begin(), crf_tensors.end());
    return out;
}

Emissions forward(const Tensor& image, const ModelConfig& cfg, const ModelParams& params, DropoutSites& dropout,
                  ForwardContext* ctx) {
    if (image.shape() != Shape{1, cfg.image_height, cfg.image_width}) {
        throw DimensionError("image " + shape_string(image.shape()) + ", expected [1," +
                             std::to_string(cfg.image_height) + "," + std::to_string(cfg.image_width) + "]");
    }
    Tensor features = backbone_forward(image, cfg.backbone, params.backbone, ctx ? &ctx->backbone : nullptr);
    Tensor x = matmul(features, params.embed);
    x += sinusoidal_pe(x.dim(0), cfg.encoder.d_model);
    Tensor encoded = encoder_forward(x, params.encoder, dropout, ctx ? &ctx->encoder : nullptr);
    Tensor head_mask;
    Tensor head_input = dropout.apply(encoded, ctx ? &head_mask : nullptr);
    Tensor e = matmul(head_input, params.head_weight);
    add_row_bias(e, params.head_bias);
    if (ctx) {
        ctx->features = std::move(features);
        ctx->encoded = std::move(encoded);
        ctx->head_input = std::move(head_input);
        ctx->head_mask = std::move(head_mask);
        ctx->dropout_active = dropout.training();
        ctx->dropout_rate = dropout.rate();
    }
    return e;
}

Emissions forward(const Tensor& image, const ModelConfig& cfg, const ModelParams& params) {
    DropoutSites off = DropoutSites::inactive();
    return forward(image, cfg, params, off);
}

Tensor backward_to_features(const Tensor& grad_emissions, const ModelParams& params, const ForwardContext& ctx,
                            ModelParams& grads) {
    grads.head_weight += matmul_tn(ctx.head_input, grad_emissions);
    grads.head_bias += sum_rows(grad_emissions);
    Tensor g = matmul_nt(grad_emissions, params.head_weight);
    if (ctx.dropout_active) g = dropout_backward(g, ctx.head_mask, ctx.dropout_rate);
    g = encoder_backward(g, params.encoder, ctx.encoder, grads.encoder);
    grads.embed += matmul_tn(ctx.features, g);
    return pool_height_backward(matmul_nt(g, params.embed), ctx.backbone.feature_map.shape());
}

void backward(const Tensor& grad_emissions, const ModelParams& params, const ForwardContext& ctx, ModelParams& grads) {
    const Tensor grad_map = backward_to_features(grad_emissions, params, ctx, grads);
    backbone_backward_from_map(grad_map, params.backbone, ctx.backbone, grads.backbone);
}

double cross_entropy(const Emissions& e, std::span<const int> labels, Tensor* grad) {
    if (labels.size() != e.dim(0)) {
        throw DimensionError("label sequence of length " + std::to_string(labels.size()) + " vs " +
                             std::to_string(e.dim(0)) + " timesteps");
    }
    const Tensor probs = softmax_rows(e);
    double loss = 0.0;
    for (std::size_t t = 0; t < labels.size(); ++t) {
        auto row = e.row(t);
        const double lse = log_sum_exp(row);
        loss += lse - row[static_cast<std::size_t>(labels[t])];
    }
    if (grad) {
        *grad = probs;
        for (std::size_t t = 0; t < labels.size(); ++t) (*grad)(t, static_cast<std::size_t>(labels[t])) -= 1.0;
    }
    return loss;
}

double loss_and_grad(const Tensor& image, std::span<const int> labels, const ModelConfig& cfg,
                     const ModelParams& params, bool use_crf, DropoutSites& dropout, ModelParams& grads) {
    ForwardContext ctx;
    const Emissions e = forward(image, cfg, params, dropout, &ctx);
    Tensor grad_e;
    double loss = 0.0;
    if (use_crf) {
        CrfGrads cg;
        loss = nll_with_grad(e, labels, params.crf, cg);
        grads.crf.transitions += cg.transitions;
        grads.crf.start += cg.start;
        grads.crf.end += cg.end;
        grad_e = std::move(cg.emissions);
    } else {
        loss = cross_entropy(e, labels, &grad_e);
    }
    backward(grad_e, params, ctx, grads);
    return loss;
}

double sample_loss(const Tensor& image, std::span<const int> labels, const ModelConfig& cfg, const ModelParams& params,
                   bool use_crf) {
    const Emissions e = forward(image, cfg, params);
    return use_crf ? nll(e, labels, params.crf) : cross_entropy(e, labels);
}

}  // namespace dota
