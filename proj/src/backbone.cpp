#include "dota/backbone.hpp"

namespace dota {

namespace {

constexpr std::size_t kKernel = 3;

Tensor conv_stage(const Tensor& x, const ConvKernel& kernel, const ConvKernel* offset_kernel, ConvStageContext* ctx) {
    if (!offset_kernel) return conv2d(x, kernel, ctx ? &ctx->conv : nullptr);
    const OffsetField offsets = offset_predict(x, *offset_kernel, kernel.size(), ctx ? &ctx->offset_conv : nullptr);
    return deform_conv(x, kernel, offsets, ctx ? &ctx->deform : nullptr);
}

void accumulate(ConvKernel& grads, const Tensor& weights, const Tensor& bias) {
    grads.weights += weights;
    grads.bias += bias;
}

Tensor conv_stage_backward(const Tensor& grad_out, const ConvKernel& kernel, const ConvKernel* offset_kernel,
                           const ConvStageContext& ctx, ConvKernel& grads, std::optional<ConvKernel>& offset_grads) {
    if (!offset_kernel) {
        auto g = conv2d_backward(grad_out, kernel, ctx.conv);
        accumulate(grads, g.weights, g.bias);
        return std::move(g.input);
    }
    auto g = deform_conv_backward(grad_out, kernel, ctx.deform);
    accumulate(grads, g.weights, g.bias);
    auto go = conv2d_backward(g.offsets, *offset_kernel, ctx.offset_conv);
    accumulate(*offset_grads, go.weights, go.bias);
    g.input += go.input;
    return std::move(g.input);
}

const ConvKernel* offsets_of(const BlockParams& b, const std::optional<ConvKernel>& k) {
    return b.deformable && k ? &*k : nullptr;
}

void init_kernel(ConvKernel& k, Prng& rng) {
    const std::size_t area = k.size() * k.size();
    glorot_uniform(k.weights, k.in_channels() * area, k.out_channels() * area, rng);
}

}  // namespace

void BackboneConfig::validate() const {
    if (channels.empty() || channels.size() != strides.size()) {
        throw ConfigError("backbone needs one stride per stage (" + std::to_string(channels.size()) + " channel counts, " +
                          std::to_string(strides.size()) + " strides)");
    }
    for (auto c : channels)
        if (c == 0) throw ConfigError("backbone channel counts must be positive");
    for (auto s : strides)
        if (s == 0) throw ConfigError("backbone strides must be positive");
    for (int s : deformable_stages) {
        if (s < 1 || s > static_cast<int>(channels.size())) {
            throw ConfigError("deformable stage " + std::to_string(s) + " outside 1.." + std::to_string(channels.size()));
        }
    }
}

std::size_t BackboneConfig::total_stride() const {
    std::size_t s = 1;
    for (auto v : strides) s *= v;
    return s;
}

BlockParams BlockParams::zeros(std::size_t in_channels, std::size_t out_channels, std::size_t stride, bool deformable) {
    BlockParams b;
    b.conv1 = ConvKernel::zeros(out_channels, in_channels, kKernel, stride, 1);
    b.conv2 = ConvKernel::zeros(out_channels, out_channels, kKernel, 1, 1);
    if (in_channels != out_channels || stride != 1) {
        b.shortcut = ConvKernel::zeros(out_channels, in_channels, 1, stride, 0);
    }
    b.deformable = deformable;
    if (deformable) {
        b.offset1 = ConvKernel::zeros(2 * kKernel * kKernel, in_channels, kKernel, stride, 1);
        b.offset2 = ConvKernel::zeros(2 * kKernel * kKernel, out_channels, kKernel, 1, 1);
    }
    return b;
}

NamedTensors BlockParams::tensors(const std::string& prefix) {
    NamedTensors out{{prefix + "conv1.weight", &conv1.weights}, {prefix + "conv1.bias", &conv1.bias},
                     {prefix + "conv2.weight", &conv2.weights}, {prefix + "conv2.bias", &conv2.bias}};
    if (shortcut) {
        out.push_back({prefix + "shortcut.weight", &shortcut->weights});
        out.push_back({prefix + "shortcut.bias", &shortcut->bias});
    }
    if (offset1) {
        out.push_back({prefix + "offset1.weight", &offset1->weights});
        out.push_back({prefix + "offset1.bias", &offset1->bias});
    }
    if (offset2) {
        out.push_back({prefix + "offset2.weight", &offset2->weights});
        out.push_back({prefix + "offset2.bias", &offset2->bias});
    }
    return out;
}

BackboneParams BackboneParams::zeros(const BackboneConfig& cfg) {
    cfg.validate();
    BackboneParams p;
    p.stem = ConvKernel::zeros(cfg.channels[0], 1, kKernel, 1, 1);
    std::size_t in = cfg.channels[0];
    for (std::size_t s = 0; s < cfg.channels.size(); ++s) {
        const bool deformable = cfg.deformable_stages.count(static_cast<int>(s + 1)) > 0;
        p.blocks.push_back(BlockParams::zeros(in, cfg.channels[s], cfg.strides[s], deformable));
        in = cfg.channels[s];
    }
    return p;
}

BackboneParams BackboneParams::init(const BackboneConfig& cfg, Prng& rng) {
    BackboneParams p = zeros(cfg);
    init_kernel(p.stem, rng);
    for (auto& b : p.blocks) {
        init_kernel(b.conv1, rng);
        init_kernel(b.conv2, rng);
        if (b.shortcut) init_kernel(*b.shortcut, rng);
    }
    return p;
}

NamedTensors BackboneParams::tensors(const std::string& prefix) {
    NamedTensors out{{prefix + "stem.weight", &stem.weights}, {prefix + "stem.bias", &stem.bias}};
    for (std::size_t s = 0; s < blocks.size(); ++s) {
        auto part = blocks[s].tensors(prefix + "stage" + std::to_string(s + 1) + ".");
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

Tensor residual_block(const Tensor& x, const BlockParams& params, BlockContext* ctx) {
    if (x.rank() != 3 || x.dim(0) != params.conv1.in_channels()) {
        throw DimensionError("residual block input " + shape_string(x.shape()) + " vs conv1 " +
                             shape_string(params.conv1.weights.shape()));
    }
    const ConvKernel* off1 = offsets_of(params, params.offset1);
    const ConvKernel* off2 = offsets_of(params, params.offset2);
    Tensor hidden = relu(conv_stage(x, params.conv1, off1, ctx ? &ctx->c1 : nullptr));
    Tensor out = conv_stage(hidden, params.conv2, off2, ctx ? &ctx->c2 : nullptr);
    if (params.shortcut) {
        out += conv2d(x, *params.shortcut, ctx ? &ctx->shortcut : nullptr);
    } else {
        if (out.shape() != x.shape()) {
            throw DimensionError("identity shortcut needs matching shapes, got " + shape_string(x.shape()) + " -> " +
                                 shape_string(out.shape()));
        }
        out += x;
    }
    out = relu(out);
    if (ctx) {
        ctx->input = x;
        ctx->hidden = std::move(hidden);
        ctx->output = out;
    }
    return out;
}

Tensor residual_block_backward(const Tensor& grad_out, const BlockParams& params, const BlockContext& ctx,
                               BlockParams& grads) {
    const Tensor g = relu_backward(grad_out, ctx.output);
    const ConvKernel* off1 = offsets_of(params, params.offset1);
    const ConvKernel* off2 = offsets_of(params, params.offset2);

    Tensor g_hidden = conv_stage_backward(g, params.conv2, off2, ctx.c2, grads.conv2, grads.offset2);
    g_hidden = relu_backward(g_hidden, ctx.hidden);
    Tensor gx = conv_stage_backward(g_hidden, params.conv1, off1, ctx.c1, grads.conv1, grads.offset1);
    if (params.shortcut) {
        auto gs = conv2d_backward(g, *params.shortcut, ctx.shortcut);
        accumulate(*grads.shortcut, gs.weights, gs.bias);
        gx += gs.input;
    } else {
        gx += g;
    }
    return gx;
}

Tensor backbone_features(const Tensor& image, const BackboneConfig& cfg, const BackboneParams& params,
                         BackboneContext* ctx) {
    if (image.rank() != 3 || image.dim(0) != 1) {
        throw DimensionError("backbone expects a [1,H,W] image, got " + shape_string(image.shape()));
    }
    const std::size_t stride = cfg.total_stride();
    if (image.dim(1) % stride != 0 || image.dim(2) % stride != 0) {
        throw ConfigError("image " + shape_string(image.shape()) + " is not divisible by the backbone stride " +
                          std::to_string(stride));
    }
    if (params.blocks.size() != cfg.channels.size()) throw ConfigError("backbone parameters do not match config");

    Tensor h = relu(conv2d(image, params.stem, ctx ? &ctx->stem : nullptr));
    if (ctx) {
        ctx->stem_output = h;
        ctx->blocks.assign(params.blocks.size(), {});
    }
    for (std::size_t s = 0; s < params.blocks.size(); ++s) {
        h = residual_block(h, params.blocks[s], ctx ? &ctx->blocks[s] : nullptr);
    }
    if (ctx) ctx->feature_map = h;
    return h;
}

Tensor pool_height(const Tensor& feature_map) {
    const std::size_t c = feature_map.dim(0), h = feature_map.dim(1), w = feature_map.dim(2);
    Tensor seq({w, c});
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) seq(x, ch) += feature_map(ch, y, x);
    seq *= 1.0 / static_cast<double>(h);
    return seq;
}

Tensor pool_height_backward(const Tensor& grad_sequence, const Shape& feature_shape) {
    const std::size_t c = feature_shape[0], h = feature_shape[1], w = feature_shape[2];
    if (grad_sequence.shape() != Shape{w, c}) {
        throw DimensionError("pooled gradient " + shape_string(grad_sequence.shape()) + " vs feature map " +
                             shape_string(feature_shape));
    }
    Tensor g(feature_shape);
    const double inv = 1.0 / static_cast<double>(h);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) g(ch, y, x) = grad_sequence(x, ch) * inv;
    return g;
}

Tensor backbone_forward(const Tensor& image, const BackboneConfig& cfg, const BackboneParams& params,
                        BackboneContext* ctx) {
    return pool_height(backbone_features(image, cfg, params, ctx));
}

Tensor backbone_backward_from_map(const Tensor& grad_map, const BackboneParams& params, const BackboneContext& ctx,
                                  BackboneParams& grads) {
    Tensor g = grad_map;
    for (std::size_t s = params.blocks.size(); s-- > 0;) {
        g = residual_block_backward(g, params.blocks[s], ctx.blocks[s], grads.blocks[s]);
    }
    g = relu_backward(g, ctx.stem_output);
    auto gs = conv2d_backward(g, params.stem, ctx.stem);
    accumulate(grads.stem, gs.weights, gs.bias);
    return std::move(gs.input);
}

Tensor backbone_backward(const Tensor& grad_sequence, const BackboneParams& params, const BackboneContext& ctx,
                         BackboneParams& grads) {
    return backbone_backward_from_map(pool_height_backward(grad_sequence, ctx.feature_map.shape()), params, ctx,
                                      grads);
}

}  // namespace dota
