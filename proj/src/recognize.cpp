#include "dota/recognize.hpp"

#include <algorithm>

namespace dota {

Decoded decode_path(const Emissions& e, const CrfParams& crf, bool use_crf) {
    if (use_crf) return viterbi(e, crf);
    return viterbi(e, CrfParams::zeros(e.dim(1)));
}

std::string recognize(const Tensor& image, const ModelConfig& cfg, const ModelParams& params, bool use_crf,
                      const Lexicon* lexicon, std::optional<std::size_t> max_dist) {
    const Emissions e = forward(image, cfg, params);
    std::string text = decode_labels(decode_path(e, params.crf, use_crf).labels);
    if (lexicon) text = correct(text, *lexicon, max_dist.value_or(default_max_distance(text)));
    return text;
}

double word_accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& ground_truth) {
    if (predictions.size() != ground_truth.size()) {
        throw DimensionError("word_accuracy: " + std::to_string(predictions.size()) + " predictions vs " +
                             std::to_string(ground_truth.size()) + " references");
    }
    if (predictions.empty()) throw DimensionError("word_accuracy needs at least one prediction");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (fold_case(predictions[i]) == fold_case(ground_truth[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

Tensor grad_cam(const Tensor& image, const ModelConfig& cfg, const ModelParams& params, bool use_crf,
                const std::optional<LabelSeq>& target) {
    DropoutSites off = DropoutSites::inactive();
    ForwardContext ctx;
    const Emissions e = forward(image, cfg, params, off, &ctx);
    const LabelSeq path = target ? *target : decode_path(e, params.crf, use_crf).labels;
    if (path.size() != e.dim(0)) {
        throw DimensionError("Grad-CAM target of length " + std::to_string(path.size()) + " vs " +
                             std::to_string(e.dim(0)) + " positions");
    }

    // The sequence score is linear in the emissions: d(score)/d(e) is the path's one-hot matrix.
    Tensor grad_e(e.shape());
    for (std::size_t t = 0; t < path.size(); ++t) grad_e(t, static_cast<std::size_t>(path[t])) = 1.0;
    ModelParams scratch = ModelParams::zeros(cfg);
    const Tensor grad_map = backward_to_features(grad_e, params, ctx, scratch);

    const Tensor& features = ctx.backbone.feature_map;
    const std::size_t channels = features.dim(0), h = features.dim(1), w = features.dim(2);
    Tensor heat({h, w});
    for (std::size_t c = 0; c < channels; ++c) {
        double alpha = 0.0;
        for (std::size_t i = 0; i < h * w; ++i) alpha += grad_map[c * h * w + i];
        alpha /= static_cast<double>(h * w);
        for (std::size_t i = 0; i < h * w; ++i) heat[i] += alpha * features[c * h * w + i];
    }
    heat = relu(heat);
    const auto [lo, hi] = std::minmax_element(heat.values().begin(), heat.values().end());
    const double low = *lo, range = *hi - *lo;
    if (range > 0.0) {
        for (auto& v : heat.values()) v = (v - low) / range;
    } else {
        heat.fill(0.0);
    }
    return heat;
}

Tensor upsample_nearest(const Tensor& map, std::size_t height, std::size_t width) {
    if (map.rank() != 2) throw DimensionError("upsample_nearest expects [h,w], got " + shape_string(map.shape()));
    Tensor out({height, width});
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) out(y, x) = map(y * map.dim(0) / height, x * map.dim(1) / width);
    return out;
}

}  // namespace dota
