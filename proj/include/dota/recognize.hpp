#pragma once

#include "dota/model.hpp"
#include "dota/retrieval.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dota {

/// Best label path: Viterbi under the learned CRF, or per-position argmax when use_crf is off.
Decoded decode_path(const Emissions& e, const CrfParams& crf, bool use_crf);

/**
 * forward, decode, drop PAD, map to characters, then lexicon correction
 * when a lexicon is given. max_dist defaults to default_max_distance of
 * the decoded string.
 */
std::string recognize(const Tensor& image, const ModelConfig& cfg, const ModelParams& params, bool use_crf,
                      const Lexicon* lexicon = nullptr, std::optional<std::size_t> max_dist = std::nullopt);

/// Fraction of case-insensitive exact matches.
double word_accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& ground_truth);

/**
 * Grad-CAM over the final backbone feature map A [C, H_f, W_f]. The target
 * score is score_sequence of `target` (or of the decoded path when absent);
 * alpha_k is the spatial mean of d(score)/dA_k and the heatmap
 * relu(sum_k alpha_k A_k) is min-max normalized to [0, 1]. A map that is
 * zero everywhere stays zero.
 */
Tensor grad_cam(const Tensor& image, const ModelConfig& cfg, const ModelParams& params, bool use_crf,
                const std::optional<LabelSeq>& target = std::nullopt);

/// Nearest-neighbour upsampling of map [h,w] to [height,width].
Tensor upsample_nearest(const Tensor& map, std::size_t height, std::size_t width);

}  // namespace dota
