#pragma once

#include "dota/tensor.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace dota {

inline constexpr std::size_t kImageHeight = 32;
inline constexpr std::size_t kImageWidth = 128;
inline constexpr std::size_t kGlyphWidth = 5;
inline constexpr std::size_t kGlyphHeight = 7;
inline constexpr std::size_t kGlyphSpacing = 2;
inline constexpr std::size_t kLeftMargin = 4;
inline constexpr double kBackgroundLevel = 0.2;
inline constexpr double kInkLevel = 0.8;

/// Word image [1,32,128] in [0,1] and its text.
struct Sample {
    Tensor image;
    std::string text;
};

/// Distortions applied in order: jitter, shear, noise, contrast.
struct DistortConfig {
    int jitter_px = 3;          // horizontal shift drawn from [-jitter_px, jitter_px]
    double shear = 0.25;        // slant drawn from [-shear, shear]
    double noise_sigma = 0.1;   // Gaussian pixel noise, at most 0.15
    double contrast_min = 0.6;  // contrast factor drawn from [contrast_min, contrast_max]
    double contrast_max = 1.0;

    static DistortConfig none() { return {0, 0.0, 0.0, 1.0, 1.0}; }
    void validate() const;
};

/// Seven rows of a 5x7 glyph, bit 4 is the leftmost column.
const std::array<std::uint8_t, kGlyphHeight>& glyph_rows(char c);

/// Ink mask of the undistorted word, [32,128], 1 where a glyph pixel is set.
/// Glyph i starts at column kLeftMargin + x_shift + 7 i, rows 12..18.
Tensor render_mask(std::string_view word, int x_shift = 0);

/// Renders and distorts `word`; the result depends only on (word, rng state, config).
Sample synth_render(std::string_view word, Prng& rng, const DistortConfig& distort);

}  // namespace dota
