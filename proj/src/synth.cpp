#include "dota/synth.hpp"

#include "dota/alphabet.hpp"
#include "dota/deform_conv.hpp"
#include "dota/retrieval.hpp"

#include <algorithm>

namespace dota {

namespace {

using Glyph = std::array<std::uint8_t, kGlyphHeight>;

// a-z then 0-9.
constexpr std::array<Glyph, 36> kFont{{
    {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},  // a
    {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},  // b
    {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E},  // c
    {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C},  // d
    {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F},  // e
    {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},  // f
    {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F},  // g
    {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},  // h
    {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E},  // i
    {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},  // j
    {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11},  // k
    {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},  // l
    {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11},  // m
    {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},  // n
    {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},  // o
    {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},  // p
    {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D},  // q
    {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},  // r
    {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E},  // s
    {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},  // t
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},  // u
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},  // v
    {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A},  // w
    {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},  // x
    {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04},  // y
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},  // z
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
}};

void check_word(std::string_view word) {
    if (word.empty()) throw RefusalError("cannot render an empty word");
    if (word.size() > kMaxTextLength) {
        throw RefusalError("word '" + std::string(word) + "' exceeds " + std::to_string(kMaxTextLength) + " characters");
    }
    for (char c : word) {
        if (label_of(c) < 0) throw RefusalError("unsupported character '" + std::string(1, c) + "'");
    }
}

}  // namespace

void DistortConfig::validate() const {
    if (jitter_px < 0) throw ConfigError("jitter_px must be nonnegative");
    if (shear < 0.0) throw ConfigError("shear must be nonnegative");
    if (noise_sigma < 0.0 || noise_sigma > 0.15) throw ConfigError("noise_sigma must lie in [0, 0.15]");
    if (!(contrast_min > 0.0 && contrast_min <= contrast_max && contrast_max <= 1.0)) {
        throw ConfigError("contrast range must satisfy 0 < contrast_min <= contrast_max <= 1");
    }
}

const std::array<std::uint8_t, kGlyphHeight>& glyph_rows(char c) {
    const int label = label_of(c);
    if (label < 0) throw RefusalError("no glyph for '" + std::string(1, c) + "'");
    return kFont[static_cast<std::size_t>(label)];
}

Tensor render_mask(std::string_view word, int x_shift) {
    check_word(word);
    const long advance = static_cast<long>(kGlyphWidth + kGlyphSpacing);
    const std::size_t top = (kImageHeight - kGlyphHeight) / 2;
    Tensor mask({kImageHeight, kImageWidth});
    for (std::size_t i = 0; i < word.size(); ++i) {
        const auto& rows = glyph_rows(word[i]);
        const long left = static_cast<long>(kLeftMargin) + x_shift + static_cast<long>(i) * advance;
        for (std::size_t r = 0; r < kGlyphHeight; ++r) {
            for (std::size_t c = 0; c < kGlyphWidth; ++c) {
                const long x = left + static_cast<long>(c);
                if (((rows[r] >> (kGlyphWidth - 1 - c)) & 1U) && x >= 0 && x < static_cast<long>(kImageWidth)) {
                    mask(top + r, static_cast<std::size_t>(x)) = 1.0;
                }
            }
        }
    }
    return mask;
}

Sample synth_render(std::string_view word, Prng& rng, const DistortConfig& distort) {
    distort.validate();
    check_word(word);

    const int jitter = distort.jitter_px > 0
                           ? static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(distort.jitter_px) + 1)) -
                                 distort.jitter_px
                           : 0;
    Tensor mask = render_mask(word, jitter);

    const double slant = distort.shear > 0.0 ? rng.uniform(-distort.shear, distort.shear) : 0.0;
    if (slant != 0.0) {
        Tensor sheared(mask.shape());
        const double centre = (static_cast<double>(kImageHeight) - 1.0) / 2.0;
        for (std::size_t y = 0; y < kImageHeight; ++y) {
            const double shift = slant * (static_cast<double>(y) - centre);
            for (std::size_t x = 0; x < kImageWidth; ++x) {
                sheared(y, x) = bilinear_sample(mask, static_cast<double>(y), static_cast<double>(x) - shift);
            }
        }
        mask = std::move(sheared);
    }

    Tensor image({1, kImageHeight, kImageWidth});
    for (std::size_t i = 0; i < mask.size(); ++i) image[i] = kBackgroundLevel + (kInkLevel - kBackgroundLevel) * mask[i];

    if (distort.noise_sigma > 0.0) {
        for (auto& v : image.values()) v = std::clamp(v + distort.noise_sigma * rng.normal(), 0.0, 1.0);
    }

    const double contrast =
        distort.contrast_min < distort.contrast_max ? rng.uniform(distort.contrast_min, distort.contrast_max)
                                                    : distort.contrast_max;
    if (contrast != 1.0) {
        for (auto& v : image.values()) v = std::clamp(0.5 + contrast * (v - 0.5), 0.0, 1.0);
    }
    return Sample{std::move(image), fold_case(word)};
}

}  // namespace dota
