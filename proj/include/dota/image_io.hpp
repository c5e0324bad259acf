#pragma once

#include "dota/synth.hpp"

#include <filesystem>
#include <stdexcept>
#include <vector>

namespace dota {

/// Unreadable, unwritable or malformed files on disk.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Binary 8-bit PGM (P5) -> [1, height, width] in [0, 1].
Tensor read_pgm(const std::filesystem::path& path);
/// image is [h,w] or [1,h,w] in [0,1]; values are rounded to 0..255.
void write_pgm(const std::filesystem::path& path, const Tensor& image);

/**
 * Directory holding labels.tsv ("filename<TAB>text" per line) and the
 * referenced PGM images. Malformed lines raise IoError naming the line.
 */
std::vector<Sample> load_dataset(const std::filesystem::path& dir);

}  // namespace dota
