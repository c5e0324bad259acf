#include "dota/image_io.hpp"

#include "dota/alphabet.hpp"
#include "dota/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

namespace dota {

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in, const std::string& path) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#' && tok.empty()) {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    throw IoError(path + ": truncated PGM header");
}

std::size_t header_number(std::istream& in, const std::string& path) {
    const std::string tok = header_token(in, path);
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw IoError(path + ": bad PGM header field '" + tok + "'");
    }
    return std::stoul(tok);
}

}  // namespace

Tensor read_pgm(const std::filesystem::path& path) {
    const std::string name = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read image " + name);
    if (header_token(in, name) != "P5") throw IoError(name + ": not a binary PGM (P5)");
    const std::size_t width = header_number(in, name);
    const std::size_t height = header_number(in, name);
    const std::size_t maxval = header_number(in, name);
    if (maxval != 255) throw IoError(name + ": only 8-bit PGM is supported (maxval " + std::to_string(maxval) + ")");
    if (width == 0 || height == 0) throw IoError(name + ": empty image");
    std::vector<char> pixels(width * height);
    in.read(pixels.data(), static_cast<std::streamsize>(pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(pixels.size())) throw IoError(name + ": truncated pixel data");
    Tensor image({1, height, width});
    for (std::size_t i = 0; i < pixels.size(); ++i) image[i] = static_cast<unsigned char>(pixels[i]) / 255.0;
    return image;
}

void write_pgm(const std::filesystem::path& path, const Tensor& image) {
    if (!(image.rank() == 2 || (image.rank() == 3 && image.dim(0) == 1))) {
        throw DimensionError("write_pgm expects [h,w] or [1,h,w], got " + shape_string(image.shape()));
    }
    const std::size_t h = image.dim(image.rank() - 2), w = image.dim(image.rank() - 1);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write image " + path.string());
    out << "P5\n" << w << ' ' << h << "\n255\n";
    std::vector<char> pixels(image.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        pixels[i] = static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(image[i], 0.0, 1.0) * 255.0)));
    }
    out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<Sample> load_dataset(const std::filesystem::path& dir) {
    const auto tsv = dir / "labels.tsv";
    std::ifstream in(tsv);
    if (!in) throw IoError("cannot read " + tsv.string());
    std::vector<Sample> out;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (line.empty()) continue;
        const auto where = tsv.string() + " line " + std::to_string(lineno) + ": ";
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || line.find('\t', tab + 1) != std::string::npos) {
            throw IoError(where + "expected \"filename<TAB>text\"");
        }
        const std::string file = line.substr(0, tab), text = line.substr(tab + 1);
        if (text.empty() || text.size() > kMaxTextLength ||
            !in_alphabet(text)) {
            throw IoError(where + "label '" + text + "' is empty, too long or outside the alphabet");
        }
        Tensor image = read_pgm(dir / file);
        out.push_back(Sample{std::move(image), fold_case(text)});
    }
    return out;
}

}  // namespace dota
