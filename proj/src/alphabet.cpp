#include "dota/alphabet.hpp"

#include <cctype>

namespace dota {

int label_of(char c) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalpha(u)) return std::tolower(u) - 'a';
    if (c >= '0' && c <= '9') return 26 + (c - '0');
    return -1;
}

char symbol_of(int label) {
    if (label >= 0 && label < 26) return static_cast<char>('a' + label);
    if (label >= 26 && label < kPadLabel) return static_cast<char>('0' + (label - 26));
    throw DimensionError("label " + std::to_string(label) + " has no symbol");
}

bool in_alphabet(std::string_view text) {
    for (char c : text)
        if (label_of(c) < 0) return false;
    return true;
}

LabelSeq encode_target(std::string_view text, std::size_t length) {
    if (text.size() > length) {
        throw RefusalError("text '" + std::string(text) + "' is longer than " + std::to_string(length) + " characters");
    }
    LabelSeq labels(length, kPadLabel);
    for (std::size_t i = 0; i < text.size(); ++i) {
        const int label = label_of(text[i]);
        if (label < 0) throw RefusalError("character '" + std::string(1, text[i]) + "' is not in the alphabet");
        labels[i] = label;
    }
    return labels;
}

std::string decode_labels(std::span<const int> labels) {
    std::string out;
    for (int label : labels)
        if (label != kPadLabel) out.push_back(symbol_of(label));
    return out;
}

}  // namespace dota
