#pragma once

#include "dota/crf.hpp"

#include <span>
#include <string>
#include <string_view>

namespace dota {

// Labels 0-25 are 'a'-'z', 26-35 are '0'-'9', 36 is PAD.
inline constexpr std::size_t kAlphabetSize = 37;
inline constexpr int kPadLabel = 36;
inline constexpr std::size_t kMaxTextLength = 16;

/// Label of c (letters case-insensitive), or -1 when c is not in the alphabet.
int label_of(char c);
/// Character of a non-PAD label.
char symbol_of(int label);
bool in_alphabet(std::string_view text);

/// Character labels followed by PAD up to `length`. Refuses overlong text or unsupported characters.
LabelSeq encode_target(std::string_view text, std::size_t length = kMaxTextLength);
/// Drops PAD labels and maps the rest to characters.
std::string decode_labels(std::span<const int> labels);

}  // namespace dota
