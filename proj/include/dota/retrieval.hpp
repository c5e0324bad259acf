#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dota {

/// Unit-cost edit distance (insert, delete, substitute).
std::size_t levenshtein(std::string_view a, std::string_view b);

std::string fold_case(std::string_view s);

/**
 * Ordered word list for retrieval correction. With case folding enabled,
 * entries that fold to an already-present word are dropped (first one wins).
 */
class Lexicon {
public:
    explicit Lexicon(std::vector<std::string> words, bool case_fold = true);

    /// One word per line; '#' lines and blank lines skipped; trailing whitespace stripped.
    static Lexicon load(const std::filesystem::path& path, bool case_fold = true);

    const std::vector<std::string>& words() const { return words_; }
    /// The comparison form of word i (folded when case folding is on).
    const std::string& key(std::size_t i) const { return keys_[i]; }
    bool case_fold() const { return case_fold_; }
    std::size_t size() const { return words_.size(); }
    bool empty() const { return words_.empty(); }

private:
    std::vector<std::string> words_;
    std::vector<std::string> keys_;
    bool case_fold_;
};

struct RetrievalMatch {
    std::string word;  // lexicon spelling
    std::size_t distance = 0;
};

/// Optional ranking override: lower is better. Receives the lexicon word and its distance.
using Rescorer = std::function<double(std::string_view candidate, std::size_t distance)>;

/**
 * Nearest lexicon word within max_dist. Ties go to the smaller distance,
 * then the lexicographically smaller comparison key, then the earlier
 * entry. With a rescorer, candidates within max_dist are ranked by its
 * value first. Throws RefusalError on an empty lexicon.
 */
std::optional<RetrievalMatch> retrieve(std::string_view query, const Lexicon& lexicon, std::size_t max_dist,
                                       const Rescorer& rescorer = {});

/// The retrieved word when one is within max_dist, else `decoded` unchanged.
std::string correct(std::string_view decoded, const Lexicon& lexicon, std::size_t max_dist);

/// ceil(|query| / 4), capped at 2.
std::size_t default_max_distance(std::string_view query);

}  // namespace dota
