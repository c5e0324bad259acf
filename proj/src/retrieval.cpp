#include "dota/retrieval.hpp"

#include "dota/tensor.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <tuple>
#include <unordered_set>

namespace dota {

std::size_t levenshtein(std::string_view a, std::string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> row(b.size() + 1);
    std::iota(row.begin(), row.end(), std::size_t{0});
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
            row[j] = std::min({sub, up + 1, row[j - 1] + 1});
            diag = up;
        }
    }
    return row[b.size()];
}

std::string fold_case(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

Lexicon::Lexicon(std::vector<std::string> words, bool case_fold) : case_fold_(case_fold) {
    std::unordered_set<std::string> seen;
    for (auto& w : words) {
        if (w.empty()) throw ConfigError("lexicon entries must be nonempty");
        std::string key = case_fold ? fold_case(w) : w;
        if (!seen.insert(key).second) continue;
        keys_.push_back(std::move(key));
        words_.push_back(std::move(w));
    }
}

Lexicon Lexicon::load(const std::filesystem::path& path, bool case_fold) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read lexicon " + path.string());
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        words.push_back(line);
    }
    return Lexicon(std::move(words), case_fold);
}

std::optional<RetrievalMatch> retrieve(std::string_view query, const Lexicon& lexicon, std::size_t max_dist,
                                       const Rescorer& rescorer) {
    if (lexicon.empty()) throw RefusalError("retrieval against an empty lexicon");
    const std::string q = lexicon.case_fold() ? fold_case(query) : std::string(query);

    std::optional<std::size_t> best;
    std::tuple<double, std::size_t, const std::string*> best_rank{};
    std::size_t best_distance = 0;
    for (std::size_t i = 0; i < lexicon.size(); ++i) {
        const std::size_t d = levenshtein(q, lexicon.key(i));
        if (d > max_dist) continue;
        const double primary = rescorer ? rescorer(lexicon.words()[i], d) : 0.0;
        const auto rank = std::make_tuple(primary, d, &lexicon.key(i));
        const bool better = !best || std::get<0>(rank) < std::get<0>(best_rank) ||
                            (std::get<0>(rank) == std::get<0>(best_rank) &&
                             (d < std::get<1>(best_rank) ||
                              (d == std::get<1>(best_rank) && *std::get<2>(rank) < *std::get<2>(best_rank))));
        if (better) {
            best = i;
            best_rank = rank;
            best_distance = d;
        }
    }
    if (!best) return std::nullopt;
    return RetrievalMatch{lexicon.words()[*best], best_distance};
}

std::string correct(std::string_view decoded, const Lexicon& lexicon, std::size_t max_dist) {
    if (auto match = retrieve(decoded, lexicon, max_dist)) return match->word;
    return std::string(decoded);
}

std::size_t default_max_distance(std::string_view query) {
    return std::min<std::size_t>(2, (query.size() + 3) / 4);
}

}  // namespace dota
