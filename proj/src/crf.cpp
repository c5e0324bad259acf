#include "dota/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dota {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_inputs(const Emissions& e, const CrfParams& p) {
    if (e.rank() != 2) throw DimensionError("emissions must be [T,L], got " + shape_string(e.shape()));
    const std::size_t labels = e.dim(1);
    if (p.transitions.shape() != Shape{labels, labels} || p.start.size() != labels || p.end.size() != labels) {
        throw DimensionError("CRF parameters " + shape_string(p.transitions.shape()) + " do not match emissions " +
                             shape_string(e.shape()));
    }
}

void check_labels(const Emissions& e, std::span<const int> labels) {
    if (labels.size() != e.dim(0)) {
        throw DimensionError("label sequence of length " + std::to_string(labels.size()) + " vs " +
                             std::to_string(e.dim(0)) + " timesteps");
    }
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= e.dim(1)) {
            throw DimensionError("label " + std::to_string(y) + " outside [0, " + std::to_string(e.dim(1)) + ")");
        }
    }
}

// alpha(t, j): log-sum of all prefixes ending in j at t, emission at t included.
Tensor forward_scores(const Emissions& e, const CrfParams& p) {
    const std::size_t steps = e.dim(0), labels = e.dim(1);
    Tensor alpha({steps, labels});
    for (std::size_t j = 0; j < labels; ++j) alpha(0, j) = p.start[j] + e(0, j);
    std::vector<double> terms(labels);
    for (std::size_t t = 1; t < steps; ++t) {
        for (std::size_t j = 0; j < labels; ++j) {
            for (std::size_t i = 0; i < labels; ++i) terms[i] = alpha(t - 1, i) + p.transitions(i, j);
            alpha(t, j) = log_sum_exp(terms) + e(t, j);
        }
    }
    return alpha;
}

// beta(t, i): log-sum of all suffixes after t given label i at t, end score included.
Tensor backward_scores(const Emissions& e, const CrfParams& p) {
    const std::size_t steps = e.dim(0), labels = e.dim(1);
    Tensor beta({steps, labels});
    for (std::size_t i = 0; i < labels; ++i) beta(steps - 1, i) = p.end[i];
    std::vector<double> terms(labels);
    for (std::size_t t = steps - 1; t-- > 0;) {
        for (std::size_t i = 0; i < labels; ++i) {
            for (std::size_t j = 0; j < labels; ++j) terms[j] = p.transitions(i, j) + e(t + 1, j) + beta(t + 1, j);
            beta(t, i) = log_sum_exp(terms);
        }
    }
    return beta;
}

double final_log_partition(const Tensor& alpha, const CrfParams& p) {
    const std::size_t last = alpha.dim(0) - 1, labels = alpha.dim(1);
    std::vector<double> terms(labels);
    for (std::size_t j = 0; j < labels; ++j) terms[j] = alpha(last, j) + p.end[j];
    return log_sum_exp(terms);
}

std::size_t enumeration_size(const Emissions& e) {
    constexpr double kLimit = 1e6;
    const double count = std::pow(static_cast<double>(e.dim(1)), static_cast<double>(e.dim(0)));
    if (count > kLimit) {
        throw RefusalError("brute-force enumeration of " + std::to_string(e.dim(1)) + "^" + std::to_string(e.dim(0)) +
                           " sequences exceeds 10^6");
    }
    return static_cast<std::size_t>(count);
}

// Advances `labels` to the next sequence in lexicographic order.
void next_sequence(LabelSeq& labels, int alphabet) {
    for (std::size_t pos = labels.size(); pos-- > 0;) {
        if (++labels[pos] < alphabet) return;
        labels[pos] = 0;
    }
}

}  // namespace

CrfParams CrfParams::zeros(std::size_t labels) {
    return CrfParams{Tensor({labels, labels}), Tensor({labels}), Tensor({labels})};
}

NamedTensors CrfParams::tensors(const std::string& prefix) {
    return {{prefix + "transitions", &transitions}, {prefix + "start", &start}, {prefix + "end", &end}};
}

double log_sum_exp(std::span<const double> v) {
    if (v.empty()) return kNegInf;
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

double score_sequence(const Emissions& e, std::span<const int> labels, const CrfParams& p) {
    check_inputs(e, p);
    check_labels(e, labels);
    double s = p.start[labels[0]];
    for (std::size_t t = 0; t < labels.size(); ++t) {
        s += e(t, labels[t]);
        if (t + 1 < labels.size()) s += p.transitions(labels[t], labels[t + 1]);
    }
    return s + p.end[labels.back()];
}

double log_partition(const Emissions& e, const CrfParams& p) {
    check_inputs(e, p);
    return final_log_partition(forward_scores(e, p), p);
}

Tensor posterior_marginals(const Emissions& e, const CrfParams& p) {
    check_inputs(e, p);
    const Tensor alpha = forward_scores(e, p);
    const Tensor beta = backward_scores(e, p);
    const double log_z = final_log_partition(alpha, p);
    Tensor m(e.shape());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::exp(alpha[i] + beta[i] - log_z);
    return m;
}

double nll(const Emissions& e, std::span<const int> labels, const CrfParams& p) {
    const double value = log_partition(e, p) - score_sequence(e, labels, p);
    return std::max(value, 0.0);
}

double nll_with_grad(const Emissions& e, std::span<const int> labels, const CrfParams& p, CrfGrads& grads) {
    check_inputs(e, p);
    check_labels(e, labels);
    const std::size_t steps = e.dim(0), labels_n = e.dim(1);
    const Tensor alpha = forward_scores(e, p);
    const Tensor beta = backward_scores(e, p);
    const double log_z = final_log_partition(alpha, p);

    grads.emissions = Tensor(e.shape());
    grads.transitions = Tensor(p.transitions.shape());
    grads.start = Tensor(p.start.shape());
    grads.end = Tensor(p.end.shape());

    for (std::size_t i = 0; i < e.size(); ++i) grads.emissions[i] = std::exp(alpha[i] + beta[i] - log_z);
    for (std::size_t j = 0; j < labels_n; ++j) {
        grads.start[j] = grads.emissions(0, j);
        grads.end[j] = grads.emissions(steps - 1, j);
    }
    for (std::size_t t = 0; t + 1 < steps; ++t) {
        for (std::size_t i = 0; i < labels_n; ++i) {
            for (std::size_t j = 0; j < labels_n; ++j) {
                grads.transitions(i, j) +=
                    std::exp(alpha(t, i) + p.transitions(i, j) + e(t + 1, j) + beta(t + 1, j) - log_z);
            }
        }
    }

    for (std::size_t t = 0; t < steps; ++t) {
        grads.emissions(t, labels[t]) -= 1.0;
        if (t + 1 < steps) grads.transitions(labels[t], labels[t + 1]) -= 1.0;
    }
    grads.start[labels.front()] -= 1.0;
    grads.end[labels.back()] -= 1.0;

    return std::max(log_z - score_sequence(e, labels, p), 0.0);
}

Decoded viterbi(const Emissions& e, const CrfParams& p) {
    check_inputs(e, p);
    const std::size_t steps = e.dim(0), labels = e.dim(1);

    // suffix(t, i): best score of positions t+1.. given label i at t, end score included.
    Tensor suffix({steps, labels});
    for (std::size_t i = 0; i < labels; ++i) suffix(steps - 1, i) = p.end[i];
    for (std::size_t t = steps - 1; t-- > 0;) {
        for (std::size_t i = 0; i < labels; ++i) {
            double best = kNegInf;
            for (std::size_t j = 0; j < labels; ++j)
                best = std::max(best, p.transitions(i, j) + e(t + 1, j) + suffix(t + 1, j));
            suffix(t, i) = best;
        }
    }

    Decoded out;
    out.labels.resize(steps);
    double best = kNegInf;
    for (std::size_t j = 0; j < labels; ++j) {
        const double s = p.start[j] + e(0, j) + suffix(0, j);
        if (s > best) {
            best = s;
            out.labels[0] = static_cast<int>(j);
        }
    }
    out.score = best;
    for (std::size_t t = 0; t + 1 < steps; ++t) {
        const auto prev = static_cast<std::size_t>(out.labels[t]);
        double step_best = kNegInf;
        for (std::size_t j = 0; j < labels; ++j) {
            const double s = p.transitions(prev, j) + e(t + 1, j) + suffix(t + 1, j);
            if (s > step_best) {
                step_best = s;
                out.labels[t + 1] = static_cast<int>(j);
            }
        }
    }
    return out;
}

double brute_force_log_partition(const Emissions& e, const CrfParams& p) {
    check_inputs(e, p);
    const std::size_t count = enumeration_size(e);
    LabelSeq labels(e.dim(0), 0);
    std::vector<double> scores;
    scores.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        scores.push_back(score_sequence(e, labels, p));
        next_sequence(labels, static_cast<int>(e.dim(1)));
    }
    return log_sum_exp(scores);
}

Decoded brute_force_best(const Emissions& e, const CrfParams& p) {
    check_inputs(e, p);
    const std::size_t count = enumeration_size(e);
    LabelSeq labels(e.dim(0), 0);
    Decoded best{labels, kNegInf};
    for (std::size_t n = 0; n < count; ++n) {
        const double s = score_sequence(e, labels, p);
        if (s > best.score) best = Decoded{labels, s};
        next_sequence(labels, static_cast<int>(e.dim(1)));
    }
    return best;
}

}  // namespace dota
