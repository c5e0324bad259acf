#pragma once

#include "dota/tensor.hpp"

#include <span>
#include <vector>

namespace dota {

/// Per-timestep label scores [T, L].
using Emissions = Tensor;
using LabelSeq = std::vector<int>;

/// transitions(i, j) scores label j following label i.
struct CrfParams {
    Tensor transitions;  // [L,L]
    Tensor start;        // [L]
    Tensor end;          // [L]

    static CrfParams zeros(std::size_t labels);
    std::size_t labels() const { return start.size(); }
    NamedTensors tensors(const std::string& prefix);
};

struct CrfGrads {
    Tensor emissions;
    Tensor transitions;
    Tensor start;
    Tensor end;
};

struct Decoded {
    LabelSeq labels;
    double score = 0.0;
};

double score_sequence(const Emissions& e, std::span<const int> labels, const CrfParams& p);

/// log of the sum of exp(score) over all L^T label sequences (forward recursion).
double log_partition(const Emissions& e, const CrfParams& p);

/// P(y_t = j) by forward-backward in log space.
Tensor posterior_marginals(const Emissions& e, const CrfParams& p);

/// log_partition - score_sequence; never negative.
double nll(const Emissions& e, std::span<const int> labels, const CrfParams& p);

/// nll together with its gradient w.r.t. emissions and every CRF parameter.
double nll_with_grad(const Emissions& e, std::span<const int> labels, const CrfParams& p, CrfGrads& grads);

/**
 * Highest-scoring label sequence. Among equal maxima the lexicographically
 * smallest sequence is returned: suffix maxima are computed backwards and
 * the path is read forwards taking the smallest maximizing label each step.
 */
Decoded viterbi(const Emissions& e, const CrfParams& p);

/// Exhaustive enumeration oracles; refuse when L^T exceeds 10^6.
double brute_force_log_partition(const Emissions& e, const CrfParams& p);
Decoded brute_force_best(const Emissions& e, const CrfParams& p);

/// Numerically stable log(sum(exp(v))).
double log_sum_exp(std::span<const double> v);

}  // namespace dota
