#pragma once

#include "dota/tensor.hpp"

#include <optional>
#include <vector>

namespace dota {

struct DropoutResult {
    Tensor output;
    Tensor mask;  // 1 where the element survived, 0 where dropped
};

/**
 * Inverted dropout. In training each element is zeroed with probability
 * `rate` and survivors are scaled by 1/(1-rate); in evaluation the input is
 * returned unchanged with an all-ones mask. Throws ConfigError unless
 * 0 <= rate < 1.
 */
DropoutResult dropout_apply(const Tensor& x, double rate, Prng& rng, bool training);
Tensor dropout_backward(const Tensor& grad_out, const Tensor& mask, double rate);

/// Controller that nudges the dropout rate from the validation-train loss gap.
struct AdaptiveDropoutState {
    double rate = 0.1;
    double p_min = 0.0;
    double p_max = 0.5;
    double delta = 0.02;
    double tau_high = 0.10;
    double tau_low = 0.02;

    void validate() const;
};

/// gap > tau_high raises the rate by delta, gap < tau_low lowers it; the result is clamped.
AdaptiveDropoutState rate_update(AdaptiveDropoutState state, double train_loss, double val_loss);

/**
 * Supplies the dropout masks for the successive dropout sites of one
 * forward pass. Fresh masks are drawn from a Prng, or a recorded set is
 * replayed so a forward pass can be repeated with the masks frozen.
 */
class DropoutSites {
public:
    /// Evaluation mode: every site is the identity.
    static DropoutSites inactive() { return DropoutSites(); }
    static DropoutSites sampling(double rate, Prng rng);
    static DropoutSites replay(double rate, std::vector<Tensor> masks);

    /// Applies the next site's mask; copies it to used_mask when given.
    Tensor apply(const Tensor& x, Tensor* used_mask = nullptr);
    bool training() const { return training_; }
    double rate() const { return rate_; }
    const std::vector<Tensor>& masks() const { return masks_; }

private:
    DropoutSites() = default;

    bool training_ = false;
    double rate_ = 0.0;
    std::optional<Prng> rng_;
    std::vector<Tensor> masks_;
    std::size_t cursor_ = 0;
};

}  // namespace dota
