#include "dota/dropout.hpp"

#include <algorithm>
#include <cmath>

namespace dota {

namespace {

void check_rate(double rate) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
    }
}

Tensor apply_mask(const Tensor& x, const Tensor& mask, double rate) {
    if (mask.shape() != x.shape()) {
        throw DimensionError("dropout mask " + shape_string(mask.shape()) + " vs input " + shape_string(x.shape()));
    }
    const double scale = 1.0 / (1.0 - rate);
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * mask[i] * scale;
    return y;
}

}  // namespace

DropoutResult dropout_apply(const Tensor& x, double rate, Prng& rng, bool training) {
    check_rate(rate);
    if (!training || rate == 0.0) return {x, Tensor(x.shape(), 1.0)};
    Tensor mask(x.shape());
    for (auto& m : mask.values()) m = rng.uniform() < rate ? 0.0 : 1.0;
    Tensor y = apply_mask(x, mask, rate);
    return {std::move(y), std::move(mask)};
}

Tensor dropout_backward(const Tensor& grad_out, const Tensor& mask, double rate) {
    check_rate(rate);
    return apply_mask(grad_out, mask, rate);
}

void AdaptiveDropoutState::validate() const {
    if (!(p_min >= 0.0 && p_min <= p_max && p_max < 1.0)) {
        throw ConfigError("dropout bounds must satisfy 0 <= p_min <= p_max < 1");
    }
    if (!(rate >= p_min && rate <= p_max)) throw ConfigError("dropout rate outside [p_min, p_max]");
    if (!(delta > 0.0)) throw ConfigError("dropout delta must be positive");
    if (!(tau_low <= tau_high)) throw ConfigError("dropout thresholds must satisfy tau_low <= tau_high");
}

AdaptiveDropoutState rate_update(AdaptiveDropoutState state, double train_loss, double val_loss) {
    const double gap = val_loss - train_loss;
    if (gap > state.tau_high) {
        state.rate += state.delta;
    } else if (gap < state.tau_low) {
        state.rate -= state.delta;
    }
    state.rate = std::clamp(state.rate, state.p_min, state.p_max);
    return state;
}

DropoutSites DropoutSites::sampling(double rate, Prng rng) {
    check_rate(rate);
    DropoutSites sites;
    sites.training_ = true;
    sites.rate_ = rate;
    sites.rng_ = rng;
    return sites;
}

DropoutSites DropoutSites::replay(double rate, std::vector<Tensor> masks) {
    check_rate(rate);
    DropoutSites sites;
    sites.training_ = true;
    sites.rate_ = rate;
    sites.masks_ = std::move(masks);
    return sites;
}

Tensor DropoutSites::apply(const Tensor& x, Tensor* used_mask) {
    if (!training_) return x;
    if (rng_) {
        auto result = dropout_apply(x, rate_, *rng_, true);
        if (used_mask) *used_mask = result.mask;
        masks_.push_back(std::move(result.mask));
        return std::move(result.output);
    }
    if (cursor_ >= masks_.size()) throw DimensionError("dropout replay ran out of recorded masks");
    const Tensor& mask = masks_[cursor_++];
    if (used_mask) *used_mask = mask;
    return apply_mask(x, mask, rate_);
}

}  // namespace dota
