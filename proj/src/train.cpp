#include "dota/train.hpp"

#include "dota/recognize.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace dota {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
    if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
    if (plateau_patience < 1) throw ConfigError("plateau_patience must be at least 1");
    if (!(lr_floor_ratio > 0.0 && lr_floor_ratio <= 1.0)) throw ConfigError("lr_floor_ratio must lie in (0, 1]");
    dropout.validate();
}

namespace {

std::string diverged_message(std::uint64_t seed, std::size_t epoch) {
    std::ostringstream os;
    os << "training diverged in epoch " << epoch << ": non-finite loss or gradient for batch seed 0x" << std::hex << seed;
    return os.str();
}

}  // namespace

TrainingDiverged::TrainingDiverged(std::uint64_t batch_seed, std::size_t epoch)
    : std::runtime_error(diverged_message(batch_seed, epoch)), batch_seed_(batch_seed) {}

Adam::Adam(NamedTensors params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
        m_.push_back(Tensor::zeros_like(*p.tensor));
        v_.push_back(Tensor::zeros_like(*p.tensor));
    }
}

void Adam::step(const NamedTensors& grads, double lr) {
    if (grads.size() != params_.size()) throw DimensionError("Adam: gradient list does not match parameters");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        Tensor& p = *params_[k].tensor;
        const Tensor& g = *grads[k].tensor;
        if (g.shape() != p.shape()) throw DimensionError("Adam: gradient shape mismatch for " + params_[k].name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            m_[k][i] = beta1_ * m_[k][i] + (1.0 - beta1_) * g[i];
            v_[k][i] = beta2_ * v_[k][i] + (1.0 - beta2_) * g[i] * g[i];
            p[i] -= lr * (m_[k][i] / c1) / (std::sqrt(v_[k][i] / c2) + eps_);
        }
    }
}

Evaluation evaluate(const std::vector<Sample>& set, const ModelConfig& cfg, const ModelParams& params, bool use_crf,
                    const Lexicon* lexicon) {
    if (set.empty()) throw ConfigError("cannot evaluate an empty dataset");
    Evaluation ev;
    std::vector<std::string> truth;
    for (const auto& s : set) {
        const Emissions e = forward(s.image, cfg, params);
        const LabelSeq y = encode_target(s.text, cfg.sequence_length());
        ev.loss += use_crf ? nll(e, y, params.crf) : cross_entropy(e, y);
        std::string text = decode_labels(decode_path(e, params.crf, use_crf).labels);
        if (lexicon) text = correct(text, *lexicon, default_max_distance(text));
        ev.predictions.push_back(std::move(text));
        truth.push_back(s.text);
    }
    ev.loss /= static_cast<double>(set.size());
    ev.accuracy = word_accuracy(ev.predictions, truth);
    return ev;
}

std::vector<std::string> predict_all(const std::vector<Sample>& set, const ModelConfig& cfg, const ModelParams& params,
                                     bool use_crf, const Lexicon* lexicon) {
    std::vector<std::string> out;
    out.reserve(set.size());
    for (const auto& s : set) out.push_back(recognize(s.image, cfg, params, use_crf, lexicon));
    return out;
}

TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& val_set, const ModelConfig& cfg,
                  const TrainConfig& tc, const Lexicon* lexicon, const EpochCallback& on_epoch) {
    cfg.validate();
    tc.validate();
    if (train_set.empty() || val_set.empty()) throw ConfigError("training and validation sets must be nonempty");
    if (tc.use_retrieval && !lexicon) throw ConfigError("use_retrieval requires a lexicon");

    std::vector<LabelSeq> targets;
    for (const auto& s : train_set) targets.push_back(encode_target(s.text, cfg.sequence_length()));

    TrainResult result;
    ModelParams& params = result.params;
    params = ModelParams::init(cfg, tc.seed);
    params.dropout = tc.dropout;
    ModelParams grads = ModelParams::zeros(cfg);
    Adam adam(params.tensors(), tc.beta1, tc.beta2, tc.adam_eps);
    const NamedTensors grad_list = grads.tensors();

    double lr = tc.learning_rate;
    const double lr_floor = tc.learning_rate * tc.lr_floor_ratio;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Prng shuffle = Prng::derive(tc.seed, 2 * epoch);
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

        const double rate = params.dropout.rate;
        const std::uint64_t epoch_seed = Prng::mix(tc.seed ^ Prng::mix(2 * epoch + 1));
        double epoch_loss = 0.0;
        for (std::size_t begin = 0, batch = 0; begin < order.size(); begin += tc.batch_size, ++batch) {
            const std::size_t end = std::min(begin + tc.batch_size, order.size());
            const std::uint64_t batch_seed = Prng::mix(epoch_seed + batch);
            for (auto& g : grad_list) g.tensor->fill(0.0);
            double batch_loss = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                DropoutSites sites = DropoutSites::sampling(rate, Prng::derive(batch_seed, i - begin));
                const std::size_t idx = order[i];
                batch_loss += loss_and_grad(train_set[idx].image, targets[idx], cfg, params, tc.use_crf, sites, grads);
            }
            const double scale = 1.0 / static_cast<double>(end - begin);
            bool finite = std::isfinite(batch_loss);
            for (auto& g : grad_list) {
                *g.tensor *= scale;
                finite = finite && g.tensor->all_finite();
            }
            if (!finite) throw TrainingDiverged(batch_seed, epoch);
            adam.step(grad_list, lr);
            epoch_loss += batch_loss;
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = epoch_loss / static_cast<double>(train_set.size());
        const Evaluation val = evaluate(val_set, cfg, params, tc.use_crf, tc.use_retrieval ? lexicon : nullptr);
        if (!std::isfinite(val.loss)) throw TrainingDiverged(epoch_seed, epoch);
        m.val_loss = val.loss;
        m.val_acc = val.accuracy;
        m.dropout_rate = rate;
        m.lr = lr;
        result.history.push_back(m);

        params.dropout = rate_update(params.dropout, m.train_loss, m.val_loss);
        if (m.val_loss < best_val) {
            best_val = m.val_loss;
            stale = 0;
        } else if (++stale >= tc.plateau_patience) {
            lr = std::max(lr / 2.0, lr_floor);
            stale = 0;
        }
        if (on_epoch && !on_epoch(m)) break;
    }
    return result;
}

}  // namespace dota
