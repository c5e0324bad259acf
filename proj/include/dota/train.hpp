#pragma once

#include "dota/model.hpp"
#include "dota/retrieval.hpp"
#include "dota/synth.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace dota {

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 8;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    bool use_crf = true;
    bool use_retrieval = false;
    std::size_t plateau_patience = 3;
    double lr_floor_ratio = 0.01;
    AdaptiveDropoutState dropout;

    void validate() const;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double dropout_rate = 0.0;
    double lr = 0.0;
};

/// Non-finite loss or gradient; carries the seed of the offending batch.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::uint64_t batch_seed, std::size_t epoch);
    std::uint64_t batch_seed() const { return batch_seed_; }

private:
    std::uint64_t batch_seed_;
};

class Adam {
public:
    Adam(NamedTensors params, double beta1, double beta2, double eps);
    /// One update with gradients listed in the same order as the parameters.
    void step(const NamedTensors& grads, double lr);
    std::size_t steps() const { return t_; }

private:
    NamedTensors params_;
    std::vector<Tensor> m_, v_;
    double beta1_, beta2_, eps_;
    std::size_t t_ = 0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochMetrics> history;
};

/// Called after every epoch; returning false stops training early.
using EpochCallback = std::function<bool(const EpochMetrics&)>;

/**
 * Minibatch Adam on mean CRF nll (cross-entropy when use_crf is off), with
 * seeded per-epoch shuffling, plateau learning-rate halving and one
 * adaptive-dropout update per epoch. Throws TrainingDiverged.
 */
TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& val_set, const ModelConfig& cfg,
                  const TrainConfig& tc, const Lexicon* lexicon = nullptr, const EpochCallback& on_epoch = {});

struct Evaluation {
    double loss = 0.0;  // mean evaluation-mode loss
    double accuracy = 0.0;
    std::vector<std::string> predictions;
};

/// One evaluation-mode forward per sample yields loss, predictions and word accuracy.
Evaluation evaluate(const std::vector<Sample>& set, const ModelConfig& cfg, const ModelParams& params, bool use_crf,
                    const Lexicon* lexicon = nullptr);

/// Recognized strings for every sample.
std::vector<std::string> predict_all(const std::vector<Sample>& set, const ModelConfig& cfg, const ModelParams& params,
                                     bool use_crf, const Lexicon* lexicon = nullptr);

}  // namespace dota
