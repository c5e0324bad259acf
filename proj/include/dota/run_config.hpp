#pragma once

#include "dota/model.hpp"
#include "dota/synth.hpp"
#include "dota/train.hpp"

#include <string>
#include <string_view>

namespace dota {

/// Everything needed to reproduce a run. Serialized into every checkpoint.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    DistortConfig distort;
    std::string lexicon_path;  // optional; empty when unused

    void validate() const;
};

/**
 * Strict parse: absent keys take their defaults, unknown keys and
 * mistyped values throw ConfigError naming the offending path.
 */
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::string& path);
/// Canonical serialization (sorted keys, compact).
std::string to_json_string(const RunConfig& cfg);

/// One metrics line: {"dropout_rate":..,"epoch":..,"lr":..,"train_loss":..,"val_acc":..,"val_loss":..}.
std::string metrics_json_line(const EpochMetrics& m);

}  // namespace dota
