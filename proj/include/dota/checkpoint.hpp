#pragma once

#include "dota/model.hpp"
#include "dota/run_config.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace dota {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Malformed checkpoint; field() names the part that failed to validate.
class CheckpointError : public std::runtime_error {
public:
    CheckpointError(std::string field, const std::string& detail);
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class UnsupportedCheckpointVersion : public CheckpointError {
public:
    explicit UnsupportedCheckpointVersion(std::uint32_t version);
    std::uint32_t version() const { return version_; }

private:
    std::uint32_t version_;
};

struct Checkpoint {
    RunConfig config;
    ModelParams params;
};

/**
 * "DOTA", uint32 version, uint32 length + config JSON, then for each tensor:
 * uint32 name length, name, uint32 rank, uint32 dims, float64 payload. All
 * integers and reals little-endian. The last tensor is "dropout.rate" [1].
 */
std::vector<std::uint8_t> checkpoint_bytes(const RunConfig& config, const ModelParams& params);
/// Validates everything before returning; never yields partial parameters.
Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes);

void checkpoint_save(const std::filesystem::path& path, const RunConfig& config, const ModelParams& params);
Checkpoint checkpoint_load(const std::filesystem::path& path);

}  // namespace dota
