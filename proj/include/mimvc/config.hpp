#pragma once

#include "mimvc/dataset.hpp"
#include "mimvc/training.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mimvc {

/// Everything one CLI invocation needs. Serialized as a flat JSON object;
/// unknown keys are rejected.
struct RunConfig {
    std::filesystem::path dataset;
    std::filesystem::path out;
    MaskSpec mask;  // applied on top of a complete dataset when missing_rate > 0
    bool explicit_mask_seed = false;  // otherwise mask.seed follows train.seed
    TrainConfig train;
    std::vector<double> lambda_grid = default_lambda_grid();
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);

    /// Sets one key from its textual form (CLI flags); same key set as JSON.
    void set(const std::string& key, const std::string& value);

    void validate() const;
};

RunConfig load_run_config(const std::filesystem::path& file);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& file);

}  // namespace mimvc
