#pragma once
// Run configuration: `key = value` lines, `#` comments. Resolution order,
// lowest to highest: built-in defaults, `preset`, CPSR_SEED (seed only),
// config file, command-line overrides.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cpsr/oracle.hpp"
#include "cpsr/trainer.hpp"

namespace cpsr {

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message);
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct RunConfig {
    std::filesystem::path data_dir;
    std::filesystem::path ind_dir;  // empty: data_dir + "_ind"
    std::filesystem::path out_dir = "runs/latest";
    std::filesystem::path checkpoint;  // empty: out_dir/best.ckpt
    std::string preset;
    std::string eval_split = "test";

    TrainConfig train;
    bool inverse = true;
    bool self_loop = true;
    int workers = 1;
    std::vector<double> sweep_values{0.1, 0.3, 0.5, 0.7, 0.9};
    oracle::PlantedRuleSpec synth;

    std::filesystem::path resolved_ind_dir() const;
    std::filesystem::path resolved_checkpoint() const;
    GraphOptions graph_options() const { return {inverse, self_loop}; }

    // Every key with its resolved value, one `key = value` line each.
    std::string to_text() const;
};

using Overrides = std::vector<std::pair<std::string, std::string>>;

// Throws ConfigError naming the offending key for unknown keys, unparsable
// values, or a missing data_dir when `require_dataset` is set.
RunConfig parse_config(std::string_view file_text, const Overrides& overrides = {},
                       std::optional<std::string> env_seed = std::nullopt, bool require_dataset = true);

struct KeyInfo {
    std::string name;
    std::string description;
};
std::vector<KeyInfo> config_keys();

// Hyper-parameters per inductive benchmark version, e.g. "wn18rr_v1".
std::vector<std::string> preset_names();

}  // namespace cpsr
