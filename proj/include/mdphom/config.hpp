#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdphom/model.hpp"

namespace mdphom {

struct EnvConfig {
    std::string type = "gridworld_single";  // gridworld_single, gridworld_double,
                                            // cartpole, translation
    // gridworld
    std::size_t grid_n = 6;
    std::size_t cell_px = 8;
    std::string observation = "pixel";
    std::size_t step_cap = 100;
    std::string goal_split = "train";
    int fixed_corner = -1;
    // cartpole
    bool start_noise = true;
    // translation
    std::size_t translate_px = 3;
    std::size_t sprite_size = 28;
    std::size_t num_train_images = 100;
    std::size_t num_test_images = 50;
    std::uint64_t sprite_seed = 7;
    std::string idx_path;
    std::string image_split = "train";

    bool operator==(const EnvConfig&) const = default;
};

struct CollectConfig {
    std::size_t trajectories = 1000;

    bool operator==(const CollectConfig&) const = default;
};

struct AbstractConfig {
    std::size_t num_state_samples = 1024;  // 0 = use every distinct state
    double dedup_tolerance = 1e-8;
    double tau = 1e-20;
    std::vector<double> tau_grid = {1.0, 0.1, 0.001, 0.0001, 0.00001, 1e-20};

    bool operator==(const AbstractConfig&) const = default;
};

struct PlannerBlock {
    double gamma = 0.9;
    std::size_t backups = 500;
    double tolerance = 1e-10;
    double eta = 1e-20;

    bool operator==(const PlannerBlock&) const = default;
};

struct EvalConfig {
    std::size_t episodes = 100;
    std::string goal_split = "train";

    bool operator==(const EvalConfig&) const = default;
};

struct PathsConfig {
    std::string data_dir = ".";
    std::string dataset = "dataset.mhds";
    std::string checkpoint = "model.mhck";
    std::string abstract_mdp = "abstract.mham";
    std::string qtable = "qtable.mhqt";
    std::string loss_csv = "loss.csv";
    std::string summary_csv = "eval_summary.csv";
    std::string episodes_csv = "eval_episodes.csv";
    std::string latents_csv = "latents.csv";

    bool operator==(const PathsConfig&) const = default;
};

struct RunConfig {
    std::uint64_t seed = 1;
    EnvConfig environment;
    CollectConfig collect;
    TrainConfig train;
    AbstractConfig abstract_mdp;
    PlannerBlock planner;
    EvalConfig eval;
    PathsConfig paths;

    bool operator==(const RunConfig&) const = default;
};

RunConfig config_from_json(const std::string& text);
std::string config_to_json(const RunConfig& config);

RunConfig load_config(const std::string& path);
void save_config(const RunConfig& config, const std::string& path);

/// Range and consistency checks; throws ConfigError with the offending field.
void validate_config(const RunConfig& config);

/// Joins a configured file name with the data directory (absolute names are
/// kept as-is). The MDPHOM_DATA_DIR environment variable overrides data_dir.
std::string resolve_path(const RunConfig& config, const std::string& name);

}  // namespace mdphom
