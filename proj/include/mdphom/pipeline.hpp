#pragma once

#include <memory>
#include <string>

#include "mdphom/config.hpp"
#include "mdphom/gridworld.hpp"
#include "mdphom/planner.hpp"

namespace mdphom {

/// Instantiates the configured environment; the goal split in the config can
/// be overridden (eval uses its own split).
std::unique_ptr<Environment> make_environment(const RunConfig& config);
std::unique_ptr<Environment> make_environment(const RunConfig& config, GoalSplit goal_split);

struct CollectOutcome {
    std::string dataset_path;
    std::size_t records = 0;
    std::size_t trajectories = 0;
    std::size_t distinct_observations = 0;
};
CollectOutcome run_collect(const RunConfig& config);

struct TrainOutcome {
    std::string checkpoint_path;
    std::string loss_csv_path;
    TrainResult result;
};
TrainOutcome run_train(const RunConfig& config);

struct PlanOutcome {
    std::string abstract_path;
    std::string qtable_path;
    std::size_t num_prototypes = 0;
    double tau = 0.0;
    int goal_index = -1;
    std::vector<std::pair<double, double>> grid_scores;  // filled by the tau grid search
};
/// Builds prototypes and transitions from checkpoint + dataset, assigns the
/// goal sampled by the configured environment at the run seed, runs value
/// iteration, and writes the abstract MDP and Q-table files. With
/// `tau_grid = true` the paper grid in the config is searched on train goals
/// first and the best temperature is used.
PlanOutcome run_plan(const RunConfig& config, bool tau_grid = false);

struct EvalOutcome {
    EvalResult result;
    std::string summary_csv_path;
    std::string episodes_csv_path;
};
/// Evaluates greedy episodes with per-goal replanning. Uses the saved
/// abstract MDP when present, otherwise rebuilds it from checkpoint+dataset.
EvalOutcome run_eval(const RunConfig& config);

struct ExportOutcome {
    std::string latents_csv_path;
    std::size_t nodes = 0;
    std::string fit_set;  // "prototypes" or "dataset"
};
ExportOutcome run_export_latents(const RunConfig& config);

struct RunAllOutcome {
    CollectOutcome collect;
    TrainOutcome train;
    PlanOutcome plan;
    EvalOutcome eval;
};
RunAllOutcome run_all(const RunConfig& config, bool tau_grid = false);

/// Deterministic shortest-exact double formatting used by every CSV writer.
std::string format_double(double v);

void save_qtable(const QTable& qtable, const std::string& path);
QTable load_qtable(const std::string& path);

}  // namespace mdphom
