#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mdphom/abstract_mdp.hpp"
#include "mdphom/env.hpp"

namespace mdphom {

struct QTable {
    Tensor values;  // (|X|, |A|)
    std::size_t backup_count = 0;
    double gamma = 0.9;
    double final_residual = 0.0;

    double q(std::size_t x, std::size_t a) const { return values.data[x * values.dim(1) + a]; }
};

/// Bellman optimality backups on the abstract MDP until the max-norm residual
/// drops below `tolerance` or `backups` sweeps have run. A goal prototype is
/// absorbing: its Q row stays pinned at the goal reward.
QTable value_iteration(const AbstractMdp& mdp, std::size_t backups = 500,
                       double tolerance = 1e-10);

/// Softmax interpolation weights over prototype distances to z_star
/// (max-subtracted; non-negative and summing to 1).
std::vector<double> interpolation_weights(const PrototypeSet& prototypes,
                                          std::span<const double> z_star, double eta);

/// Q(z_star, a) = sum_x w(z_star, x) Q(x, a).
std::vector<double> interpolate_q(const QTable& qtable, const PrototypeSet& prototypes,
                                  std::span<const double> z_star, double eta);

/// Encodes the observation, interpolates Q-values, and returns the argmax
/// action (ties broken toward the lowest action id).
int act_greedy(const ModelParams& params, const QTable& qtable, const PrototypeSet& prototypes,
               const Observation& obs, double eta);

struct EpisodeReport {
    std::size_t length = 0;
    double undiscounted_return = 0.0;
    double discounted_return = 0.0;
    bool success = false;
    std::uint64_t seed = 0;
};

struct EvalSummary {
    std::size_t episodes = 0;
    double mean_length = 0.0;
    double std_length = 0.0;
    double success_rate = 0.0;
    double mean_return = 0.0;
};

struct EvalResult {
    std::vector<EpisodeReport> episodes;
    EvalSummary summary;
};

struct PlannerConfig {
    std::size_t backups = 500;
    double tolerance = 1e-10;
    double eta = 1e-20;
};

/// Runs greedy episodes against the environment. Every episode samples its
/// own goal, so planning (goal reward assignment + value iteration) happens
/// per distinct goal observation, cached across episodes. Success is judged
/// by the environment's final step.
EvalResult evaluate(Environment& env, const ModelParams& params, const AbstractMdp& base,
                    const PlannerConfig& planner, std::size_t episodes, std::uint64_t seed);

struct TauGridResult {
    double best_tau = 0.0;
    /// (tau, mean episode length) per candidate, in candidate order.
    std::vector<std::pair<double, double>> scores;
};

/// Evaluates each temperature on the train-goal environment and returns the
/// one minimizing mean episode length (maximizing when `maximize_length` is
/// set, for environments where longer episodes are better). Ties go to the
/// smaller temperature.
TauGridResult tau_grid_search(const std::vector<double>& candidates, const ModelParams& params,
                              const PrototypeSet& prototypes, double gamma, Environment& train_env,
                              const PlannerConfig& planner, std::size_t episodes,
                              std::uint64_t seed, bool maximize_length = false);

/// How the environment judges a finished episode; used for success rates.
bool episode_succeeded(const Environment& env, const EnvStep& final_step, std::size_t length);

}  // namespace mdphom
