#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdphom/model.hpp"

namespace mdphom {

/// Pool id marker for prototypes that were inserted (goal states) rather than
/// sampled from the dataset.
inline constexpr std::uint32_t kInsertedPrototype = 0xffffffffu;

/// Deduplicated latent prototype states: the discrete state set of the
/// abstract MDP. Pairwise squared distances between stored points are at
/// least the dedup tolerance.
struct PrototypeSet {
    Tensor points;  // (count, D)
    std::vector<std::uint32_t> source_obs_ids;
    double dedup_tolerance = 1e-8;

    std::size_t size() const { return source_obs_ids.size(); }
    std::size_t latent_dim() const { return points.dim(1); }
    std::span<const double> point(std::size_t i) const {
        return {points.data.data() + i * latent_dim(), latent_dim()};
    }
};

/// Greedy first-wins dedup: a candidate is dropped when it lies within
/// `tolerance` (squared distance) of an already kept point.
PrototypeSet dedup_points(const Tensor& candidates, const std::vector<std::uint32_t>& sources,
                          double tolerance);

/// Samples `num_samples` states from the dataset (uniformly, with
/// replacement, over every state occurring in it), encodes them, and prunes
/// duplicates. `num_samples == 0` encodes every distinct observation instead.
PrototypeSet build_prototypes(const ModelParams& params, const ReplayDataset& dataset,
                              std::size_t num_samples, double dedup_tolerance, Rng& rng);

/// The plannable discrete MDP: prototypes, a dense row-stochastic transition
/// tensor (|X|, |A|, |X|), state rewards, discount and temperature. When a
/// goal has been assigned, `goal_index` marks the absorbing goal prototype.
struct AbstractMdp {
    PrototypeSet prototypes;
    Tensor transitions;
    std::vector<double> rewards;
    double gamma = 0.9;
    double tau = 1e-20;
    int goal_index = -1;

    std::size_t num_states() const { return prototypes.size(); }
    std::size_t num_actions() const { return transitions.dim(1); }
    double transition(std::size_t from, std::size_t action, std::size_t to) const {
        return transitions.data[(from * num_actions() + action) * num_states() + to];
    }
};

/// Temperature-softmax transition probabilities for one action: entry (i, j)
/// is the probability of moving from prototype i to prototype j. Rows are
/// computed in log space with max subtraction and sum to 1.
Tensor transition_probs(const ModelParams& params, const PrototypeSet& prototypes, int action,
                        double tau);

/// Builds the full abstract MDP; rewards default to the reward head's
/// predictions over the prototypes.
AbstractMdp build_abstract_mdp(const ModelParams& params, PrototypeSet prototypes, double tau,
                               double gamma);

/// Replaces rewards with the predicted-reward vector (no goal).
void assign_predicted_rewards(AbstractMdp& mdp, const ModelParams& params);

/// Goal-conditioned rewards: encodes the goal, maps it to the nearest
/// prototype (inserting a new prototype and rebuilding transitions when the
/// goal is farther than the dedup tolerance from every existing one), sets
/// reward 1 there and 0 elsewhere, and marks it absorbing. Returns the goal
/// prototype index.
int assign_goal_reward(AbstractMdp& mdp, const ModelParams& params, const Observation& goal);

/// Ground-truth deterministic MDP over enumerated states, used as the oracle
/// side of the homomorphism check. `next[s * num_actions + a]` is the unique
/// successor; `state_reward[s]` is the expected one-step reward from s under
/// a uniform policy.
struct TabularMdp {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<std::size_t> next;
    std::vector<double> state_reward;
};

struct HomomorphismReport {
    std::size_t pairs_checked = 0;
    std::size_t transition_passes = 0;
    std::size_t reward_passes = 0;
    std::size_t joint_passes = 0;
    std::size_t unmapped = 0;
    double joint_pass_rate = 0.0;
    double min_transition_prob = 1.0;
    double max_reward_error = 0.0;

    struct Violation {
        std::size_t state = 0;
        std::size_t action = 0;
        double prob = 0.0;
        double reward_error = 0.0;
    };
    std::vector<Violation> worst;
};

/// Checks the deterministic homomorphism conditions against a ground-truth
/// MDP: for each (s, a) the abstract transition must put at least
/// `prob_threshold` mass on the prototype of the true successor, and the
/// abstract reward at the mapped prototype must match the ground-truth state
/// reward within `reward_tolerance`. `state_to_prototype[s] < 0` marks an
/// unmapped state and counts as a failure. When `pairs` is null every (s, a)
/// is checked.
HomomorphismReport verify_homomorphism(
    const AbstractMdp& mdp, const TabularMdp& ground_truth,
    const std::vector<int>& state_to_prototype, double prob_threshold, double reward_tolerance,
    const std::vector<std::pair<std::size_t, std::size_t>>* pairs = nullptr);

void save_abstract_mdp(const AbstractMdp& mdp, const std::string& path);
AbstractMdp load_abstract_mdp(const std::string& path);

}  // namespace mdphom
