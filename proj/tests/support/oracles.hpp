#pragma once

// Test-only oracles, kept independent of the library's solver paths.

#include <cstdint>
#include <vector>

#include "mdphom/abstract_mdp.hpp"
#include "mdphom/env.hpp"
#include "mdphom/rng.hpp"

namespace mdphom::testing {

/// Dense stochastic MDP with state rewards, for oracle comparisons.
struct RandomMdp {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> transitions;  // (S, A, S), row-stochastic
    std::vector<double> rewards;      // per state
    double gamma = 0.9;

    double t(std::size_t s, std::size_t a, std::size_t s2) const {
        return transitions[(s * num_actions + a) * num_states + s2];
    }
};

RandomMdp make_random_mdp(std::size_t states, std::size_t actions, double gamma, Rng& rng);

/// Exact policy iteration: policy evaluation solves the linear system by
/// Gaussian elimination, then greedy improvement until the policy is stable.
/// Returns Q-values (S x A).
std::vector<double> policy_iteration_q(const RandomMdp& mdp);

/// Greedy policy from a (S x A) Q matrix, ties to the lowest action.
std::vector<std::size_t> greedy_policy(const std::vector<double>& q, std::size_t states,
                                       std::size_t actions);

/// Observation-level ground truth for the single-object room: states are
/// (agent cell, key cell) before pickup plus (agent cell) after pickup.
/// Transitions are movement and pickup; episode termination is not part of
/// the observation dynamics. State rewards are the uniform-policy expected
/// one-step rewards (delivery bonus averaged over the four corners).
struct GridOracle {
    std::size_t grid_n = 0;
    std::size_t num_states = 0;
    TabularMdp mdp;

    // state indexing
    std::size_t pre_state(std::size_t agent, std::size_t key) const;   // agent != key
    std::size_t carried_state(std::size_t agent) const;
    /// Observation-level state of an underlying (agent, key, present) triple.
    std::size_t state_of(std::size_t agent_x, std::size_t agent_y, std::size_t key_x,
                         std::size_t key_y, bool key_present) const;
};

GridOracle enumerate_single_object(std::size_t grid_n);

}  // namespace mdphom::testing
