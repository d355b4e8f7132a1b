#include "support/oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace mdphom::testing {

RandomMdp make_random_mdp(std::size_t states, std::size_t actions, double gamma, Rng& rng) {
    RandomMdp mdp;
    mdp.num_states = states;
    mdp.num_actions = actions;
    mdp.gamma = gamma;
    mdp.transitions.resize(states * actions * states);
    mdp.rewards.resize(states);
    for (std::size_t s = 0; s < states; ++s) {
        mdp.rewards[s] = rng.uniform(-1.0, 1.0);
        for (std::size_t a = 0; a < actions; ++a) {
            double sum = 0.0;
            double* row = mdp.transitions.data() + (s * actions + a) * states;
            for (std::size_t j = 0; j < states; ++j) {
                row[j] = rng.uniform(0.0, 1.0);
                sum += row[j];
            }
            for (std::size_t j = 0; j < states; ++j) row[j] /= sum;
        }
    }
    return mdp;
}

namespace {

// solves A x = b in place by Gaussian elimination with partial pivoting
std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
        if (std::fabs(a[pivot * n + col]) < 1e-14) throw std::runtime_error("singular system");
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[pivot * n + j]);
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / a[col * n + col];
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double acc = b[r];
        for (std::size_t j = r + 1; j < n; ++j) acc -= a[r * n + j] * x[j];
        x[r] = acc / a[r * n + r];
    }
    return x;
}

}  // namespace

std::vector<double> policy_iteration_q(const RandomMdp& mdp) {
    const std::size_t s_count = mdp.num_states;
    const std::size_t a_count = mdp.num_actions;
    std::vector<std::size_t> policy(s_count, 0);
    std::vector<double> v(s_count, 0.0);

    for (int iter = 0; iter < 1000; ++iter) {
        // exact evaluation: (I - gamma * T_pi) v = R
        std::vector<double> a(s_count * s_count, 0.0);
        std::vector<double> b(mdp.rewards);
        for (std::size_t s = 0; s < s_count; ++s) {
            a[s * s_count + s] = 1.0;
            for (std::size_t j = 0; j < s_count; ++j)
                a[s * s_count + j] -= mdp.gamma * mdp.t(s, policy[s], j);
        }
        v = solve_linear(std::move(a), std::move(b), s_count);

        bool stable = true;
        for (std::size_t s = 0; s < s_count; ++s) {
            std::size_t best = 0;
            double best_q = -1e300;
            for (std::size_t act = 0; act < a_count; ++act) {
                double q = mdp.rewards[s];
                for (std::size_t j = 0; j < s_count; ++j)
                    q += mdp.gamma * mdp.t(s, act, j) * v[j];
                if (q > best_q + 1e-13) {
                    best_q = q;
                    best = act;
                }
            }
            if (best != policy[s]) {
                policy[s] = best;
                stable = false;
            }
        }
        if (stable) break;
    }

    std::vector<double> q(s_count * a_count);
    for (std::size_t s = 0; s < s_count; ++s) {
        for (std::size_t act = 0; act < a_count; ++act) {
            double acc = mdp.rewards[s];
            for (std::size_t j = 0; j < s_count; ++j)
                acc += mdp.gamma * mdp.t(s, act, j) * v[j];
            q[s * a_count + act] = acc;
        }
    }
    return q;
}

std::vector<std::size_t> greedy_policy(const std::vector<double>& q, std::size_t states,
                                       std::size_t actions) {
    std::vector<std::size_t> policy(states, 0);
    for (std::size_t s = 0; s < states; ++s) {
        std::size_t best = 0;
        for (std::size_t a = 1; a < actions; ++a)
            if (q[s * actions + a] > q[s * actions + best]) best = a;
        policy[s] = best;
    }
    return policy;
}

std::size_t GridOracle::pre_state(std::size_t agent, std::size_t key) const {
    return agent * grid_n * grid_n + key;
}

std::size_t GridOracle::carried_state(std::size_t agent) const {
    const std::size_t n2 = grid_n * grid_n;
    return n2 * n2 + agent;
}

std::size_t GridOracle::state_of(std::size_t agent_x, std::size_t agent_y, std::size_t key_x,
                                 std::size_t key_y, bool key_present) const {
    const std::size_t agent = agent_y * grid_n + agent_x;
    if (!key_present) return carried_state(agent);
    return pre_state(agent, key_y * grid_n + key_x);
}

GridOracle enumerate_single_object(std::size_t grid_n) {
    GridOracle oracle;
    oracle.grid_n = grid_n;
    const std::size_t n = grid_n;
    const std::size_t n2 = n * n;
    oracle.num_states = n2 * n2 + n2;
    oracle.mdp.num_states = oracle.num_states;
    oracle.mdp.num_actions = 4;
    oracle.mdp.next.assign(oracle.num_states * 4, 0);
    oracle.mdp.state_reward.assign(oracle.num_states, 0.0);

    const auto is_corner = [&](std::size_t cell) {
        const std::size_t x = cell % n, y = cell / n;
        return (x == 0 || x == n - 1) && (y == 0 || y == n - 1);
    };
    const auto move = [&](std::size_t cell, std::size_t action) {
        std::size_t x = cell % n, y = cell / n;
        switch (action) {
            case 0: y = y > 0 ? y - 1 : y; break;
            case 1: y = y < n - 1 ? y + 1 : y; break;
            case 2: x = x > 0 ? x - 1 : x; break;
            case 3: x = x < n - 1 ? x + 1 : x; break;
        }
        return y * n + x;
    };

    for (std::size_t agent = 0; agent < n2; ++agent) {
        // carried: the key is gone, only movement dynamics remain
        const std::size_t sc = oracle.carried_state(agent);
        double reward_sum = 0.0;
        for (std::size_t a = 0; a < 4; ++a) {
            const std::size_t next_agent = move(agent, a);
            oracle.mdp.next[sc * 4 + a] = oracle.carried_state(next_agent);
            reward_sum += -0.1 + (is_corner(next_agent) ? 0.25 : 0.0);
        }
        oracle.mdp.state_reward[sc] = reward_sum / 4.0;

        for (std::size_t key = 0; key < n2; ++key) {
            const std::size_t sp = oracle.pre_state(agent, key);
            if (agent == key) {
                // unreachable placeholder
                for (std::size_t a = 0; a < 4; ++a) oracle.mdp.next[sp * 4 + a] = sp;
                continue;
            }
            double r = 0.0;
            for (std::size_t a = 0; a < 4; ++a) {
                const std::size_t next_agent = move(agent, a);
                if (next_agent == key) {
                    // pickup; delivery can land on the same step when the key
                    // sits on the episode's corner (one corner in four)
                    oracle.mdp.next[sp * 4 + a] = oracle.carried_state(next_agent);
                    r += -0.1 + 1.0 + (is_corner(next_agent) ? 0.25 : 0.0);
                } else {
                    oracle.mdp.next[sp * 4 + a] = oracle.pre_state(next_agent, key);
                    r += -0.1;
                }
            }
            oracle.mdp.state_reward[sp] = r / 4.0;
        }
    }
    return oracle;
}

}  // namespace mdphom::testing
