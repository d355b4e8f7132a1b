#pragma once

// Small deterministic tabular environment with one-hot observations, plus a
// hand-built model that embeds it losslessly in latent space.

#include <cstdint>
#include <vector>

#include "mdphom/env.hpp"
#include "mdphom/errors.hpp"
#include "mdphom/model.hpp"

namespace mdphom::testing {

/// Episodes start in `start_state`, end on reaching `goal_state` or after the
/// cap. Rewards: 1 on reaching the goal, 0 otherwise.
class TabularEnv : public Environment {
public:
    TabularEnv(std::size_t num_states, std::size_t num_actions, std::vector<std::size_t> next,
               std::size_t start_state, std::size_t goal_state, std::size_t cap = 50)
        : num_states_(num_states),
          num_actions_(num_actions),
          next_(std::move(next)),
          start_(start_state),
          goal_(goal_state),
          cap_(cap) {}

    ResetResult reset(std::uint64_t) override {
        state_ = start_;
        steps_ = 0;
        active_ = true;
        ResetResult r;
        r.observation = observe(state_);
        r.goal.goal_observation = observe(goal_);
        return r;
    }

    EnvStep step(int action) override {
        if (!active_) throw UsageError("tabular env: step after done");
        state_ = next_.at(state_ * num_actions_ + static_cast<std::size_t>(action));
        steps_ += 1;
        const bool reached = state_ == goal_;
        if (reached || steps_ >= cap_) active_ = false;
        EnvStep s;
        s.next_observation = observe(state_);
        s.reward = reached ? 1.0 : 0.0;
        s.done = !active_;
        s.info = {{"state", static_cast<double>(state_)},
                  {"reached", reached ? 1.0 : 0.0}};
        return s;
    }

    int num_actions() const override { return static_cast<int>(num_actions_); }
    std::vector<std::size_t> observation_shape() const override { return {num_states_}; }
    std::size_t episode_cap() const override { return cap_; }
    bool episode_active() const override { return active_; }
    std::string id() const override { return "tabular_test_env"; }

    Observation observe(std::size_t state) const {
        Tensor t({num_states_});
        t.data[state] = 1.0;
        return Observation{std::move(t), ObsKind::symbolic};
    }

private:
    std::size_t num_states_, num_actions_;
    std::vector<std::size_t> next_;
    std::size_t start_, goal_, cap_;
    std::size_t state_ = 0, steps_ = 0;
    bool active_ = false;
};

/// Model whose encoder is the identity on one-hot observations and whose
/// action net reproduces the tabular transitions exactly:
/// hidden unit (s, a) fires iff z_s = 1 and the action one-hot matches, and
/// its output weights move the latent from e_s to e_{next(s, a)}.
inline ModelParams make_lossless_model(std::size_t num_states, std::size_t num_actions,
                                       const std::vector<std::size_t>& next) {
    ModelParams p;
    p.latent_dim = num_states;
    p.num_actions = num_actions;
    p.obs_shape = {num_states};

    p.encoder.input_shape = {num_states};
    Layer enc = Layer::dense(num_states, num_states);
    for (std::size_t i = 0; i < num_states; ++i) enc.weights.data[i * num_states + i] = 1.0;
    p.encoder.layers.push_back(std::move(enc));

    const std::size_t hidden = num_states * num_actions;
    p.action_net.input_shape = {num_states + num_actions};
    Layer a1 = Layer::dense(num_states + num_actions, hidden);
    Layer a2 = Layer::dense(hidden, num_states);
    for (std::size_t s = 0; s < num_states; ++s) {
        for (std::size_t a = 0; a < num_actions; ++a) {
            const std::size_t h = s * num_actions + a;
            a1.weights.data[h * (num_states + num_actions) + s] = 1.0;
            a1.weights.data[h * (num_states + num_actions) + num_states + a] = 1.0;
            a1.bias.data[h] = -1.0;
            const std::size_t target = next.at(s * num_actions + a);
            a2.weights.data[target * hidden + h] += 1.0;
            a2.weights.data[s * hidden + h] -= 1.0;
        }
    }
    p.action_net.layers.push_back(std::move(a1));
    p.action_net.layers.push_back(Layer::relu());
    p.action_net.layers.push_back(std::move(a2));

    p.reward_net.input_shape = {num_states};
    p.reward_net.layers.push_back(Layer::dense(num_states, 1));
    return p;
}

}  // namespace mdphom::testing
