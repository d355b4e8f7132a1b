#pragma once

#include "mdphom/env.hpp"

namespace mdphom {

/// Classic cart-pole balancing with the canonical constants: gravity 9.8,
/// cart mass 1.0, pole mass 0.1, half-length 0.5, force 10, Euler steps of
/// 0.02s. Episode ends when |x| > 2.4, |theta| > 12 degrees, or after the
/// step cap. Observation is the raw (x, x_dot, theta, theta_dot) vector; the
/// goal observation is the zero vector.
///
/// Actions: 0 = push left, 1 = push right.
struct CartpoleConfig {
    bool start_noise = true;  // uniform +-0.05 initial state; false starts at zero
    std::size_t step_cap = 200;
};

class Cartpole : public Environment {
public:
    explicit Cartpole(CartpoleConfig config) : config_(config) {}

    ResetResult reset(std::uint64_t seed) override;
    EnvStep step(int action) override;

    int num_actions() const override { return 2; }
    std::vector<std::size_t> observation_shape() const override { return {4}; }
    std::size_t episode_cap() const override { return config_.step_cap; }
    bool episode_active() const override { return active_; }
    std::string id() const override { return "cartpole"; }

private:
    Observation observe() const;

    CartpoleConfig config_;
    double x_ = 0.0, x_dot_ = 0.0, theta_ = 0.0, theta_dot_ = 0.0;
    std::size_t steps_ = 0;
    bool active_ = false;
};

}  // namespace mdphom
