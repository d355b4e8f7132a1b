#include "mdphom/cartpole.hpp"

#include <cmath>

#include "mdphom/errors.hpp"
#include "mdphom/rng.hpp"

namespace mdphom {

namespace {
constexpr double kGravity = 9.8;
constexpr double kMassCart = 1.0;
constexpr double kMassPole = 0.1;
constexpr double kTotalMass = kMassCart + kMassPole;
constexpr double kHalfLength = 0.5;
constexpr double kPoleMassLength = kMassPole * kHalfLength;
constexpr double kForce = 10.0;
constexpr double kDt = 0.02;
constexpr double kThetaLimit = 12.0 * 2.0 * M_PI / 360.0;
constexpr double kXLimit = 2.4;
}  // namespace

Observation Cartpole::observe() const {
    return Observation{Tensor({4}, {x_, x_dot_, theta_, theta_dot_}), ObsKind::symbolic};
}

ResetResult Cartpole::reset(std::uint64_t seed) {
    if (config_.start_noise) {
        Rng rng(seed);
        x_ = rng.uniform(-0.05, 0.05);
        x_dot_ = rng.uniform(-0.05, 0.05);
        theta_ = rng.uniform(-0.05, 0.05);
        theta_dot_ = rng.uniform(-0.05, 0.05);
    } else {
        x_ = x_dot_ = theta_ = theta_dot_ = 0.0;
    }
    steps_ = 0;
    active_ = true;
    ResetResult result;
    result.observation = observe();
    result.goal.goal_observation = Observation{Tensor({4}), ObsKind::symbolic};
    return result;
}

EnvStep Cartpole::step(int action) {
    if (!active_) throw UsageError("cartpole: step after episode end");
    if (action != 0 && action != 1) {
        throw UsageError("cartpole: unknown action " + std::to_string(action));
    }
    const double force = action == 1 ? kForce : -kForce;
    const double cos_theta = std::cos(theta_);
    const double sin_theta = std::sin(theta_);
    const double temp =
        (force + kPoleMassLength * theta_dot_ * theta_dot_ * sin_theta) / kTotalMass;
    const double theta_acc =
        (kGravity * sin_theta - cos_theta * temp) /
        (kHalfLength * (4.0 / 3.0 - kMassPole * cos_theta * cos_theta / kTotalMass));
    const double x_acc = temp - kPoleMassLength * theta_acc * cos_theta / kTotalMass;

    x_ += kDt * x_dot_;
    x_dot_ += kDt * x_acc;
    theta_ += kDt * theta_dot_;
    theta_dot_ += kDt * theta_acc;
    steps_ += 1;

    const bool failed = std::fabs(x_) > kXLimit || std::fabs(theta_) > kThetaLimit;
    if (failed || steps_ >= config_.step_cap) active_ = false;

    EnvStep result;
    result.next_observation = observe();
    result.reward = 1.0;
    result.done = !active_;
    result.info = {{"x", x_},
                   {"x_dot", x_dot_},
                   {"theta", theta_},
                   {"theta_dot", theta_dot_},
                   {"steps", static_cast<double>(steps_)},
                   {"failed", failed ? 1.0 : 0.0}};
    return result;
}

}  // namespace mdphom
