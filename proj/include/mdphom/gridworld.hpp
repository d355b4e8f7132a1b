#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "mdphom/env.hpp"
#include "mdphom/rng.hpp"

namespace mdphom {

enum class GridTask { single_object, double_object };
enum class GoalSplit { train, test };

std::string goal_split_name(GoalSplit split);
GoalSplit goal_split_from_name(const std::string& name);

/// Object collection room. The agent must pick up the target object and carry
/// it to the delivery cell. Train goals deliver to one of the four corners,
/// test goals to a uniformly sampled cell (and, in the double-object task, a
/// uniformly sampled target object).
///
/// Actions: 0 = up, 1 = down, 2 = left, 3 = right. Moving into a wall leaves
/// the position unchanged. Rewards: -0.1 every step, +1 for collecting the
/// target, -1 for collecting a wrong object, +1 extra on delivery.
struct GridworldConfig {
    GridTask task = GridTask::single_object;
    std::size_t grid_n = 6;    // cells per side
    std::size_t cell_px = 8;   // rendered pixels per cell
    ObsKind obs_kind = ObsKind::pixel;
    std::size_t step_cap = 100;
    GoalSplit goal_split = GoalSplit::train;
    int fixed_corner = -1;  // >= 0 pins the delivery corner for train goals
};

class Gridworld : public Environment {
public:
    explicit Gridworld(GridworldConfig config);

    ResetResult reset(std::uint64_t seed) override;
    EnvStep step(int action) override;

    int num_actions() const override { return 4; }
    std::vector<std::size_t> observation_shape() const override;
    std::size_t episode_cap() const override { return config_.step_cap; }
    bool episode_active() const override { return active_; }
    std::string id() const override;

    const GridworldConfig& config() const { return config_; }

    /// Renders the observation for an arbitrary underlying configuration;
    /// used for goal construction and by test oracles. Object entries are
    /// (x, y, present).
    Observation render(std::size_t agent_x, std::size_t agent_y,
                       const std::vector<std::array<std::size_t, 3>>& objects) const;

private:
    struct Obj {
        std::size_t x = 0, y = 0;
        bool present = true;
        bool carried = false;
    };

    Observation observe() const;
    std::map<std::string, double> info() const;

    GridworldConfig config_;
    std::size_t agent_x_ = 0, agent_y_ = 0;
    std::vector<Obj> objects_;
    std::size_t target_ = 0;
    std::size_t delivery_x_ = 0, delivery_y_ = 0;
    std::size_t steps_ = 0;
    bool delivered_ = false;
    bool active_ = false;
};

}  // namespace mdphom
