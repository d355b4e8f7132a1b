#include "mdphom/gridworld.hpp"

#include <algorithm>

#include "mdphom/errors.hpp"

namespace mdphom {

std::string goal_split_name(GoalSplit split) {
    return split == GoalSplit::train ? "train" : "test";
}

GoalSplit goal_split_from_name(const std::string& name) {
    if (name == "train") return GoalSplit::train;
    if (name == "test") return GoalSplit::test;
    throw ConfigError("unknown goal split '" + name + "'");
}

std::string obs_kind_name(ObsKind kind) {
    return kind == ObsKind::pixel ? "pixel" : "symbolic";
}

ObsKind obs_kind_from_name(const std::string& name) {
    if (name == "pixel") return ObsKind::pixel;
    if (name == "symbolic") return ObsKind::symbolic;
    throw ConfigError("unknown observation kind '" + name + "'");
}

Gridworld::Gridworld(GridworldConfig config) : config_(config) {
    if (config_.grid_n < 2) throw ConfigError("gridworld needs at least a 2x2 room");
    if (config_.obs_kind == ObsKind::pixel && config_.cell_px == 0) {
        throw ConfigError("gridworld cell_px must be positive for pixel observations");
    }
    if (config_.fixed_corner > 3) throw ConfigError("gridworld fixed_corner must be 0..3");
}

std::vector<std::size_t> Gridworld::observation_shape() const {
    if (config_.obs_kind == ObsKind::pixel) {
        const std::size_t px = config_.grid_n * config_.cell_px;
        return {3, px, px};
    }
    return {config_.task == GridTask::single_object ? std::size_t{5} : std::size_t{8}};
}

std::string Gridworld::id() const {
    std::string s = config_.task == GridTask::single_object ? "gridworld_single" : "gridworld_double";
    s += "_n" + std::to_string(config_.grid_n);
    s += config_.obs_kind == ObsKind::pixel ? "_px" + std::to_string(config_.cell_px) : "_sym";
    return s;
}

Observation Gridworld::render(std::size_t agent_x, std::size_t agent_y,
                              const std::vector<std::array<std::size_t, 3>>& objects) const {
    const std::size_t n = config_.grid_n;
    if (config_.obs_kind == ObsKind::pixel) {
        const std::size_t px = config_.cell_px;
        const std::size_t side = n * px;
        Observation obs{Tensor({3, side, side}), ObsKind::pixel};
        auto paint = [&](std::size_t channel, std::size_t cx, std::size_t cy) {
            double* plane = obs.data.data.data() + channel * side * side;
            for (std::size_t r = cy * px; r < (cy + 1) * px; ++r)
                for (std::size_t c = cx * px; c < (cx + 1) * px; ++c) plane[r * side + c] = 1.0;
        };
        paint(0, agent_x, agent_y);
        for (std::size_t i = 0; i < objects.size(); ++i)
            if (objects[i][2]) paint(1 + i, objects[i][0], objects[i][1]);
        return obs;
    }
    const double denom = static_cast<double>(n - 1);
    std::vector<double> v;
    v.push_back(static_cast<double>(agent_x) / denom);
    v.push_back(static_cast<double>(agent_y) / denom);
    for (const auto& o : objects) {
        const bool present = o[2] != 0;
        v.push_back(present ? static_cast<double>(o[0]) / denom : 0.0);
        v.push_back(present ? static_cast<double>(o[1]) / denom : 0.0);
        v.push_back(present ? 1.0 : 0.0);
    }
    return Observation{Tensor({v.size()}, std::move(v)), ObsKind::symbolic};
}

Observation Gridworld::observe() const {
    std::vector<std::array<std::size_t, 3>> objs;
    for (const Obj& o : objects_) objs.push_back({o.x, o.y, o.present ? std::size_t{1} : 0});
    return render(agent_x_, agent_y_, objs);
}

ResetResult Gridworld::reset(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n = config_.grid_n;
    const std::size_t num_objects = config_.task == GridTask::single_object ? 1 : 2;

    // agent and objects on distinct cells
    std::vector<std::size_t> cells;
    while (cells.size() < num_objects + 1) {
        const std::size_t cell = rng.uniform_index(n * n);
        if (std::find(cells.begin(), cells.end(), cell) == cells.end()) cells.push_back(cell);
    }
    agent_x_ = cells[0] % n;
    agent_y_ = cells[0] / n;
    objects_.clear();
    for (std::size_t i = 0; i < num_objects; ++i) {
        Obj o;
        o.x = cells[1 + i] % n;
        o.y = cells[1 + i] / n;
        objects_.push_back(o);
    }

    target_ = 0;
    if (config_.goal_split == GoalSplit::train) {
        const std::size_t corner = config_.fixed_corner >= 0
                                       ? static_cast<std::size_t>(config_.fixed_corner)
                                       : rng.uniform_index(4);
        delivery_x_ = (corner & 1) ? n - 1 : 0;
        delivery_y_ = (corner & 2) ? n - 1 : 0;
    } else {
        const std::size_t cell = rng.uniform_index(n * n);
        delivery_x_ = cell % n;
        delivery_y_ = cell / n;
        if (config_.task == GridTask::double_object) target_ = rng.uniform_index(2);
    }

    steps_ = 0;
    delivered_ = false;
    active_ = true;

    // goal: agent at the delivery cell, target object gone, others untouched
    std::vector<std::array<std::size_t, 3>> goal_objs;
    for (std::size_t i = 0; i < objects_.size(); ++i)
        goal_objs.push_back({objects_[i].x, objects_[i].y, i == target_ ? std::size_t{0} : 1});
    ResetResult result;
    result.observation = observe();
    result.goal.goal_observation = render(delivery_x_, delivery_y_, goal_objs);
    return result;
}

EnvStep Gridworld::step(int action) {
    if (!active_) throw UsageError("gridworld: step after episode end");
    const std::size_t n = config_.grid_n;
    std::ptrdiff_t dx = 0, dy = 0;
    switch (action) {
        case 0: dy = -1; break;
        case 1: dy = 1; break;
        case 2: dx = -1; break;
        case 3: dx = 1; break;
        default: throw UsageError("gridworld: unknown action " + std::to_string(action));
    }
    const std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(agent_x_) + dx;
    const std::ptrdiff_t ny = static_cast<std::ptrdiff_t>(agent_y_) + dy;
    if (nx >= 0 && nx < static_cast<std::ptrdiff_t>(n)) agent_x_ = static_cast<std::size_t>(nx);
    if (ny >= 0 && ny < static_cast<std::ptrdiff_t>(n)) agent_y_ = static_cast<std::size_t>(ny);

    steps_ += 1;
    double reward = -0.1;
    for (std::size_t i = 0; i < objects_.size(); ++i) {
        Obj& o = objects_[i];
        if (o.present && o.x == agent_x_ && o.y == agent_y_) {
            o.present = false;
            o.carried = true;
            reward += (i == target_) ? 1.0 : -1.0;
        }
    }
    if (objects_[target_].carried && agent_x_ == delivery_x_ && agent_y_ == delivery_y_) {
        reward += 1.0;
        delivered_ = true;
        active_ = false;
    } else if (steps_ >= config_.step_cap) {
        active_ = false;
    }

    EnvStep result;
    result.next_observation = observe();
    result.reward = reward;
    result.done = !active_;
    result.info = info();
    return result;
}

std::map<std::string, double> Gridworld::info() const {
    std::map<std::string, double> m;
    m["agent_x"] = static_cast<double>(agent_x_);
    m["agent_y"] = static_cast<double>(agent_y_);
    m["delivery_x"] = static_cast<double>(delivery_x_);
    m["delivery_y"] = static_cast<double>(delivery_y_);
    m["target"] = static_cast<double>(target_);
    m["steps"] = static_cast<double>(steps_);
    m["delivered"] = delivered_ ? 1.0 : 0.0;
    const char* names[2] = {"key", "envelope"};
    for (std::size_t i = 0; i < objects_.size(); ++i) {
        const std::string p = names[i];
        m[p + "_x"] = static_cast<double>(objects_[i].x);
        m[p + "_y"] = static_cast<double>(objects_[i].y);
        m[p + "_present"] = objects_[i].present ? 1.0 : 0.0;
        m[p + "_carried"] = objects_[i].carried ? 1.0 : 0.0;
    }
    return m;
}

}  // namespace mdphom
