#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mdphom/tensor.hpp"

namespace mdphom {

enum class ObsKind { pixel, symbolic };

std::string obs_kind_name(ObsKind kind);
ObsKind obs_kind_from_name(const std::string& name);

struct Observation {
    Tensor data;
    ObsKind kind = ObsKind::symbolic;

    bool operator==(const Observation& other) const {
        return kind == other.kind && data == other.data;
    }
};

struct GoalSpec {
    Observation goal_observation;
};

struct EnvStep {
    Observation next_observation;
    double reward = 0.0;
    bool done = false;
    /// True underlying state, for test oracles only.
    std::map<std::string, double> info;
};

struct ResetResult {
    Observation observation;
    GoalSpec goal;
};

/// Deterministic episodic environment. Identical (seed, action sequence)
/// pairs produce identical observation and reward sequences.
class Environment {
public:
    virtual ~Environment() = default;

    virtual ResetResult reset(std::uint64_t seed) = 0;
    /// Throws UsageError when called after the episode has finished.
    virtual EnvStep step(int action) = 0;

    virtual int num_actions() const = 0;
    virtual std::vector<std::size_t> observation_shape() const = 0;
    virtual std::size_t episode_cap() const = 0;
    virtual bool episode_active() const = 0;
    virtual std::string id() const = 0;
};

}  // namespace mdphom
