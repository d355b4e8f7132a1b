#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mdphom/env.hpp"
#include "mdphom/rng.hpp"

namespace mdphom {

/// One (state, action, reward, next state) experience tuple. Observations are
/// interned in the owning dataset's pool; bit-identical observations share an
/// id, so id equality is observation equality.
struct TransitionRecord {
    std::uint32_t state_id = 0;
    std::uint32_t next_state_id = 0;
    std::uint16_t action = 0;
    double reward = 0.0;
    std::uint32_t trajectory_id = 0;
    std::uint32_t step_index = 0;
};

struct ReplayDataset {
    std::vector<Tensor> observations;  // interned pool
    ObsKind obs_kind = ObsKind::symbolic;
    std::vector<std::size_t> obs_shape;
    std::vector<TransitionRecord> records;

    std::string env_id;
    std::string policy_id = "uniform_random";
    std::uint64_t seed = 0;
    std::uint32_t num_trajectories = 0;

    /// [first record index, record count) per trajectory; rebuilt on load.
    std::vector<std::pair<std::size_t, std::size_t>> trajectory_spans;

    std::size_t size() const { return records.size(); }
    const Tensor& obs(std::uint32_t id) const { return observations[id]; }

    /// Interns an observation, returning its pool id.
    std::uint32_t intern(const Tensor& obs);

    void rebuild_spans();

private:
    // observation hash -> pool ids with that hash
    std::unordered_multimap<std::uint64_t, std::uint32_t> intern_index_;
};

/// Rolls out `num_trajectories` complete episodes with a uniform random
/// policy. Fully deterministic given the seed.
ReplayDataset collect(Environment& env, std::size_t num_trajectories, std::uint64_t seed);

/// Uniform sampling with replacement over all records; returns record indices.
std::vector<std::size_t> sample_batch(const ReplayDataset& dataset, std::size_t batch_size,
                                      Rng& rng);

/// Draws J negative observations uniformly from the anchor's trajectory,
/// excluding states equal to the anchor's own state or its next state. Falls
/// back to excluding only the next state when that leaves no candidates.
/// J = 0 returns an empty set.
std::vector<std::uint32_t> sample_negatives(const ReplayDataset& dataset, std::size_t record_index,
                                            std::size_t num_negatives, Rng& rng);

void save_dataset(const ReplayDataset& dataset, const std::string& path);
ReplayDataset load_dataset(const std::string& path);

}  // namespace mdphom
