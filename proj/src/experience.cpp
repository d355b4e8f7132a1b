#include "mdphom/experience.hpp"

#include <cstring>

#include <nlohmann/json.hpp>

#include "mdphom/errors.hpp"
#include "mdphom/io.hpp"

namespace mdphom {

namespace {

std::uint64_t hash_doubles(const std::vector<double>& values) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-style mix over the raw bits
    for (double v : values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        h = (h ^ bits) * 1099511628211ULL;
        h ^= h >> 29;
    }
    return h;
}

}  // namespace

std::uint32_t ReplayDataset::intern(const Tensor& obs) {
    const std::uint64_t h = hash_doubles(obs.data);
    auto [begin, end] = intern_index_.equal_range(h);
    for (auto it = begin; it != end; ++it) {
        if (observations[it->second].data == obs.data) return it->second;
    }
    const auto id = static_cast<std::uint32_t>(observations.size());
    observations.push_back(obs);
    intern_index_.emplace(h, id);
    return id;
}

void ReplayDataset::rebuild_spans() {
    trajectory_spans.clear();
    std::size_t begin = 0;
    for (std::size_t i = 0; i <= records.size(); ++i) {
        if (i == records.size() || (i > begin && records[i].trajectory_id != records[begin].trajectory_id)) {
            if (i > begin) trajectory_spans.push_back({begin, i - begin});
            begin = i;
        }
    }
}

ReplayDataset collect(Environment& env, std::size_t num_trajectories, std::uint64_t seed) {
    if (num_trajectories == 0) throw UsageError("collect: need at least one trajectory");
    ReplayDataset ds;
    ds.env_id = env.id();
    ds.obs_shape = env.observation_shape();
    ds.seed = seed;
    ds.num_trajectories = static_cast<std::uint32_t>(num_trajectories);

    Rng base(seed);
    const int num_actions = env.num_actions();
    for (std::size_t k = 0; k < num_trajectories; ++k) {
        const std::uint64_t env_seed = base.next_u64();
        Rng policy(base.next_u64());
        try {
            ResetResult r = env.reset(env_seed);
            ds.obs_kind = r.observation.kind;
            std::uint32_t cur = ds.intern(r.observation.data);
            std::uint32_t step = 0;
            while (env.episode_active()) {
                const auto action = static_cast<std::uint16_t>(policy.uniform_index(num_actions));
                EnvStep s = env.step(static_cast<int>(action));
                const std::uint32_t next = ds.intern(s.next_observation.data);
                ds.records.push_back({cur, next, action, s.reward,
                                      static_cast<std::uint32_t>(k), step});
                cur = next;
                step += 1;
            }
        } catch (const std::exception& e) {
            throw UsageError("collect: trajectory " + std::to_string(k) + " failed: " + e.what());
        }
    }
    ds.rebuild_spans();
    return ds;
}

std::vector<std::size_t> sample_batch(const ReplayDataset& dataset, std::size_t batch_size,
                                      Rng& rng) {
    if (dataset.records.empty()) throw UsageError("sample_batch: dataset is empty");
    if (batch_size == 0) throw UsageError("sample_batch: batch_size must be positive");
    std::vector<std::size_t> indices(batch_size);
    for (std::size_t& i : indices) i = rng.uniform_index(dataset.records.size());
    return indices;
}

std::vector<std::uint32_t> sample_negatives(const ReplayDataset& dataset, std::size_t record_index,
                                            std::size_t num_negatives, Rng& rng) {
    if (record_index >= dataset.records.size()) {
        throw UsageError("sample_negatives: record index out of range");
    }
    if (num_negatives == 0) return {};
    const TransitionRecord& anchor = dataset.records[record_index];
    const auto& span = dataset.trajectory_spans.at(anchor.trajectory_id);
    const std::size_t num_states = span.second + 1;
    if (num_states < 2) throw UsageError("sample_negatives: trajectory has fewer than 2 states");

    auto state_at = [&](std::size_t t) -> std::uint32_t {
        return t < span.second ? dataset.records[span.first + t].state_id
                               : dataset.records[span.first + span.second - 1].next_state_id;
    };

    auto draw = [&](bool exclude_anchor) -> std::int64_t {
        for (int attempt = 0; attempt < 16; ++attempt) {
            const std::uint32_t id = state_at(rng.uniform_index(num_states));
            if (id == anchor.next_state_id) continue;
            if (exclude_anchor && id == anchor.state_id) continue;
            return id;
        }
        std::vector<std::uint32_t> eligible;
        for (std::size_t t = 0; t < num_states; ++t) {
            const std::uint32_t id = state_at(t);
            if (id == anchor.next_state_id) continue;
            if (exclude_anchor && id == anchor.state_id) continue;
            eligible.push_back(id);
        }
        if (eligible.empty()) return -1;
        return eligible[rng.uniform_index(eligible.size())];
    };

    std::vector<std::uint32_t> negatives;
    negatives.reserve(num_negatives);
    for (std::size_t j = 0; j < num_negatives; ++j) {
        std::int64_t id = draw(true);
        if (id < 0) id = draw(false);
        if (id < 0) throw UsageError("sample_negatives: no candidate states in trajectory");
        negatives.push_back(static_cast<std::uint32_t>(id));
    }
    return negatives;
}

namespace {
constexpr char kDatasetMagic[5] = "MHDS";
constexpr std::uint32_t kDatasetVersion = 1;
}  // namespace

void save_dataset(const ReplayDataset& dataset, const std::string& path) {
    BinaryWriter w(path);
    w.magic(kDatasetMagic);
    w.u32(kDatasetVersion);
    nlohmann::json header{{"env_id", dataset.env_id},
                          {"policy_id", dataset.policy_id},
                          {"seed", dataset.seed},
                          {"num_trajectories", dataset.num_trajectories},
                          {"obs_kind", obs_kind_name(dataset.obs_kind)},
                          {"obs_shape", dataset.obs_shape},
                          {"observation_count", dataset.observations.size()},
                          {"record_count", dataset.records.size()}};
    w.bytes(header.dump());
    for (const Tensor& obs : dataset.observations) {
        w.u64(obs.size());
        w.f64_array(obs.data.data(), obs.size());
    }
    w.u64(dataset.records.size());
    for (const TransitionRecord& r : dataset.records) {
        w.u32(r.state_id);
        w.u32(r.next_state_id);
        w.u16(r.action);
        w.u32(r.trajectory_id);
        w.u32(r.step_index);
        w.f64(r.reward);
    }
    w.close();
}

ReplayDataset load_dataset(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kDatasetMagic, "replay dataset");
    const std::uint32_t version = r.u32();
    if (version != kDatasetVersion) {
        throw FormatError("unsupported dataset version " + std::to_string(version), r.offset() - 4);
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(r.bytes());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad dataset header: ") + e.what(), r.offset());
    }
    ReplayDataset ds;
    ds.env_id = header.at("env_id").get<std::string>();
    ds.policy_id = header.at("policy_id").get<std::string>();
    ds.seed = header.at("seed").get<std::uint64_t>();
    ds.num_trajectories = header.at("num_trajectories").get<std::uint32_t>();
    ds.obs_kind = obs_kind_from_name(header.at("obs_kind").get<std::string>());
    ds.obs_shape = header.at("obs_shape").get<std::vector<std::size_t>>();
    const auto obs_count = header.at("observation_count").get<std::size_t>();
    const auto expected_numel = shape_numel(ds.obs_shape);

    ds.observations.reserve(obs_count);
    for (std::size_t i = 0; i < obs_count; ++i) {
        const std::uint64_t numel = r.u64();
        if (numel != expected_numel) {
            throw FormatError("observation " + std::to_string(i) + " has wrong length",
                              r.offset() - 8);
        }
        Tensor t(ds.obs_shape);
        r.f64_array(t.data.data(), t.size());
        ds.observations.push_back(std::move(t));
    }
    const std::uint64_t record_count = r.u64();
    if (record_count != header.at("record_count").get<std::uint64_t>()) {
        throw FormatError("record count disagrees with header", r.offset() - 8);
    }
    ds.records.reserve(record_count);
    for (std::uint64_t i = 0; i < record_count; ++i) {
        TransitionRecord rec;
        rec.state_id = r.u32();
        rec.next_state_id = r.u32();
        rec.action = r.u16();
        rec.trajectory_id = r.u32();
        rec.step_index = r.u32();
        rec.reward = r.f64();
        if (rec.state_id >= obs_count || rec.next_state_id >= obs_count) {
            throw FormatError("record " + std::to_string(i) + " references a missing observation",
                              r.offset());
        }
        ds.records.push_back(rec);
    }
    ds.rebuild_spans();
    return ds;
}

}  // namespace mdphom
