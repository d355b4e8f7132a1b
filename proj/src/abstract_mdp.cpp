#include "mdphom/abstract_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "mdphom/errors.hpp"
#include "mdphom/gemm.hpp"
#include "mdphom/io.hpp"

namespace mdphom {

PrototypeSet dedup_points(const Tensor& candidates, const std::vector<std::uint32_t>& sources,
                          double tolerance) {
    const std::size_t n = candidates.dim(0);
    const std::size_t d = candidates.dim(1);
    if (sources.size() != n) throw UsageError("dedup_points: source list length mismatch");
    std::vector<double> kept;
    std::vector<std::uint32_t> kept_sources;
    for (std::size_t i = 0; i < n; ++i) {
        const double* z = candidates.data.data() + i * d;
        bool duplicate = false;
        for (std::size_t k = 0; k < kept_sources.size() && !duplicate; ++k) {
            double dist = 0.0;
            const double* p = kept.data() + k * d;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = z[j] - p[j];
                dist += diff * diff;
                if (0.5 * dist >= tolerance) break;
            }
            duplicate = 0.5 * dist < tolerance;
        }
        if (!duplicate) {
            kept.insert(kept.end(), z, z + d);
            kept_sources.push_back(sources[i]);
        }
    }
    if (kept_sources.empty()) throw UsageError("dedup_points: no candidates");
    PrototypeSet set;
    set.points = Tensor({kept_sources.size(), d}, std::move(kept));
    set.source_obs_ids = std::move(kept_sources);
    set.dedup_tolerance = tolerance;
    return set;
}

PrototypeSet build_prototypes(const ModelParams& params, const ReplayDataset& dataset,
                              std::size_t num_samples, double dedup_tolerance, Rng& rng) {
    if (dataset.records.empty()) throw UsageError("build_prototypes: dataset is empty");

    std::vector<std::uint32_t> sampled_ids;
    if (num_samples == 0) {
        sampled_ids.resize(dataset.observations.size());
        for (std::size_t i = 0; i < sampled_ids.size(); ++i)
            sampled_ids[i] = static_cast<std::uint32_t>(i);
    } else {
        // a trajectory of T records holds T + 1 states; the extras are the
        // final next-states
        const std::size_t slots = dataset.records.size() + dataset.trajectory_spans.size();
        sampled_ids.reserve(num_samples);
        for (std::size_t i = 0; i < num_samples; ++i) {
            const std::size_t slot = rng.uniform_index(slots);
            if (slot < dataset.records.size()) {
                sampled_ids.push_back(dataset.records[slot].state_id);
            } else {
                const auto& span = dataset.trajectory_spans[slot - dataset.records.size()];
                sampled_ids.push_back(dataset.records[span.first + span.second - 1].next_state_id);
            }
        }
    }

    // encode each distinct observation once, then dedup in sampled order
    std::vector<std::uint32_t> unique_ids = sampled_ids;
    std::sort(unique_ids.begin(), unique_ids.end());
    unique_ids.erase(std::unique(unique_ids.begin(), unique_ids.end()), unique_ids.end());
    const Tensor z_unique = encode_ids(params, dataset, unique_ids);

    const std::size_t d = params.latent_dim;
    Tensor candidates({sampled_ids.size(), d});
    for (std::size_t i = 0; i < sampled_ids.size(); ++i) {
        const auto it = std::lower_bound(unique_ids.begin(), unique_ids.end(), sampled_ids[i]);
        const std::size_t row = static_cast<std::size_t>(it - unique_ids.begin());
        std::copy(z_unique.data.begin() + row * d, z_unique.data.begin() + (row + 1) * d,
                  candidates.data.begin() + i * d);
    }
    return dedup_points(candidates, sampled_ids, dedup_tolerance);
}

namespace {

/// Predicted next latents m[i, a] = z_i + action_net([z_i ; one-hot a]),
/// stacked as a (|X| * |A|, D) matrix with rows grouped by state.
Tensor predicted_next_matrix(const ModelParams& params, const PrototypeSet& prototypes) {
    const std::size_t x = prototypes.size();
    const std::size_t d = prototypes.latent_dim();
    const std::size_t a = params.num_actions;
    Tensor input({x * a, d + a});
    for (std::size_t i = 0; i < x; ++i) {
        const auto z = prototypes.point(i);
        for (std::size_t act = 0; act < a; ++act) {
            double* dst = input.data.data() + (i * a + act) * (d + a);
            std::copy(z.begin(), z.end(), dst);
            dst[d + act] = 1.0;
        }
    }
    Tensor delta = forward(params.action_net, input);
    Tensor m({x * a, d});
    for (std::size_t i = 0; i < x; ++i) {
        const auto z = prototypes.point(i);
        for (std::size_t act = 0; act < a; ++act) {
            double* dst = m.data.data() + (i * a + act) * d;
            const double* dl = delta.data.data() + (i * a + act) * d;
            for (std::size_t j = 0; j < d; ++j) dst[j] = z[j] + dl[j];
        }
    }
    return m;
}

/// Squared distances between each row of m and each prototype, then a
/// temperature softmax over -dist/tau per row (log-space, max subtracted).
Tensor softmax_rows(const Tensor& m, const PrototypeSet& prototypes, double tau) {
    if (tau <= 0.0) throw UsageError("transition temperature must be positive");
    const std::size_t rows = m.dim(0);
    const std::size_t d = m.dim(1);
    const std::size_t x = prototypes.size();

    std::vector<double> m_norm(rows), z_norm(x);
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        const double* p = m.data.data() + r * d;
        for (std::size_t j = 0; j < d; ++j) s += p[j] * p[j];
        m_norm[r] = s;
    }
    for (std::size_t i = 0; i < x; ++i) {
        double s = 0.0;
        const auto z = prototypes.point(i);
        for (std::size_t j = 0; j < d; ++j) s += z[j] * z[j];
        z_norm[i] = s;
    }
    // dist(r, i) = 0.5 * (|m_r|^2 + |z_i|^2) - m_r . z_i
    Tensor probs({rows, x});
    gemm(false, true, rows, x, d, 1.0, m.data.data(), d, prototypes.points.data.data(), d, 0.0,
         probs.data.data(), x);
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = probs.data.data() + r * x;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < x; ++i) {
            const double dist = 0.5 * (m_norm[r] + z_norm[i]) - row[i];
            row[i] = -dist / tau;
            best = std::max(best, row[i]);
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < x; ++i) {
            row[i] = std::exp(row[i] - best);
            sum += row[i];
        }
        for (std::size_t i = 0; i < x; ++i) row[i] /= sum;
    }
    return probs;
}

}  // namespace

Tensor transition_probs(const ModelParams& params, const PrototypeSet& prototypes, int action,
                        double tau) {
    if (action < 0 || static_cast<std::size_t>(action) >= params.num_actions) {
        throw UsageError("transition_probs: unknown action " + std::to_string(action));
    }
    const std::size_t x = prototypes.size();
    const std::size_t d = prototypes.latent_dim();
    Tensor m({x, d});
    for (std::size_t i = 0; i < x; ++i) {
        const auto z = prototypes.point(i);
        const std::vector<double> next = predict_next(params, z, action);
        std::copy(next.begin(), next.end(), m.data.begin() + i * d);
    }
    return softmax_rows(m, prototypes, tau);
}

AbstractMdp build_abstract_mdp(const ModelParams& params, PrototypeSet prototypes, double tau,
                               double gamma) {
    AbstractMdp mdp;
    mdp.tau = tau;
    mdp.gamma = gamma;
    mdp.prototypes = std::move(prototypes);
    const std::size_t x = mdp.prototypes.size();
    const std::size_t a = params.num_actions;
    Tensor m = predicted_next_matrix(params, mdp.prototypes);
    Tensor probs = softmax_rows(m, mdp.prototypes, tau);
    mdp.transitions = Tensor({x, a, x}, std::move(probs.data));
    assign_predicted_rewards(mdp, params);
    return mdp;
}

void assign_predicted_rewards(AbstractMdp& mdp, const ModelParams& params) {
    mdp.rewards = predict_reward(params, mdp.prototypes.points);
    mdp.goal_index = -1;
}

int assign_goal_reward(AbstractMdp& mdp, const ModelParams& params, const Observation& goal) {
    const std::vector<double> z_goal = encode(params, goal);
    const std::size_t x = mdp.num_states();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    for (std::size_t i = 0; i < x; ++i) {
        const double dist = squared_distance(z_goal, mdp.prototypes.point(i));
        if (dist < best) {
            best = dist;
            best_index = i;
        }
    }
    std::size_t goal_index = best_index;
    if (best > mdp.prototypes.dedup_tolerance) {
        // goal unseen in latent space: insert it and rebuild the transitions
        PrototypeSet extended = mdp.prototypes;
        Tensor points({x + 1, extended.latent_dim()});
        std::copy(extended.points.data.begin(), extended.points.data.end(), points.data.begin());
        std::copy(z_goal.begin(), z_goal.end(), points.data.begin() + x * extended.latent_dim());
        extended.points = std::move(points);
        extended.source_obs_ids.push_back(kInsertedPrototype);
        AbstractMdp rebuilt = build_abstract_mdp(params, std::move(extended), mdp.tau, mdp.gamma);
        mdp = std::move(rebuilt);
        goal_index = x;
    }
    mdp.rewards.assign(mdp.num_states(), 0.0);
    mdp.rewards[goal_index] = 1.0;
    mdp.goal_index = static_cast<int>(goal_index);
    return static_cast<int>(goal_index);
}

HomomorphismReport verify_homomorphism(
    const AbstractMdp& mdp, const TabularMdp& ground_truth,
    const std::vector<int>& state_to_prototype, double prob_threshold, double reward_tolerance,
    const std::vector<std::pair<std::size_t, std::size_t>>* pairs) {
    if (state_to_prototype.size() != ground_truth.num_states) {
        throw UsageError("verify_homomorphism: state map has wrong length");
    }
    std::vector<std::pair<std::size_t, std::size_t>> all;
    if (!pairs) {
        all.reserve(ground_truth.num_states * ground_truth.num_actions);
        for (std::size_t s = 0; s < ground_truth.num_states; ++s)
            for (std::size_t a = 0; a < ground_truth.num_actions; ++a) all.push_back({s, a});
        pairs = &all;
    }

    HomomorphismReport report;
    for (const auto& [s, a] : *pairs) {
        report.pairs_checked += 1;
        const int x = state_to_prototype.at(s);
        const std::size_t s_next = ground_truth.next.at(s * ground_truth.num_actions + a);
        const int x_next = state_to_prototype.at(s_next);
        if (x < 0 || x_next < 0) {
            report.unmapped += 1;
            report.worst.push_back({s, a, 0.0, std::numeric_limits<double>::infinity()});
            continue;
        }
        const double prob =
            mdp.transition(static_cast<std::size_t>(x), a, static_cast<std::size_t>(x_next));
        const double reward_err =
            std::fabs(mdp.rewards[static_cast<std::size_t>(x)] - ground_truth.state_reward[s]);
        const bool t_ok = prob >= prob_threshold;
        const bool r_ok = reward_err <= reward_tolerance;
        report.transition_passes += t_ok;
        report.reward_passes += r_ok;
        report.joint_passes += (t_ok && r_ok);
        report.min_transition_prob = std::min(report.min_transition_prob, prob);
        report.max_reward_error = std::max(report.max_reward_error, reward_err);
        if (!t_ok || !r_ok) report.worst.push_back({s, a, prob, reward_err});
    }
    if (report.pairs_checked > 0) {
        report.joint_pass_rate =
            static_cast<double>(report.joint_passes) / static_cast<double>(report.pairs_checked);
    }
    std::sort(report.worst.begin(), report.worst.end(),
              [](const auto& lhs, const auto& rhs) { return lhs.prob < rhs.prob; });
    if (report.worst.size() > 16) report.worst.resize(16);
    return report;
}

namespace {
constexpr char kAbstractMagic[5] = "MHAM";
constexpr std::uint32_t kAbstractVersion = 1;
}  // namespace

void save_abstract_mdp(const AbstractMdp& mdp, const std::string& path) {
    BinaryWriter w(path);
    w.magic(kAbstractMagic);
    w.u32(kAbstractVersion);
    nlohmann::json header{{"num_states", mdp.num_states()},
                          {"num_actions", mdp.num_actions()},
                          {"latent_dim", mdp.prototypes.latent_dim()},
                          {"tau", mdp.tau},
                          {"gamma", mdp.gamma},
                          {"goal_index", mdp.goal_index},
                          {"dedup_tolerance", mdp.prototypes.dedup_tolerance}};
    w.bytes(header.dump());
    w.f64_array(mdp.prototypes.points.data.data(), mdp.prototypes.points.size());
    for (std::uint32_t src : mdp.prototypes.source_obs_ids) w.u32(src);
    w.f64_array(mdp.transitions.data.data(), mdp.transitions.size());
    w.f64_array(mdp.rewards.data(), mdp.rewards.size());
    w.close();
}

AbstractMdp load_abstract_mdp(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kAbstractMagic, "abstract MDP");
    const std::uint32_t version = r.u32();
    if (version != kAbstractVersion) {
        throw FormatError("unsupported abstract MDP version " + std::to_string(version),
                          r.offset() - 4);
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(r.bytes());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad abstract MDP header: ") + e.what(), r.offset());
    }
    const auto x = header.at("num_states").get<std::size_t>();
    const auto a = header.at("num_actions").get<std::size_t>();
    const auto d = header.at("latent_dim").get<std::size_t>();
    AbstractMdp mdp;
    mdp.tau = header.at("tau").get<double>();
    mdp.gamma = header.at("gamma").get<double>();
    mdp.goal_index = header.at("goal_index").get<int>();
    mdp.prototypes.dedup_tolerance = header.at("dedup_tolerance").get<double>();
    mdp.prototypes.points = Tensor({x, d});
    r.f64_array(mdp.prototypes.points.data.data(), x * d);
    mdp.prototypes.source_obs_ids.resize(x);
    for (std::uint32_t& src : mdp.prototypes.source_obs_ids) src = r.u32();
    mdp.transitions = Tensor({x, a, x});
    r.f64_array(mdp.transitions.data.data(), mdp.transitions.size());
    mdp.rewards.resize(x);
    r.f64_array(mdp.rewards.data(), x);
    return mdp;
}

}  // namespace mdphom
