#include "mdphom/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mdphom/errors.hpp"
#include "mdphom/gemm.hpp"

namespace mdphom {

QTable value_iteration(const AbstractMdp& mdp, std::size_t backups, double tolerance) {
    const std::size_t x = mdp.num_states();
    const std::size_t a = mdp.num_actions();
    QTable table;
    table.gamma = mdp.gamma;
    table.values = Tensor({x, a});
    const int goal = mdp.goal_index;

    std::vector<double> v(x, 0.0);
    std::vector<double> tv(x * a, 0.0);
    Tensor next({x, a});
    for (std::size_t sweep = 0; sweep < backups; ++sweep) {
        for (std::size_t i = 0; i < x; ++i) {
            double best = table.values.data[i * a];
            for (std::size_t j = 1; j < a; ++j) best = std::max(best, table.values.data[i * a + j]);
            v[i] = best;
        }
        gemv(x * a, x, 1.0, mdp.transitions.data.data(), x, v.data(), 0.0, tv.data());
        double residual = 0.0;
        for (std::size_t i = 0; i < x; ++i) {
            const bool absorbing = goal >= 0 && static_cast<std::size_t>(goal) == i;
            for (std::size_t j = 0; j < a; ++j) {
                const double q =
                    absorbing ? mdp.rewards[i] : mdp.rewards[i] + mdp.gamma * tv[i * a + j];
                residual = std::max(residual, std::fabs(q - table.values.data[i * a + j]));
                next.data[i * a + j] = q;
            }
        }
        std::swap(table.values.data, next.data);
        table.backup_count += 1;
        table.final_residual = residual;
        if (residual < tolerance) break;
    }
    return table;
}

std::vector<double> interpolation_weights(const PrototypeSet& prototypes,
                                          std::span<const double> z_star, double eta) {
    if (eta <= 0.0) throw UsageError("interpolation temperature must be positive");
    const std::size_t x = prototypes.size();
    std::vector<double> logits(x);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x; ++i) {
        logits[i] = -squared_distance(prototypes.point(i), z_star) / eta;
        best = std::max(best, logits[i]);
    }
    double sum = 0.0;
    for (double& l : logits) {
        l = std::exp(l - best);
        sum += l;
    }
    for (double& l : logits) l /= sum;
    return logits;
}

std::vector<double> interpolate_q(const QTable& qtable, const PrototypeSet& prototypes,
                                  std::span<const double> z_star, double eta) {
    const std::vector<double> w = interpolation_weights(prototypes, z_star, eta);
    const std::size_t a = qtable.values.dim(1);
    std::vector<double> q(a, 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] == 0.0) continue;
        for (std::size_t j = 0; j < a; ++j) q[j] += w[i] * qtable.values.data[i * a + j];
    }
    return q;
}

int act_greedy(const ModelParams& params, const QTable& qtable, const PrototypeSet& prototypes,
               const Observation& obs, double eta) {
    const std::vector<double> z = encode(params, obs);
    const std::vector<double> q = interpolate_q(qtable, prototypes, z, eta);
    std::size_t best = 0;
    for (std::size_t i = 1; i < q.size(); ++i) {
        if (q[i] > q[best]) best = i;
    }
    return static_cast<int>(best);
}

bool episode_succeeded(const Environment& env, const EnvStep& final_step, std::size_t length) {
    const auto& info = final_step.info;
    if (auto it = info.find("delivered"); it != info.end()) return it->second > 0.5;
    if (auto it = info.find("reached"); it != info.end()) return it->second > 0.5;
    if (auto it = info.find("failed"); it != info.end()) {
        // balancing task: success means surviving to the cap
        return it->second < 0.5 && length >= env.episode_cap();
    }
    return final_step.done && length < env.episode_cap();
}

namespace {

struct CachedPlan {
    std::vector<double> goal_bytes;
    PrototypeSet prototypes;
    QTable qtable;
};

}  // namespace

EvalResult evaluate(Environment& env, const ModelParams& params, const AbstractMdp& base,
                    const PlannerConfig& planner, std::size_t episodes, std::uint64_t seed) {
    EvalResult result;
    Rng root(seed);
    std::vector<CachedPlan> cache;

    for (std::size_t e = 0; e < episodes; ++e) {
        const std::uint64_t episode_seed = root.next_u64();
        ResetResult r = env.reset(episode_seed);

        const CachedPlan* plan = nullptr;
        for (const CachedPlan& c : cache) {
            if (c.goal_bytes == r.goal.goal_observation.data.data) {
                plan = &c;
                break;
            }
        }
        if (!plan) {
            AbstractMdp with_goal = base;
            assign_goal_reward(with_goal, params, r.goal.goal_observation);
            CachedPlan c;
            c.goal_bytes = r.goal.goal_observation.data.data;
            c.qtable = value_iteration(with_goal, planner.backups, planner.tolerance);
            c.prototypes = std::move(with_goal.prototypes);
            cache.push_back(std::move(c));
            plan = &cache.back();
        }

        EpisodeReport report;
        report.seed = episode_seed;
        Observation obs = r.observation;
        EnvStep last;
        double discount = 1.0;
        while (env.episode_active()) {
            const int action = act_greedy(params, plan->qtable, plan->prototypes, obs, planner.eta);
            last = env.step(action);
            report.length += 1;
            report.undiscounted_return += last.reward;
            report.discounted_return += discount * last.reward;
            discount *= base.gamma;
            obs = last.next_observation;
        }
        report.success = episode_succeeded(env, last, report.length);
        result.episodes.push_back(std::move(report));
    }

    EvalSummary& s = result.summary;
    s.episodes = result.episodes.size();
    if (s.episodes > 0) {
        double sum = 0.0, sum_sq = 0.0, ret = 0.0, succ = 0.0;
        for (const EpisodeReport& e : result.episodes) {
            sum += static_cast<double>(e.length);
            sum_sq += static_cast<double>(e.length) * static_cast<double>(e.length);
            ret += e.undiscounted_return;
            succ += e.success ? 1.0 : 0.0;
        }
        const double n = static_cast<double>(s.episodes);
        s.mean_length = sum / n;
        s.std_length = std::sqrt(std::max(0.0, sum_sq / n - s.mean_length * s.mean_length));
        s.mean_return = ret / n;
        s.success_rate = succ / n;
    }
    return result;
}

TauGridResult tau_grid_search(const std::vector<double>& candidates, const ModelParams& params,
                              const PrototypeSet& prototypes, double gamma, Environment& train_env,
                              const PlannerConfig& planner, std::size_t episodes,
                              std::uint64_t seed, bool maximize_length) {
    if (candidates.empty()) throw UsageError("tau_grid_search: no candidates");
    TauGridResult result;
    bool first = true;
    double best_score = 0.0;
    for (const double tau : candidates) {
        AbstractMdp mdp = build_abstract_mdp(params, prototypes, tau, gamma);
        const EvalResult eval = evaluate(train_env, params, mdp, planner, episodes, seed);
        const double mean = eval.summary.mean_length;
        result.scores.push_back({tau, mean});
        const double score = maximize_length ? -mean : mean;
        if (first || score < best_score || (score == best_score && tau < result.best_tau)) {
            best_score = score;
            result.best_tau = tau;
            first = false;
        }
    }
    return result;
}

}  // namespace mdphom
