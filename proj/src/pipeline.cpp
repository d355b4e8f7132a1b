#include "mdphom/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "mdphom/cartpole.hpp"
#include "mdphom/errors.hpp"
#include "mdphom/gridworld.hpp"
#include "mdphom/idx.hpp"
#include "mdphom/io.hpp"
#include "mdphom/pca.hpp"
#include "mdphom/translation.hpp"

namespace mdphom {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

void require_dir(const std::string& path) {
    if (!fs::is_directory(path)) {
        throw ConfigError("output directory '" + path + "' does not exist");
    }
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::is_regular_file(path)) {
        throw ConfigError(what + " '" + path + "' does not exist");
    }
}

std::string data_dir(const RunConfig& config) {
    std::string dir = config.paths.data_dir;
    if (const char* env = std::getenv("MDPHOM_DATA_DIR"); env && *env) dir = env;
    return dir;
}

std::vector<Tensor> images_from_idx(const EnvConfig& env, std::size_t count, std::size_t skip) {
    const IdxImages idx = idx_load(env.idx_path);
    if (idx.count < skip + count) {
        throw ConfigError("idx file holds " + std::to_string(idx.count) + " images, need " +
                          std::to_string(skip + count));
    }
    std::vector<Tensor> images;
    images.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Tensor t({1, idx.rows, idx.cols});
        const double* src = idx.image(skip + i);
        std::copy(src, src + idx.rows * idx.cols, t.data.begin());
        images.push_back(std::move(t));
    }
    return images;
}

}  // namespace

std::unique_ptr<Environment> make_environment(const RunConfig& config, GoalSplit goal_split) {
    const EnvConfig& e = config.environment;
    if (e.type == "gridworld_single" || e.type == "gridworld_double") {
        GridworldConfig g;
        g.task = e.type == "gridworld_single" ? GridTask::single_object : GridTask::double_object;
        g.grid_n = e.grid_n;
        g.cell_px = e.cell_px;
        g.obs_kind = obs_kind_from_name(e.observation);
        g.step_cap = e.step_cap;
        g.goal_split = goal_split;
        g.fixed_corner = e.fixed_corner;
        return std::make_unique<Gridworld>(g);
    }
    if (e.type == "cartpole") {
        CartpoleConfig c;
        c.start_noise = e.start_noise;
        c.step_cap = e.step_cap;
        return std::make_unique<Cartpole>(c);
    }
    if (e.type == "translation") {
        TranslationConfig t;
        t.step_cap = e.step_cap;
        t.goal_split = goal_split;
        t.image_split = goal_split;  // test goals go with test images
        t.translate_px = e.translate_px;
        std::vector<Tensor> train_images, test_images;
        if (!e.idx_path.empty()) {
            train_images = images_from_idx(e, e.num_train_images, 0);
            test_images = images_from_idx(e, e.num_test_images, e.num_train_images);
        } else {
            train_images = make_sprites(e.num_train_images, e.sprite_size, e.sprite_seed);
            test_images = make_sprites(e.num_test_images, e.sprite_size, e.sprite_seed + 1);
        }
        return std::make_unique<TranslationEnv>(t, std::move(train_images),
                                                std::move(test_images));
    }
    throw ConfigError("unknown environment.type '" + e.type + "'");
}

std::unique_ptr<Environment> make_environment(const RunConfig& config) {
    return make_environment(config, goal_split_from_name(config.environment.goal_split));
}

CollectOutcome run_collect(const RunConfig& config) {
    validate_config(config);
    require_dir(data_dir(config));
    std::unique_ptr<Environment> env = make_environment(config);
    ReplayDataset dataset = collect(*env, config.collect.trajectories, config.seed);
    CollectOutcome out;
    out.dataset_path = resolve_path(config, config.paths.dataset);
    out.records = dataset.size();
    out.trajectories = dataset.num_trajectories;
    out.distinct_observations = dataset.observations.size();
    save_dataset(dataset, out.dataset_path);
    return out;
}

TrainOutcome run_train(const RunConfig& config) {
    validate_config(config);
    require_dir(data_dir(config));
    const std::string dataset_path = resolve_path(config, config.paths.dataset);
    require_file(dataset_path, "dataset");
    const ReplayDataset dataset = load_dataset(dataset_path);

    std::unique_ptr<Environment> env = make_environment(config);
    TrainConfig tc = config.train;
    if (tc.seed == 0) tc.seed = config.seed;
    Rng init_rng(tc.seed ^ 0xa02bdbf7bb3c0a7ULL);
    ModelParams params(init_model(dataset.obs_shape, env->num_actions(), tc, init_rng,
                                  dataset.env_id));
    TrainOutcome out;
    out.result = train(params, dataset, tc);

    out.checkpoint_path = resolve_path(config, config.paths.checkpoint);
    save_checkpoint(params, out.checkpoint_path);

    std::ostringstream csv;
    csv << "epoch,transition_term,reward_term,negative_term,total\n";
    for (std::size_t i = 0; i < out.result.epoch_losses.size(); ++i) {
        const LossBreakdown& lb = out.result.epoch_losses[i];
        csv << i << ',' << format_double(lb.transition_term) << ','
            << format_double(lb.reward_term) << ',' << format_double(lb.negative_term) << ','
            << format_double(lb.total) << '\n';
    }
    out.loss_csv_path = resolve_path(config, config.paths.loss_csv);
    write_text_file(out.loss_csv_path, csv.str());
    if (out.result.diverged_epoch) {
        throw DivergenceError("training diverged in epoch " +
                              std::to_string(*out.result.diverged_epoch) +
                              "; checkpoint holds the last good parameters");
    }
    return out;
}

namespace {

struct Artifacts {
    ModelParams params;
    ReplayDataset dataset;
};

Artifacts load_artifacts(const RunConfig& config) {
    const std::string ckpt_path = resolve_path(config, config.paths.checkpoint);
    const std::string dataset_path = resolve_path(config, config.paths.dataset);
    require_file(ckpt_path, "checkpoint");
    require_file(dataset_path, "dataset");
    Artifacts a{load_checkpoint(ckpt_path), load_dataset(dataset_path)};
    if (a.params.obs_shape != a.dataset.obs_shape) {
        throw ConfigError("checkpoint and dataset disagree on observation shape (" +
                          shape_str(a.params.obs_shape) + " vs " + shape_str(a.dataset.obs_shape) +
                          ")");
    }
    if (!a.params.env_id.empty() && a.params.env_id != a.dataset.env_id) {
        throw ConfigError("checkpoint was trained on '" + a.params.env_id +
                          "' but the dataset comes from '" + a.dataset.env_id + "'");
    }
    return a;
}

constexpr char kQTableMagic[5] = "MHQT";

}  // namespace

void save_qtable(const QTable& q, const std::string& path) {
    BinaryWriter w(path);
    w.magic(kQTableMagic);
    w.u32(1);
    w.u64(q.values.dim(0));
    w.u64(q.values.dim(1));
    w.u64(q.backup_count);
    w.f64(q.gamma);
    w.f64(q.final_residual);
    w.f64_array(q.values.data.data(), q.values.size());
    w.close();
}

QTable load_qtable(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kQTableMagic, "Q-table");
    const std::uint32_t version = r.u32();
    if (version != 1) throw FormatError("unsupported Q-table version", r.offset() - 4);
    const std::size_t x = r.u64();
    const std::size_t a = r.u64();
    QTable q;
    q.backup_count = r.u64();
    q.gamma = r.f64();
    q.final_residual = r.f64();
    q.values = Tensor({x, a});
    r.f64_array(q.values.data.data(), q.values.size());
    return q;
}

PlanOutcome run_plan(const RunConfig& config, bool tau_grid) {
    validate_config(config);
    require_dir(data_dir(config));
    Artifacts a = load_artifacts(config);

    Rng proto_rng(config.seed ^ 0x51f15eedcafeULL);
    PrototypeSet prototypes =
        build_prototypes(a.params, a.dataset, config.abstract_mdp.num_state_samples,
                         config.abstract_mdp.dedup_tolerance, proto_rng);

    PlanOutcome out;
    double tau = config.abstract_mdp.tau;
    if (tau_grid) {
        std::unique_ptr<Environment> train_env = make_environment(config, GoalSplit::train);
        PlannerConfig pc{config.planner.backups, config.planner.tolerance, config.planner.eta};
        const bool maximize = config.environment.type == "cartpole";
        TauGridResult grid = tau_grid_search(config.abstract_mdp.tau_grid, a.params, prototypes,
                                             config.planner.gamma, *train_env, pc,
                                             config.eval.episodes, config.seed, maximize);
        tau = grid.best_tau;
        out.grid_scores = std::move(grid.scores);
    }

    AbstractMdp mdp = build_abstract_mdp(a.params, std::move(prototypes), tau,
                                         config.planner.gamma);
    // goal sampled by the configured environment at the run seed
    std::unique_ptr<Environment> env = make_environment(config);
    ResetResult r = env->reset(config.seed);
    assign_goal_reward(mdp, a.params, r.goal.goal_observation);
    QTable q = value_iteration(mdp, config.planner.backups, config.planner.tolerance);

    out.abstract_path = resolve_path(config, config.paths.abstract_mdp);
    out.qtable_path = resolve_path(config, config.paths.qtable);
    out.num_prototypes = mdp.num_states();
    out.tau = tau;
    out.goal_index = mdp.goal_index;
    save_abstract_mdp(mdp, out.abstract_path);
    save_qtable(q, out.qtable_path);
    return out;
}

EvalOutcome run_eval(const RunConfig& config) {
    validate_config(config);
    require_dir(data_dir(config));
    Artifacts a = load_artifacts(config);

    AbstractMdp base;
    const std::string abstract_path = resolve_path(config, config.paths.abstract_mdp);
    if (fs::is_regular_file(abstract_path)) {
        base = load_abstract_mdp(abstract_path);
    } else {
        Rng proto_rng(config.seed ^ 0x51f15eedcafeULL);
        PrototypeSet prototypes =
            build_prototypes(a.params, a.dataset, config.abstract_mdp.num_state_samples,
                             config.abstract_mdp.dedup_tolerance, proto_rng);
        base = build_abstract_mdp(a.params, std::move(prototypes), config.abstract_mdp.tau,
                                  config.planner.gamma);
    }

    std::unique_ptr<Environment> env =
        make_environment(config, goal_split_from_name(config.eval.goal_split));
    PlannerConfig pc{config.planner.backups, config.planner.tolerance, config.planner.eta};
    EvalOutcome out;
    out.result = evaluate(*env, a.params, base, pc, config.eval.episodes, config.seed);

    std::ostringstream summary;
    summary << "env,goal_split,J,tau,eta,seed,mean_length,std_length,success_rate\n";
    summary << env->id() << ',' << config.eval.goal_split << ',' << config.train.negatives << ','
            << format_double(base.tau) << ',' << format_double(pc.eta) << ',' << config.seed
            << ',' << format_double(out.result.summary.mean_length) << ','
            << format_double(out.result.summary.std_length) << ','
            << format_double(out.result.summary.success_rate) << '\n';
    out.summary_csv_path = resolve_path(config, config.paths.summary_csv);
    write_text_file(out.summary_csv_path, summary.str());

    std::ostringstream episodes;
    episodes << "episode,seed,length,undiscounted_return,discounted_return,success\n";
    for (std::size_t i = 0; i < out.result.episodes.size(); ++i) {
        const EpisodeReport& e = out.result.episodes[i];
        episodes << i << ',' << e.seed << ',' << e.length << ','
                 << format_double(e.undiscounted_return) << ','
                 << format_double(e.discounted_return) << ',' << (e.success ? 1 : 0) << '\n';
    }
    out.episodes_csv_path = resolve_path(config, config.paths.episodes_csv);
    write_text_file(out.episodes_csv_path, episodes.str());
    return out;
}

ExportOutcome run_export_latents(const RunConfig& config) {
    validate_config(config);
    require_dir(data_dir(config));
    Artifacts a = load_artifacts(config);

    ExportOutcome out;
    AbstractMdp mdp;
    const std::string abstract_path = resolve_path(config, config.paths.abstract_mdp);
    if (fs::is_regular_file(abstract_path)) {
        mdp = load_abstract_mdp(abstract_path);
        out.fit_set = "prototypes";
    } else {
        Rng proto_rng(config.seed ^ 0x51f15eedcafeULL);
        PrototypeSet prototypes = build_prototypes(
            a.params, a.dataset, 0, config.abstract_mdp.dedup_tolerance, proto_rng);
        mdp = build_abstract_mdp(a.params, std::move(prototypes), config.abstract_mdp.tau,
                                 config.planner.gamma);
        out.fit_set = "dataset";
    }
    const std::size_t x = mdp.num_states();
    const std::size_t acts = mdp.num_actions();
    if (x < 2) throw UsageError("export-latents: need at least 2 latent points");

    const Pca2 pca = pca_top2(mdp.prototypes.points, 1e-10, 10000, config.seed);
    const Tensor projected = pca_project(pca, mdp.prototypes.points);
    const QTable q = value_iteration(mdp, config.planner.backups, config.planner.tolerance);

    std::ostringstream csv;
    csv << "# pca_fit=" << out.fit_set << "\n";
    csv << "# eigenvalues=" << format_double(pca.eigenvalues[0]) << ','
        << format_double(pca.eigenvalues[1]) << "\n";
    csv << "node,pc1,pc2,value";
    for (std::size_t act = 0; act < acts; ++act) csv << ",edge_a" << act;
    csv << "\n";
    for (std::size_t i = 0; i < x; ++i) {
        double v = q.q(i, 0);
        for (std::size_t act = 1; act < acts; ++act) v = std::max(v, q.q(i, act));
        csv << i << ',' << format_double(projected.data[i * 2]) << ','
            << format_double(projected.data[i * 2 + 1]) << ',' << format_double(v);
        for (std::size_t act = 0; act < acts; ++act) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < x; ++j)
                if (mdp.transition(i, act, j) > mdp.transition(i, act, best)) best = j;
            csv << ',' << best;
        }
        csv << '\n';
    }
    out.latents_csv_path = resolve_path(config, config.paths.latents_csv);
    write_text_file(out.latents_csv_path, csv.str());
    out.nodes = x;
    return out;
}

RunAllOutcome run_all(const RunConfig& config, bool tau_grid) {
    RunAllOutcome out;
    out.collect = run_collect(config);
    out.train = run_train(config);
    out.plan = run_plan(config, tau_grid);
    out.eval = run_eval(config);
    return out;
}

}  // namespace mdphom
