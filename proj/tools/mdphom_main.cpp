#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mdphom/errors.hpp"
#include "mdphom/pipeline.hpp"

namespace {

struct Overrides {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> data_dir;
    std::optional<std::size_t> trajectories;
    std::optional<std::string> dataset;
    std::optional<std::string> checkpoint;
    std::optional<std::string> abstract_path;
    std::optional<std::string> qtable;
    std::optional<std::size_t> negatives;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> batch_size;
    std::optional<double> learning_rate;
    std::optional<double> loss_target;
    bool no_reward_loss = false;
    std::optional<double> tau;
    bool tau_grid = false;
    std::optional<int> goal_corner;
    std::optional<std::size_t> episodes;
    std::optional<std::string> goal_split;
    std::optional<std::size_t> state_samples;
};

mdphom::RunConfig build_config(const Overrides& o) {
    mdphom::RunConfig config;
    if (o.config_path) config = mdphom::load_config(*o.config_path);
    if (o.seed) config.seed = *o.seed;
    if (o.data_dir) config.paths.data_dir = *o.data_dir;
    if (o.trajectories) config.collect.trajectories = *o.trajectories;
    if (o.dataset) config.paths.dataset = *o.dataset;
    if (o.checkpoint) config.paths.checkpoint = *o.checkpoint;
    if (o.abstract_path) config.paths.abstract_mdp = *o.abstract_path;
    if (o.qtable) config.paths.qtable = *o.qtable;
    if (o.negatives) config.train.negatives = *o.negatives;
    if (o.epochs) config.train.epochs = *o.epochs;
    if (o.batch_size) config.train.batch_size = *o.batch_size;
    if (o.learning_rate) config.train.learning_rate = *o.learning_rate;
    if (o.loss_target) config.train.loss_target = *o.loss_target;
    if (o.no_reward_loss) config.train.use_reward_loss = false;
    if (o.tau) config.abstract_mdp.tau = *o.tau;
    if (o.goal_corner) config.environment.fixed_corner = *o.goal_corner;
    if (o.episodes) config.eval.episodes = *o.episodes;
    if (o.goal_split) config.eval.goal_split = *o.goal_split;
    if (o.state_samples) config.abstract_mdp.num_state_samples = *o.state_samples;
    mdphom::validate_config(config);
    return config;
}

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON configuration file");
    cmd->add_option("--seed", o.seed, "run seed");
    cmd->add_option("--data-dir", o.data_dir, "directory for artifacts");
    cmd->add_option("--dataset", o.dataset, "dataset file name");
    cmd->add_option("--checkpoint", o.checkpoint, "checkpoint file name");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Action-equivariant latent MDPs: train, discretize, plan, act"};
    app.require_subcommand(1);
    Overrides o;

    CLI::App* collect = app.add_subcommand("collect", "roll out a random policy into a dataset");
    add_common(collect, o);
    collect->add_option("--trajectories", o.trajectories, "number of episodes to collect");

    CLI::App* train = app.add_subcommand("train", "fit encoder, action and reward networks");
    add_common(train, o);
    train->add_option("--negatives", o.negatives, "negative samples per anchor (J)");
    train->add_option("--epochs", o.epochs, "training epochs");
    train->add_option("--batch-size", o.batch_size, "batch size");
    train->add_option("--learning-rate", o.learning_rate, "Adam learning rate");
    train->add_option("--loss-target", o.loss_target, "stop early at this mean total loss");
    train->add_flag("--no-reward-loss", o.no_reward_loss, "drop the reward prediction term");

    CLI::App* plan = app.add_subcommand("plan", "build the abstract MDP and run value iteration");
    add_common(plan, o);
    plan->add_option("--tau", o.tau, "transition softmax temperature");
    plan->add_flag("--tau-grid", o.tau_grid, "grid-search the temperature on train goals");
    plan->add_option("--goal-corner", o.goal_corner, "pin the delivery corner (0..3)");
    plan->add_option("--state-samples", o.state_samples,
                     "states sampled for prototypes (0 = all)");
    plan->add_option("--abstract", o.abstract_path, "abstract MDP output file");
    plan->add_option("--qtable", o.qtable, "Q-table output file");

    CLI::App* eval = app.add_subcommand("eval", "run greedy episodes and report lengths");
    add_common(eval, o);
    eval->add_option("--episodes", o.episodes, "number of evaluation episodes");
    eval->add_option("--goal-split", o.goal_split, "train or test goals");
    eval->add_option("--goal-corner", o.goal_corner, "pin the delivery corner (0..3)");
    eval->add_option("--abstract", o.abstract_path, "abstract MDP input file");

    CLI::App* export_latents =
        app.add_subcommand("export-latents", "write 2-D PCA projections, edges and values");
    add_common(export_latents, o);
    export_latents->add_option("--abstract", o.abstract_path, "abstract MDP input file");

    CLI::App* run_all_cmd = app.add_subcommand("run-all", "collect, train, plan and eval");
    add_common(run_all_cmd, o);
    run_all_cmd->add_option("--trajectories", o.trajectories, "number of episodes to collect");
    run_all_cmd->add_option("--negatives", o.negatives, "negative samples per anchor (J)");
    run_all_cmd->add_option("--epochs", o.epochs, "training epochs");
    run_all_cmd->add_flag("--no-reward-loss", o.no_reward_loss, "drop the reward prediction term");
    run_all_cmd->add_option("--tau", o.tau, "transition softmax temperature");
    run_all_cmd->add_flag("--tau-grid", o.tau_grid, "grid-search the temperature on train goals");
    run_all_cmd->add_option("--episodes", o.episodes, "number of evaluation episodes");
    run_all_cmd->add_option("--goal-split", o.goal_split, "train or test goals");

    CLI11_PARSE(app, argc, argv);

    try {
        const mdphom::RunConfig config = build_config(o);
        if (collect->parsed()) {
            const auto out = mdphom::run_collect(config);
            std::printf("collected %zu trajectories: %zu records, %zu distinct observations -> %s\n",
                        out.trajectories, out.records, out.distinct_observations,
                        out.dataset_path.c_str());
        } else if (train->parsed()) {
            const auto out = mdphom::run_train(config);
            const double last =
                out.result.epoch_losses.empty() ? 0.0 : out.result.epoch_losses.back().total;
            std::printf("trained %zu epochs, final loss %.6f -> %s (loss curve %s)\n",
                        out.result.epoch_losses.size(), last, out.checkpoint_path.c_str(),
                        out.loss_csv_path.c_str());
        } else if (plan->parsed()) {
            const auto out = mdphom::run_plan(config, o.tau_grid);
            for (const auto& [tau, score] : out.grid_scores)
                std::printf("tau %g -> mean episode length %.3f\n", tau, score);
            std::printf("planned over %zu prototypes at tau %g (goal prototype %d) -> %s, %s\n",
                        out.num_prototypes, out.tau, out.goal_index, out.abstract_path.c_str(),
                        out.qtable_path.c_str());
        } else if (eval->parsed()) {
            const auto out = mdphom::run_eval(config);
            std::printf(
                "evaluated %zu episodes: mean length %.3f +- %.3f, success rate %.2f -> %s\n",
                out.result.summary.episodes, out.result.summary.mean_length,
                out.result.summary.std_length, out.result.summary.success_rate,
                out.summary_csv_path.c_str());
        } else if (export_latents->parsed()) {
            const auto out = mdphom::run_export_latents(config);
            std::printf("exported %zu latent nodes (fit on %s) -> %s\n", out.nodes,
                        out.fit_set.c_str(), out.latents_csv_path.c_str());
        } else if (run_all_cmd->parsed()) {
            const auto out = mdphom::run_all(config, o.tau_grid);
            std::printf("collected %zu records; trained %zu epochs; %zu prototypes; "
                        "mean length %.3f +- %.3f (success %.2f)\n",
                        out.collect.records, out.train.result.epoch_losses.size(),
                        out.plan.num_prototypes, out.eval.result.summary.mean_length,
                        out.eval.result.summary.std_length, out.eval.result.summary.success_rate);
        }
    } catch (const mdphom::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const mdphom::UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime failure: %s\n", e.what());
        return 2;
    }
    return 0;
}
