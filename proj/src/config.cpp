#include "mdphom/config.hpp"

#include <cstdlib>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "mdphom/errors.hpp"
#include "mdphom/io.hpp"

namespace mdphom {

namespace {

using nlohmann::json;

json arch_to_json(const EncoderArch& arch) {
    json convs = json::array();
    for (const ConvSpec& c : arch.convs)
        convs.push_back({{"channels", c.channels},
                         {"kernel", c.kernel},
                         {"stride", c.stride},
                         {"pad", c.pad}});
    return json{{"conv", convs},
                {"dense_hidden", arch.dense_hidden},
                {"action_hidden", arch.action_hidden},
                {"reward_hidden", arch.reward_hidden}};
}

EncoderArch arch_from_json(const json& j) {
    EncoderArch arch;
    arch.convs.clear();
    for (const auto& c : j.value("conv", json::array())) {
        ConvSpec spec;
        spec.channels = c.at("channels").get<std::size_t>();
        spec.kernel = c.at("kernel").get<std::size_t>();
        spec.stride = c.at("stride").get<std::size_t>();
        spec.pad = c.at("pad").get<std::size_t>();
        arch.convs.push_back(spec);
    }
    arch.dense_hidden = j.value("dense_hidden", std::vector<std::size_t>{64, 32});
    arch.action_hidden = j.value("action_hidden", std::size_t{64});
    arch.reward_hidden = j.value("reward_hidden", std::size_t{64});
    return arch;
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string config_to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["environment"] = {{"type", c.environment.type},
                        {"grid_n", c.environment.grid_n},
                        {"cell_px", c.environment.cell_px},
                        {"observation", c.environment.observation},
                        {"step_cap", c.environment.step_cap},
                        {"goal_split", c.environment.goal_split},
                        {"fixed_corner", c.environment.fixed_corner},
                        {"start_noise", c.environment.start_noise},
                        {"translate_px", c.environment.translate_px},
                        {"sprite_size", c.environment.sprite_size},
                        {"num_train_images", c.environment.num_train_images},
                        {"num_test_images", c.environment.num_test_images},
                        {"sprite_seed", c.environment.sprite_seed},
                        {"idx_path", c.environment.idx_path},
                        {"image_split", c.environment.image_split}};
    j["collect"] = {{"trajectories", c.collect.trajectories}};
    j["train"] = {{"latent_dim", c.train.latent_dim},
                  {"negatives", c.train.negatives},
                  {"hinge", c.train.hinge},
                  {"learning_rate", c.train.learning_rate},
                  {"epochs", c.train.epochs},
                  {"batch_size", c.train.batch_size},
                  {"use_reward_loss", c.train.use_reward_loss},
                  {"seed", c.train.seed},
                  {"loss_target", c.train.loss_target},
                  {"encoder", arch_to_json(c.train.arch)}};
    j["abstract"] = {{"num_state_samples", c.abstract_mdp.num_state_samples},
                     {"dedup_tolerance", c.abstract_mdp.dedup_tolerance},
                     {"tau", c.abstract_mdp.tau},
                     {"tau_grid", c.abstract_mdp.tau_grid}};
    j["planner"] = {{"gamma", c.planner.gamma},
                    {"backups", c.planner.backups},
                    {"tolerance", c.planner.tolerance},
                    {"eta", c.planner.eta}};
    j["eval"] = {{"episodes", c.eval.episodes}, {"goal_split", c.eval.goal_split}};
    j["paths"] = {{"data_dir", c.paths.data_dir},
                  {"dataset", c.paths.dataset},
                  {"checkpoint", c.paths.checkpoint},
                  {"abstract_mdp", c.paths.abstract_mdp},
                  {"qtable", c.paths.qtable},
                  {"loss_csv", c.paths.loss_csv},
                  {"summary_csv", c.paths.summary_csv},
                  {"episodes_csv", c.paths.episodes_csv},
                  {"latents_csv", c.paths.latents_csv}};
    return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    try {
        get_if_present(j, "seed", c.seed);
        if (j.contains("environment")) {
            const json& e = j["environment"];
            get_if_present(e, "type", c.environment.type);
            get_if_present(e, "grid_n", c.environment.grid_n);
            get_if_present(e, "cell_px", c.environment.cell_px);
            get_if_present(e, "observation", c.environment.observation);
            get_if_present(e, "step_cap", c.environment.step_cap);
            get_if_present(e, "goal_split", c.environment.goal_split);
            get_if_present(e, "fixed_corner", c.environment.fixed_corner);
            get_if_present(e, "start_noise", c.environment.start_noise);
            get_if_present(e, "translate_px", c.environment.translate_px);
            get_if_present(e, "sprite_size", c.environment.sprite_size);
            get_if_present(e, "num_train_images", c.environment.num_train_images);
            get_if_present(e, "num_test_images", c.environment.num_test_images);
            get_if_present(e, "sprite_seed", c.environment.sprite_seed);
            get_if_present(e, "idx_path", c.environment.idx_path);
            get_if_present(e, "image_split", c.environment.image_split);
        }
        if (j.contains("collect")) {
            get_if_present(j["collect"], "trajectories", c.collect.trajectories);
        }
        if (j.contains("train")) {
            const json& t = j["train"];
            get_if_present(t, "latent_dim", c.train.latent_dim);
            get_if_present(t, "negatives", c.train.negatives);
            get_if_present(t, "hinge", c.train.hinge);
            get_if_present(t, "learning_rate", c.train.learning_rate);
            get_if_present(t, "epochs", c.train.epochs);
            get_if_present(t, "batch_size", c.train.batch_size);
            get_if_present(t, "use_reward_loss", c.train.use_reward_loss);
            get_if_present(t, "seed", c.train.seed);
            get_if_present(t, "loss_target", c.train.loss_target);
            if (t.contains("encoder")) c.train.arch = arch_from_json(t["encoder"]);
        }
        if (j.contains("abstract")) {
            const json& a = j["abstract"];
            get_if_present(a, "num_state_samples", c.abstract_mdp.num_state_samples);
            get_if_present(a, "dedup_tolerance", c.abstract_mdp.dedup_tolerance);
            get_if_present(a, "tau", c.abstract_mdp.tau);
            get_if_present(a, "tau_grid", c.abstract_mdp.tau_grid);
        }
        if (j.contains("planner")) {
            const json& p = j["planner"];
            get_if_present(p, "gamma", c.planner.gamma);
            get_if_present(p, "backups", c.planner.backups);
            get_if_present(p, "tolerance", c.planner.tolerance);
            get_if_present(p, "eta", c.planner.eta);
        }
        if (j.contains("eval")) {
            get_if_present(j["eval"], "episodes", c.eval.episodes);
            get_if_present(j["eval"], "goal_split", c.eval.goal_split);
        }
        if (j.contains("paths")) {
            const json& p = j["paths"];
            get_if_present(p, "data_dir", c.paths.data_dir);
            get_if_present(p, "dataset", c.paths.dataset);
            get_if_present(p, "checkpoint", c.paths.checkpoint);
            get_if_present(p, "abstract_mdp", c.paths.abstract_mdp);
            get_if_present(p, "qtable", c.paths.qtable);
            get_if_present(p, "loss_csv", c.paths.loss_csv);
            get_if_present(p, "summary_csv", c.paths.summary_csv);
            get_if_present(p, "episodes_csv", c.paths.episodes_csv);
            get_if_present(p, "latents_csv", c.paths.latents_csv);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config field: ") + e.what());
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    return config_from_json(read_text_file(path));
}

void save_config(const RunConfig& config, const std::string& path) {
    write_text_file(path, config_to_json(config));
}

void validate_config(const RunConfig& c) {
    const auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
    if (c.environment.type != "gridworld_single" && c.environment.type != "gridworld_double" &&
        c.environment.type != "cartpole" && c.environment.type != "translation") {
        fail("unknown environment.type '" + c.environment.type + "'");
    }
    if (c.environment.grid_n < 2) fail("environment.grid_n must be >= 2");
    if (c.environment.step_cap == 0) fail("environment.step_cap must be >= 1");
    if (c.environment.observation != "pixel" && c.environment.observation != "symbolic") {
        fail("environment.observation must be 'pixel' or 'symbolic'");
    }
    for (const std::string& split : {c.environment.goal_split, c.environment.image_split,
                                     c.eval.goal_split}) {
        if (split != "train" && split != "test") fail("goal/image split must be train or test");
    }
    if (c.environment.fixed_corner < -1 || c.environment.fixed_corner > 3) {
        fail("environment.fixed_corner must be -1..3");
    }
    if (c.environment.type == "translation") {
        if (c.environment.num_train_images == 0) fail("translation needs train images");
        if (c.environment.translate_px == 0) fail("environment.translate_px must be >= 1");
    }
    if (c.collect.trajectories == 0) fail("collect.trajectories must be >= 1");
    if (c.train.latent_dim == 0) fail("train.latent_dim must be >= 1");
    if (c.train.hinge <= 0.0) fail("train.hinge must be > 0");
    if (c.train.learning_rate <= 0.0) fail("train.learning_rate must be > 0");
    if (c.train.batch_size == 0) fail("train.batch_size must be >= 1");
    if (c.abstract_mdp.dedup_tolerance <= 0.0) fail("abstract.dedup_tolerance must be > 0");
    if (c.abstract_mdp.tau <= 0.0) fail("abstract.tau must be > 0");
    if (c.abstract_mdp.tau_grid.empty()) fail("abstract.tau_grid must be nonempty");
    for (double tau : c.abstract_mdp.tau_grid)
        if (tau <= 0.0) fail("abstract.tau_grid entries must be > 0");
    if (c.planner.gamma < 0.0 || c.planner.gamma > 1.0) fail("planner.gamma must be in [0, 1]");
    if (c.planner.backups == 0) fail("planner.backups must be >= 1");
    if (c.planner.eta <= 0.0) fail("planner.eta must be > 0");
    if (c.planner.tolerance < 0.0) fail("planner.tolerance must be >= 0");
}

std::string resolve_path(const RunConfig& config, const std::string& name) {
    std::string dir = config.paths.data_dir;
    if (const char* env = std::getenv("MDPHOM_DATA_DIR"); env && *env) dir = env;
    std::filesystem::path p(name);
    if (p.is_absolute()) return name;
    return (std::filesystem::path(dir) / p).string();
}

}  // namespace mdphom
