#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdphom/experience.hpp"
#include "mdphom/layers.hpp"

namespace mdphom {

struct ConvSpec {
    std::size_t channels = 16;
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t pad = 1;

    bool operator==(const ConvSpec&) const = default;
};

/// Encoder backbone description. Conv specs apply only to pixel observations;
/// symbolic inputs go straight into the dense trunk.
struct EncoderArch {
    std::vector<ConvSpec> convs = {{16, 3, 1, 1}, {16, 3, 1, 1}};
    std::vector<std::size_t> dense_hidden = {64, 32};
    std::size_t action_hidden = 64;
    std::size_t reward_hidden = 64;

    bool operator==(const EncoderArch&) const = default;
};

struct TrainConfig {
    std::size_t latent_dim = 50;
    std::size_t negatives = 5;  // J
    double hinge = 1.0;         // margin for the negative distance
    double learning_rate = 1e-3;
    std::size_t epochs = 100;
    std::size_t batch_size = 512;
    bool use_reward_loss = true;
    std::uint64_t seed = 0;
    /// When > 0, training stops once an epoch's mean total loss drops to
    /// this value or below.
    double loss_target = 0.0;
    EncoderArch arch;

    bool operator==(const TrainConfig&) const = default;
};

/// The three learned maps: state encoder, latent action effect, and reward
/// head. The action net consumes [z ; one-hot action] and outputs the latent
/// displacement; the transition prediction is z plus that displacement.
struct ModelParams {
    LayerStack encoder;
    LayerStack action_net;
    LayerStack reward_net;
    std::size_t latent_dim = 0;
    std::size_t num_actions = 0;
    std::vector<std::size_t> obs_shape;
    std::string env_id;

    std::vector<Tensor*> all_params();
    std::vector<const Tensor*> all_params() const;
};

ModelParams init_model(const std::vector<std::size_t>& obs_shape, std::size_t num_actions,
                       const TrainConfig& config, Rng& rng, const std::string& env_id = "");

/// Encodes a batch of observations, (B, obs dims...) -> (B, D).
Tensor encode_batch(const ModelParams& params, const Tensor& obs_batch);

/// Encodes pool observations by id, (ids.size(), D).
Tensor encode_ids(const ModelParams& params, const ReplayDataset& dataset,
                  std::span<const std::uint32_t> ids);

std::vector<double> encode(const ModelParams& params, const Observation& obs);

/// z + action_net([z ; one-hot a]) for a single latent point.
std::vector<double> predict_next(const ModelParams& params, std::span<const double> z, int action);

/// Predicted rewards for a batch of latent points, (B, D) -> length-B vector.
std::vector<double> predict_reward(const ModelParams& params, const Tensor& z_batch);

/// d(z, z') = 1/2 * sum_i (z_i - z'_i)^2
double squared_distance(std::span<const double> a, std::span<const double> b);

/// max(0, margin - dist)
double hinge_negative(double dist, double margin);

struct LossBreakdown {
    double transition_term = 0.0;
    double reward_term = 0.0;
    double negative_term = 0.0;
    double total = 0.0;
};

struct ModelGrads {
    StackGrads encoder;
    StackGrads action_net;
    StackGrads reward_net;

    static ModelGrads zeros_like(const ModelParams& params);
    std::vector<const Tensor*> all_grads() const;
};

/// One training batch: anchor record indices plus J negatives per anchor
/// (row-major anchors x J observation ids).
struct LossBatch {
    std::vector<std::size_t> anchor_records;
    std::vector<std::uint32_t> negatives;
    std::size_t num_negatives = 0;
};

LossBatch assemble_batch(const ReplayDataset& dataset, std::size_t batch_size,
                         std::size_t num_negatives, Rng& batch_rng, Rng& negative_rng);

/// Mean batch loss; when `grads` is non-null it is overwritten with the
/// gradients of the mean loss. Throws DivergenceError on non-finite values.
LossBreakdown loss(const ModelParams& params, const ReplayDataset& dataset, const LossBatch& batch,
                   const TrainConfig& config, ModelGrads* grads = nullptr);

struct TrainResult {
    std::vector<LossBreakdown> epoch_losses;
    std::optional<std::size_t> diverged_epoch;
    bool reached_target = false;
};

/// Epochs of Adam steps on the contrastive loss. Deterministic given the
/// config seed. On divergence the parameters are rolled back to the last
/// completed epoch and the result marks the failing epoch.
TrainResult train(ModelParams& params, const ReplayDataset& dataset, const TrainConfig& config);

struct LossGradCheckReport {
    bool pass = false;
    double max_rel_error = 0.0;
    std::string worst_tensor;
};

/// Central finite differences over every model parameter against the analytic
/// gradients of `loss`.
LossGradCheckReport check_loss_gradients(ModelParams& params, const ReplayDataset& dataset,
                                         const LossBatch& batch, const TrainConfig& config,
                                         double tolerance, double step = 1e-5);

void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace mdphom
