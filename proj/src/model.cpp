#include "mdphom/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_map>
#include <utility>

#include <nlohmann/json.hpp>

#include "mdphom/adam.hpp"
#include "mdphom/errors.hpp"
#include "mdphom/io.hpp"

namespace mdphom {

namespace {

constexpr std::size_t kEncodeChunk = 512;
// above this estimated activation footprint the loss recomputes forward
// traces chunk by chunk instead of holding them all
constexpr std::size_t kTraceBudgetBytes = std::size_t{256} << 20;

LayerStack build_encoder(const std::vector<std::size_t>& obs_shape, std::size_t latent_dim,
                         const EncoderArch& arch) {
    LayerStack enc;
    enc.input_shape = obs_shape;
    std::vector<std::size_t> shape = obs_shape;
    if (obs_shape.size() == 3 && !arch.convs.empty()) {
        for (const ConvSpec& spec : arch.convs) {
            Layer conv = Layer::conv2d(shape[0], spec.channels, spec.kernel, spec.stride, spec.pad,
                                       shape[1], shape[2]);
            shape = conv.output_shape(shape);
            enc.layers.push_back(std::move(conv));
            enc.layers.push_back(Layer::relu());
        }
    }
    std::size_t flat = shape_numel(shape);
    for (std::size_t hidden : arch.dense_hidden) {
        enc.layers.push_back(Layer::dense(flat, hidden));
        enc.layers.push_back(Layer::relu());
        flat = hidden;
    }
    enc.layers.push_back(Layer::dense(flat, latent_dim));
    return enc;
}

LayerStack build_mlp(std::size_t in, std::size_t hidden, std::size_t out) {
    LayerStack net;
    net.input_shape = {in};
    net.layers.push_back(Layer::dense(in, hidden));
    net.layers.push_back(Layer::relu());
    net.layers.push_back(Layer::dense(hidden, out));
    return net;
}

Tensor gather_obs(const ReplayDataset& dataset, std::span<const std::uint32_t> ids,
                  std::size_t begin, std::size_t end) {
    std::vector<std::size_t> shape{end - begin};
    shape.insert(shape.end(), dataset.obs_shape.begin(), dataset.obs_shape.end());
    Tensor out(std::move(shape));
    const std::size_t numel = shape_numel(dataset.obs_shape);
    for (std::size_t i = begin; i < end; ++i) {
        const Tensor& obs = dataset.obs(ids[i]);
        std::copy(obs.data.begin(), obs.data.end(), out.data.begin() + (i - begin) * numel);
    }
    return out;
}

std::size_t trace_doubles_per_sample(const LayerStack& stack) {
    std::size_t total = 0;
    std::vector<std::size_t> shape = stack.input_shape;
    for (const Layer& l : stack.layers) {
        total += shape_numel(shape);
        shape = l.output_shape(shape);
    }
    return total;
}

}  // namespace

std::vector<Tensor*> ModelParams::all_params() {
    std::vector<Tensor*> out = encoder.param_tensors();
    for (Tensor* t : action_net.param_tensors()) out.push_back(t);
    for (Tensor* t : reward_net.param_tensors()) out.push_back(t);
    return out;
}

std::vector<const Tensor*> ModelParams::all_params() const {
    std::vector<const Tensor*> out = encoder.param_tensors();
    for (const Tensor* t : action_net.param_tensors()) out.push_back(t);
    for (const Tensor* t : reward_net.param_tensors()) out.push_back(t);
    return out;
}

ModelParams init_model(const std::vector<std::size_t>& obs_shape, std::size_t num_actions,
                       const TrainConfig& config, Rng& rng, const std::string& env_id) {
    if (config.latent_dim == 0) throw ConfigError("latent_dim must be >= 1");
    if (num_actions == 0) throw ConfigError("need at least one action");
    ModelParams p;
    p.latent_dim = config.latent_dim;
    p.num_actions = num_actions;
    p.obs_shape = obs_shape;
    p.env_id = env_id;
    p.encoder = build_encoder(obs_shape, config.latent_dim, config.arch);
    p.action_net =
        build_mlp(config.latent_dim + num_actions, config.arch.action_hidden, config.latent_dim);
    p.reward_net = build_mlp(config.latent_dim, config.arch.reward_hidden, 1);
    p.encoder.init_params(rng);
    p.action_net.init_params(rng);
    p.reward_net.init_params(rng);
    return p;
}

Tensor encode_batch(const ModelParams& params, const Tensor& obs_batch) {
    const std::size_t n = obs_batch.dim(0);
    const std::size_t numel = obs_batch.size() / n;
    Tensor z({n, params.latent_dim});
    for (std::size_t begin = 0; begin < n; begin += kEncodeChunk) {
        const std::size_t end = std::min(n, begin + kEncodeChunk);
        std::vector<std::size_t> shape{end - begin};
        shape.insert(shape.end(), obs_batch.shape.begin() + 1, obs_batch.shape.end());
        Tensor chunk(std::move(shape),
                     std::vector<double>(obs_batch.data.begin() + begin * numel,
                                         obs_batch.data.begin() + end * numel));
        Tensor out = forward(params.encoder, chunk);
        std::copy(out.data.begin(), out.data.end(), z.data.begin() + begin * params.latent_dim);
    }
    if (!z.all_finite()) throw DivergenceError("encoder produced non-finite latents");
    return z;
}

Tensor encode_ids(const ModelParams& params, const ReplayDataset& dataset,
                  std::span<const std::uint32_t> ids) {
    if (ids.empty()) throw UsageError("encode_ids: no observations given");
    Tensor z({ids.size(), params.latent_dim});
    for (std::size_t begin = 0; begin < ids.size(); begin += kEncodeChunk) {
        const std::size_t end = std::min(ids.size(), begin + kEncodeChunk);
        Tensor chunk = gather_obs(dataset, ids, begin, end);
        Tensor out = forward(params.encoder, chunk);
        std::copy(out.data.begin(), out.data.end(), z.data.begin() + begin * params.latent_dim);
    }
    if (!z.all_finite()) throw DivergenceError("encoder produced non-finite latents");
    return z;
}

std::vector<double> encode(const ModelParams& params, const Observation& obs) {
    std::vector<std::size_t> shape{1};
    shape.insert(shape.end(), obs.data.shape.begin(), obs.data.shape.end());
    Tensor z = forward(params.encoder, Tensor(std::move(shape), obs.data.data));
    return z.data;
}

std::vector<double> predict_next(const ModelParams& params, std::span<const double> z,
                                 int action) {
    if (action < 0 || static_cast<std::size_t>(action) >= params.num_actions) {
        throw UsageError("predict_next: unknown action " + std::to_string(action));
    }
    if (z.size() != params.latent_dim) {
        throw UsageError("predict_next: latent has wrong dimension");
    }
    Tensor input({1, params.latent_dim + params.num_actions});
    std::copy(z.begin(), z.end(), input.data.begin());
    input.data[params.latent_dim + static_cast<std::size_t>(action)] = 1.0;
    Tensor delta = forward(params.action_net, input);
    std::vector<double> out(z.begin(), z.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += delta.data[i];
    return out;
}

std::vector<double> predict_reward(const ModelParams& params, const Tensor& z_batch) {
    Tensor out = forward(params.reward_net, z_batch);
    return out.data;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw UsageError("squared_distance: dimension mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return 0.5 * sum;
}

double hinge_negative(double dist, double margin) {
    return std::max(0.0, margin - dist);
}

ModelGrads ModelGrads::zeros_like(const ModelParams& params) {
    ModelGrads g;
    g.encoder = StackGrads::zeros_like(params.encoder);
    g.action_net = StackGrads::zeros_like(params.action_net);
    g.reward_net = StackGrads::zeros_like(params.reward_net);
    return g;
}

std::vector<const Tensor*> ModelGrads::all_grads() const {
    std::vector<const Tensor*> out;
    auto push = [&](const StackGrads& s, const LayerStack&) {
        for (std::size_t i = 0; i < s.weight_grads.size(); ++i) {
            if (s.weight_grads[i].size() == 0) continue;
            out.push_back(&s.weight_grads[i]);
            out.push_back(&s.bias_grads[i]);
        }
    };
    push(encoder, {});
    push(action_net, {});
    push(reward_net, {});
    return out;
}

LossBatch assemble_batch(const ReplayDataset& dataset, std::size_t batch_size,
                         std::size_t num_negatives, Rng& batch_rng, Rng& negative_rng) {
    LossBatch batch;
    batch.anchor_records = sample_batch(dataset, batch_size, batch_rng);
    batch.num_negatives = num_negatives;
    batch.negatives.reserve(batch_size * num_negatives);
    for (std::size_t idx : batch.anchor_records) {
        const auto negs = sample_negatives(dataset, idx, num_negatives, negative_rng);
        batch.negatives.insert(batch.negatives.end(), negs.begin(), negs.end());
    }
    return batch;
}

LossBreakdown loss(const ModelParams& params, const ReplayDataset& dataset, const LossBatch& batch,
                   const TrainConfig& config, ModelGrads* grads) {
    const std::size_t B = batch.anchor_records.size();
    const std::size_t J = batch.num_negatives;
    const std::size_t D = params.latent_dim;
    const std::size_t A = params.num_actions;
    if (B == 0) throw UsageError("loss: empty batch");
    if (batch.negatives.size() != B * J) {
        throw UsageError("loss: negatives do not match batch size");
    }

    // intern the batch's observations so every distinct observation runs
    // through the encoder exactly once
    std::unordered_map<std::uint32_t, std::uint32_t> row_of;
    std::vector<std::uint32_t> unique_ids;
    auto row = [&](std::uint32_t id) -> std::uint32_t {
        auto it = row_of.find(id);
        if (it != row_of.end()) return it->second;
        const auto r = static_cast<std::uint32_t>(unique_ids.size());
        row_of.emplace(id, r);
        unique_ids.push_back(id);
        return r;
    };
    std::vector<std::uint32_t> anchor_row(B), next_row(B);
    std::vector<std::uint32_t> neg_row(B * J);
    for (std::size_t n = 0; n < B; ++n) {
        const TransitionRecord& rec = dataset.records[batch.anchor_records[n]];
        anchor_row[n] = row(rec.state_id);
        next_row[n] = row(rec.next_state_id);
        for (std::size_t j = 0; j < J; ++j) neg_row[n * J + j] = row(batch.negatives[n * J + j]);
    }
    const std::size_t U = unique_ids.size();

    const bool keep_traces =
        grads != nullptr &&
        U * trace_doubles_per_sample(params.encoder) * sizeof(double) <= kTraceBudgetBytes;

    // encoder forward over unique observations
    Tensor z_u({U, D});
    std::vector<ForwardTrace> traces;
    for (std::size_t begin = 0; begin < U; begin += kEncodeChunk) {
        const std::size_t end = std::min(U, begin + kEncodeChunk);
        Tensor chunk = gather_obs(dataset, unique_ids, begin, end);
        ForwardTrace trace;
        Tensor out = forward(params.encoder, chunk, keep_traces ? &trace : nullptr);
        if (keep_traces) traces.push_back(std::move(trace));
        std::copy(out.data.begin(), out.data.end(), z_u.data.begin() + begin * D);
    }

    // action net on [z ; one-hot a]
    Tensor action_in({B, D + A});
    std::vector<const TransitionRecord*> recs(B);
    for (std::size_t n = 0; n < B; ++n) {
        recs[n] = &dataset.records[batch.anchor_records[n]];
        const double* z = z_u.data.data() + anchor_row[n] * D;
        double* dst = action_in.data.data() + n * (D + A);
        std::copy(z, z + D, dst);
        if (recs[n]->action >= A) {
            throw UsageError("loss: record action " + std::to_string(recs[n]->action) +
                             " out of range");
        }
        dst[D + recs[n]->action] = 1.0;
    }
    ForwardTrace action_trace;
    Tensor delta = forward(params.action_net, action_in, grads ? &action_trace : nullptr);

    // reward head on anchor latents
    Tensor reward_in({B, D});
    ForwardTrace reward_trace;
    Tensor reward_pred;
    if (config.use_reward_loss) {
        for (std::size_t n = 0; n < B; ++n) {
            const double* z = z_u.data.data() + anchor_row[n] * D;
            std::copy(z, z + D, reward_in.data.begin() + n * D);
        }
        reward_pred = forward(params.reward_net, reward_in, grads ? &reward_trace : nullptr);
    }

    LossBreakdown out;
    Tensor d_t({B, D});       // dLoss/dt, t = z + delta
    Tensor d_zu({U, D});      // dLoss/dz per unique observation
    Tensor d_reward({B, 1});
    const double inv_b = 1.0 / static_cast<double>(B);
    std::vector<double> t(D);
    for (std::size_t n = 0; n < B; ++n) {
        const double* z = z_u.data.data() + anchor_row[n] * D;
        const double* dlt = delta.data.data() + n * D;
        for (std::size_t i = 0; i < D; ++i) t[i] = z[i] + dlt[i];

        const double* z_next = z_u.data.data() + next_row[n] * D;
        double* dt = d_t.data.data() + n * D;
        double* dz_next = d_zu.data.data() + next_row[n] * D;
        double trans = 0.0;
        for (std::size_t i = 0; i < D; ++i) {
            const double diff = t[i] - z_next[i];
            trans += diff * diff;
            dt[i] += inv_b * diff;
            dz_next[i] -= inv_b * diff;
        }
        out.transition_term += 0.5 * trans;

        if (config.use_reward_loss) {
            const double rhat = reward_pred.data[n];
            const double err = rhat - recs[n]->reward;
            out.reward_term += 0.5 * err * err;
            d_reward.data[n] = inv_b * err;
        }

        for (std::size_t j = 0; j < J; ++j) {
            const double* z_neg = z_u.data.data() + neg_row[n * J + j] * D;
            double dist = 0.0;
            for (std::size_t i = 0; i < D; ++i) {
                const double diff = t[i] - z_neg[i];
                dist += diff * diff;
            }
            dist *= 0.5;
            if (dist < config.hinge) {
                out.negative_term += config.hinge - dist;
                double* dz_neg = d_zu.data.data() + neg_row[n * J + j] * D;
                for (std::size_t i = 0; i < D; ++i) {
                    const double diff = t[i] - z_neg[i];
                    dt[i] -= inv_b * diff;
                    dz_neg[i] += inv_b * diff;
                }
            }
        }
    }
    out.transition_term *= inv_b;
    out.reward_term *= inv_b;
    out.negative_term *= inv_b;
    out.total = out.transition_term + out.reward_term + out.negative_term;
    if (!std::isfinite(out.total)) {
        throw DivergenceError("loss became non-finite");
    }
    if (!grads) return out;

    *grads = ModelGrads::zeros_like(params);

    // t = z + delta: the action net sees dL/dt as its output gradient and the
    // z part of its input gradient flows back into the anchor latents
    Tensor d_action_in = backward(params.action_net, action_trace, d_t, grads->action_net);
    for (std::size_t n = 0; n < B; ++n) {
        double* dz = d_zu.data.data() + anchor_row[n] * D;
        const double* din = d_action_in.data.data() + n * (D + A);
        const double* dt = d_t.data.data() + n * D;
        for (std::size_t i = 0; i < D; ++i) dz[i] += dt[i] + din[i];
    }
    if (config.use_reward_loss) {
        Tensor d_reward_in = backward(params.reward_net, reward_trace, d_reward, grads->reward_net);
        for (std::size_t n = 0; n < B; ++n) {
            double* dz = d_zu.data.data() + anchor_row[n] * D;
            const double* din = d_reward_in.data.data() + n * D;
            for (std::size_t i = 0; i < D; ++i) dz[i] += din[i];
        }
    }

    std::size_t chunk_index = 0;
    for (std::size_t begin = 0; begin < U; begin += kEncodeChunk, ++chunk_index) {
        const std::size_t end = std::min(U, begin + kEncodeChunk);
        Tensor dz_chunk({end - begin, D},
                        std::vector<double>(d_zu.data.begin() + begin * D,
                                            d_zu.data.begin() + end * D));
        if (keep_traces) {
            backward(params.encoder, traces[chunk_index], dz_chunk, grads->encoder);
        } else {
            Tensor chunk = gather_obs(dataset, unique_ids, begin, end);
            ForwardTrace trace;
            forward(params.encoder, chunk, &trace);
            backward(params.encoder, trace, dz_chunk, grads->encoder);
        }
    }
    return out;
}

TrainResult train(ModelParams& params, const ReplayDataset& dataset, const TrainConfig& config) {
    if (dataset.records.empty()) throw UsageError("train: dataset is empty");
    if (config.batch_size == 0) throw UsageError("train: batch_size must be positive");
    TrainResult result;
    if (config.epochs == 0) return result;

    Rng root(config.seed);
    Rng batch_rng = root.split(1);
    Rng negative_rng = root.split(2);

    const std::vector<const Tensor*> param_view = std::as_const(params).all_params();
    AdamState adam = AdamState::init(param_view, config.learning_rate);
    const std::size_t batches =
        (dataset.records.size() + config.batch_size - 1) / config.batch_size;

    ModelGrads grads;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const ModelParams snapshot = params;
        LossBreakdown epoch_sum;
        bool ok = true;
        for (std::size_t b = 0; b < batches; ++b) {
            LossBatch batch = assemble_batch(dataset, config.batch_size, config.negatives,
                                             batch_rng, negative_rng);
            try {
                const LossBreakdown lb = loss(params, dataset, batch, config, &grads);
                adam_step(params.all_params(), grads.all_grads(), adam);
                epoch_sum.transition_term += lb.transition_term;
                epoch_sum.reward_term += lb.reward_term;
                epoch_sum.negative_term += lb.negative_term;
                epoch_sum.total += lb.total;
            } catch (const DivergenceError&) {
                params = snapshot;
                result.diverged_epoch = epoch;
                ok = false;
                break;
            }
        }
        if (!ok) break;
        const double inv = 1.0 / static_cast<double>(batches);
        epoch_sum.transition_term *= inv;
        epoch_sum.reward_term *= inv;
        epoch_sum.negative_term *= inv;
        epoch_sum.total *= inv;
        result.epoch_losses.push_back(epoch_sum);
        if (config.loss_target > 0.0 && epoch_sum.total <= config.loss_target) {
            result.reached_target = true;
            break;
        }
    }
    return result;
}

LossGradCheckReport check_loss_gradients(ModelParams& params, const ReplayDataset& dataset,
                                         const LossBatch& batch, const TrainConfig& config,
                                         double tolerance, double step) {
    ModelGrads analytic;
    loss(params, dataset, batch, config, &analytic);
    const std::vector<const Tensor*> grad_list = analytic.all_grads();
    std::vector<Tensor*> param_list = params.all_params();

    LossGradCheckReport report;
    for (std::size_t pi = 0; pi < param_list.size(); ++pi) {
        Tensor* p = param_list[pi];
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double saved = p->data[i];
            p->data[i] = saved + step;
            const double up = loss(params, dataset, batch, config).total;
            p->data[i] = saved - step;
            const double down = loss(params, dataset, batch, config).total;
            p->data[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double analytic_v = grad_list[pi]->data[i];
            const double denom = std::max({std::fabs(analytic_v), std::fabs(numeric), 1e-8});
            const double rel = std::fabs(analytic_v - numeric) / denom;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_tensor = "tensor " + std::to_string(pi) + "[" + std::to_string(i) + "]";
            }
        }
    }
    report.pass = report.max_rel_error <= tolerance;
    return report;
}

namespace {

constexpr char kCheckpointMagic[5] = "MHCK";
constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json stack_desc(const LayerStack& stack) {
    nlohmann::json layers = nlohmann::json::array();
    for (const Layer& l : stack.layers) {
        nlohmann::json j{{"kind", layer_kind_name(l.kind)}};
        if (l.kind == LayerKind::dense) {
            j["out"] = l.weights.dim(0);
            j["in"] = l.weights.dim(1);
        } else if (l.kind == LayerKind::conv2d) {
            j["out_ch"] = l.weights.dim(0);
            j["in_ch"] = l.weights.dim(1);
            j["kernel"] = l.weights.dim(2);
            j["stride"] = l.stride;
            j["pad"] = l.pad;
            j["in_h"] = l.in_h;
            j["in_w"] = l.in_w;
        }
        layers.push_back(j);
    }
    return nlohmann::json{{"input_shape", stack.input_shape}, {"layers", layers}};
}

LayerStack stack_from_desc(const nlohmann::json& j) {
    LayerStack stack;
    stack.input_shape = j.at("input_shape").get<std::vector<std::size_t>>();
    for (const auto& lj : j.at("layers")) {
        const LayerKind kind = layer_kind_from_name(lj.at("kind").get<std::string>());
        switch (kind) {
            case LayerKind::dense:
                stack.layers.push_back(
                    Layer::dense(lj.at("in").get<std::size_t>(), lj.at("out").get<std::size_t>()));
                break;
            case LayerKind::conv2d:
                stack.layers.push_back(Layer::conv2d(
                    lj.at("in_ch").get<std::size_t>(), lj.at("out_ch").get<std::size_t>(),
                    lj.at("kernel").get<std::size_t>(), lj.at("stride").get<std::size_t>(),
                    lj.at("pad").get<std::size_t>(), lj.at("in_h").get<std::size_t>(),
                    lj.at("in_w").get<std::size_t>()));
                break;
            case LayerKind::relu: stack.layers.push_back(Layer::relu()); break;
        }
    }
    return stack;
}

void write_stack_params(BinaryWriter& w, const LayerStack& stack) {
    for (const Tensor* t : stack.param_tensors()) {
        w.u64(t->size());
        w.f64_array(t->data.data(), t->size());
    }
}

void read_stack_params(BinaryReader& r, LayerStack& stack) {
    for (Tensor* t : stack.param_tensors()) {
        const std::uint64_t n = r.u64();
        if (n != t->size()) {
            throw FormatError("checkpoint tensor size mismatch", r.offset() - 8);
        }
        r.f64_array(t->data.data(), t->size());
    }
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
    BinaryWriter w(path);
    w.magic(kCheckpointMagic);
    w.u32(kCheckpointVersion);
    nlohmann::json header{{"latent_dim", params.latent_dim},
                          {"num_actions", params.num_actions},
                          {"obs_shape", params.obs_shape},
                          {"env_id", params.env_id},
                          {"encoder", stack_desc(params.encoder)},
                          {"action_net", stack_desc(params.action_net)},
                          {"reward_net", stack_desc(params.reward_net)}};
    w.bytes(header.dump());
    write_stack_params(w, params.encoder);
    write_stack_params(w, params.action_net);
    write_stack_params(w, params.reward_net);
    w.close();
}

ModelParams load_checkpoint(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kCheckpointMagic, "model checkpoint");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version),
                          r.offset() - 4);
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(r.bytes());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad checkpoint header: ") + e.what(), r.offset());
    }
    ModelParams p;
    p.latent_dim = header.at("latent_dim").get<std::size_t>();
    p.num_actions = header.at("num_actions").get<std::size_t>();
    p.obs_shape = header.at("obs_shape").get<std::vector<std::size_t>>();
    p.env_id = header.value("env_id", "");
    p.encoder = stack_from_desc(header.at("encoder"));
    p.action_net = stack_from_desc(header.at("action_net"));
    p.reward_net = stack_from_desc(header.at("reward_net"));
    read_stack_params(r, p.encoder);
    read_stack_params(r, p.action_net);
    read_stack_params(r, p.reward_net);
    return p;
}

}  // namespace mdphom
