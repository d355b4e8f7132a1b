#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mdphom/tensor.hpp"

namespace mdphom {

class Rng;

enum class LayerKind { dense, conv2d, relu };

std::string layer_kind_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);

/// One layer of a feedforward stack.
///   dense:  weights (out, in), bias (out)
///   conv2d: weights (out_ch, in_ch, k, k), bias (out_ch); stride/pad as
///           configured, zero padding
///   relu:   no parameters
struct Layer {
    LayerKind kind = LayerKind::relu;
    Tensor weights;
    Tensor bias;
    std::size_t stride = 1;
    std::size_t pad = 0;
    std::size_t in_h = 0;  // conv2d only: expected input spatial dims
    std::size_t in_w = 0;

    static Layer dense(std::size_t in_features, std::size_t out_features);
    static Layer conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                        std::size_t stride, std::size_t pad, std::size_t in_h, std::size_t in_w);
    static Layer relu();

    std::size_t param_count() const { return weights.size() + bias.size(); }

    /// Per-sample output shape for the given per-sample input shape.
    /// Throws ConfigError on a mismatch.
    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& input_shape) const;
};

/// A feedforward network: an ordered stack of layers plus the per-sample
/// input shape it expects.
struct LayerStack {
    std::vector<Layer> layers;
    std::vector<std::size_t> input_shape;

    std::vector<std::size_t> output_shape() const;
    std::size_t param_count() const;
    std::vector<Tensor*> param_tensors();
    std::vector<const Tensor*> param_tensors() const;

    /// Glorot-uniform weights, zero biases.
    void init_params(Rng& rng);
};

/// Activation cache from one batched forward pass, consumed by backward.
struct ForwardTrace {
    std::size_t batch = 0;
    std::vector<Tensor> layer_inputs;  // input seen by each layer, batched
};

/// Per-layer parameter gradients, aligned with LayerStack::layers.
struct StackGrads {
    std::vector<Tensor> weight_grads;
    std::vector<Tensor> bias_grads;

    static StackGrads zeros_like(const LayerStack& stack);
    void add(const StackGrads& other);
    void scale(double factor);
};

/// Batched forward pass. `input` is (batch, per-sample dims...). When `trace`
/// is non-null the activations needed by backward are recorded.
Tensor forward(const LayerStack& stack, const Tensor& input, ForwardTrace* trace = nullptr);

/// Batched backward pass for a recorded forward. `output_grad` has the shape
/// of the forward output; parameter gradients are accumulated (+=) into
/// `grads`. Returns the gradient with respect to the stack input.
Tensor backward(const LayerStack& stack, const ForwardTrace& trace, const Tensor& output_grad,
                StackGrads& grads);

/// Loss functional over a network output. Called with `output_grad == nullptr`
/// to evaluate the loss only, otherwise it must also fill in dLoss/dOutput.
using OutputLoss = std::function<double(const Tensor& output, Tensor* output_grad)>;

struct GradCheckReport {
    bool pass = false;
    double max_rel_error = 0.0;
    std::size_t worst_layer = 0;
    std::size_t worst_param = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Compares analytic parameter gradients of loss(stack(input)) against central
/// finite differences with the given step. Report only; never throws on
/// failing gradients.
GradCheckReport grad_check(LayerStack& stack, const Tensor& input, const OutputLoss& loss,
                           double tolerance, double step = 1e-5);

}  // namespace mdphom
