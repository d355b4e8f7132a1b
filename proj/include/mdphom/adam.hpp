#pragma once

#include <cstdint>
#include <vector>

#include "mdphom/tensor.hpp"

namespace mdphom {

/// Adam optimizer state for a fixed list of parameter tensors. Moments are
/// kept in the same order and shapes as the parameters they track.
struct AdamState {
    std::uint64_t step_count = 0;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon_stab = 1e-8;

    static AdamState init(const std::vector<const Tensor*>& params, double learning_rate);
};

/// One Adam update with bias correction. Throws DivergenceError on non-finite
/// gradients, leaving parameters and state untouched.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state);

}  // namespace mdphom
