#include "mdphom/adam.hpp"

#include <cmath>

#include "mdphom/errors.hpp"

namespace mdphom {

AdamState AdamState::init(const std::vector<const Tensor*>& params, double learning_rate) {
    AdamState s;
    s.learning_rate = learning_rate;
    s.first_moment.reserve(params.size());
    s.second_moment.reserve(params.size());
    for (const Tensor* p : params) {
        s.first_moment.emplace_back(Tensor(p->shape));
        s.second_moment.emplace_back(Tensor(p->shape));
    }
    return s;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
        throw UsageError("adam_step: parameter/gradient/state counts differ");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(*grads[i])) {
            throw UsageError("adam_step: gradient shape mismatch at tensor " + std::to_string(i));
        }
        if (!grads[i]->all_finite()) {
            throw DivergenceError("training divergence: non-finite gradient in tensor " +
                                  std::to_string(i));
        }
    }
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        Tensor& m = state.first_moment[i];
        Tensor& v = state.second_moment[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m.data[j] = state.beta1 * m.data[j] + (1.0 - state.beta1) * g.data[j];
            v.data[j] = state.beta2 * v.data[j] + (1.0 - state.beta2) * g.data[j] * g.data[j];
            const double mhat = m.data[j] / bc1;
            const double vhat = v.data[j] / bc2;
            p.data[j] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon_stab);
        }
    }
}

}  // namespace mdphom
