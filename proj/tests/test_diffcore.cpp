#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mdphom/adam.hpp"
#include "mdphom/errors.hpp"
#include "mdphom/layers.hpp"
#include "mdphom/rng.hpp"

using namespace mdphom;

namespace {

LayerStack single_dense(std::size_t in, std::size_t out) {
    LayerStack s;
    s.input_shape = {in};
    s.layers.push_back(Layer::dense(in, out));
    return s;
}

// 1/2 sum (y - target)^2 over the whole batch
OutputLoss squared_loss(std::vector<double> target) {
    return [target = std::move(target)](const Tensor& out, Tensor* grad) {
        double loss = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double diff = out.data[i] - target[i % target.size()];
            loss += 0.5 * diff * diff;
            if (grad) grad->data[i] = diff;
        }
        return loss;
    };
}

}  // namespace

TEST_CASE("tensor shape and data must agree") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), UsageError);
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.all_finite());
}

TEST_CASE("dense identity maps input through unchanged") {
    LayerStack s = single_dense(3, 3);
    for (std::size_t i = 0; i < 3; ++i) s.layers[0].weights.data[i * 3 + i] = 1.0;
    Tensor out = forward(s, Tensor({1, 3}, {1.0, 2.0, 3.0}));
    CHECK(out.data == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("relu clips negatives") {
    LayerStack s;
    s.input_shape = {3};
    s.layers.push_back(Layer::relu());
    Tensor out = forward(s, Tensor({1, 3}, {-1.0, 0.0, 2.0}));
    CHECK(out.data == std::vector<double>{0.0, 0.0, 2.0});
}

TEST_CASE("dense matches a hand matrix-vector product") {
    // W = [[1,2],[3,4]], b = (0.5, -0.5), x = (1,1):
    //   row 1: 1+2+0.5 = 3.5, row 2: 3+4-0.5 = 6.5
    LayerStack s = single_dense(2, 2);
    s.layers[0].weights.data = {1.0, 2.0, 3.0, 4.0};
    s.layers[0].bias.data = {0.5, -0.5};
    Tensor out = forward(s, Tensor({1, 2}, {1.0, 1.0}));
    CHECK(out.data[0] == doctest::Approx(3.5).epsilon(1e-15));
    CHECK(out.data[1] == doctest::Approx(6.5).epsilon(1e-15));
}

TEST_CASE("forward reports the offending layer on bad shapes") {
    LayerStack s = single_dense(4, 2);
    CHECK_THROWS_WITH_AS(forward(s, Tensor({1, 3}, {1.0, 2.0, 3.0})),
                         doctest::Contains("layer 0 (dense)"), ConfigError);
}

TEST_CASE("constant loss yields zero gradients") {
    Rng rng(1);
    LayerStack s = single_dense(3, 2);
    s.init_params(rng);
    ForwardTrace trace;
    Tensor out = forward(s, Tensor::uniform({4, 3}, -1.0, 1.0, rng), &trace);
    StackGrads grads = StackGrads::zeros_like(s);
    backward(s, trace, Tensor(out.shape), grads);  // dLoss/dOut = 0
    for (double g : grads.weight_grads[0].data) CHECK(g == 0.0);
    for (double g : grads.bias_grads[0].data) CHECK(g == 0.0);
}

TEST_CASE("least squares gradient equals (Wx - y) x^T") {
    Rng rng(7);
    LayerStack s = single_dense(3, 2);
    s.init_params(rng);
    const Tensor x({1, 3}, {0.3, -0.7, 1.1});
    const std::vector<double> y{0.2, -0.4};

    ForwardTrace trace;
    Tensor out = forward(s, x, &trace);
    Tensor dout(out.shape);
    squared_loss(y)(out, &dout);
    StackGrads grads = StackGrads::zeros_like(s);
    backward(s, trace, dout, grads);

    for (std::size_t r = 0; r < 2; ++r) {
        const double err = out.data[r] - y[r];
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(grads.weight_grads[0].data[r * 3 + c] ==
                  doctest::Approx(err * x.data[c]).epsilon(1e-12));
        }
        CHECK(grads.bias_grads[0].data[r] == doctest::Approx(err).epsilon(1e-12));
    }
}

TEST_CASE("backward without a matching forward trace is rejected") {
    LayerStack s = single_dense(2, 2);
    ForwardTrace empty;
    StackGrads grads = StackGrads::zeros_like(s);
    CHECK_THROWS_AS(backward(s, empty, Tensor({1, 2}), grads), UsageError);
}

TEST_CASE("grad_check passes on random small networks") {
    Rng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        LayerStack s;
        s.input_shape = {4};
        s.layers.push_back(Layer::dense(4, 6));
        s.layers.push_back(Layer::relu());
        s.layers.push_back(Layer::dense(6, 3));
        s.init_params(rng);
        // inputs away from relu kinks keep central differences clean
        Tensor input = Tensor::uniform({3, 4}, 0.5, 1.5, rng);
        const auto report = grad_check(s, input, squared_loss({0.1, -0.2, 0.3}), 1e-4);
        CHECK(report.pass);
        CHECK(report.max_rel_error < 1e-4);
    }
}

TEST_CASE("grad_check on a linear layer passes a tight tolerance") {
    Rng rng(13);
    LayerStack s = single_dense(3, 2);
    s.init_params(rng);
    Tensor input = Tensor::uniform({2, 3}, -1.0, 1.0, rng);
    const auto report = grad_check(s, input, squared_loss({0.0, 0.0}), 1e-6);
    CHECK(report.pass);
}

TEST_CASE("grad_check detects a corrupted gradient") {
    Rng rng(17);
    LayerStack s = single_dense(3, 2);
    s.init_params(rng);
    Tensor input = Tensor::uniform({2, 3}, -1.0, 1.0, rng);
    // doubling the reported output gradient corrupts every parameter gradient
    OutputLoss corrupted = [](const Tensor& out, Tensor* grad) {
        double loss = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            loss += 0.5 * out.data[i] * out.data[i];
            if (grad) grad->data[i] = 2.0 * out.data[i];
        }
        return loss;
    };
    const auto report = grad_check(s, input, corrupted, 1e-4);
    CHECK_FALSE(report.pass);
}

TEST_CASE("conv2d forward matches a direct convolution") {
    Rng rng(19);
    LayerStack s;
    s.input_shape = {2, 5, 5};
    s.layers.push_back(Layer::conv2d(2, 3, 3, 1, 1, 5, 5));
    s.init_params(rng);
    for (double& b : s.layers[0].bias.data) b = rng.uniform(-0.2, 0.2);
    Tensor input = Tensor::uniform({2, 2, 5, 5}, -1.0, 1.0, rng);
    Tensor out = forward(s, input);

    const Tensor& w = s.layers[0].weights;
    for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t oc = 0; oc < 3; ++oc) {
            for (std::size_t oy = 0; oy < 5; ++oy) {
                for (std::size_t ox = 0; ox < 5; ++ox) {
                    double acc = s.layers[0].bias.data[oc];
                    for (std::size_t ic = 0; ic < 2; ++ic) {
                        for (std::size_t ky = 0; ky < 3; ++ky) {
                            for (std::size_t kx = 0; kx < 3; ++kx) {
                                const int iy = static_cast<int>(oy + ky) - 1;
                                const int ix = static_cast<int>(ox + kx) - 1;
                                if (iy < 0 || iy >= 5 || ix < 0 || ix >= 5) continue;
                                acc += w.data[((oc * 2 + ic) * 3 + ky) * 3 + kx] *
                                       input.data[((b * 2 + ic) * 5 + iy) * 5 + ix];
                            }
                        }
                    }
                    const double got = out.data[((b * 3 + oc) * 5 + oy) * 5 + ox];
                    CHECK(got == doctest::Approx(acc).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("grad_check covers strided conv stacks") {
    Rng rng(23);
    LayerStack s;
    s.input_shape = {1, 6, 6};
    s.layers.push_back(Layer::conv2d(1, 2, 3, 2, 1, 6, 6));
    s.layers.push_back(Layer::relu());
    s.layers.push_back(Layer::dense(2 * 3 * 3, 4));
    s.init_params(rng);
    Tensor input = Tensor::uniform({2, 1, 6, 6}, 0.2, 1.0, rng);
    const auto report = grad_check(s, input, squared_loss({0.1, 0.2, -0.1, 0.0}), 1e-4);
    CHECK(report.pass);
}

TEST_CASE("forward is deterministic") {
    Rng rng(29);
    LayerStack s;
    s.input_shape = {1, 4, 4};
    s.layers.push_back(Layer::conv2d(1, 2, 3, 1, 1, 4, 4));
    s.layers.push_back(Layer::relu());
    s.layers.push_back(Layer::dense(2 * 4 * 4, 3));
    s.init_params(rng);
    Tensor input = Tensor::uniform({2, 1, 4, 4}, -1.0, 1.0, rng);
    Tensor a = forward(s, input);
    Tensor b = forward(s, input);
    CHECK(a.data == b.data);
}

TEST_CASE("adam leaves parameters alone on zero gradients") {
    Tensor p({3}, {1.0, -2.0, 0.5});
    Tensor g({3});
    AdamState state = AdamState::init({&p}, 1e-3);
    // seed the moments, then watch them decay under zero gradients
    state.first_moment[0].data = {0.1, 0.1, 0.1};
    state.second_moment[0].data = {0.2, 0.2, 0.2};
    const std::vector<double> before = p.data;
    adam_step({&p}, {&g}, state);
    CHECK(state.step_count == 1);
    CHECK(state.first_moment[0].data[0] == doctest::Approx(0.09).epsilon(1e-12));
    CHECK(state.second_moment[0].data[0] == doctest::Approx(0.1998).epsilon(1e-12));
    for (std::size_t i = 0; i < 3; ++i) CHECK(p.data[i] < before[i]);  // moments still push

    Tensor q({2}, {1.0, 2.0});
    Tensor zero({2});
    AdamState fresh = AdamState::init({&q}, 1e-3);
    adam_step({&q}, {&zero}, fresh);
    CHECK(q.data == std::vector<double>{1.0, 2.0});  // zero moments + zero grads: identity
}

TEST_CASE("first adam step moves a scalar by about the learning rate") {
    // t=1: m_hat = g, v_hat = g^2, delta = lr * g / (|g| + eps) -> ~0.001
    Tensor p({1}, {1.0});
    Tensor g({1}, {1.0});
    AdamState state = AdamState::init({&p}, 1e-3);
    adam_step({&p}, {&g}, state);
    CHECK(p.data[0] == doctest::Approx(0.999).epsilon(1e-9));
}

TEST_CASE("constant positive gradients decrease the parameter monotonically") {
    Tensor p({1}, {1.0});
    Tensor g({1}, {0.7});
    AdamState state = AdamState::init({&p}, 1e-3);
    double prev = p.data[0];
    for (int i = 0; i < 5; ++i) {
        adam_step({&p}, {&g}, state);
        CHECK(p.data[0] < prev);
        prev = p.data[0];
    }
    CHECK(state.step_count == 5);
}

TEST_CASE("adam rejects non-finite gradients without touching parameters") {
    Tensor p({2}, {1.0, 2.0});
    Tensor g({2}, {0.1, std::nan("")});
    AdamState state = AdamState::init({&p}, 1e-3);
    CHECK_THROWS_AS(adam_step({&p}, {&g}, state), DivergenceError);
    CHECK(p.data == std::vector<double>{1.0, 2.0});
    CHECK(state.step_count == 0);
}

TEST_CASE("glorot init respects fan bounds") {
    Rng rng(31);
    LayerStack s = single_dense(10, 20);
    s.init_params(rng);
    const double bound = std::sqrt(6.0 / 30.0);
    for (double w : s.layers[0].weights.data) {
        CHECK(std::fabs(w) <= bound);
    }
    for (double b : s.layers[0].bias.data) CHECK(b == 0.0);
}
