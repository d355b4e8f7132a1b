#include "mdphom/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "mdphom/errors.hpp"
#include "mdphom/gemm.hpp"
#include "mdphom/rng.hpp"

namespace mdphom {

std::string layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::relu: return "relu";
    }
    return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
    if (name == "dense") return LayerKind::dense;
    if (name == "conv2d") return LayerKind::conv2d;
    if (name == "relu") return LayerKind::relu;
    throw FormatError("unknown layer kind '" + name + "'", 0);
}

Layer Layer::dense(std::size_t in_features, std::size_t out_features) {
    Layer l;
    l.kind = LayerKind::dense;
    l.weights = Tensor({out_features, in_features});
    l.bias = Tensor({out_features});
    return l;
}

Layer Layer::conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride,
                    std::size_t pad, std::size_t in_h, std::size_t in_w) {
    if (stride == 0) throw ConfigError("conv2d stride must be positive");
    if (in_h + 2 * pad < kernel || in_w + 2 * pad < kernel) {
        throw ConfigError("conv2d kernel larger than padded input");
    }
    Layer l;
    l.kind = LayerKind::conv2d;
    l.weights = Tensor({out_ch, in_ch, kernel, kernel});
    l.bias = Tensor({out_ch});
    l.stride = stride;
    l.pad = pad;
    l.in_h = in_h;
    l.in_w = in_w;
    return l;
}

Layer Layer::relu() {
    Layer l;
    l.kind = LayerKind::relu;
    return l;
}

namespace {

struct ConvDims {
    std::size_t in_ch, out_ch, k, oh, ow;
};

ConvDims conv_dims(const Layer& l) {
    ConvDims d;
    d.out_ch = l.weights.dim(0);
    d.in_ch = l.weights.dim(1);
    d.k = l.weights.dim(2);
    d.oh = (l.in_h + 2 * l.pad - d.k) / l.stride + 1;
    d.ow = (l.in_w + 2 * l.pad - d.k) / l.stride + 1;
    return d;
}

}  // namespace

std::vector<std::size_t> Layer::output_shape(const std::vector<std::size_t>& input_shape) const {
    switch (kind) {
        case LayerKind::dense: {
            const std::size_t in = weights.dim(1);
            if (shape_numel(input_shape) != in) {
                throw ConfigError("dense layer expects " + std::to_string(in) +
                                  " inputs per sample, got " + shape_str(input_shape));
            }
            return {weights.dim(0)};
        }
        case LayerKind::conv2d: {
            const ConvDims d = conv_dims(*this);
            if (input_shape.size() != 3 || input_shape[0] != d.in_ch || input_shape[1] != in_h ||
                input_shape[2] != in_w) {
                throw ConfigError("conv2d layer expects input " +
                                  shape_str({d.in_ch, in_h, in_w}) + ", got " +
                                  shape_str(input_shape));
            }
            return {d.out_ch, d.oh, d.ow};
        }
        case LayerKind::relu: return input_shape;
    }
    throw ConfigError("unknown layer kind");
}

std::vector<std::size_t> LayerStack::output_shape() const {
    std::vector<std::size_t> shape = input_shape;
    for (const Layer& l : layers) shape = l.output_shape(shape);
    return shape;
}

std::size_t LayerStack::param_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.param_count();
    return n;
}

std::vector<Tensor*> LayerStack::param_tensors() {
    std::vector<Tensor*> out;
    for (Layer& l : layers) {
        if (l.kind == LayerKind::relu) continue;
        out.push_back(&l.weights);
        out.push_back(&l.bias);
    }
    return out;
}

std::vector<const Tensor*> LayerStack::param_tensors() const {
    std::vector<const Tensor*> out;
    for (const Layer& l : layers) {
        if (l.kind == LayerKind::relu) continue;
        out.push_back(&l.weights);
        out.push_back(&l.bias);
    }
    return out;
}

void LayerStack::init_params(Rng& rng) {
    for (Layer& l : layers) {
        std::size_t fan_in = 0, fan_out = 0;
        switch (l.kind) {
            case LayerKind::dense:
                fan_in = l.weights.dim(1);
                fan_out = l.weights.dim(0);
                break;
            case LayerKind::conv2d: {
                const std::size_t k2 = l.weights.dim(2) * l.weights.dim(3);
                fan_in = l.weights.dim(1) * k2;
                fan_out = l.weights.dim(0) * k2;
                break;
            }
            case LayerKind::relu: continue;
        }
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& w : l.weights.data) w = rng.uniform(-bound, bound);
        l.bias.fill(0.0);
    }
}

StackGrads StackGrads::zeros_like(const LayerStack& stack) {
    StackGrads g;
    g.weight_grads.reserve(stack.layers.size());
    g.bias_grads.reserve(stack.layers.size());
    for (const Layer& l : stack.layers) {
        if (l.kind == LayerKind::relu) {
            g.weight_grads.emplace_back();
            g.bias_grads.emplace_back();
        } else {
            g.weight_grads.emplace_back(Tensor(l.weights.shape));
            g.bias_grads.emplace_back(Tensor(l.bias.shape));
        }
    }
    return g;
}

void StackGrads::add(const StackGrads& other) {
    for (std::size_t i = 0; i < weight_grads.size(); ++i) {
        for (std::size_t j = 0; j < weight_grads[i].size(); ++j)
            weight_grads[i].data[j] += other.weight_grads[i].data[j];
        for (std::size_t j = 0; j < bias_grads[i].size(); ++j)
            bias_grads[i].data[j] += other.bias_grads[i].data[j];
    }
}

void StackGrads::scale(double factor) {
    for (Tensor& t : weight_grads)
        for (double& v : t.data) v *= factor;
    for (Tensor& t : bias_grads)
        for (double& v : t.data) v *= factor;
}

namespace {

std::vector<std::size_t> per_sample_shape(const Tensor& t) {
    return {t.shape.begin() + 1, t.shape.end()};
}

// col has one row per (b, oh, ow), columns ordered (c, kh, kw) to match the
// natural flattening of conv weights.
void im2col(const double* x, std::size_t batch, const ConvDims& d, const Layer& l, double* col) {
    const std::size_t h = l.in_h, w = l.in_w, s = l.stride, p = l.pad, k = d.k;
    const std::size_t row_len = d.in_ch * k * k;
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xb = x + b * d.in_ch * h * w;
        for (std::size_t oh = 0; oh < d.oh; ++oh) {
            for (std::size_t ow = 0; ow < d.ow; ++ow) {
                double* row = col + ((b * d.oh + oh) * d.ow + ow) * row_len;
                for (std::size_t c = 0; c < d.in_ch; ++c) {
                    const double* xc = xb + c * h * w;
                    for (std::size_t kh = 0; kh < k; ++kh) {
                        const std::ptrdiff_t ih =
                            static_cast<std::ptrdiff_t>(oh * s + kh) - static_cast<std::ptrdiff_t>(p);
                        double* dst = row + (c * k + kh) * k;
                        if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) {
                            std::fill(dst, dst + k, 0.0);
                            continue;
                        }
                        for (std::size_t kw = 0; kw < k; ++kw) {
                            const std::ptrdiff_t iw =
                                static_cast<std::ptrdiff_t>(ow * s + kw) - static_cast<std::ptrdiff_t>(p);
                            dst[kw] = (iw < 0 || iw >= static_cast<std::ptrdiff_t>(w))
                                          ? 0.0
                                          : xc[ih * w + iw];
                        }
                    }
                }
            }
        }
    }
}

void col2im_add(const double* col, std::size_t batch, const ConvDims& d, const Layer& l,
                double* dx) {
    const std::size_t h = l.in_h, w = l.in_w, s = l.stride, p = l.pad, k = d.k;
    const std::size_t row_len = d.in_ch * k * k;
    for (std::size_t b = 0; b < batch; ++b) {
        double* xb = dx + b * d.in_ch * h * w;
        for (std::size_t oh = 0; oh < d.oh; ++oh) {
            for (std::size_t ow = 0; ow < d.ow; ++ow) {
                const double* row = col + ((b * d.oh + oh) * d.ow + ow) * row_len;
                for (std::size_t c = 0; c < d.in_ch; ++c) {
                    double* xc = xb + c * h * w;
                    for (std::size_t kh = 0; kh < k; ++kh) {
                        const std::ptrdiff_t ih =
                            static_cast<std::ptrdiff_t>(oh * s + kh) - static_cast<std::ptrdiff_t>(p);
                        if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) continue;
                        const double* src = row + (c * k + kh) * k;
                        for (std::size_t kw = 0; kw < k; ++kw) {
                            const std::ptrdiff_t iw =
                                static_cast<std::ptrdiff_t>(ow * s + kw) - static_cast<std::ptrdiff_t>(p);
                            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(w)) continue;
                            xc[ih * w + iw] += src[kw];
                        }
                    }
                }
            }
        }
    }
}

Tensor dense_forward(const Layer& l, const Tensor& x, std::size_t batch) {
    const std::size_t in = l.weights.dim(1), out = l.weights.dim(0);
    Tensor y({batch, out});
    gemm(false, true, batch, out, in, 1.0, x.data.data(), in, l.weights.data.data(), in, 0.0,
         y.data.data(), out);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < out; ++o) y.data[b * out + o] += l.bias.data[o];
    return y;
}

Tensor conv_forward(const Layer& l, const Tensor& x, std::size_t batch) {
    const ConvDims d = conv_dims(l);
    const std::size_t rows = batch * d.oh * d.ow;
    const std::size_t row_len = d.in_ch * d.k * d.k;
    std::vector<double> col(rows * row_len);
    im2col(x.data.data(), batch, d, l, col.data());
    std::vector<double> ymat(rows * d.out_ch);
    gemm(false, true, rows, d.out_ch, row_len, 1.0, col.data(), row_len, l.weights.data.data(),
         row_len, 0.0, ymat.data(), d.out_ch);
    Tensor y({batch, d.out_ch, d.oh, d.ow});
    const std::size_t plane = d.oh * d.ow;
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t pidx = 0; pidx < plane; ++pidx) {
            const double* src = ymat.data() + (b * plane + pidx) * d.out_ch;
            for (std::size_t oc = 0; oc < d.out_ch; ++oc)
                y.data[(b * d.out_ch + oc) * plane + pidx] = src[oc] + l.bias.data[oc];
        }
    }
    return y;
}

}  // namespace

Tensor forward(const LayerStack& stack, const Tensor& input, ForwardTrace* trace) {
    if (input.rank() < 1 || input.dim(0) == 0) throw UsageError("forward: empty batch");
    const std::size_t batch = input.dim(0);
    if (per_sample_shape(input) != stack.input_shape &&
        shape_numel(per_sample_shape(input)) != shape_numel(stack.input_shape)) {
        throw ConfigError("network expects per-sample input " + shape_str(stack.input_shape) +
                          ", got " + shape_str(per_sample_shape(input)));
    }
    if (trace) {
        trace->batch = batch;
        trace->layer_inputs.clear();
        trace->layer_inputs.reserve(stack.layers.size());
    }
    Tensor cur = input;
    std::vector<std::size_t> sample_shape = stack.input_shape;
    for (std::size_t i = 0; i < stack.layers.size(); ++i) {
        const Layer& l = stack.layers[i];
        std::vector<std::size_t> out_shape;
        try {
            out_shape = l.output_shape(sample_shape);
        } catch (const ConfigError& e) {
            throw ConfigError("layer " + std::to_string(i) + " (" + layer_kind_name(l.kind) +
                              "): " + e.what());
        }
        Tensor next;
        switch (l.kind) {
            case LayerKind::dense: next = dense_forward(l, cur, batch); break;
            case LayerKind::conv2d: next = conv_forward(l, cur, batch); break;
            case LayerKind::relu: {
                next = cur;
                for (double& v : next.data) v = v > 0.0 ? v : 0.0;
                break;
            }
        }
        if (trace) trace->layer_inputs.push_back(std::move(cur));
        cur = std::move(next);
        sample_shape = std::move(out_shape);
    }
    return cur;
}

Tensor backward(const LayerStack& stack, const ForwardTrace& trace, const Tensor& output_grad,
                StackGrads& grads) {
    if (trace.layer_inputs.size() != stack.layers.size()) {
        throw UsageError("backward called without a matching forward trace");
    }
    const std::size_t batch = trace.batch;
    if (output_grad.dim(0) != batch) {
        throw UsageError("backward: output grad batch " + std::to_string(output_grad.dim(0)) +
                         " does not match trace batch " + std::to_string(batch));
    }
    if (grads.weight_grads.size() != stack.layers.size()) {
        throw UsageError("backward: gradient container does not match the stack");
    }
    Tensor dy = output_grad;
    for (std::size_t idx = stack.layers.size(); idx-- > 0;) {
        const Layer& l = stack.layers[idx];
        const Tensor& x = trace.layer_inputs[idx];
        switch (l.kind) {
            case LayerKind::dense: {
                const std::size_t in = l.weights.dim(1), out = l.weights.dim(0);
                // dW += dY^T X, db += column sums, dX = dY W
                gemm(true, false, out, in, batch, 1.0, dy.data.data(), out, x.data.data(), in, 1.0,
                     grads.weight_grads[idx].data.data(), in);
                for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t o = 0; o < out; ++o)
                        grads.bias_grads[idx].data[o] += dy.data[b * out + o];
                Tensor dx(x.shape);
                gemm(false, false, batch, in, out, 1.0, dy.data.data(), out,
                     l.weights.data.data(), in, 0.0, dx.data.data(), in);
                dy = std::move(dx);
                break;
            }
            case LayerKind::conv2d: {
                const ConvDims d = conv_dims(l);
                const std::size_t rows = batch * d.oh * d.ow;
                const std::size_t row_len = d.in_ch * d.k * d.k;
                const std::size_t plane = d.oh * d.ow;
                std::vector<double> dymat(rows * d.out_ch);
                for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t pidx = 0; pidx < plane; ++pidx)
                        for (std::size_t oc = 0; oc < d.out_ch; ++oc)
                            dymat[(b * plane + pidx) * d.out_ch + oc] =
                                dy.data[(b * d.out_ch + oc) * plane + pidx];
                std::vector<double> col(rows * row_len);
                im2col(x.data.data(), batch, d, l, col.data());
                gemm(true, false, d.out_ch, row_len, rows, 1.0, dymat.data(), d.out_ch, col.data(),
                     row_len, 1.0, grads.weight_grads[idx].data.data(), row_len);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t oc = 0; oc < d.out_ch; ++oc)
                        grads.bias_grads[idx].data[oc] += dymat[r * d.out_ch + oc];
                std::vector<double> dcol(rows * row_len);
                gemm(false, false, rows, row_len, d.out_ch, 1.0, dymat.data(), d.out_ch,
                     l.weights.data.data(), row_len, 0.0, dcol.data(), row_len);
                Tensor dx(x.shape);
                col2im_add(dcol.data(), batch, d, l, dx.data.data());
                dy = std::move(dx);
                break;
            }
            case LayerKind::relu: {
                Tensor dx = dy;
                for (std::size_t i = 0; i < x.size(); ++i)
                    if (x.data[i] <= 0.0) dx.data[i] = 0.0;
                dy = std::move(dx);
                break;
            }
        }
    }
    return dy;
}

GradCheckReport grad_check(LayerStack& stack, const Tensor& input, const OutputLoss& loss,
                           double tolerance, double step) {
    ForwardTrace trace;
    Tensor out = forward(stack, input, &trace);
    Tensor out_grad(out.shape);
    loss(out, &out_grad);
    StackGrads analytic = StackGrads::zeros_like(stack);
    backward(stack, trace, out_grad, analytic);

    GradCheckReport report;
    report.pass = true;
    auto eval = [&]() { return loss(forward(stack, input), nullptr); };
    for (std::size_t li = 0; li < stack.layers.size(); ++li) {
        Layer& l = stack.layers[li];
        if (l.kind == LayerKind::relu) continue;
        Tensor* tensors[2] = {&l.weights, &l.bias};
        const Tensor* grads[2] = {&analytic.weight_grads[li], &analytic.bias_grads[li]};
        for (int t = 0; t < 2; ++t) {
            for (std::size_t i = 0; i < tensors[t]->size(); ++i) {
                double& p = tensors[t]->data[i];
                const double saved = p;
                p = saved + step;
                const double up = eval();
                p = saved - step;
                const double down = eval();
                p = saved;
                const double numeric = (up - down) / (2.0 * step);
                const double a = grads[t]->data[i];
                const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
                const double rel = std::fabs(a - numeric) / denom;
                if (rel > report.max_rel_error) {
                    report.max_rel_error = rel;
                    report.worst_layer = li;
                    report.worst_param = i;
                    report.worst_analytic = a;
                    report.worst_numeric = numeric;
                }
            }
        }
    }
    report.pass = report.max_rel_error <= tolerance;
    return report;
}

}  // namespace mdphom
