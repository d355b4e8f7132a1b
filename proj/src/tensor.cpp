#include "mdphom/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "mdphom/errors.hpp"
#include "mdphom/rng.hpp"

namespace mdphom {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    s += ")";
    return s;
}

Tensor::Tensor(std::vector<std::size_t> shape_in)
    : shape(std::move(shape_in)), data(shape_numel(shape), 0.0) {
    for (std::size_t d : shape) {
        if (d == 0) throw UsageError("tensor dims must be positive, got " + shape_str(shape));
    }
}

Tensor::Tensor(std::vector<std::size_t> shape_in, std::vector<double> data_in)
    : shape(std::move(shape_in)), data(std::move(data_in)) {
    if (shape_numel(shape) != data.size()) {
        throw UsageError("tensor shape " + shape_str(shape) + " does not match data length " +
                         std::to_string(data.size()));
    }
}

Tensor Tensor::full(std::vector<std::size_t> shape_in, double value) {
    Tensor t(std::move(shape_in));
    t.fill(value);
    return t;
}

Tensor Tensor::uniform(std::vector<std::size_t> shape_in, double lo, double hi, Rng& rng) {
    Tensor t(std::move(shape_in));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

bool Tensor::all_finite() const {
    return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double value) {
    std::fill(data.begin(), data.end(), value);
}

}  // namespace mdphom
