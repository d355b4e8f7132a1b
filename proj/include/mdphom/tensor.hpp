#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mdphom {

class Rng;

/// Dense row-major tensor of doubles. Shapes are lists of positive dims and
/// the data length always equals their product.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape_in);
    Tensor(std::vector<std::size_t> shape_in, std::vector<double> data_in);

    static Tensor zeros(std::vector<std::size_t> shape_in) { return Tensor(std::move(shape_in)); }
    static Tensor full(std::vector<std::size_t> shape_in, double value);
    static Tensor uniform(std::vector<std::size_t> shape_in, double lo, double hi, Rng& rng);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape[i]; }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
    void fill(double value);

    bool operator==(const Tensor& other) const {
        return shape == other.shape && data == other.data;
    }
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_str(const std::vector<std::size_t>& shape);

}  // namespace mdphom
