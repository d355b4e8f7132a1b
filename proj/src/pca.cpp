#include "mdphom/pca.hpp"

#include <cmath>

#include "mdphom/errors.hpp"
#include "mdphom/gemm.hpp"
#include "mdphom/rng.hpp"

namespace mdphom {

namespace {

// largest eigenpair of the symmetric matrix `cov` (d x d)
std::pair<double, std::vector<double>> power_iteration(const std::vector<double>& cov,
                                                       std::size_t d, double tolerance,
                                                       std::size_t max_iters, Rng& rng) {
    std::vector<double> v(d);
    double norm = 0.0;
    for (double& x : v) {
        x = rng.uniform(-1.0, 1.0);
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;

    std::vector<double> next(d);
    double eigenvalue = 0.0;
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        gemv(d, d, 1.0, cov.data(), d, v.data(), 0.0, next.data());
        double next_norm = 0.0;
        for (double x : next) next_norm += x * x;
        next_norm = std::sqrt(next_norm);
        if (next_norm < 1e-300) {
            // null matrix: any unit vector is fine, eigenvalue 0
            return {0.0, v};
        }
        double diff = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            next[i] /= next_norm;
            diff = std::max(diff, std::fabs(std::fabs(next[i]) - std::fabs(v[i])));
        }
        v = next;
        eigenvalue = next_norm;
        if (diff < tolerance) break;
    }
    return {eigenvalue, v};
}

}  // namespace

Pca2 pca_top2(const Tensor& points, double tolerance, std::size_t max_iters, std::uint64_t seed) {
    const std::size_t n = points.dim(0);
    const std::size_t d = points.dim(1);
    if (n < 2) throw UsageError("pca_top2: need at least 2 points");

    Pca2 pca;
    pca.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) pca.mean[j] += points.data[i * d + j];
    for (double& m : pca.mean) m /= static_cast<double>(n);

    Tensor centered({n, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            centered.data[i * d + j] = points.data[i * d + j] - pca.mean[j];

    std::vector<double> cov(d * d, 0.0);
    gemm(true, false, d, d, n, 1.0 / static_cast<double>(n - 1), centered.data.data(), d,
         centered.data.data(), d, 0.0, cov.data(), d);

    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    auto [lambda1, v1] = power_iteration(cov, d, tolerance, max_iters, rng);
    // deflate and repeat
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) cov[i * d + j] -= lambda1 * v1[i] * v1[j];
    auto [lambda2, v2] = power_iteration(cov, d, tolerance, max_iters, rng);

    pca.components[0] = std::move(v1);
    pca.components[1] = std::move(v2);
    pca.eigenvalues = {lambda1, lambda2};
    return pca;
}

Tensor pca_project(const Pca2& pca, const Tensor& points) {
    const std::size_t n = points.dim(0);
    const std::size_t d = points.dim(1);
    if (pca.mean.size() != d) throw UsageError("pca_project: dimension mismatch");
    Tensor out({n, 2});
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 2; ++c) {
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j)
                dot += (points.data[i * d + j] - pca.mean[j]) * pca.components[c][j];
            out.data[i * 2 + c] = dot;
        }
    }
    return out;
}

}  // namespace mdphom
