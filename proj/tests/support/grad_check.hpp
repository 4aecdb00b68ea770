#pragma once

// Finite-difference gradient checking for graph ops. Include after doctest.h.

#include <functional>
#include <random>
#include <vector>

#include "qat/autodiff.hpp"
#include "support/test_util.hpp"

namespace testutil {

inline qat::Tensor random_leaf(std::mt19937_64& rng, std::vector<int> shape, double scale = 1.0) {
    std::uniform_real_distribution<double> pick(-scale, scale);
    std::vector<double> v(std::size_t(qat::detail::shape_size(shape)));
    for (double& e : v) e = pick(rng);
    return qat::Tensor::from(std::move(shape), std::move(v), true);
}

// Reduces the builder's output to a scalar through fixed random weights
// (non-uniform upstream signal), then compares backward() gradients of every
// leaf against central finite differences of the same loss.
inline void check_grads(const std::function<qat::Tensor(std::vector<qat::Tensor>&)>& build_out,
                        std::vector<qat::Tensor> leaves, double rtol = 1e-6, double h = 1e-6,
                        double atol = 1e-7) {
    using qat::Tensor;
    const Tensor first = build_out(leaves);
    std::mt19937_64 wrng(271828);
    std::uniform_real_distribution<double> pick(-1.0, 1.0);
    std::vector<double> w(std::size_t(first.size()));
    for (double& e : w) e = pick(wrng);
    const Tensor weights = Tensor::from(first.shape(), std::move(w));

    Tensor loss = sum_all(mul(first, weights));
    loss.backward();
    for (Tensor& leaf : leaves) {
        const std::vector<double> analytic = leaf.grad();
        auto f = [&](const std::vector<double>& x) {
            std::vector<double> saved = leaf.values();
            leaf.values() = x;
            const double out = sum_all(mul(build_out(leaves), weights)).item();
            leaf.values() = saved;
            return out;
        };
        const std::vector<double> fd = central_diff(f, leaf.values(), h);
        for (std::size_t i = 0; i < fd.size(); ++i)
            CHECK(close_rel(analytic[i], fd[i], rtol, atol));
    }
}

} // namespace testutil
