#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qat/statevector.hpp"

namespace qat {

/// Trainable angles of the kernel feature map: theta0 drives the RX data
/// encoding, theta1 the RY entangling layer. 2n scalars total.
struct KernelParams {
    std::vector<double> theta0;
    std::vector<double> theta1;
    int n_qubits = 6;

    KernelParams() = default;
    KernelParams(std::vector<double> t0, std::vector<double> t1)
        : theta0(std::move(t0)), theta1(std::move(t1)), n_qubits(int(theta0.size())) {
        if (theta0.size() != theta1.size())
            throw std::invalid_argument("KernelParams: theta0 and theta1 must have equal length");
    }

    static KernelParams ones(int n) {
        return KernelParams(std::vector<double>(n, 1.0), std::vector<double>(n, 1.0));
    }

    // circuit parameter vector: slots [0, n) = theta0, [n, 2n) = theta1
    std::vector<double> flat() const {
        std::vector<double> p(theta0);
        p.insert(p.end(), theta1.begin(), theta1.end());
        return p;
    }
};

struct FeatureVector {
    std::vector<double> values; // each component a Pauli-Z expectation in [-1, 1]
};

namespace detail {

inline void check_finite(std::span<const double> x, const char* what) {
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

} // namespace detail

/// Kernel circuit structure for n qubits over inputs of length d, data values
/// mod-indexed when d != n. Parameter slots [0, n) are theta0, [n, 2n) theta1.
/// Order per qubit i: RX(theta0_i * x_{i mod d}), RZ(x_{i mod d}^2); then for
/// each ansatz repetition: CNOT chain 0->1..n-2->n-1, RY(theta1_i * x_{i mod d})
/// on each wire, and a second identical CNOT chain.
inline Circuit kernel_circuit_layout(int n_qubits, int input_len, int depth = 1) {
    if (input_len < 1) throw std::invalid_argument("kernel_circuit_layout: empty input");
    if (depth < 1) throw std::invalid_argument("kernel_circuit_layout: depth must be >= 1");
    const int n = n_qubits;
    const int d = input_len;
    Circuit circuit(n);
    for (int i = 0; i < n; ++i) {
        circuit.add(Gate::rotation_param(GateKind::RX, i, i, i % d));
        circuit.add(Gate::rotation_feature(GateKind::RZ, i, i % d, 2));
    }
    for (int rep = 0; rep < depth; ++rep) {
        for (int i = 0; i + 1 < n; ++i) circuit.add(Gate::cnot(i, i + 1));
        for (int i = 0; i < n; ++i)
            circuit.add(Gate::rotation_param(GateKind::RY, i, n + i, i % d));
        for (int i = 0; i + 1 < n; ++i) circuit.add(Gate::cnot(i, i + 1));
    }
    circuit.n_params = 2 * n;
    return circuit;
}

inline Circuit build_kernel_circuit(std::span<const double> x, const KernelParams& kp,
                                    int depth = 1) {
    detail::check_finite(x, "build_kernel_circuit");
    if (int(kp.theta0.size()) != kp.n_qubits || int(kp.theta1.size()) != kp.n_qubits)
        throw std::invalid_argument("build_kernel_circuit: parameter length != n_qubits");
    return kernel_circuit_layout(kp.n_qubits, int(x.size()), depth);
}

/// phi_i(x) = <psi(x)| Z_i |psi(x)> on every wire.
inline FeatureVector feature_map(std::span<const double> x, const KernelParams& kp,
                                 int depth = 1) {
    const Circuit circuit = build_kernel_circuit(x, kp, depth);
    const StateVector state = run_circuit(circuit, kp.flat(), x);
    return FeatureVector{wire_expectations(state, PauliAxis::Z)};
}

/// K(x, y) = phi(x) . phi(y)
inline double kernel(std::span<const double> x, std::span<const double> y, const KernelParams& kp,
                     int depth = 1) {
    const FeatureVector fx = feature_map(x, kp, depth);
    const FeatureVector fy = feature_map(y, kp, depth);
    double k = 0.0;
    for (std::size_t i = 0; i < fx.values.size(); ++i) k += fx.values[i] * fy.values[i];
    return k;
}

/// G[i][j] = K(xs[i], xs[j]); symmetric and positive semidefinite.
inline std::vector<std::vector<double>> gram_matrix(const std::vector<std::vector<double>>& xs,
                                                    const KernelParams& kp, int depth = 1) {
    if (xs.empty()) throw std::invalid_argument("gram_matrix: empty input list");
    const std::size_t m = xs.size();
    std::vector<FeatureVector> feats(m);
    for (std::size_t i = 0; i < m; ++i) feats[i] = feature_map(xs[i], kp, depth);
    std::vector<std::vector<double>> g(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j) {
            double k = 0.0;
            for (std::size_t w = 0; w < feats[i].values.size(); ++w)
                k += feats[i].values[w] * feats[j].values[w];
            g[i][j] = k;
            g[j][i] = k;
        }
    return g;
}

} // namespace qat
