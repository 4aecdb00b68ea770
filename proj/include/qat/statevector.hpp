#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qat {

using Complex = std::complex<double>;

inline constexpr int kMaxQubits = 8;

/// Dense pure state over n qubits. Basis index i encodes |i> with qubit 0 as
/// the MOST significant bit, so for n=2 the order is |00>, |01>, |10>, |11>
/// with qubit 0 owning the left bit.
struct StateVector {
    int n_qubits = 0;
    std::vector<Complex> amplitudes;

    StateVector() = default;

    explicit StateVector(int n) : n_qubits(n) {
        if (n < 1 || n > kMaxQubits)
            throw std::invalid_argument("StateVector: qubit count must be in [1, " +
                                        std::to_string(kMaxQubits) + "], got " + std::to_string(n));
        amplitudes.assign(std::size_t(1) << n, Complex(0.0, 0.0));
        amplitudes[0] = Complex(1.0, 0.0);
    }

    std::size_t dim() const { return amplitudes.size(); }

    double norm_sq() const {
        double s = 0.0;
        for (const Complex& a : amplitudes) s += std::norm(a);
        return s;
    }

    // bit of basis index i belonging to qubit q (qubit 0 = MSB)
    int bit(std::size_t i, int q) const { return int((i >> (n_qubits - 1 - q)) & 1u); }

    std::size_t mask(int q) const { return std::size_t(1) << (n_qubits - 1 - q); }
};

enum class GateKind { H, RX, RY, RZ, CNOT, CZ };

inline bool is_rotation(GateKind k) {
    return k == GateKind::RX || k == GateKind::RY || k == GateKind::RZ;
}

inline const char* gate_name(GateKind k) {
    switch (k) {
        case GateKind::H: return "H";
        case GateKind::RX: return "RX";
        case GateKind::RY: return "RY";
        case GateKind::RZ: return "RZ";
        case GateKind::CNOT: return "CNOT";
        case GateKind::CZ: return "CZ";
    }
    return "?";
}

/// One gate in a circuit. Rotations resolve their angle from, in priority
/// order: a trainable parameter slot (angle = coeff * feature^exp * param),
/// a data feature (angle = coeff * feature^exp), or a fixed angle.
struct Gate {
    GateKind kind = GateKind::H;
    int wire0 = 0;
    int wire1 = -1;           // second wire for CNOT (target) / CZ
    double angle = 0.0;       // fixed angle, rotations without slot/feature
    int param_slot = -1;      // index into the trainable parameter vector
    int feature_index = -1;   // index into the per-call input feature vector
    int feature_exponent = 1; // power applied to the feature value
    double coeff = 1.0;

    static Gate h(int wire) { return Gate{GateKind::H, wire}; }

    static Gate rotation(GateKind kind, int wire, double fixed_angle) {
        Gate g{kind, wire};
        g.angle = fixed_angle;
        return g;
    }

    static Gate rotation_param(GateKind kind, int wire, int slot, int feature = -1,
                               double coeff = 1.0, int exponent = 1) {
        Gate g{kind, wire};
        g.param_slot = slot;
        g.feature_index = feature;
        g.feature_exponent = exponent;
        g.coeff = coeff;
        return g;
    }

    static Gate rotation_feature(GateKind kind, int wire, int feature, int exponent = 1,
                                 double coeff = 1.0) {
        Gate g{kind, wire};
        g.feature_index = feature;
        g.feature_exponent = exponent;
        g.coeff = coeff;
        return g;
    }

    static Gate cnot(int control, int target) { return Gate{GateKind::CNOT, control, target}; }
    static Gate cz(int a, int b) { return Gate{GateKind::CZ, a, b}; }

    bool has_angle_dependence() const { return param_slot >= 0 || feature_index >= 0; }

    double feature_factor(std::span<const double> features) const {
        if (feature_index < 0) return 1.0;
        if (std::size_t(feature_index) >= features.size())
            throw std::invalid_argument("Gate: feature index " + std::to_string(feature_index) +
                                        " out of range for " + std::to_string(features.size()) +
                                        " features");
        double f = features[feature_index];
        double r = 1.0;
        for (int e = 0; e < feature_exponent; ++e) r *= f;
        return r;
    }

    double resolve_angle(std::span<const double> params, std::span<const double> features) const {
        if (param_slot >= 0) {
            if (std::size_t(param_slot) >= params.size())
                throw std::invalid_argument("Gate: missing value for parameter slot " +
                                            std::to_string(param_slot));
            return coeff * feature_factor(features) * params[param_slot];
        }
        if (feature_index >= 0) return coeff * feature_factor(features);
        return angle;
    }
};

/// Ordered gate list; gates apply in list order starting from |0...0>.
struct Circuit {
    int n_qubits = 0;
    int n_params = 0;
    std::vector<Gate> gates;

    Circuit() = default;
    explicit Circuit(int n) : n_qubits(n) {
        if (n < 1 || n > kMaxQubits)
            throw std::invalid_argument("Circuit: qubit count must be in [1, " +
                                        std::to_string(kMaxQubits) + "]");
    }

    void add(const Gate& g) {
        validate_gate(g);
        gates.push_back(g);
        if (g.param_slot >= 0 && g.param_slot + 1 > n_params) n_params = g.param_slot + 1;
    }

private:
    void validate_gate(const Gate& g) const {
        auto check_wire = [this](int w) {
            if (w < 0 || w >= n_qubits)
                throw std::invalid_argument("Circuit: wire " + std::to_string(w) +
                                            " out of range for " + std::to_string(n_qubits) +
                                            " qubits");
        };
        check_wire(g.wire0);
        if (g.kind == GateKind::CNOT || g.kind == GateKind::CZ) {
            check_wire(g.wire1);
            if (g.wire0 == g.wire1)
                throw std::invalid_argument("Circuit: two-qubit gate wires must be distinct");
        } else if (g.wire1 >= 0) {
            throw std::invalid_argument("Circuit: single-qubit gate carries one wire");
        }
        if (!is_rotation(g.kind) && (g.param_slot >= 0 || g.feature_index >= 0))
            throw std::invalid_argument(std::string("Circuit: ") + gate_name(g.kind) +
                                        " cannot carry a parameter or feature");
    }
};

namespace detail {

inline void apply_single_qubit(StateVector& state, int wire, const Complex u00, const Complex u01,
                               const Complex u10, const Complex u11) {
    const std::size_t m = state.mask(wire);
    const std::size_t dim = state.dim();
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & m) == 0) {
            const Complex a = state.amplitudes[i];
            const Complex b = state.amplitudes[i | m];
            state.amplitudes[i] = u00 * a + u01 * b;
            state.amplitudes[i | m] = u10 * a + u11 * b;
        }
    }
}

} // namespace detail

/// Applies one gate in place. `params`/`features` supply angle inputs for
/// gates that reference them.
inline void apply_gate_inplace(StateVector& state, const Gate& gate,
                               std::span<const double> params = {},
                               std::span<const double> features = {}) {
    auto check_wire = [&state](int w) {
        if (w < 0 || w >= state.n_qubits)
            throw std::invalid_argument("apply_gate: wire " + std::to_string(w) + " out of range");
    };
    check_wire(gate.wire0);

    switch (gate.kind) {
        case GateKind::H: {
            const double s = 1.0 / std::sqrt(2.0);
            detail::apply_single_qubit(state, gate.wire0, s, s, s, -s);
            return;
        }
        case GateKind::RX: {
            const double t = gate.resolve_angle(params, features) / 2.0;
            const Complex c(std::cos(t), 0.0), ms(0.0, -std::sin(t));
            detail::apply_single_qubit(state, gate.wire0, c, ms, ms, c);
            return;
        }
        case GateKind::RY: {
            const double t = gate.resolve_angle(params, features) / 2.0;
            const double c = std::cos(t), s = std::sin(t);
            detail::apply_single_qubit(state, gate.wire0, c, -s, s, c);
            return;
        }
        case GateKind::RZ: {
            const double t = gate.resolve_angle(params, features) / 2.0;
            const Complex e0 = std::exp(Complex(0.0, -t)), e1 = std::exp(Complex(0.0, t));
            detail::apply_single_qubit(state, gate.wire0, e0, 0.0, 0.0, e1);
            return;
        }
        case GateKind::CNOT: {
            check_wire(gate.wire1);
            const std::size_t cm = state.mask(gate.wire0);
            const std::size_t tm = state.mask(gate.wire1);
            for (std::size_t i = 0; i < state.dim(); ++i)
                if ((i & cm) && !(i & tm)) std::swap(state.amplitudes[i], state.amplitudes[i | tm]);
            return;
        }
        case GateKind::CZ: {
            check_wire(gate.wire1);
            const std::size_t am = state.mask(gate.wire0);
            const std::size_t bm = state.mask(gate.wire1);
            for (std::size_t i = 0; i < state.dim(); ++i)
                if ((i & am) && (i & bm)) state.amplitudes[i] = -state.amplitudes[i];
            return;
        }
    }
}

inline StateVector apply_gate(const StateVector& state, const Gate& gate,
                              std::span<const double> params = {},
                              std::span<const double> features = {}) {
    StateVector out = state;
    apply_gate_inplace(out, gate, params, features);
    return out;
}

/// Runs the circuit from |0...0>. `params` length must equal n_params.
inline StateVector run_circuit(const Circuit& circuit, std::span<const double> params = {},
                               std::span<const double> features = {}) {
    if (std::ptrdiff_t(params.size()) != circuit.n_params)
        throw std::invalid_argument("run_circuit: expected " + std::to_string(circuit.n_params) +
                                    " parameters, got " + std::to_string(params.size()));
    StateVector state(circuit.n_qubits);
    for (const Gate& g : circuit.gates) apply_gate_inplace(state, g, params, features);
    return state;
}

/// (|0...0> + |1...1>)/sqrt(2), constructed directly from its amplitudes.
inline StateVector ghz_state(int n) {
    StateVector state(n);
    const double a = 1.0 / std::sqrt(2.0);
    state.amplitudes[0] = a;
    state.amplitudes[state.dim() - 1] = a;
    return state;
}

enum class PauliAxis { X, Z };

/// <psi| P_wire |psi> for P in {X, Z}; always in [-1, 1].
inline double expect_pauli(const StateVector& state, PauliAxis axis, int wire) {
    if (wire < 0 || wire >= state.n_qubits)
        throw std::invalid_argument("expect_pauli: wire " + std::to_string(wire) + " out of range");
    const std::size_t m = state.mask(wire);
    if (axis == PauliAxis::Z) {
        double acc = 0.0;
        for (std::size_t i = 0; i < state.dim(); ++i)
            acc += ((i & m) ? -1.0 : 1.0) * std::norm(state.amplitudes[i]);
        return acc;
    }
    Complex acc(0.0, 0.0);
    for (std::size_t i = 0; i < state.dim(); ++i)
        acc += std::conj(state.amplitudes[i]) * state.amplitudes[i ^ m];
    return acc.real();
}

/// Expectations on every wire from a single run.
inline std::vector<double> wire_expectations(const StateVector& state, PauliAxis axis) {
    std::vector<double> out(state.n_qubits);
    for (int w = 0; w < state.n_qubits; ++w) out[w] = expect_pauli(state, axis, w);
    return out;
}

namespace detail {

// Runs the circuit with gate `shift_gate`'s resolved angle offset by `delta`.
inline StateVector run_with_angle_shift(const Circuit& circuit, std::span<const double> params,
                                        std::span<const double> features, std::size_t shift_gate,
                                        double delta) {
    StateVector state(circuit.n_qubits);
    for (std::size_t g = 0; g < circuit.gates.size(); ++g) {
        const Gate& gate = circuit.gates[g];
        if (g == shift_gate) {
            Gate shifted = Gate::rotation(gate.kind, gate.wire0,
                                          gate.resolve_angle(params, features) + delta);
            apply_gate_inplace(state, shifted);
        } else {
            apply_gate_inplace(state, gate, params, features);
        }
    }
    return state;
}

} // namespace detail

/// d<P_w>/d(angle of gate g), per wire, via the parameter-shift rule:
/// (f(a + pi/2) - f(a - pi/2)) / 2, exact for RX/RY/RZ.
inline std::vector<double> angle_gradient(const Circuit& circuit, std::span<const double> params,
                                          std::span<const double> features, PauliAxis axis,
                                          std::size_t gate_index) {
    const Gate& gate = circuit.gates.at(gate_index);
    if (!is_rotation(gate.kind))
        throw std::invalid_argument("angle_gradient: parameter-shift applies to rotations only, "
                                    "gate is " + std::string(gate_name(gate.kind)));
    constexpr double half_pi = 1.57079632679489661923;
    const StateVector plus = detail::run_with_angle_shift(circuit, params, features, gate_index, half_pi);
    const StateVector minus = detail::run_with_angle_shift(circuit, params, features, gate_index, -half_pi);
    std::vector<double> out(circuit.n_qubits);
    for (int w = 0; w < circuit.n_qubits; ++w)
        out[w] = 0.5 * (expect_pauli(plus, axis, w) - expect_pauli(minus, axis, w));
    return out;
}

/// Gradient of <P_wire> with respect to every parameter slot. Contributions
/// from gates sharing a slot sum; the chain factor for slot k on gate g is
/// coeff_g * feature_g^exp (the multiplier in angle = multiplier * param).
inline std::vector<double> param_shift_grad(const Circuit& circuit, std::span<const double> params,
                                            std::span<const double> features, PauliAxis axis,
                                            int wire) {
    if (wire < 0 || wire >= circuit.n_qubits)
        throw std::invalid_argument("param_shift_grad: wire out of range");
    std::vector<double> grad(circuit.n_params, 0.0);
    for (std::size_t g = 0; g < circuit.gates.size(); ++g) {
        const Gate& gate = circuit.gates[g];
        if (gate.param_slot < 0) continue;
        if (!is_rotation(gate.kind))
            throw std::invalid_argument("param_shift_grad: parameter slot on non-rotation gate");
        const std::vector<double> dangle = angle_gradient(circuit, params, features, axis, g);
        grad[gate.param_slot] += gate.coeff * gate.feature_factor(features) * dangle[wire];
    }
    return grad;
}

/// Reverse-mode chain through a circuit evaluation: given dLoss/d<P_w> for
/// every wire, accumulates dLoss/dparams and dLoss/dfeatures. Feature factors
/// chain through angle = coeff * feature^exp * (param or 1).
inline void accumulate_circuit_grads(const Circuit& circuit, std::span<const double> params,
                                     std::span<const double> features, PauliAxis axis,
                                     std::span<const double> upstream, std::span<double> dparams,
                                     std::span<double> dfeatures) {
    if (std::ptrdiff_t(upstream.size()) != circuit.n_qubits)
        throw std::invalid_argument("accumulate_circuit_grads: upstream size mismatch");
    for (std::size_t g = 0; g < circuit.gates.size(); ++g) {
        const Gate& gate = circuit.gates[g];
        if (!gate.has_angle_dependence()) continue;
        const std::vector<double> dangle_per_wire = angle_gradient(circuit, params, features, axis, g);
        double dangle = 0.0;
        for (int w = 0; w < circuit.n_qubits; ++w) dangle += upstream[w] * dangle_per_wire[w];

        const double feat_factor = gate.feature_factor(features);
        if (gate.param_slot >= 0)
            dparams[gate.param_slot] += dangle * gate.coeff * feat_factor;
        if (gate.feature_index >= 0) {
            const double base = gate.param_slot >= 0 ? params[gate.param_slot] : 1.0;
            const double f = features[gate.feature_index];
            double dfeat_factor = double(gate.feature_exponent);
            for (int e = 0; e < gate.feature_exponent - 1; ++e) dfeat_factor *= f;
            dfeatures[gate.feature_index] += dangle * gate.coeff * base * dfeat_factor;
        }
    }
}

} // namespace qat
