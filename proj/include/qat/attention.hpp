#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qat/autodiff.hpp"
#include "qat/qkernel.hpp"
#include "qat/statevector.hpp"

namespace qat {

/// Circuit of the superposition layer for n qubits over inputs of length d:
/// Hadamard on every wire, then RY(theta_j * z_{j mod d}), then
/// RZ(phi_j * z_{j mod d}), then one CNOT chain. Slots [0, n) are theta,
/// [n, 2n) are phi; measured in the Pauli-X basis.
inline Circuit qsl_circuit_layout(int n_qubits, int input_len) {
    if (input_len < 1) throw std::invalid_argument("qsl_circuit_layout: empty input");
    const int n = n_qubits;
    Circuit circuit(n);
    for (int j = 0; j < n; ++j) circuit.add(Gate::h(j));
    for (int j = 0; j < n; ++j)
        circuit.add(Gate::rotation_param(GateKind::RY, j, j, j % input_len));
    for (int j = 0; j < n; ++j)
        circuit.add(Gate::rotation_param(GateKind::RZ, j, n + j, j % input_len));
    for (int j = 0; j + 1 < n; ++j) circuit.add(Gate::cnot(j, j + 1));
    circuit.n_params = 2 * n;
    return circuit;
}

/// Runs the circuit once per row of z and collects per-wire expectations into
/// an [L x n_qubits] tensor. Circuit parameters come from the concatenation of
/// pa and pb (slots [0,|pa|) then [|pa|, |pa|+|pb|)). The backward pass applies
/// the parameter-shift rule per gate and chains into z, pa and pb.
inline Tensor circuit_feature_rows(const Circuit& circuit, PauliAxis axis, const Tensor& z,
                                   const Tensor& pa, const Tensor& pb) {
    detail::require(z.rank() == 2, "circuit_feature_rows: rank-2 input expected");
    const int rows = z.dim(0), width = z.dim(1);
    const int n = circuit.n_qubits;
    const int na = int(pa.size()), nb = int(pb.size());
    if (na + nb != circuit.n_params)
        throw std::invalid_argument("circuit_feature_rows: parameter count mismatch");

    std::vector<double> params(pa.values());
    params.insert(params.end(), pb.values().begin(), pb.values().end());
    std::vector<double> inputs(z.values()); // frozen at forward time

    std::vector<double> out(std::size_t(rows) * n);
    for (int r = 0; r < rows; ++r) {
        const std::span<const double> feats(inputs.data() + std::size_t(r) * width, width);
        const StateVector state = run_circuit(circuit, params, feats);
        for (int w = 0; w < n; ++w) out[std::size_t(r) * n + w] = expect_pauli(state, axis, w);
    }
    return make_op({rows, n}, std::move(out), {z, pa, pb},
                   [circuit, axis, z, pa, pb, rows, width, n, na,
                    params = std::move(params), inputs = std::move(inputs)](detail::TensorNode& self) {
                       std::vector<double> dparams(params.size(), 0.0);
                       std::vector<double>& gz = z.grad();
                       for (int r = 0; r < rows; ++r) {
                           const std::span<const double> feats(inputs.data() + std::size_t(r) * width,
                                                               width);
                           const std::span<const double> upstream(self.grad.data() + std::size_t(r) * n,
                                                                  n);
                           const std::span<double> dfeats(gz.data() + std::size_t(r) * width, width);
                           accumulate_circuit_grads(circuit, params, feats, axis, upstream, dparams,
                                                    dfeats);
                       }
                       std::vector<double>& ga = pa.grad();
                       std::vector<double>& gb = pb.grad();
                       for (int i = 0; i < na; ++i) ga[i] += dparams[i];
                       for (std::size_t i = na; i < dparams.size(); ++i) gb[i - na] += dparams[i];
                   });
}

// ---------------------------------------------------------------------------
// Quantum Interference Attention

struct QIAParams {
    Tensor w_red;  // [d x n]
    Tensor theta0; // [n]
    Tensor theta1; // [n]
    Tensor phase;  // [1]
    int kernel_depth = 1;

    int n_qubits() const { return theta0.dim(0); }
};

struct QIAResult {
    Tensor y;    // [B x L x d] reweighted embeddings
    Tensor phi;  // [B x L x n] quantum features
    Tensor attn; // [B x L x L] row-stochastic attention
};

/// Per batch element: Z = X W_red, Phi = feature map of Z rows,
/// D = Phi Phi^T, I_ij = 2 nu_i nu_j cos(phase), A = softmax(D + I),
/// Y = A X.
inline QIAResult qia_forward(const Tensor& x, const QIAParams& p) {
    detail::require(x.rank() == 3, "qia_forward: rank-3 input expected");
    const int batch = x.dim(0);
    const Circuit circuit = kernel_circuit_layout(p.n_qubits(), p.w_red.dim(1), p.kernel_depth);
    const Tensor cos_phase = phase_cos(p.phase);

    std::vector<Tensor> ys, phis, attns;
    for (int b = 0; b < batch; ++b) {
        const Tensor xb = batch_slice(x, b);
        const Tensor zb = matmul(xb, p.w_red);
        const Tensor phib = circuit_feature_rows(circuit, PauliAxis::Z, zb, p.theta0, p.theta1);
        const Tensor dots = matmul_nt(phib, phib);
        const Tensor nu = row_norms(phib);
        const Tensor interference = scale_by(scale(outer(nu, nu), 2.0), cos_phase);
        const Tensor attn = softmax_rows(add(dots, interference));
        ys.push_back(matmul(attn, xb));
        phis.push_back(phib);
        attns.push_back(attn);
    }
    return QIAResult{batch_stack(ys), batch_stack(phis), batch_stack(attns)};
}

// ---------------------------------------------------------------------------
// Quantum Multi-Head Attention

struct QMHAHead {
    Tensor reduction; // [d_h x n_q]
    Tensor theta0;    // [n_q]
    Tensor theta1;    // [n_q]
    Tensor phase;     // [1], initialized pi/4 + h*pi/8
};

struct QMHAParams {
    Tensor w_q, w_k, w_v, w_o; // [d x d]
    std::vector<QMHAHead> heads;
    double interference_coeff = 0.0; // <= 0 selects the head count
    int kernel_depth = 1;

    int n_heads() const { return int(heads.size()); }
};

/// Head h: q~ = Q_h R_h, k~ = K_h R_h through the head's kernel circuit;
/// s_ij = <Phi(q~_i), Phi(k~_j)> + c ||Phi(q~_i)|| ||Phi(k~_j)|| cos(phase_h)
/// with c defaulting to the head count; alpha = softmax(s / sqrt(d_h));
/// O = Concat_h(alpha V_h) W_O.
inline Tensor qmha_forward(const Tensor& x, const QMHAParams& p, Tensor* mean_attn_out = nullptr) {
    detail::require(x.rank() == 2, "qmha_forward: rank-2 input expected");
    const int d = p.w_q.dim(1);
    const int n_heads = p.n_heads();
    if (n_heads < 1 || d % n_heads != 0)
        throw std::invalid_argument("qmha_forward: embed dim not divisible by head count");
    const int d_h = d / n_heads;
    const double coeff = p.interference_coeff > 0.0 ? p.interference_coeff : double(n_heads);

    const Tensor q = matmul(x, p.w_q);
    const Tensor k = matmul(x, p.w_k);
    const Tensor v = matmul(x, p.w_v);

    std::vector<Tensor> outputs, attns;
    for (int h = 0; h < n_heads; ++h) {
        const QMHAHead& head = p.heads[h];
        const int n_q = head.theta0.dim(0);
        const Circuit circuit = kernel_circuit_layout(n_q, head.reduction.dim(1), p.kernel_depth);

        const Tensor qh = matmul(slice_cols(q, h * d_h, d_h), head.reduction);
        const Tensor kh = matmul(slice_cols(k, h * d_h, d_h), head.reduction);
        const Tensor phi_q = circuit_feature_rows(circuit, PauliAxis::Z, qh, head.theta0, head.theta1);
        const Tensor phi_k = circuit_feature_rows(circuit, PauliAxis::Z, kh, head.theta0, head.theta1);

        const Tensor kernel_sim = matmul_nt(phi_q, phi_k);
        const Tensor interference =
            scale_by(scale(outer(row_norms(phi_q), row_norms(phi_k)), coeff), phase_cos(head.phase));
        const Tensor attn = softmax_rows(scale(add(kernel_sim, interference),
                                               1.0 / std::sqrt(double(d_h))));
        attns.push_back(attn);
        outputs.push_back(matmul(attn, slice_cols(v, h * d_h, d_h)));
    }
    if (mean_attn_out) *mean_attn_out = scale(add_n(attns), 1.0 / n_heads);
    return matmul(concat_cols(outputs), p.w_o);
}

// ---------------------------------------------------------------------------
// Quantum Superposition Layer

struct QSLParams {
    Tensor w_red2; // [d x n]
    Tensor theta;  // [n]
    Tensor phi;    // [n]
    Tensor w_exp2; // [n x d]

    int n_qubits() const { return theta.dim(0); }
};

/// Per batch element: Z = H W_red2, S = Pauli-X features of the superposition
/// circuit on Z rows, output = S W_exp2 + H (residual inside the layer).
inline Tensor qsl_forward(const Tensor& h, const QSLParams& p) {
    detail::require(h.rank() == 3, "qsl_forward: rank-3 input expected");
    const int batch = h.dim(0);
    const Circuit circuit = qsl_circuit_layout(p.n_qubits(), p.w_red2.dim(1));

    std::vector<Tensor> outs;
    for (int b = 0; b < batch; ++b) {
        const Tensor hb = batch_slice(h, b);
        const Tensor zb = matmul(hb, p.w_red2);
        const Tensor sb = circuit_feature_rows(circuit, PauliAxis::X, zb, p.theta, p.phi);
        outs.push_back(add(matmul(sb, p.w_exp2), hb));
    }
    return batch_stack(outs);
}

} // namespace qat
