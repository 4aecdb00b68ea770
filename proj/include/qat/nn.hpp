#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qat/autodiff.hpp"

namespace qat {

/// Named trainable arrays; map order fixes the optimizer traversal order.
using ParamMap = std::map<std::string, Tensor>;

inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b = {}) {
    Tensor y = matmul(x, w);
    return b.defined() ? add_rowvec(y, b) : y;
}

inline Tensor mean_pool(const Tensor& x) { return mean_rows(x); }

/// position-wise feedforward W2 ReLU(W1 x + b1) + b2, hidden width = W1 cols
inline Tensor ffn(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
                  const Tensor& b2) {
    return linear(relu(linear(x, w1, b1)), w2, b2);
}

/// scaled dot-product attention with output projection:
/// softmax(Q K^T / sqrt(d_k)) V W_O
inline Tensor classical_attention(const Tensor& x, const Tensor& w_q, const Tensor& w_k,
                                  const Tensor& w_v, const Tensor& w_o,
                                  Tensor* attn_out = nullptr) {
    const Tensor q = matmul(x, w_q);
    const Tensor k = matmul(x, w_k);
    const Tensor v = matmul(x, w_v);
    const int d_k = w_q.dim(1);
    const Tensor scores = scale(matmul_nt(q, k), 1.0 / std::sqrt(double(d_k)));
    const Tensor probs = softmax_rows(scores);
    if (attn_out) *attn_out = probs;
    return matmul(matmul(probs, v), w_o);
}

/// multi-head variant: heads are contiguous column blocks of the shared
/// projections; Concat(head_1..head_H) W_O
inline Tensor classical_multihead(const Tensor& x, int n_heads, const Tensor& w_q,
                                  const Tensor& w_k, const Tensor& w_v, const Tensor& w_o,
                                  Tensor* mean_attn_out = nullptr) {
    const int d = w_q.dim(1);
    if (n_heads < 1 || d % n_heads != 0)
        throw std::invalid_argument("classical_multihead: embed dim not divisible by head count");
    const int d_h = d / n_heads;
    const Tensor q = matmul(x, w_q);
    const Tensor k = matmul(x, w_k);
    const Tensor v = matmul(x, w_v);
    std::vector<Tensor> outputs, attns;
    for (int h = 0; h < n_heads; ++h) {
        const Tensor qh = slice_cols(q, h * d_h, d_h);
        const Tensor kh = slice_cols(k, h * d_h, d_h);
        const Tensor vh = slice_cols(v, h * d_h, d_h);
        const Tensor scores = scale(matmul_nt(qh, kh), 1.0 / std::sqrt(double(d_h)));
        const Tensor probs = softmax_rows(scores);
        attns.push_back(probs);
        outputs.push_back(matmul(probs, vh));
    }
    if (mean_attn_out) *mean_attn_out = scale(add_n(attns), 1.0 / n_heads);
    return matmul(concat_cols(outputs), w_o);
}

/// AdamW moments and hyperparameters; moment buffers are keyed like params.
struct OptimState {
    double lr = 3e-5;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step_count = 0;
    std::map<std::string, std::vector<double>> m;
    std::map<std::string, std::vector<double>> v;
};

/// One AdamW update over every named parameter. Weight decay is decoupled:
/// it scales the parameter directly and never enters the moment estimates.
inline void adamw_step(ParamMap& params, OptimState& state) {
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, double(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, double(state.step_count));
    for (auto& [name, param] : params) {
        std::vector<double>& p = param.values();
        const std::vector<double>& g = param.grad();
        std::vector<double>& m = state.m[name];
        std::vector<double>& v = state.v[name];
        if (m.empty()) m.assign(p.size(), 0.0);
        if (v.empty()) v.assign(p.size(), 0.0);
        if (m.size() != p.size() || v.size() != p.size() || g.size() != p.size())
            throw std::invalid_argument("adamw_step: state/grad shape mismatch for " + name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p[i] -= state.lr * state.weight_decay * p[i];
            p[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

inline void zero_grads(ParamMap& params) {
    for (auto& [name, param] : params) param.zero_grad();
}

inline std::int64_t count_params(const ParamMap& params) {
    std::int64_t n = 0;
    for (const auto& [name, param] : params) n += param.size();
    return n;
}

} // namespace qat
