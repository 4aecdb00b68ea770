#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qat/attention.hpp"
#include "qat/nn.hpp"
#include "qat/rng.hpp"

namespace qat {

enum class AttentionKind { QuantumSingle, QuantumMulti, ClassicalSingle, ClassicalMulti };

inline bool is_quantum(AttentionKind k) {
    return k == AttentionKind::QuantumSingle || k == AttentionKind::QuantumMulti;
}

inline bool is_multi_head(AttentionKind k) {
    return k == AttentionKind::QuantumMulti || k == AttentionKind::ClassicalMulti;
}

inline const char* to_string(AttentionKind k) {
    switch (k) {
        case AttentionKind::QuantumSingle: return "quantum_single";
        case AttentionKind::QuantumMulti: return "quantum_multi";
        case AttentionKind::ClassicalSingle: return "classical_single";
        case AttentionKind::ClassicalMulti: return "classical_multi";
    }
    return "?";
}

inline AttentionKind attention_kind_from_string(const std::string& s) {
    if (s == "quantum_single") return AttentionKind::QuantumSingle;
    if (s == "quantum_multi") return AttentionKind::QuantumMulti;
    if (s == "classical_single") return AttentionKind::ClassicalSingle;
    if (s == "classical_multi") return AttentionKind::ClassicalMulti;
    throw std::invalid_argument("unknown attention_kind: " + s);
}

struct ModelConfig {
    int vocab_size = 0; // 0 until the vocabulary is built
    int embed_dim = 64;
    int seq_len = 120;
    int n_qubits = 6;
    AttentionKind attention_kind = AttentionKind::QuantumSingle;
    int n_heads = 2;
    int n_classes = 2;
    double dropout_rate = 0.1;
    double interference_coeff = 0.0; // <= 0 selects the head count
    int kernel_depth = 1;
    double ln_eps = 1e-5;
    std::uint64_t seed = 42;

    // optimization schedule, carried here so checkpoints stay self-describing
    double lr = 3e-5;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int epochs = 15;
    int batch_size = 64;

    void validate() const {
        if (vocab_size < 2) throw std::invalid_argument("config: vocab_size must be >= 2");
        if (embed_dim < 1 || seq_len < 1 || n_classes < 2)
            throw std::invalid_argument("config: embed_dim, seq_len, n_classes out of range");
        if (n_qubits < 1 || n_qubits > kMaxQubits)
            throw std::invalid_argument("config: n_qubits out of range");
        if (is_multi_head(attention_kind) && (n_heads < 1 || embed_dim % n_heads != 0))
            throw std::invalid_argument("config: embed_dim must divide evenly across heads");
        if (dropout_rate < 0.0 || dropout_rate >= 1.0)
            throw std::invalid_argument("config: dropout_rate must be in [0, 1)");
    }

    int cls_hidden() const { return 2 * embed_dim; }
};

// ---------------------------------------------------------------------------
// parameter construction
//
// Every array is initialized from a stream keyed by (seed, "init", name), so
// two builds with the same seed get identical values for every parameter they
// share by name, regardless of construction order. That makes the quantum and
// classical models differ only in their attention/FFN blocks.

namespace detail {

constexpr double kQuarterPi = 0.78539816339744830962;
constexpr double kEighthPi = 0.39269908169872415481;
constexpr double kPiD = 3.14159265358979323846;

inline Tensor init_uniform(const rng::Key& root, const std::string& name, std::vector<int> shape,
                           double lo, double hi) {
    const rng::Key key = root.with("init").with(name);
    std::vector<double> v(std::size_t(shape_size(shape)));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = key.uniform(i, lo, hi);
    return Tensor::from(std::move(shape), std::move(v), true);
}

inline Tensor init_fanin(const rng::Key& root, const std::string& name, int fan_in, int fan_out) {
    const double bound = std::sqrt(1.0 / fan_in);
    return init_uniform(root, name, {fan_in, fan_out}, -bound, bound);
}

inline Tensor init_normal(const rng::Key& root, const std::string& name, std::vector<int> shape,
                          double stddev) {
    const rng::Key key = root.with("init").with(name);
    std::vector<double> v(std::size_t(shape_size(shape)));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = stddev * key.normal(i);
    return Tensor::from(std::move(shape), std::move(v), true);
}

inline Tensor init_const(std::vector<int> shape, double value) {
    return Tensor::from(shape, std::vector<double>(std::size_t(shape_size(shape)), value), true);
}

} // namespace detail

inline ParamMap init_params(const ModelConfig& c) {
    c.validate();
    const rng::Key root(c.seed);
    const int d = c.embed_dim, n = c.n_qubits, hidden = c.cls_hidden();
    ParamMap p;

    // shared scaffolding
    p["embed.table"] = detail::init_normal(root, "embed.table", {c.vocab_size, d}, 0.02);
    p["ln1.gamma"] = detail::init_const({d}, 1.0);
    p["ln1.beta"] = detail::init_const({d}, 0.0);
    p["ln2.gamma"] = detail::init_const({d}, 1.0);
    p["ln2.beta"] = detail::init_const({d}, 0.0);
    p["cls.w1"] = detail::init_fanin(root, "cls.w1", d, hidden);
    p["cls.b1"] = detail::init_const({hidden}, 0.0);
    p["cls.w2"] = detail::init_fanin(root, "cls.w2", hidden, c.n_classes);
    p["cls.b2"] = detail::init_const({c.n_classes}, 0.0);

    switch (c.attention_kind) {
        case AttentionKind::QuantumSingle:
            p["qia.w_red"] = detail::init_fanin(root, "qia.w_red", d, n);
            p["qia.theta0"] = detail::init_uniform(root, "qia.theta0", {n}, -detail::kPiD, detail::kPiD);
            p["qia.theta1"] = detail::init_uniform(root, "qia.theta1", {n}, -detail::kPiD, detail::kPiD);
            p["qia.phase"] = detail::init_const({1}, detail::kQuarterPi);
            break;
        case AttentionKind::QuantumMulti: {
            p["qmha.w_q"] = detail::init_fanin(root, "qmha.w_q", d, d);
            p["qmha.w_k"] = detail::init_fanin(root, "qmha.w_k", d, d);
            p["qmha.w_v"] = detail::init_fanin(root, "qmha.w_v", d, d);
            p["qmha.w_o"] = detail::init_fanin(root, "qmha.w_o", d, d);
            const int d_h = d / c.n_heads;
            for (int h = 0; h < c.n_heads; ++h) {
                const std::string base = "qmha.h" + std::to_string(h) + ".";
                p[base + "r"] = detail::init_fanin(root, base + "r", d_h, n);
                p[base + "theta0"] =
                    detail::init_uniform(root, base + "theta0", {n}, -detail::kPiD, detail::kPiD);
                p[base + "theta1"] =
                    detail::init_uniform(root, base + "theta1", {n}, -detail::kPiD, detail::kPiD);
                p[base + "phase"] =
                    detail::init_const({1}, detail::kQuarterPi + h * detail::kEighthPi);
            }
            break;
        }
        case AttentionKind::ClassicalSingle:
        case AttentionKind::ClassicalMulti:
            p["attn.w_q"] = detail::init_fanin(root, "attn.w_q", d, d);
            p["attn.w_k"] = detail::init_fanin(root, "attn.w_k", d, d);
            p["attn.w_v"] = detail::init_fanin(root, "attn.w_v", d, d);
            p["attn.w_o"] = detail::init_fanin(root, "attn.w_o", d, d);
            break;
    }

    if (is_quantum(c.attention_kind)) {
        p["qsl.w_red2"] = detail::init_fanin(root, "qsl.w_red2", d, n);
        p["qsl.theta"] = detail::init_uniform(root, "qsl.theta", {n}, -detail::kPiD, detail::kPiD);
        p["qsl.phi"] = detail::init_uniform(root, "qsl.phi", {n}, -detail::kPiD, detail::kPiD);
        p["qsl.w_exp2"] = detail::init_fanin(root, "qsl.w_exp2", n, d);
    } else {
        p["ffn.w1"] = detail::init_fanin(root, "ffn.w1", d, 2 * d);
        p["ffn.b1"] = detail::init_const({2 * d}, 0.0);
        p["ffn.w2"] = detail::init_fanin(root, "ffn.w2", 2 * d, d);
        p["ffn.b2"] = detail::init_const({d}, 0.0);
    }
    return p;
}

inline QIAParams qia_params_view(const ParamMap& p, const ModelConfig& c) {
    return QIAParams{p.at("qia.w_red"), p.at("qia.theta0"), p.at("qia.theta1"), p.at("qia.phase"),
                     c.kernel_depth};
}

inline QMHAParams qmha_params_view(const ParamMap& p, const ModelConfig& c) {
    QMHAParams q;
    q.w_q = p.at("qmha.w_q");
    q.w_k = p.at("qmha.w_k");
    q.w_v = p.at("qmha.w_v");
    q.w_o = p.at("qmha.w_o");
    q.interference_coeff = c.interference_coeff;
    q.kernel_depth = c.kernel_depth;
    for (int h = 0; h < c.n_heads; ++h) {
        const std::string base = "qmha.h" + std::to_string(h) + ".";
        q.heads.push_back(QMHAHead{p.at(base + "r"), p.at(base + "theta0"), p.at(base + "theta1"),
                                   p.at(base + "phase")});
    }
    return q;
}

inline QSLParams qsl_params_view(const ParamMap& p) {
    return QSLParams{p.at("qsl.w_red2"), p.at("qsl.theta"), p.at("qsl.phi"), p.at("qsl.w_exp2")};
}

// ---------------------------------------------------------------------------
// forward passes

/// Attention map, quantum features and pooled embeddings of the evaluated
/// pass, exported as-is (never re-run).
struct Diagnostics {
    Tensor attn;   // [B x L x L]
    Tensor phi;    // [B x L x n], quantum_single only
    Tensor pooled; // [B x d]
};

/// Identifies the dropout streams of one forward pass; masks are a pure
/// function of (seed, epoch, batch, layer, example, element).
struct ForwardContext {
    bool training = false;
    std::uint64_t epoch = 0;
    std::uint64_t batch = 0;
};

namespace detail {

inline std::function<double(std::uint64_t)> dropout_stream(const ModelConfig& c,
                                                           const ForwardContext& ctx, int layer,
                                                           int example) {
    const rng::Key key = rng::Key(c.seed)
                             .with("dropout")
                             .with(ctx.epoch)
                             .with(ctx.batch)
                             .with(std::uint64_t(layer))
                             .with(std::uint64_t(example));
    return [key](std::uint64_t i) { return key.uniform(i); };
}

inline Tensor encoder_forward(const std::vector<std::vector<int>>& ids, const ParamMap& p,
                              const ModelConfig& c, const ForwardContext& ctx, Diagnostics* diag) {
    c.validate();
    const int batch = int(ids.size());
    if (batch < 1) throw std::invalid_argument("forward: empty batch");
    for (const auto& row : ids)
        if (int(row.size()) != c.seq_len)
            throw std::invalid_argument("forward: sequence length != config seq_len");

    const Tensor& table = p.at("embed.table");
    std::vector<Tensor> embedded;
    for (int b = 0; b < batch; ++b) embedded.push_back(embedding(ids[b], table));
    const Tensor x = batch_stack(embedded);

    // attention block
    Tensor attn_out;               // [B x L x d]
    std::vector<Tensor> attn_maps; // per example [L x L]
    Tensor phi;
    switch (c.attention_kind) {
        case AttentionKind::QuantumSingle: {
            const QIAResult r = qia_forward(x, qia_params_view(p, c));
            attn_out = r.y;
            phi = r.phi;
            if (diag) diag->attn = r.attn;
            break;
        }
        case AttentionKind::QuantumMulti: {
            const QMHAParams q = qmha_params_view(p, c);
            std::vector<Tensor> outs;
            for (int b = 0; b < batch; ++b) {
                Tensor head_mean;
                outs.push_back(qmha_forward(batch_slice(x, b), q, diag ? &head_mean : nullptr));
                if (diag) attn_maps.push_back(head_mean);
            }
            attn_out = batch_stack(outs);
            break;
        }
        case AttentionKind::ClassicalSingle: {
            std::vector<Tensor> outs;
            for (int b = 0; b < batch; ++b) {
                Tensor map;
                outs.push_back(classical_attention(batch_slice(x, b), p.at("attn.w_q"),
                                                   p.at("attn.w_k"), p.at("attn.w_v"),
                                                   p.at("attn.w_o"), diag ? &map : nullptr));
                if (diag) attn_maps.push_back(map);
            }
            attn_out = batch_stack(outs);
            break;
        }
        case AttentionKind::ClassicalMulti: {
            std::vector<Tensor> outs;
            for (int b = 0; b < batch; ++b) {
                Tensor map;
                outs.push_back(classical_multihead(batch_slice(x, b), c.n_heads, p.at("attn.w_q"),
                                                   p.at("attn.w_k"), p.at("attn.w_v"),
                                                   p.at("attn.w_o"), diag ? &map : nullptr));
                if (diag) attn_maps.push_back(map);
            }
            attn_out = batch_stack(outs);
            break;
        }
    }
    if (diag && !attn_maps.empty()) diag->attn = batch_stack(attn_maps);
    if (diag) diag->phi = phi;

    // first residual + norm
    std::vector<Tensor> h1_slices;
    for (int b = 0; b < batch; ++b) {
        const Tensor dropped = dropout(batch_slice(attn_out, b), c.dropout_rate, ctx.training,
                                       dropout_stream(c, ctx, 0, b));
        h1_slices.push_back(layer_norm(add(batch_slice(x, b), dropped), p.at("ln1.gamma"),
                                       p.at("ln1.beta"), c.ln_eps));
    }

    // second block: superposition layer or position-wise FFN
    std::vector<Tensor> block2;
    if (is_quantum(c.attention_kind)) {
        const Tensor s_out = qsl_forward(batch_stack(h1_slices), qsl_params_view(p));
        for (int b = 0; b < batch; ++b) block2.push_back(batch_slice(s_out, b));
    } else {
        for (int b = 0; b < batch; ++b)
            block2.push_back(
                ffn(h1_slices[b], p.at("ffn.w1"), p.at("ffn.b1"), p.at("ffn.w2"), p.at("ffn.b2")));
    }

    // second residual + norm, pooling, classifier
    std::vector<Tensor> logits_rows, pooled_rows;
    for (int b = 0; b < batch; ++b) {
        const Tensor dropped =
            dropout(block2[b], c.dropout_rate, ctx.training, dropout_stream(c, ctx, 1, b));
        const Tensor h2 = layer_norm(add(h1_slices[b], dropped), p.at("ln2.gamma"),
                                     p.at("ln2.beta"), c.ln_eps);
        const Tensor pooled = mean_pool(h2);
        pooled_rows.push_back(pooled);
        const Tensor z = dropout(relu(linear(pooled, p.at("cls.w1"), p.at("cls.b1"))),
                                 c.dropout_rate, ctx.training, dropout_stream(c, ctx, 2, b));
        logits_rows.push_back(linear(z, p.at("cls.w2"), p.at("cls.b2")));
    }
    if (diag) diag->pooled = row_stack(pooled_rows);
    return row_stack(logits_rows);
}

} // namespace detail

/// Full QAT encoder (quantum attention kinds).
inline Tensor qat_forward(const std::vector<std::vector<int>>& ids, const ParamMap& p,
                          const ModelConfig& c, const ForwardContext& ctx,
                          Diagnostics* diag = nullptr) {
    if (!is_quantum(c.attention_kind))
        throw std::invalid_argument("qat_forward: config selects a classical attention kind");
    return detail::encoder_forward(ids, p, c, ctx, diag);
}

/// Size-matched classical encoder; identical scaffolding, classical blocks.
inline Tensor classical_forward(const std::vector<std::vector<int>>& ids, const ParamMap& p,
                                const ModelConfig& c, const ForwardContext& ctx,
                                Diagnostics* diag = nullptr) {
    if (is_quantum(c.attention_kind))
        throw std::invalid_argument("classical_forward: config selects a quantum attention kind");
    return detail::encoder_forward(ids, p, c, ctx, diag);
}

/// Dispatch on the configured attention kind.
inline Tensor model_forward(const std::vector<std::vector<int>>& ids, const ParamMap& p,
                            const ModelConfig& c, const ForwardContext& ctx,
                            Diagnostics* diag = nullptr) {
    return detail::encoder_forward(ids, p, c, ctx, diag);
}

} // namespace qat
