#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "qat/model.hpp"
#include "support/test_util.hpp"

using namespace qat;

namespace {

ModelConfig tiny_config(AttentionKind kind) {
    ModelConfig c;
    c.vocab_size = 12;
    c.embed_dim = 4;
    c.seq_len = 3;
    c.n_qubits = 2;
    c.attention_kind = kind;
    c.n_heads = 2;
    c.n_classes = 2;
    c.dropout_rate = 0.1;
    c.seed = 7;
    return c;
}

std::vector<double> layer_norm_row(const std::vector<double>& x, const std::vector<double>& gamma,
                                   const std::vector<double>& beta, double eps) {
    const int n = int(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= n;
    std::vector<double> y(n);
    for (int j = 0; j < n; ++j) y[j] = gamma[j] * (x[j] - mean) / std::sqrt(var + eps) + beta[j];
    return y;
}

} // namespace

TEST_CASE("config validation") {
    ModelConfig c = tiny_config(AttentionKind::QuantumMulti);
    c.n_heads = 3; // 4 % 3 != 0
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = tiny_config(AttentionKind::QuantumSingle);
    c.vocab_size = 0;
    CHECK_THROWS_AS(init_params(c), std::invalid_argument);
    CHECK(attention_kind_from_string("classical_multi") == AttentionKind::ClassicalMulti);
    CHECK_THROWS_AS(attention_kind_from_string("bogus"), std::invalid_argument);
}

TEST_CASE("parameter construction") {
    SUBCASE("scaffolding parity: shared names and identical values across kinds") {
        const ModelConfig cq = tiny_config(AttentionKind::QuantumSingle);
        const ModelConfig cc = tiny_config(AttentionKind::ClassicalMulti);
        const ParamMap pq = init_params(cq);
        const ParamMap pc = init_params(cc);
        for (const char* name : {"embed.table", "ln1.gamma", "ln1.beta", "ln2.gamma", "ln2.beta",
                                 "cls.w1", "cls.b1", "cls.w2", "cls.b2"}) {
            REQUIRE(pq.count(name) == 1);
            REQUIRE(pc.count(name) == 1);
            CHECK(pq.at(name).values() == pc.at(name).values());
        }
        // the difference is exactly the attention/FFN block
        std::vector<std::string> only_q, only_c;
        for (const auto& [k, v] : pq)
            if (!pc.count(k)) only_q.push_back(k);
        for (const auto& [k, v] : pc)
            if (!pq.count(k)) only_c.push_back(k);
        for (const std::string& k : only_q)
            CHECK((k.rfind("qia.", 0) == 0 || k.rfind("qsl.", 0) == 0));
        for (const std::string& k : only_c)
            CHECK((k.rfind("attn.", 0) == 0 || k.rfind("ffn.", 0) == 0));
    }
    SUBCASE("multi-head phase schedule pi/4 + h*pi/8") {
        const ModelConfig c = tiny_config(AttentionKind::QuantumMulti);
        const ParamMap p = init_params(c);
        constexpr double quarter = 0.78539816339744830962;
        constexpr double eighth = 0.39269908169872415481;
        CHECK(p.at("qmha.h0.phase").item() == doctest::Approx(quarter));
        CHECK(p.at("qmha.h1.phase").item() == doctest::Approx(quarter + eighth));
    }
    SUBCASE("single-head phase initialized to pi/4") {
        const ParamMap p = init_params(tiny_config(AttentionKind::QuantumSingle));
        CHECK(p.at("qia.phase").item() == doctest::Approx(0.78539816339744830962));
    }
    SUBCASE("quantum attention block sizes: d*n + 2n + 1") {
        ModelConfig c = tiny_config(AttentionKind::QuantumSingle);
        c.embed_dim = 64;
        c.n_qubits = 6;
        const ParamMap p = init_params(c);
        const std::int64_t qia_total = p.at("qia.w_red").size() + p.at("qia.theta0").size() +
                                       p.at("qia.theta1").size() + p.at("qia.phase").size();
        CHECK(qia_total == 64 * 6 + 12 + 1); // 397
        CHECK(p.at("qia.theta0").size() + p.at("qia.theta1").size() == 12); // 2n kernel scalars
    }
    SUBCASE("quantum_single has fewer parameters than classical_multi at matched config") {
        ModelConfig cq = tiny_config(AttentionKind::QuantumSingle);
        ModelConfig cc = tiny_config(AttentionKind::ClassicalMulti);
        for (ModelConfig* c : {&cq, &cc}) {
            c->vocab_size = 500;
            c->embed_dim = 64;
            c->n_qubits = 6;
            c->seq_len = 16;
            c->n_classes = 4;
        }
        const std::int64_t nq = count_params(init_params(cq));
        const std::int64_t nc = count_params(init_params(cc));
        CHECK(nq < nc);
    }
}

TEST_CASE("qat_forward") {
    SUBCASE("B=1, L=1 matches a straight-line scalar re-implementation") {
        ModelConfig c = tiny_config(AttentionKind::QuantumSingle);
        c.seq_len = 1;
        const ParamMap p = init_params(c);
        const std::vector<std::vector<int>> ids{{5}};
        Diagnostics diag;
        const Tensor logits = qat_forward(ids, p, c, ForwardContext{false}, &diag);
        CHECK(diag.attn.values()[0] == 1.0);

        const int d = c.embed_dim, n = c.n_qubits;
        std::vector<double> e(d);
        for (int j = 0; j < d; ++j) e[j] = p.at("embed.table").at(5, j);
        std::vector<double> h1_in(d);
        for (int j = 0; j < d; ++j) h1_in[j] = e[j] + e[j]; // Y = A X = E at L=1
        const std::vector<double> h1 =
            layer_norm_row(h1_in, p.at("ln1.gamma").values(), p.at("ln1.beta").values(), c.ln_eps);

        std::vector<double> z(n, 0.0);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < d; ++k) z[j] += h1[k] * p.at("qsl.w_red2").at(k, j);
        StateVector state(n);
        for (int j = 0; j < n; ++j) apply_gate_inplace(state, Gate::h(j));
        for (int j = 0; j < n; ++j)
            apply_gate_inplace(state, Gate::rotation(GateKind::RY, j, p.at("qsl.theta").at(j) * z[j]));
        for (int j = 0; j < n; ++j)
            apply_gate_inplace(state, Gate::rotation(GateKind::RZ, j, p.at("qsl.phi").at(j) * z[j]));
        for (int j = 0; j + 1 < n; ++j) apply_gate_inplace(state, Gate::cnot(j, j + 1));

        std::vector<double> h2_in(d);
        for (int k = 0; k < d; ++k) {
            double s_out = h1[k];
            for (int w = 0; w < n; ++w)
                s_out += expect_pauli(state, PauliAxis::X, w) * p.at("qsl.w_exp2").at(w, k);
            h2_in[k] = h1[k] + s_out;
        }
        const std::vector<double> h2 =
            layer_norm_row(h2_in, p.at("ln2.gamma").values(), p.at("ln2.beta").values(), c.ln_eps);

        std::vector<double> hid(c.cls_hidden(), 0.0);
        for (int j = 0; j < c.cls_hidden(); ++j) {
            double s = p.at("cls.b1").at(j);
            for (int k = 0; k < d; ++k) s += h2[k] * p.at("cls.w1").at(k, j);
            hid[j] = s > 0.0 ? s : 0.0;
        }
        for (int j = 0; j < c.n_classes; ++j) {
            double s = p.at("cls.b2").at(j);
            for (int k = 0; k < c.cls_hidden(); ++k) s += hid[k] * p.at("cls.w2").at(k, j);
            CHECK(logits.at(0, j) == doctest::Approx(s).epsilon(1e-10));
        }
    }
    SUBCASE("inference is deterministic: two passes give bit-identical logits") {
        const ModelConfig c = tiny_config(AttentionKind::QuantumSingle);
        const ParamMap p = init_params(c);
        const std::vector<std::vector<int>> ids{{1, 4, 9}, {2, 2, 0}};
        const Tensor a = model_forward(ids, p, c, ForwardContext{false});
        const Tensor b = model_forward(ids, p, c, ForwardContext{false});
        CHECK(a.values() == b.values());
    }
    SUBCASE("training dropout is reproducible given the same context") {
        const ModelConfig c = tiny_config(AttentionKind::ClassicalSingle);
        const ParamMap p = init_params(c);
        const std::vector<std::vector<int>> ids{{1, 4, 9}};
        const ForwardContext ctx{true, 3, 11};
        const Tensor a = model_forward(ids, p, c, ctx);
        const Tensor b = model_forward(ids, p, c, ctx);
        CHECK(a.values() == b.values());
        const Tensor other = model_forward(ids, p, c, ForwardContext{true, 3, 12});
        CHECK(a.values() != other.values());
    }
    SUBCASE("id out of range rejected") {
        const ModelConfig c = tiny_config(AttentionKind::QuantumSingle);
        const ParamMap p = init_params(c);
        const std::vector<std::vector<int>> ids{{1, 2, 99}};
        CHECK_THROWS_AS(model_forward(ids, p, c, ForwardContext{false}), std::invalid_argument);
    }
    SUBCASE("kind dispatch guards") {
        const ModelConfig cq = tiny_config(AttentionKind::QuantumSingle);
        const ModelConfig cc = tiny_config(AttentionKind::ClassicalSingle);
        const std::vector<std::vector<int>> ids{{1, 2, 3}};
        CHECK_THROWS_AS(qat_forward(ids, init_params(cc), cc, ForwardContext{false}),
                        std::invalid_argument);
        CHECK_THROWS_AS(classical_forward(ids, init_params(cq), cq, ForwardContext{false}),
                        std::invalid_argument);
    }
}

TEST_CASE("classical_forward B=1, L=1 straight line") {
    ModelConfig c = tiny_config(AttentionKind::ClassicalSingle);
    c.seq_len = 1;
    const ParamMap p = init_params(c);
    const std::vector<std::vector<int>> ids{{3}};
    Diagnostics diag;
    const Tensor logits = classical_forward(ids, p, c, ForwardContext{false}, &diag);
    CHECK(diag.attn.values()[0] == 1.0);

    const int d = c.embed_dim;
    std::vector<double> e(d);
    for (int j = 0; j < d; ++j) e[j] = p.at("embed.table").at(3, j);
    // attention out = E Wv Wo at L=1
    std::vector<double> ev(d, 0.0), attn_out(d, 0.0);
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) ev[j] += e[k] * p.at("attn.w_v").at(k, j);
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) attn_out[j] += ev[k] * p.at("attn.w_o").at(k, j);
    std::vector<double> h1_in(d);
    for (int j = 0; j < d; ++j) h1_in[j] = e[j] + attn_out[j];
    const std::vector<double> h1 =
        layer_norm_row(h1_in, p.at("ln1.gamma").values(), p.at("ln1.beta").values(), c.ln_eps);

    std::vector<double> mid(2 * d, 0.0);
    for (int j = 0; j < 2 * d; ++j) {
        double s = p.at("ffn.b1").at(j);
        for (int k = 0; k < d; ++k) s += h1[k] * p.at("ffn.w1").at(k, j);
        mid[j] = s > 0.0 ? s : 0.0;
    }
    std::vector<double> h2_in(d);
    for (int j = 0; j < d; ++j) {
        double s = p.at("ffn.b2").at(j);
        for (int k = 0; k < 2 * d; ++k) s += mid[k] * p.at("ffn.w2").at(k, j);
        h2_in[j] = h1[j] + s;
    }
    const std::vector<double> h2 =
        layer_norm_row(h2_in, p.at("ln2.gamma").values(), p.at("ln2.beta").values(), c.ln_eps);

    std::vector<double> hid(c.cls_hidden(), 0.0);
    for (int j = 0; j < c.cls_hidden(); ++j) {
        double s = p.at("cls.b1").at(j);
        for (int k = 0; k < d; ++k) s += h2[k] * p.at("cls.w1").at(k, j);
        hid[j] = s > 0.0 ? s : 0.0;
    }
    for (int j = 0; j < c.n_classes; ++j) {
        double s = p.at("cls.b2").at(j);
        for (int k = 0; k < c.cls_hidden(); ++k) s += hid[k] * p.at("cls.w2").at(k, j);
        CHECK(logits.at(0, j) == doctest::Approx(s).epsilon(1e-10));
    }
}

TEST_CASE("gradient spot checks against finite differences on a tiny model") {
    for (AttentionKind kind : {AttentionKind::QuantumSingle, AttentionKind::ClassicalMulti}) {
        ModelConfig c = tiny_config(kind);
        c.dropout_rate = 0.0;
        ParamMap p = init_params(c);
        const std::vector<std::vector<int>> ids{{1, 5, 2}, {7, 0, 3}};
        const std::vector<int> labels{0, 1};
        const ForwardContext ctx{false};

        Tensor loss = cross_entropy(model_forward(ids, p, c, ctx), labels);
        loss.backward();

        auto loss_at = [&]() {
            return cross_entropy(model_forward(ids, p, c, ctx), labels).item();
        };
        std::vector<std::string> probe = {"embed.table", "cls.w2", "ln1.gamma"};
        if (kind == AttentionKind::QuantumSingle) {
            probe.push_back("qia.theta0");
            probe.push_back("qia.phase");
            probe.push_back("qsl.phi");
        } else {
            probe.push_back("attn.w_q");
            probe.push_back("ffn.w1");
        }
        std::mt19937_64 rng(91);
        for (const std::string& name : probe) {
            Tensor t = p.at(name);
            const std::size_t count = t.values().size();
            for (int probe_i = 0; probe_i < 3; ++probe_i) {
                const std::size_t i = rng() % count;
                const double h = 1e-5;
                const double saved = t.values()[i];
                t.values()[i] = saved + h;
                const double fp = loss_at();
                t.values()[i] = saved - h;
                const double fm = loss_at();
                t.values()[i] = saved;
                const double fd = (fp - fm) / (2 * h);
                CHECK(testutil::close_rel(t.grad()[i], fd, 1e-4, 1e-7));
            }
        }
    }
}
