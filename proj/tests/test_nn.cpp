#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "qat/nn.hpp"
#include "support/grad_check.hpp"
#include "support/test_util.hpp"

using namespace qat;
using testutil::check_grads;
using testutil::random_leaf;

namespace {

Tensor identity_matrix(int n) {
    std::vector<double> v(std::size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[std::size_t(i) * n + i] = 1.0;
    return Tensor::from({n, n}, std::move(v));
}

} // namespace

TEST_CASE("ffn") {
    SUBCASE("zero weights leave only the output bias") {
        Tensor x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
        Tensor w1 = Tensor::zeros({3, 6});
        Tensor b1 = Tensor::zeros({6});
        Tensor w2 = Tensor::zeros({6, 3});
        Tensor b2 = Tensor::from({3}, {0.3, -0.7, 1.1});
        const Tensor y = ffn(x, w1, b1, w2, b2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 3; ++j) CHECK(y.at(i, j) == doctest::Approx(b2.at(j)));
    }
    SUBCASE("all-negative pre-activations collapse to the output bias") {
        Tensor x = Tensor::from({1, 2}, {1.0, 1.0});
        Tensor w1 = Tensor::from({2, 4}, std::vector<double>(8, -1.0));
        Tensor b1 = Tensor::from({4}, std::vector<double>(4, -0.5));
        std::mt19937_64 rng(2);
        Tensor w2 = random_leaf(rng, {4, 2});
        Tensor b2 = Tensor::from({2}, {2.0, -3.0});
        const Tensor y = ffn(x, w1, b1, w2, b2);
        CHECK(y.at(0, 0) == doctest::Approx(2.0));
        CHECK(y.at(0, 1) == doctest::Approx(-3.0));
    }
    SUBCASE("position-wise independence: batch equals per-row application") {
        std::mt19937_64 rng(3);
        Tensor x = random_leaf(rng, {4, 3});
        Tensor w1 = random_leaf(rng, {3, 6});
        Tensor b1 = random_leaf(rng, {6});
        Tensor w2 = random_leaf(rng, {6, 3});
        Tensor b2 = random_leaf(rng, {3});
        const Tensor whole = ffn(x, w1, b1, w2, b2);
        for (int i = 0; i < 4; ++i) {
            std::vector<double> row(x.values().begin() + i * 3, x.values().begin() + (i + 1) * 3);
            const Tensor yrow = ffn(Tensor::from({1, 3}, row), w1, b1, w2, b2);
            for (int j = 0; j < 3; ++j) CHECK(whole.at(i, j) == doctest::Approx(yrow.at(0, j)).epsilon(1e-14));
        }
    }
    SUBCASE("seeded instance matches a loop-level oracle") {
        std::mt19937_64 rng(5);
        Tensor x = random_leaf(rng, {3, 2});
        Tensor w1 = random_leaf(rng, {2, 4});
        Tensor b1 = random_leaf(rng, {4});
        Tensor w2 = random_leaf(rng, {4, 2});
        Tensor b2 = random_leaf(rng, {2});
        const Tensor y = ffn(x, w1, b1, w2, b2);
        for (int i = 0; i < 3; ++i) {
            std::vector<double> hidden(4, 0.0);
            for (int j = 0; j < 4; ++j) {
                double s = b1.at(j);
                for (int k = 0; k < 2; ++k) s += x.at(i, k) * w1.at(k, j);
                hidden[j] = s > 0.0 ? s : 0.0;
            }
            for (int j = 0; j < 2; ++j) {
                double s = b2.at(j);
                for (int k = 0; k < 4; ++k) s += hidden[k] * w2.at(k, j);
                CHECK(y.at(i, j) == doctest::Approx(s).epsilon(1e-12));
            }
        }
    }
    SUBCASE("gradients") {
        std::mt19937_64 rng(7);
        check_grads(
            [](std::vector<Tensor>& v) { return ffn(v[0], v[1], v[2], v[3], v[4]); },
            {random_leaf(rng, {2, 3}), random_leaf(rng, {3, 6}), random_leaf(rng, {6}),
             random_leaf(rng, {6, 3}), random_leaf(rng, {3})},
            1e-5);
    }
}

TEST_CASE("classical_attention") {
    SUBCASE("L=1 output is X Wv Wo") {
        std::mt19937_64 rng(11);
        Tensor x = random_leaf(rng, {1, 3});
        Tensor wq = random_leaf(rng, {3, 3});
        Tensor wk = random_leaf(rng, {3, 3});
        Tensor wv = random_leaf(rng, {3, 3});
        Tensor wo = random_leaf(rng, {3, 3});
        Tensor attn;
        const Tensor y = classical_attention(x, wq, wk, wv, wo, &attn);
        CHECK(attn.at(0, 0) == doctest::Approx(1.0));
        const Tensor expected = matmul(matmul(x, wv), wo);
        for (int j = 0; j < 3; ++j) CHECK(y.at(0, j) == doctest::Approx(expected.at(0, j)).epsilon(1e-14));
    }
    SUBCASE("all-zero input: uniform attention, zero output") {
        std::mt19937_64 rng(13);
        Tensor x = Tensor::zeros({4, 3});
        Tensor wq = random_leaf(rng, {3, 3});
        Tensor wk = random_leaf(rng, {3, 3});
        Tensor wv = random_leaf(rng, {3, 3});
        Tensor wo = random_leaf(rng, {3, 3});
        Tensor attn;
        const Tensor y = classical_attention(x, wq, wk, wv, wo, &attn);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) CHECK(attn.at(i, j) == doctest::Approx(0.25));
        for (double v : y.values()) CHECK(v == 0.0);
    }
    SUBCASE("seeded 3x4 instance matches a loop-level oracle") {
        std::mt19937_64 rng(17);
        Tensor x = random_leaf(rng, {3, 4});
        Tensor wq = random_leaf(rng, {4, 4});
        Tensor wk = random_leaf(rng, {4, 4});
        Tensor wv = random_leaf(rng, {4, 4});
        Tensor wo = random_leaf(rng, {4, 4});
        Tensor attn;
        const Tensor y = classical_attention(x, wq, wk, wv, wo, &attn);

        auto project = [&](const Tensor& w, int i, int j) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k) s += x.at(i, k) * w.at(k, j);
            return s;
        };
        double probs[3][3];
        for (int i = 0; i < 3; ++i) {
            double scores[3];
            double mx = -1e300;
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 4; ++k) s += project(wq, i, k) * project(wk, j, k);
                scores[j] = s / 2.0; // sqrt(d_k) = 2
                mx = std::max(mx, scores[j]);
            }
            double denom = 0.0;
            for (int j = 0; j < 3; ++j) {
                probs[i][j] = std::exp(scores[j] - mx);
                denom += probs[i][j];
            }
            for (int j = 0; j < 3; ++j) probs[i][j] /= denom;
        }
        for (int i = 0; i < 3; ++i) {
            double row_sum = 0.0;
            for (int j = 0; j < 3; ++j) {
                CHECK(attn.at(i, j) == doctest::Approx(probs[i][j]).epsilon(1e-12));
                row_sum += attn.at(i, j);
            }
            CHECK(row_sum == doctest::Approx(1.0).epsilon(1e-12));
            for (int j = 0; j < 4; ++j) {
                double out = 0.0;
                for (int k = 0; k < 4; ++k) {
                    double pvk = 0.0;
                    for (int t = 0; t < 3; ++t) pvk += probs[i][t] * project(wv, t, k);
                    out += pvk * wo.at(k, j);
                }
                CHECK(y.at(i, j) == doctest::Approx(out).epsilon(1e-12));
            }
        }
    }
    SUBCASE("gradients") {
        std::mt19937_64 rng(19);
        check_grads(
            [](std::vector<Tensor>& v) { return classical_attention(v[0], v[1], v[2], v[3], v[4]); },
            {random_leaf(rng, {3, 4}), random_leaf(rng, {4, 4}), random_leaf(rng, {4, 4}),
             random_leaf(rng, {4, 4}), random_leaf(rng, {4, 4})},
            1e-5);
    }
}

TEST_CASE("classical_multihead") {
    std::mt19937_64 rng(23);
    SUBCASE("H=1 with identity W_O equals single-head attention without projection") {
        Tensor x = random_leaf(rng, {3, 4});
        Tensor wq = random_leaf(rng, {4, 4});
        Tensor wk = random_leaf(rng, {4, 4});
        Tensor wv = random_leaf(rng, {4, 4});
        const Tensor eye = identity_matrix(4);
        const Tensor multi = classical_multihead(x, 1, wq, wk, wv, eye);
        const Tensor single = classical_attention(x, wq, wk, wv, eye);
        for (std::size_t i = 0; i < multi.values().size(); ++i)
            CHECK(multi.values()[i] == doctest::Approx(single.values()[i]).epsilon(1e-14));
    }
    SUBCASE("permuting head blocks and un-permuting W_O rows leaves output unchanged") {
        const int d = 4, dh = 2;
        Tensor x = random_leaf(rng, {3, d});
        Tensor wq = random_leaf(rng, {d, d});
        Tensor wk = random_leaf(rng, {d, d});
        Tensor wv = random_leaf(rng, {d, d});
        Tensor wo = random_leaf(rng, {d, d});

        auto swap_col_blocks = [&](const Tensor& w) {
            std::vector<double> v = w.values();
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < dh; ++j)
                    std::swap(v[std::size_t(i) * d + j], v[std::size_t(i) * d + dh + j]);
            return Tensor::from({d, d}, std::move(v));
        };
        auto swap_row_blocks = [&](const Tensor& w) {
            std::vector<double> v = w.values();
            for (int j = 0; j < d; ++j)
                for (int i = 0; i < dh; ++i)
                    std::swap(v[std::size_t(i) * d + j], v[std::size_t(i + dh) * d + j]);
            return Tensor::from({d, d}, std::move(v));
        };
        const Tensor base = classical_multihead(x, 2, wq, wk, wv, wo);
        const Tensor permuted = classical_multihead(x, 2, swap_col_blocks(wq), swap_col_blocks(wk),
                                                    swap_col_blocks(wv), swap_row_blocks(wo));
        for (std::size_t i = 0; i < base.values().size(); ++i)
            CHECK(base.values()[i] == doctest::Approx(permuted.values()[i]).epsilon(1e-12));
    }
    SUBCASE("seeded H=2 instance matches a loop-level oracle") {
        const int d = 4, dh = 2;
        Tensor x = random_leaf(rng, {2, d});
        Tensor wq = random_leaf(rng, {d, d});
        Tensor wk = random_leaf(rng, {d, d});
        Tensor wv = random_leaf(rng, {d, d});
        Tensor wo = random_leaf(rng, {d, d});
        const Tensor y = classical_multihead(x, 2, wq, wk, wv, wo);

        const Tensor q = matmul(x, wq), k = matmul(x, wk), v = matmul(x, wv);
        std::vector<double> concat(2 * std::size_t(d), 0.0);
        for (int h = 0; h < 2; ++h) {
            for (int i = 0; i < 2; ++i) {
                double scores[2];
                for (int j = 0; j < 2; ++j) {
                    double s = 0.0;
                    for (int c = 0; c < dh; ++c) s += q.at(i, h * dh + c) * k.at(j, h * dh + c);
                    scores[j] = s / std::sqrt(double(dh));
                }
                const double mx = std::max(scores[0], scores[1]);
                const double e0 = std::exp(scores[0] - mx), e1 = std::exp(scores[1] - mx);
                const double p0 = e0 / (e0 + e1), p1 = e1 / (e0 + e1);
                for (int c = 0; c < dh; ++c)
                    concat[std::size_t(i) * d + h * dh + c] =
                        p0 * v.at(0, h * dh + c) + p1 * v.at(1, h * dh + c);
            }
        }
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < d; ++j) {
                double s = 0.0;
                for (int c = 0; c < d; ++c) s += concat[std::size_t(i) * d + c] * wo.at(c, j);
                CHECK(y.at(i, j) == doctest::Approx(s).epsilon(1e-12));
            }
    }
    SUBCASE("divisibility enforced") {
        Tensor x = Tensor::zeros({2, 4});
        Tensor w = Tensor::zeros({4, 4});
        CHECK_THROWS_AS(classical_multihead(x, 3, w, w, w, w), std::invalid_argument);
    }
}

TEST_CASE("adamw_step") {
    SUBCASE("zero gradient and zero weight decay leave parameters unchanged") {
        ParamMap params{{"w", Tensor::from({2}, {1.5, -2.5}, true)}};
        params["w"].grad(); // zero-filled
        OptimState st;
        st.weight_decay = 0.0;
        adamw_step(params, st);
        CHECK(params["w"].values()[0] == 1.5);
        CHECK(params["w"].values()[1] == -2.5);
        CHECK(st.step_count == 1);
    }
    SUBCASE("first step with unit gradient moves by ~ -lr") {
        ParamMap params{{"w", Tensor::from({1}, {0.0}, true)}};
        params["w"].grad()[0] = 1.0;
        OptimState st;
        st.lr = 0.01;
        st.weight_decay = 0.0;
        adamw_step(params, st);
        CHECK(params["w"].values()[0] == doctest::Approx(-st.lr * 1.0 / (1.0 + st.eps)).epsilon(1e-12));
    }
    SUBCASE("5-step scalar trajectory matches the hand recurrence") {
        ParamMap params{{"w", Tensor::from({1}, {0.8}, true)}};
        OptimState st;
        st.lr = 0.05;
        st.weight_decay = 0.02;
        const double grads[5] = {1.0, -0.5, 0.25, 2.0, -1.0};

        // independent scalar recurrence
        double p = 0.8, m = 0.0, v = 0.0;
        for (int t = 1; t <= 5; ++t) {
            const double g = grads[t - 1];
            m = st.beta1 * m + (1 - st.beta1) * g;
            v = st.beta2 * v + (1 - st.beta2) * g * g;
            const double mh = m / (1 - std::pow(st.beta1, t));
            const double vh = v / (1 - std::pow(st.beta2, t));
            p -= st.lr * st.weight_decay * p;
            p -= st.lr * mh / (std::sqrt(vh) + st.eps);
        }
        for (int t = 0; t < 5; ++t) {
            params["w"].zero_grad();
            params["w"].grad()[0] = grads[t];
            adamw_step(params, st);
        }
        CHECK(params["w"].values()[0] == doctest::Approx(p).epsilon(1e-15));
    }
    SUBCASE("decay is decoupled: zero gradient shrinks the parameter geometrically") {
        ParamMap params{{"w", Tensor::from({1}, {1.0}, true)}};
        params["w"].grad();
        OptimState st;
        st.lr = 0.1;
        st.weight_decay = 0.5;
        for (int t = 0; t < 3; ++t) adamw_step(params, st);
        CHECK(params["w"].values()[0] == doctest::Approx(std::pow(1.0 - 0.05, 3)).epsilon(1e-12));
        CHECK(st.m["w"][0] == 0.0);
        CHECK(st.v["w"][0] == 0.0);
    }
    SUBCASE("shape mismatch rejected") {
        ParamMap params{{"w", Tensor::from({2}, {1.0, 2.0}, true)}};
        params["w"].grad();
        OptimState st;
        st.m["w"] = {0.0};
        st.v["w"] = {0.0};
        CHECK_THROWS_AS(adamw_step(params, st), std::invalid_argument);
    }
}

TEST_CASE("count_params sums element counts") {
    ParamMap params{{"a", Tensor::zeros({3, 4})}, {"b", Tensor::zeros({5})}};
    CHECK(count_params(params) == 17);
}
