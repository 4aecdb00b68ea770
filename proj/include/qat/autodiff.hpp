#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace qat {

namespace detail {
struct TensorNode;
}

/// Value-semantic handle to a node in a reverse-mode gradient graph. Values
/// are doubles in row-major order; `grad` has the same shape once backward
/// has run (or once the optimizer touches a leaf).
class Tensor {
public:
    Tensor() = default;

    static Tensor from(std::vector<int> shape, std::vector<double> values, bool requires_grad = false);
    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const;
    int rank() const { return int(shape().size()); }
    int dim(int i) const { return shape().at(i); }
    std::int64_t size() const;

    // The handle is value-semantic over a shared node: mutation through a
    // const handle is allowed, mirroring how the graph ops capture tensors.
    std::vector<double>& values() const;
    /// Gradient buffer, allocated (zero-filled) on first access.
    std::vector<double>& grad() const;
    bool has_grad() const;
    void zero_grad() const;
    bool requires_grad() const;

    double item() const; // single-element fetch
    double at(int i) const;
    double at(int i, int j) const;

    /// Reverse-mode sweep from this scalar: seeds d(this)/d(this) = 1 and
    /// accumulates into every node of the graph, leaves included.
    void backward() const;

    detail::TensorNode* node() const { return node_.get(); }

private:
    explicit Tensor(std::shared_ptr<detail::TensorNode> n) : node_(std::move(n)) {}
    std::shared_ptr<detail::TensorNode> node_;

    friend Tensor make_op(std::vector<int> shape, std::vector<double> values,
                          std::vector<Tensor> parents,
                          std::function<void(detail::TensorNode&)> backprop);
};

namespace detail {

struct TensorNode {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<Tensor> parents;
    std::function<void(TensorNode&)> backprop; // pulls this->grad into parents

    std::int64_t size() const { return std::int64_t(values.size()); }
    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    }
};

inline std::int64_t shape_size(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension");
        n *= d;
    }
    return n;
}

} // namespace detail

inline Tensor make_op(std::vector<int> shape, std::vector<double> values,
                      std::vector<Tensor> parents,
                      std::function<void(detail::TensorNode&)> backprop) {
    auto node = std::make_shared<detail::TensorNode>();
    if (detail::shape_size(shape) != std::int64_t(values.size()))
        throw std::invalid_argument("Tensor: shape/value size mismatch");
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->parents = std::move(parents);
    node->backprop = std::move(backprop);
    return Tensor(std::move(node));
}

inline Tensor Tensor::from(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    Tensor t = make_op(std::move(shape), std::move(values), {}, nullptr);
    t.node_->requires_grad = requires_grad;
    return t;
}

inline Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    const std::int64_t n = detail::shape_size(shape);
    return from(std::move(shape), std::vector<double>(std::size_t(n), 0.0), requires_grad);
}

inline Tensor Tensor::scalar(double v, bool requires_grad) {
    return from({1}, {v}, requires_grad);
}

inline const std::vector<int>& Tensor::shape() const {
    if (!node_) throw std::logic_error("Tensor: undefined");
    return node_->shape;
}

inline std::int64_t Tensor::size() const { return node_ ? node_->size() : 0; }

inline std::vector<double>& Tensor::values() const {
    if (!node_) throw std::logic_error("Tensor: undefined");
    return node_->values;
}

inline std::vector<double>& Tensor::grad() const {
    if (!node_) throw std::logic_error("Tensor: undefined");
    node_->ensure_grad();
    return node_->grad;
}

inline bool Tensor::has_grad() const { return node_ && node_->grad.size() == node_->values.size(); }

inline void Tensor::zero_grad() const {
    if (node_) node_->grad.assign(node_->values.size(), 0.0);
}

inline bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

inline double Tensor::item() const {
    if (size() != 1) throw std::logic_error("Tensor::item: not a single-element tensor");
    return values()[0];
}

inline double Tensor::at(int i) const { return values().at(std::size_t(i)); }

inline double Tensor::at(int i, int j) const {
    if (rank() != 2) throw std::logic_error("Tensor::at(i,j): rank-2 only");
    return values()[std::size_t(i) * dim(1) + j];
}

inline void Tensor::backward() const {
    if (!node_) throw std::logic_error("Tensor::backward: undefined");
    if (size() != 1) throw std::logic_error("Tensor::backward: scalar losses only");

    // topological order, children before parents
    std::vector<detail::TensorNode*> order;
    std::unordered_set<detail::TensorNode*> seen;
    std::vector<std::pair<detail::TensorNode*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            detail::TensorNode* p = n->parents[next++].node();
            if (p && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    for (detail::TensorNode* n : order) n->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backprop) (*it)->backprop(**it);
}

// ---------------------------------------------------------------------------
// primitive ops

namespace detail {

inline void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

} // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "add");
    std::vector<double> out(a.values());
    const auto& bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    return make_op(a.shape(), std::move(out), {a, b}, [a, b](detail::TensorNode& self) {
        auto& ga = a.grad();
        auto& gb = b.grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            ga[i] += self.grad[i];
            gb[i] += self.grad[i];
        }
    });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "sub");
    std::vector<double> out(a.values());
    const auto& bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    return make_op(a.shape(), std::move(out), {a, b}, [a, b](detail::TensorNode& self) {
        auto& ga = a.grad();
        auto& gb = b.grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            ga[i] += self.grad[i];
            gb[i] -= self.grad[i];
        }
    });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "mul");
    std::vector<double> out(a.values());
    const auto& bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    return make_op(a.shape(), std::move(out), {a, b}, [a, b](detail::TensorNode& self) {
        auto& ga = a.grad();
        auto& gb = b.grad();
        const auto& av = a.values();
        const auto& bvv = b.values();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            ga[i] += self.grad[i] * bvv[i];
            gb[i] += self.grad[i] * av[i];
        }
    });
}

inline Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.values());
    for (double& v : out) v *= c;
    return make_op(a.shape(), std::move(out), {a}, [a, c](detail::TensorNode& self) {
        auto& ga = a.grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += c * self.grad[i];
    });
}

/// elementwise a * s with s a single-element tensor
inline Tensor scale_by(const Tensor& a, const Tensor& s) {
    detail::require(s.size() == 1, "scale_by: scalar tensor expected");
    const double sv = s.values()[0];
    std::vector<double> out(a.values());
    for (double& v : out) v *= sv;
    return make_op(a.shape(), std::move(out), {a, s}, [a, s](detail::TensorNode& self) {
        auto& ga = a.grad();
        auto& gs = s.grad();
        const double svv = s.values()[0];
        const auto& av = a.values();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            ga[i] += svv * self.grad[i];
            gs[0] += av[i] * self.grad[i];
        }
    });
}

inline Tensor add_n(const std::vector<Tensor>& xs) {
    detail::require(!xs.empty(), "add_n: empty list");
    std::vector<double> out(xs[0].values());
    for (std::size_t k = 1; k < xs.size(); ++k) {
        detail::require_same_shape(xs[0], xs[k], "add_n");
        const auto& v = xs[k].values();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
    }
    return make_op(xs[0].shape(), std::move(out), xs, [xs](detail::TensorNode& self) {
        for (const Tensor& t : xs) {
            auto& g = t.grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
        }
    });
}

/// [m x k] . [k x n] -> [m x n]
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    detail::require(a.rank() == 2 && b.rank() == 2, "matmul: rank-2 tensors expected");
    detail::require(a.dim(1) == b.dim(0), "matmul: inner dimensions differ");
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<double> out(std::size_t(m) * n, 0.0);
    const auto& av = a.values();
    const auto& bv = b.values();
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            const double aip = av[std::size_t(i) * k + p];
            for (int j = 0; j < n; ++j) out[std::size_t(i) * n + j] += aip * bv[std::size_t(p) * n + j];
        }
    return make_op({m, n}, std::move(out), {a, b},
                   [a, b, m, k, n](detail::TensorNode& self) {
                       auto& ga = a.grad();
                       auto& gb = b.grad();
                       const auto& av = a.values();
                       const auto& bv = b.values();
                       for (int i = 0; i < m; ++i)
                           for (int j = 0; j < n; ++j) {
                               const double g = self.grad[std::size_t(i) * n + j];
                               if (g == 0.0) continue;
                               for (int p = 0; p < k; ++p) {
                                   ga[std::size_t(i) * k + p] += g * bv[std::size_t(p) * n + j];
                                   gb[std::size_t(p) * n + j] += g * av[std::size_t(i) * k + p];
                               }
                           }
                   });
}

/// [m x k] . [n x k]^T -> [m x n]
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    detail::require(a.rank() == 2 && b.rank() == 2, "matmul_nt: rank-2 tensors expected");
    detail::require(a.dim(1) == b.dim(1), "matmul_nt: inner dimensions differ");
    const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
    std::vector<double> out(std::size_t(m) * n, 0.0);
    const auto& av = a.values();
    const auto& bv = b.values();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += av[std::size_t(i) * k + p] * bv[std::size_t(j) * k + p];
            out[std::size_t(i) * n + j] = s;
        }
    return make_op({m, n}, std::move(out), {a, b},
                   [a, b, m, k, n](detail::TensorNode& self) {
                       auto& ga = a.grad();
                       auto& gb = b.grad();
                       const auto& av = a.values();
                       const auto& bv = b.values();
                       for (int i = 0; i < m; ++i)
                           for (int j = 0; j < n; ++j) {
                               const double g = self.grad[std::size_t(i) * n + j];
                               if (g == 0.0) continue;
                               for (int p = 0; p < k; ++p) {
                                   ga[std::size_t(i) * k + p] += g * bv[std::size_t(j) * k + p];
                                   gb[std::size_t(j) * k + p] += g * av[std::size_t(i) * k + p];
                               }
                           }
                   });
}

/// [m x n] + row vector [n], broadcast over rows
inline Tensor add_rowvec(const Tensor& a, const Tensor& v) {
    detail::require(a.rank() == 2 && v.rank() == 1, "add_rowvec: matrix and vector expected");
    detail::require(a.dim(1) == v.dim(0), "add_rowvec: width mismatch");
    const int m = a.dim(0), n = a.dim(1);
    std::vector<double> out(a.values());
    const auto& vv = v.values();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out[std::size_t(i) * n + j] += vv[j];
    return make_op(a.shape(), std::move(out), {a, v}, [a, v, m, n](detail::TensorNode& self) {
        auto& ga = a.grad();
        auto& gv = v.grad();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                const double g = self.grad[std::size_t(i) * n + j];
                ga[std::size_t(i) * n + j] += g;
                gv[j] += g;
            }
    });
}

inline Tensor relu(const Tensor& a) {
    std::vector<double> out(a.values());
    for (double& v : out) v = v > 0.0 ? v : 0.0;
    return make_op(a.shape(), std::move(out), {a}, [a](detail::TensorNode& self) {
        auto& ga = a.grad();
        const auto& av = a.values();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (av[i] > 0.0) ga[i] += self.grad[i];
    });
}

/// row-wise softmax with max subtraction, rank-2
inline Tensor softmax_rows(const Tensor& a) {
    detail::require(a.rank() == 2, "softmax_rows: rank-2 tensor expected");
    const int m = a.dim(0), n = a.dim(1);
    std::vector<double> out(std::size_t(m) * n);
    const auto& av = a.values();
    for (int i = 0; i < m; ++i) {
        double mx = av[std::size_t(i) * n];
        for (int j = 1; j < n; ++j) mx = std::max(mx, av[std::size_t(i) * n + j]);
        double denom = 0.0;
        for (int j = 0; j < n; ++j) {
            const double e = std::exp(av[std::size_t(i) * n + j] - mx);
            out[std::size_t(i) * n + j] = e;
            denom += e;
        }
        for (int j = 0; j < n; ++j) out[std::size_t(i) * n + j] /= denom;
    }
    return make_op(a.shape(), std::move(out), {a}, [a, m, n](detail::TensorNode& self) {
        auto& ga = a.grad();
        for (int i = 0; i < m; ++i) {
            double dot = 0.0;
            for (int j = 0; j < n; ++j)
                dot += self.grad[std::size_t(i) * n + j] * self.values[std::size_t(i) * n + j];
            for (int j = 0; j < n; ++j) {
                const std::size_t idx = std::size_t(i) * n + j;
                ga[idx] += self.values[idx] * (self.grad[idx] - dot);
            }
        }
    });
}

/// per-row normalization over the last axis: gamma * (x - mean)/sqrt(var + eps) + beta
inline Tensor layer_norm(const Tensor& a, const Tensor& gamma, const Tensor& beta,
                         double eps = 1e-5) {
    detail::require(a.rank() == 2, "layer_norm: rank-2 tensor expected");
    const int m = a.dim(0), n = a.dim(1);
    detail::require(gamma.rank() == 1 && gamma.dim(0) == n, "layer_norm: gamma width mismatch");
    detail::require(beta.rank() == 1 && beta.dim(0) == n, "layer_norm: beta width mismatch");

    std::vector<double> out(std::size_t(m) * n);
    std::vector<double> xhat(std::size_t(m) * n);
    std::vector<double> inv_std(m);
    const auto& av = a.values();
    const auto& gv = gamma.values();
    const auto& bv = beta.values();
    for (int i = 0; i < m; ++i) {
        double mean = 0.0;
        for (int j = 0; j < n; ++j) mean += av[std::size_t(i) * n + j];
        mean /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            const double d = av[std::size_t(i) * n + j] - mean;
            var += d * d;
        }
        var /= n;
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (int j = 0; j < n; ++j) {
            const std::size_t idx = std::size_t(i) * n + j;
            xhat[idx] = (av[idx] - mean) * inv_std[i];
            out[idx] = gv[j] * xhat[idx] + bv[j];
        }
    }
    return make_op(a.shape(), std::move(out), {a, gamma, beta},
                   [a, gamma, beta, m, n, xhat = std::move(xhat),
                    inv_std = std::move(inv_std)](detail::TensorNode& self) {
                       auto& ga = a.grad();
                       auto& gg = gamma.grad();
                       auto& gb = beta.grad();
                       const auto& gv = gamma.values();
                       for (int i = 0; i < m; ++i) {
                           double mean_g = 0.0, mean_gx = 0.0;
                           for (int j = 0; j < n; ++j) {
                               const std::size_t idx = std::size_t(i) * n + j;
                               const double gh = self.grad[idx] * gv[j];
                               mean_g += gh;
                               mean_gx += gh * xhat[idx];
                           }
                           mean_g /= n;
                           mean_gx /= n;
                           for (int j = 0; j < n; ++j) {
                               const std::size_t idx = std::size_t(i) * n + j;
                               const double gh = self.grad[idx] * gv[j];
                               ga[idx] += inv_std[i] * (gh - mean_g - xhat[idx] * mean_gx);
                               gg[j] += self.grad[idx] * xhat[idx];
                               gb[j] += self.grad[idx];
                           }
                       }
                   });
}

/// inverted dropout; identity when !training or rate == 0. `mask_bits(i)`
/// must be a pure function of the element index.
inline Tensor dropout(const Tensor& a, double rate, bool training,
                      const std::function<double(std::uint64_t)>& unit_draw) {
    detail::require(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0, 1)");
    if (!training || rate == 0.0) return a;
    const double inv_keep = 1.0 / (1.0 - rate);
    std::vector<double> mask(a.values().size());
    for (std::size_t i = 0; i < mask.size(); ++i)
        mask[i] = unit_draw(i) >= rate ? inv_keep : 0.0;
    std::vector<double> out(a.values());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    return make_op(a.shape(), std::move(out), {a},
                   [a, mask = std::move(mask)](detail::TensorNode& self) {
                       auto& ga = a.grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i)
                           ga[i] += self.grad[i] * mask[i];
                   });
}

/// mean over rows: [L x d] -> [1 x d]
inline Tensor mean_rows(const Tensor& a) {
    detail::require(a.rank() == 2, "mean_rows: rank-2 tensor expected");
    const int m = a.dim(0), n = a.dim(1);
    std::vector<double> out(std::size_t(n), 0.0);
    const auto& av = a.values();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out[j] += av[std::size_t(i) * n + j];
    for (double& v : out) v /= m;
    return make_op({1, n}, std::move(out), {a}, [a, m, n](detail::TensorNode& self) {
        auto& ga = a.grad();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) ga[std::size_t(i) * n + j] += self.grad[j] / m;
    });
}

inline Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double v : a.values()) s += v;
    return make_op({1}, {s}, {a}, [a](detail::TensorNode& self) {
        auto& ga = a.grad();
        for (double& g : ga) g += self.grad[0];
    });
}

/// mean cross-entropy over rows of logits [B x C] against integer labels
inline Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
    detail::require(logits.rank() == 2, "cross_entropy: rank-2 logits expected");
    const int b = logits.dim(0), c = logits.dim(1);
    detail::require(std::ptrdiff_t(labels.size()) == b, "cross_entropy: label count mismatch");
    for (int i = 0; i < b; ++i)
        if (labels[i] < 0 || labels[i] >= c)
            throw std::invalid_argument("cross_entropy: label out of class range");

    const auto& lv = logits.values();
    std::vector<double> probs(std::size_t(b) * c);
    double loss = 0.0;
    for (int i = 0; i < b; ++i) {
        double mx = lv[std::size_t(i) * c];
        for (int j = 1; j < c; ++j) mx = std::max(mx, lv[std::size_t(i) * c + j]);
        double denom = 0.0;
        for (int j = 0; j < c; ++j) {
            probs[std::size_t(i) * c + j] = std::exp(lv[std::size_t(i) * c + j] - mx);
            denom += probs[std::size_t(i) * c + j];
        }
        for (int j = 0; j < c; ++j) probs[std::size_t(i) * c + j] /= denom;
        loss -= std::log(probs[std::size_t(i) * c + labels[i]]);
    }
    loss /= b;
    std::vector<int> labels_copy(labels.begin(), labels.end());
    return make_op({1}, {loss}, {logits},
                   [logits, probs = std::move(probs), labels_copy = std::move(labels_copy), b,
                    c](detail::TensorNode& self) {
                       auto& gl = logits.grad();
                       const double up = self.grad[0] / b;
                       for (int i = 0; i < b; ++i)
                           for (int j = 0; j < c; ++j) {
                               const std::size_t idx = std::size_t(i) * c + j;
                               gl[idx] += up * (probs[idx] - (labels_copy[i] == j ? 1.0 : 0.0));
                           }
                   });
}

/// table lookup: ids (length L) into table [V x d] -> [L x d]
inline Tensor embedding(std::span<const int> ids, const Tensor& table) {
    detail::require(table.rank() == 2, "embedding: rank-2 table expected");
    const int v = table.dim(0), d = table.dim(1);
    const int l = int(ids.size());
    for (int id : ids)
        if (id < 0 || id >= v) throw std::invalid_argument("embedding: id out of range");
    std::vector<double> out(std::size_t(l) * d);
    const auto& tv = table.values();
    for (int i = 0; i < l; ++i)
        for (int j = 0; j < d; ++j) out[std::size_t(i) * d + j] = tv[std::size_t(ids[i]) * d + j];
    std::vector<int> ids_copy(ids.begin(), ids.end());
    return make_op({l, d}, std::move(out), {table},
                   [table, ids_copy = std::move(ids_copy), d](detail::TensorNode& self) {
                       auto& gt = table.grad();
                       for (std::size_t i = 0; i < ids_copy.size(); ++i)
                           for (int j = 0; j < d; ++j)
                               gt[std::size_t(ids_copy[i]) * d + j] += self.grad[i * d + j];
                   });
}

/// L2 norm of each row: [L x n] -> [L]
inline Tensor row_norms(const Tensor& a) {
    detail::require(a.rank() == 2, "row_norms: rank-2 tensor expected");
    const int m = a.dim(0), n = a.dim(1);
    std::vector<double> out(m, 0.0);
    const auto& av = a.values();
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            const double v = av[std::size_t(i) * n + j];
            s += v * v;
        }
        out[i] = std::sqrt(s);
    }
    return make_op({m}, std::move(out), {a}, [a, m, n](detail::TensorNode& self) {
        auto& ga = a.grad();
        const auto& av = a.values();
        for (int i = 0; i < m; ++i) {
            if (self.values[i] == 0.0) continue; // subgradient 0 at the origin
            const double g = self.grad[i] / self.values[i];
            for (int j = 0; j < n; ++j) ga[std::size_t(i) * n + j] += g * av[std::size_t(i) * n + j];
        }
    });
}

/// outer product of two vectors: [m], [n] -> [m x n]
inline Tensor outer(const Tensor& u, const Tensor& v) {
    detail::require(u.rank() == 1 && v.rank() == 1, "outer: rank-1 tensors expected");
    const int m = u.dim(0), n = v.dim(0);
    std::vector<double> out(std::size_t(m) * n);
    const auto& uv = u.values();
    const auto& vv = v.values();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out[std::size_t(i) * n + j] = uv[i] * vv[j];
    return make_op({m, n}, std::move(out), {u, v}, [u, v, m, n](detail::TensorNode& self) {
        auto& gu = u.grad();
        auto& gv = v.grad();
        const auto& uv = u.values();
        const auto& vv = v.values();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                const double g = self.grad[std::size_t(i) * n + j];
                gu[i] += g * vv[j];
                gv[j] += g * uv[i];
            }
    });
}

/// cos of a scalar phase, computed as sin(pi/2 - phi) so that phi == pi/2
/// (the nearest double to it) yields an exact zero.
inline Tensor phase_cos(const Tensor& phi) {
    detail::require(phi.size() == 1, "phase_cos: scalar tensor expected");
    constexpr double half_pi = 1.57079632679489661923;
    const double v = phi.values()[0];
    return make_op({1}, {std::sin(half_pi - v)}, {phi}, [phi, v](detail::TensorNode& self) {
        phi.grad()[0] += self.grad[0] * -std::cos(half_pi - v);
    });
}

/// column slice [m x n] -> [m x width] starting at `start`
inline Tensor slice_cols(const Tensor& a, int start, int width) {
    detail::require(a.rank() == 2, "slice_cols: rank-2 tensor expected");
    const int m = a.dim(0), n = a.dim(1);
    detail::require(start >= 0 && width > 0 && start + width <= n, "slice_cols: range out of bounds");
    std::vector<double> out(std::size_t(m) * width);
    const auto& av = a.values();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < width; ++j)
            out[std::size_t(i) * width + j] = av[std::size_t(i) * n + start + j];
    return make_op({m, width}, std::move(out), {a},
                   [a, start, width, m, n](detail::TensorNode& self) {
                       auto& ga = a.grad();
                       for (int i = 0; i < m; ++i)
                           for (int j = 0; j < width; ++j)
                               ga[std::size_t(i) * n + start + j] += self.grad[std::size_t(i) * width + j];
                   });
}

/// horizontal concatenation of equal-height matrices
inline Tensor concat_cols(const std::vector<Tensor>& parts) {
    detail::require(!parts.empty(), "concat_cols: empty list");
    const int m = parts[0].dim(0);
    int total = 0;
    for (const Tensor& p : parts) {
        detail::require(p.rank() == 2 && p.dim(0) == m, "concat_cols: row mismatch");
        total += p.dim(1);
    }
    std::vector<double> out(std::size_t(m) * total);
    int off = 0;
    for (const Tensor& p : parts) {
        const int w = p.dim(1);
        const auto& pv = p.values();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < w; ++j) out[std::size_t(i) * total + off + j] = pv[std::size_t(i) * w + j];
        off += w;
    }
    return make_op({m, total}, std::move(out), parts,
                   [parts, m, total](detail::TensorNode& self) {
                       int off = 0;
                       for (const Tensor& p : parts) {
                           const int w = p.dim(1);
                           auto& gp = p.grad();
                           for (int i = 0; i < m; ++i)
                               for (int j = 0; j < w; ++j)
                                   gp[std::size_t(i) * w + j] += self.grad[std::size_t(i) * total + off + j];
                           off += w;
                       }
                   });
}

/// batch slice [B x L x d] -> [L x d]
inline Tensor batch_slice(const Tensor& a, int b) {
    detail::require(a.rank() == 3, "batch_slice: rank-3 tensor expected");
    detail::require(b >= 0 && b < a.dim(0), "batch_slice: index out of range");
    const int l = a.dim(1), d = a.dim(2);
    const std::size_t stride = std::size_t(l) * d;
    std::vector<double> out(a.values().begin() + b * stride, a.values().begin() + (b + 1) * stride);
    return make_op({l, d}, std::move(out), {a}, [a, b, stride](detail::TensorNode& self) {
        auto& ga = a.grad();
        for (std::size_t i = 0; i < stride; ++i) ga[b * stride + i] += self.grad[i];
    });
}

/// stack B equal-shape matrices [L x d] -> [B x L x d]
inline Tensor batch_stack(const std::vector<Tensor>& parts) {
    detail::require(!parts.empty(), "batch_stack: empty list");
    const int l = parts[0].dim(0), d = parts[0].dim(1);
    std::vector<double> out;
    out.reserve(parts.size() * std::size_t(l) * d);
    for (const Tensor& p : parts) {
        detail::require(p.rank() == 2 && p.dim(0) == l && p.dim(1) == d, "batch_stack: shape mismatch");
        out.insert(out.end(), p.values().begin(), p.values().end());
    }
    const std::size_t stride = std::size_t(l) * d;
    return make_op({int(parts.size()), l, d}, std::move(out), parts,
                   [parts, stride](detail::TensorNode& self) {
                       std::size_t off = 0;
                       for (const Tensor& p : parts) {
                           auto& gp = p.grad();
                           for (std::size_t i = 0; i < stride; ++i) gp[i] += self.grad[off + i];
                           off += stride;
                       }
                   });
}

/// stack B row vectors (shape [1 x n] or [n]) -> [B x n]
inline Tensor row_stack(const std::vector<Tensor>& rows) {
    detail::require(!rows.empty(), "row_stack: empty list");
    const int n = int(rows[0].size());
    std::vector<double> out;
    out.reserve(rows.size() * std::size_t(n));
    for (const Tensor& r : rows) {
        detail::require(int(r.size()) == n, "row_stack: width mismatch");
        out.insert(out.end(), r.values().begin(), r.values().end());
    }
    return make_op({int(rows.size()), n}, std::move(out), rows,
                   [rows, n](detail::TensorNode& self) {
                       std::size_t off = 0;
                       for (const Tensor& r : rows) {
                           auto& gr = r.grad();
                           for (int i = 0; i < n; ++i) gr[i] += self.grad[off + i];
                           off += n;
                       }
                   });
}

} // namespace qat
