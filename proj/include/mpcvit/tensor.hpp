#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "mpcvit/attention.hpp"
#include "mpcvit/mat.hpp"

namespace mpcvit {

// Reverse-mode autodiff over matrix-valued nodes. Each op stores a closure
// that scatters the output gradient to its parents; backward() does an
// iterative topological sort from the loss node (parent order is fixed, so
// replaying the same seed/tape yields bit-identical gradients).

struct TensorImpl {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorImpl>> parents;
    std::function<void(TensorImpl&)> backward_fn;  // receives *this
};

class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(Mat v, bool requires_grad = false)
        : impl_(std::make_shared<TensorImpl>()) {
        impl_->value = std::move(v);
        impl_->grad = Mat(impl_->value.rows, impl_->value.cols);
        impl_->requires_grad = requires_grad;
    }

    const Mat& value() const { return impl_->value; }
    Mat& value_mut() { return impl_->value; }
    const Mat& grad() const { return impl_->grad; }
    Mat& grad_mut() { return impl_->grad; }
    bool requires_grad() const { return impl_ && impl_->requires_grad; }
    std::shared_ptr<TensorImpl> impl() const { return impl_; }
    bool defined() const { return impl_ != nullptr; }

    std::size_t rows() const { return impl_->value.rows; }
    std::size_t cols() const { return impl_->value.cols; }

    void zero_grad() {
        std::fill(impl_->grad.d.begin(), impl_->grad.d.end(), 0.0);
    }

    // Backpropagate from this (scalar) node.
    void backward() {
        if (rows() != 1 || cols() != 1)
            throw ShapeError("backward() root must be a 1x1 tensor");
        // Iterative post-order DFS for a deterministic topological order.
        std::vector<TensorImpl*> order;
        std::unordered_set<TensorImpl*> seen;
        std::vector<std::pair<TensorImpl*, std::size_t>> stack;
        stack.push_back({impl_.get(), 0});
        seen.insert(impl_.get());
        while (!stack.empty()) {
            auto& [node, idx] = stack.back();
            if (idx < node->parents.size()) {
                TensorImpl* par = node->parents[idx].get();
                ++idx;
                if (par && !seen.count(par)) {
                    seen.insert(par);
                    stack.push_back({par, 0});
                }
            } else {
                order.push_back(node);
                stack.pop_back();
            }
        }
        impl_->grad.d[0] = 1.0;
        for (auto it = order.rbegin(); it != order.rend(); ++it)
            if ((*it)->backward_fn) (*it)->backward_fn(**it);
    }

    static Tensor from_impl(std::shared_ptr<TensorImpl> impl) {
        Tensor t;
        t.impl_ = std::move(impl);
        return t;
    }

  private:
    std::shared_ptr<TensorImpl> impl_;
};

namespace detail {
inline Tensor make_op(Mat value, std::vector<Tensor> parents,
                      std::function<void(TensorImpl&)> backward_fn) {
    auto impl = std::make_shared<TensorImpl>();
    impl->value = std::move(value);
    impl->grad = Mat(impl->value.rows, impl->value.cols);
    bool needs = false;
    for (const Tensor& p : parents) {
        impl->parents.push_back(p.impl());
        needs = needs || p.requires_grad() || p.impl()->backward_fn != nullptr;
    }
    impl->requires_grad = needs;
    if (needs) impl->backward_fn = std::move(backward_fn);
    return Tensor::from_impl(impl);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// primitive ops
// ---------------------------------------------------------------------------

inline Tensor tadd(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("tadd shape");
    Mat v = a.value();
    for (std::size_t i = 0; i < v.d.size(); ++i) v.d[i] += b.value().d[i];
    return detail::make_op(std::move(v), {a, b}, [](TensorImpl& n) {
        for (int k = 0; k < 2; ++k)
            for (std::size_t i = 0; i < n.grad.d.size(); ++i)
                n.parents[k]->grad.d[i] += n.grad.d[i];
    });
}

inline Tensor tsub(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("tsub shape");
    Mat v = a.value();
    for (std::size_t i = 0; i < v.d.size(); ++i) v.d[i] -= b.value().d[i];
    return detail::make_op(std::move(v), {a, b}, [](TensorImpl& n) {
        for (std::size_t i = 0; i < n.grad.d.size(); ++i) {
            n.parents[0]->grad.d[i] += n.grad.d[i];
            n.parents[1]->grad.d[i] -= n.grad.d[i];
        }
    });
}

inline Tensor tmul(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("tmul shape");
    Mat v = a.value();
    for (std::size_t i = 0; i < v.d.size(); ++i) v.d[i] *= b.value().d[i];
    return detail::make_op(std::move(v), {a, b}, [](TensorImpl& n) {
        for (std::size_t i = 0; i < n.grad.d.size(); ++i) {
            n.parents[0]->grad.d[i] += n.grad.d[i] * n.parents[1]->value.d[i];
            n.parents[1]->grad.d[i] += n.grad.d[i] * n.parents[0]->value.d[i];
        }
    });
}

// y = c1 * x + c0 (elementwise, public constants)
inline Tensor taffine(const Tensor& x, double c1, double c0) {
    Mat v = x.value();
    for (double& e : v.d) e = c1 * e + c0;
    return detail::make_op(std::move(v), {x}, [c1](TensorImpl& n) {
        for (std::size_t i = 0; i < n.grad.d.size(); ++i)
            n.parents[0]->grad.d[i] += c1 * n.grad.d[i];
    });
}

inline Tensor tmatmul(const Tensor& a, const Tensor& b) {
    Mat v = matmul(a.value(), b.value());
    return detail::make_op(std::move(v), {a, b}, [](TensorImpl& n) {
        const Mat& A = n.parents[0]->value;
        const Mat& B = n.parents[1]->value;
        Mat& dA = n.parents[0]->grad;
        Mat& dB = n.parents[1]->grad;
        // dA += dC B^T ; dB += A^T dC
        for (std::size_t i = 0; i < A.rows; ++i)
            for (std::size_t j = 0; j < B.cols; ++j) {
                double g = n.grad.d[i * B.cols + j];
                if (g == 0.0) continue;
                for (std::size_t k = 0; k < A.cols; ++k) {
                    dA.d[i * A.cols + k] += g * B.d[k * B.cols + j];
                    dB.d[k * B.cols + j] += g * A.d[i * A.cols + k];
                }
            }
    });
}

inline Tensor ttranspose(const Tensor& a) {
    Mat v = transposed(a.value());
    return detail::make_op(std::move(v), {a}, [](TensorImpl& n) {
        const Mat& g = n.grad;  // (cols x rows) of parent
        Mat& dA = n.parents[0]->grad;
        for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < g.cols; ++j)
                dA.d[j * g.rows + i] += g.d[i * g.cols + j];
    });
}

// Broadcast-add a 1 x C bias row to every row of X (T x C).
inline Tensor tadd_bias_row(const Tensor& x, const Tensor& bias) {
    if (bias.rows() != 1 || bias.cols() != x.cols()) throw ShapeError("tadd_bias_row shape");
    Mat v = x.value();
    for (std::size_t i = 0; i < v.rows; ++i)
        for (std::size_t j = 0; j < v.cols; ++j) v.at(i, j) += bias.value().at(0, j);
    return detail::make_op(std::move(v), {x, bias}, [](TensorImpl& n) {
        Mat& dX = n.parents[0]->grad;
        Mat& dB = n.parents[1]->grad;
        for (std::size_t i = 0; i < n.grad.rows; ++i)
            for (std::size_t j = 0; j < n.grad.cols; ++j) {
                dX.at(i, j) += n.grad.at(i, j);
                dB.at(0, j) += n.grad.at(i, j);
            }
    });
}

// Multiply a matrix by a 1x1 scalar tensor (used for architecture mixing).
inline Tensor tmul_scalar(const Tensor& s, const Tensor& x) {
    if (s.rows() != 1 || s.cols() != 1) throw ShapeError("tmul_scalar scalar shape");
    Mat v = x.value();
    double sv = s.value().d[0];
    for (double& e : v.d) e *= sv;
    return detail::make_op(std::move(v), {s, x}, [](TensorImpl& n) {
        double sv = n.parents[0]->value.d[0];
        double acc = 0.0;
        for (std::size_t i = 0; i < n.grad.d.size(); ++i) {
            acc += n.grad.d[i] * n.parents[1]->value.d[i];
            n.parents[1]->grad.d[i] += sv * n.grad.d[i];
        }
        n.parents[0]->grad.d[0] += acc;
    });
}

// View one element of a matrix tensor as a 1x1 tensor.
inline Tensor telem(const Tensor& x, std::size_t i, std::size_t j) {
    if (i >= x.rows() || j >= x.cols()) throw ShapeError("telem index out of range");
    Mat v(1, 1);
    v.d[0] = x.value().at(i, j);
    std::size_t off = i * x.cols() + j;
    return detail::make_op(std::move(v), {x}, [off](TensorImpl& n) {
        n.parents[0]->grad.d[off] += n.grad.d[0];
    });
}

// Extract row i as a 1 x C tensor.
inline Tensor trow(const Tensor& x, std::size_t i) {
    if (i >= x.rows()) throw ShapeError("trow index out of range");
    Mat v(1, x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) v.d[j] = x.value().at(i, j);
    std::size_t off = i * x.cols();
    return detail::make_op(std::move(v), {x}, [off](TensorImpl& n) {
        for (std::size_t j = 0; j < n.grad.d.size(); ++j)
            n.parents[0]->grad.d[off + j] += n.grad.d[j];
    });
}

// Stack 1 x C row tensors into an R x C tensor.
inline Tensor tconcat_rows(const std::vector<Tensor>& rows) {
    if (rows.empty()) throw ShapeError("tconcat_rows on empty list");
    std::size_t c = rows[0].cols();
    Mat v(rows.size(), c);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].rows() != 1 || rows[i].cols() != c) throw ShapeError("tconcat_rows shape");
        for (std::size_t j = 0; j < c; ++j) v.at(i, j) = rows[i].value().d[j];
    }
    return detail::make_op(std::move(v), rows, [c](TensorImpl& n) {
        for (std::size_t i = 0; i < n.parents.size(); ++i)
            for (std::size_t j = 0; j < c; ++j)
                n.parents[i]->grad.d[j] += n.grad.at(i, j);
    });
}

// Concatenate column-wise: [A | B | ...] with equal row counts.
inline Tensor tconcat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("tconcat_cols on empty list");
    std::size_t r = parts[0].rows(), total = 0;
    for (const Tensor& p : parts) {
        if (p.rows() != r) throw ShapeError("tconcat_cols row mismatch");
        total += p.cols();
    }
    Mat v(r, total);
    std::size_t off = 0;
    for (const Tensor& p : parts) {
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < p.cols(); ++j) v.at(i, off + j) = p.value().at(i, j);
        off += p.cols();
    }
    std::vector<std::size_t> offs;
    off = 0;
    for (const Tensor& p : parts) { offs.push_back(off); off += p.cols(); }
    return detail::make_op(std::move(v), parts, [offs, total](TensorImpl& n) {
        for (std::size_t k = 0; k < n.parents.size(); ++k) {
            std::size_t pc = n.parents[k]->value.cols;
            for (std::size_t i = 0; i < n.parents[k]->value.rows; ++i)
                for (std::size_t j = 0; j < pc; ++j)
                    n.parents[k]->grad.at(i, j) += n.grad.d[i * total + offs[k] + j];
        }
    });
}

inline Tensor trelu(const Tensor& x) {
    Mat v = x.value();
    for (double& e : v.d) e = std::max(e, 0.0);
    return detail::make_op(std::move(v), {x}, [](TensorImpl& n) {
        for (std::size_t i = 0; i < n.grad.d.size(); ++i)
            if (n.parents[0]->value.d[i] > 0.0)
                n.parents[0]->grad.d[i] += n.grad.d[i];
    });
}

// tanh-form GeLU: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
inline double gelu_tanh(double x) {
    const double k = 0.7978845608028654;
    double u = k * (x + 0.044715 * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
}

inline Tensor tgelu(const Tensor& x) {
    Mat v = x.value();
    for (double& e : v.d) e = gelu_tanh(e);
    return detail::make_op(std::move(v), {x}, [](TensorImpl& n) {
        const double k = 0.7978845608028654;
        for (std::size_t i = 0; i < n.grad.d.size(); ++i) {
            double xv = n.parents[0]->value.d[i];
            double u = k * (xv + 0.044715 * xv * xv * xv);
            double th = std::tanh(u);
            double du = k * (1.0 + 3.0 * 0.044715 * xv * xv);
            double d = 0.5 * (1.0 + th) + 0.5 * xv * (1.0 - th * th) * du;
            n.parents[0]->grad.d[i] += n.grad.d[i] * d;
        }
    });
}

// Row-wise stable softmax.
inline Tensor tsoftmax_rows(const Tensor& x) {
    Mat v = x.value();
    softmax_rows_inplace(v);
    return detail::make_op(std::move(v), {x}, [](TensorImpl& n) {
        const Mat& y = n.value;
        for (std::size_t i = 0; i < y.rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < y.cols; ++j)
                dot += n.grad.at(i, j) * y.at(i, j);
            for (std::size_t j = 0; j < y.cols; ++j)
                n.parents[0]->grad.at(i, j) += y.at(i, j) * (n.grad.at(i, j) - dot);
        }
    });
}

// Row-wise relu(x)/(sum relu(x) + eps).
inline Tensor trelusoftmax_rows(const Tensor& x, double eps = 1e-8) {
    Mat v = x.value();
    std::vector<double> denom(v.rows);
    for (std::size_t i = 0; i < v.rows; ++i) {
        double sum = eps;
        for (std::size_t j = 0; j < v.cols; ++j) {
            double r = std::max(v.at(i, j), 0.0);
            v.at(i, j) = r;
            sum += r;
        }
        denom[i] = sum;
        for (std::size_t j = 0; j < v.cols; ++j) v.at(i, j) /= sum;
    }
    return detail::make_op(std::move(v), {x}, [denom](TensorImpl& n) {
        const Mat& y = n.value;
        const Mat& xin = n.parents[0]->value;
        for (std::size_t i = 0; i < y.rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < y.cols; ++j)
                dot += n.grad.at(i, j) * y.at(i, j);
            for (std::size_t j = 0; j < y.cols; ++j)
                if (xin.at(i, j) > 0.0)
                    n.parents[0]->grad.at(i, j) += (n.grad.at(i, j) - dot) / denom[i];
        }
    });
}

// Row-wise LayerNorm with learnable gamma/beta (each 1 x C).
inline Tensor tlayernorm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                              double eps = 1e-5) {
    std::size_t C = x.cols();
    if (gamma.cols() != C || beta.cols() != C || gamma.rows() != 1 || beta.rows() != 1)
        throw ShapeError("tlayernorm_rows parameter shape");
    Mat v(x.rows(), C);
    std::vector<double> mean(x.rows()), istd(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double m = 0.0;
        for (std::size_t j = 0; j < C; ++j) m += x.value().at(i, j);
        m /= double(C);
        double var = 0.0;
        for (std::size_t j = 0; j < C; ++j) {
            double c = x.value().at(i, j) - m;
            var += c * c;
        }
        var /= double(C);
        double is = 1.0 / std::sqrt(var + eps);
        mean[i] = m;
        istd[i] = is;
        for (std::size_t j = 0; j < C; ++j)
            v.at(i, j) = (x.value().at(i, j) - m) * is * gamma.value().d[j] + beta.value().d[j];
    }
    return detail::make_op(std::move(v), {x, gamma, beta}, [mean, istd](TensorImpl& n) {
        const Mat& xin = n.parents[0]->value;
        const Mat& g = n.parents[1]->value;
        std::size_t C = xin.cols;
        for (std::size_t i = 0; i < xin.rows; ++i) {
            double sum_dy = 0.0, sum_dyxh = 0.0;
            std::vector<double> xh(C), dy(C);
            for (std::size_t j = 0; j < C; ++j) {
                xh[j] = (xin.at(i, j) - mean[i]) * istd[i];
                dy[j] = n.grad.at(i, j) * g.d[j];
                sum_dy += dy[j];
                sum_dyxh += dy[j] * xh[j];
                n.parents[1]->grad.d[j] += n.grad.at(i, j) * xh[j];  // dgamma
                n.parents[2]->grad.d[j] += n.grad.at(i, j);          // dbeta
            }
            for (std::size_t j = 0; j < C; ++j)
                n.parents[0]->grad.at(i, j) +=
                    istd[i] * (dy[j] - sum_dy / double(C) - xh[j] * sum_dyxh / double(C));
        }
    });
}

// Mean of all entries -> 1x1.
inline Tensor tmean_all(const Tensor& x) {
    Mat v(1, 1);
    double s = 0.0;
    for (double e : x.value().d) s += e;
    v.d[0] = s / double(x.value().d.size());
    return detail::make_op(std::move(v), {x}, [](TensorImpl& n) {
        double g = n.grad.d[0] / double(n.parents[0]->value.d.size());
        for (double& e : n.parents[0]->grad.d) e += g;
    });
}

// Stable cross-entropy of one logits row vs an integer label -> 1x1.
inline Tensor tcross_entropy(const Tensor& logits, std::size_t label) {
    if (logits.rows() != 1) throw ShapeError("tcross_entropy expects a 1 x classes row");
    if (label >= logits.cols()) throw ShapeError("label out of range");
    const Mat& z = logits.value();
    double m = z.d[0];
    for (double e : z.d) m = std::max(m, e);
    double lse = 0.0;
    for (double e : z.d) lse += std::exp(e - m);
    lse = m + std::log(lse);
    Mat v(1, 1);
    v.d[0] = lse - z.d[label];
    return detail::make_op(std::move(v), {logits}, [label, lse](TensorImpl& n) {
        const Mat& z = n.parents[0]->value;
        double g = n.grad.d[0];
        for (std::size_t j = 0; j < z.d.size(); ++j) {
            double p = std::exp(z.d[j] - lse);
            n.parents[0]->grad.d[j] += g * (p - (j == label ? 1.0 : 0.0));
        }
    });
}

// KL(softmax(t/T) || softmax(s/T)) for one row pair -> 1x1. The teacher row
// is treated as a constant (no gradient flows into it).
inline Tensor tkl_div(const Tensor& student, const Mat& teacher, double temperature = 1.0) {
    if (student.rows() != 1 || teacher.rows != 1 || student.cols() != teacher.cols)
        throw ShapeError("tkl_div expects matching 1 x classes rows");
    std::size_t C = student.cols();
    auto softmax_row = [&](const Mat& z, std::vector<double>& out) {
        double m = z.d[0] / temperature;
        for (std::size_t j = 0; j < C; ++j) m = std::max(m, z.d[j] / temperature);
        double sum = 0.0;
        out.resize(C);
        for (std::size_t j = 0; j < C; ++j) {
            out[j] = std::exp(z.d[j] / temperature - m);
            sum += out[j];
        }
        for (double& e : out) e /= sum;
    };
    std::vector<double> ps, pt;
    softmax_row(student.value(), ps);
    softmax_row(teacher, pt);
    Mat v(1, 1);
    double kl = 0.0;
    for (std::size_t j = 0; j < C; ++j)
        if (pt[j] > 0.0) kl += pt[j] * (std::log(pt[j]) - std::log(std::max(ps[j], 1e-300)));
    v.d[0] = kl;
    return detail::make_op(std::move(v), {student}, [ps, pt, temperature](TensorImpl& n) {
        // d KL / d s_k = (p_s_k - p_t_k) / T
        double g = n.grad.d[0];
        for (std::size_t j = 0; j < ps.size(); ++j)
            n.parents[0]->grad.d[j] += g * (ps[j] - pt[j]) / temperature;
    });
}

// l2 distance ||a - b||_2 with b constant -> 1x1 (feature distillation term).
inline Tensor tl2_distance(const Tensor& a, const Mat& b) {
    if (a.rows() != b.rows || a.cols() != b.cols) throw ShapeError("tl2_distance shape");
    double ss = 0.0;
    for (std::size_t i = 0; i < b.d.size(); ++i) {
        double d = a.value().d[i] - b.d[i];
        ss += d * d;
    }
    double norm = std::sqrt(ss + 1e-12);
    Mat v(1, 1);
    v.d[0] = norm;
    Mat bcopy = b;
    return detail::make_op(std::move(v), {a}, [bcopy, norm](TensorImpl& n) {
        double g = n.grad.d[0] / norm;
        for (std::size_t i = 0; i < bcopy.d.size(); ++i)
            n.parents[0]->grad.d[i] += g * (n.parents[0]->value.d[i] - bcopy.d[i]);
    });
}

}  // namespace mpcvit
