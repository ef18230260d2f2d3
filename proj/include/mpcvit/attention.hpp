#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mpcvit/mat.hpp"
#include "mpcvit/ring.hpp"

namespace mpcvit {

// Plaintext attention variants over (Q, K, V), each T x d_k. These are the
// double-precision references; the heterogeneous model trains with the two
// MPC-friendly ones (ReLUSoftmax and ScaleAttn), and the cost table prices
// the whole zoo.

enum class AttentionKind {
    Softmax,
    ReLUSoftmax,
    ScaleAttn,
    Linformer,
    ReLU,
    ReLU6,
    Sparsemax,
    XNorm,
    Square,
    TwoQuad,
};

inline std::string to_string(AttentionKind k) {
    switch (k) {
        case AttentionKind::Softmax: return "Softmax";
        case AttentionKind::ReLUSoftmax: return "ReLUSoftmax";
        case AttentionKind::ScaleAttn: return "ScaleAttn";
        case AttentionKind::Linformer: return "Linformer";
        case AttentionKind::ReLU: return "ReLU";
        case AttentionKind::ReLU6: return "ReLU6";
        case AttentionKind::Sparsemax: return "Sparsemax";
        case AttentionKind::XNorm: return "XNorm";
        case AttentionKind::Square: return "Square";
        case AttentionKind::TwoQuad: return "2Quad";
    }
    throw ConfigError("unknown attention kind");
}

inline AttentionKind attention_kind_from_string(const std::string& s) {
    if (s == "Softmax") return AttentionKind::Softmax;
    if (s == "ReLUSoftmax") return AttentionKind::ReLUSoftmax;
    if (s == "ScaleAttn") return AttentionKind::ScaleAttn;
    if (s == "Linformer") return AttentionKind::Linformer;
    if (s == "ReLU") return AttentionKind::ReLU;
    if (s == "ReLU6") return AttentionKind::ReLU6;
    if (s == "Sparsemax") return AttentionKind::Sparsemax;
    if (s == "XNorm") return AttentionKind::XNorm;
    if (s == "Square") return AttentionKind::Square;
    if (s == "2Quad") return AttentionKind::TwoQuad;
    throw ConfigError("unknown attention kind: " + s);
}

// Scaled scores QK^T / sqrt(d_k).
inline Mat attention_scores(const Mat& Q, const Mat& K) {
    Mat s = matmul(Q, transposed(K));
    double inv = 1.0 / std::sqrt(double(Q.cols));
    for (double& v : s.d) v *= inv;
    return s;
}

inline void softmax_rows_inplace(Mat& s) {
    for (std::size_t i = 0; i < s.rows; ++i) {
        double m = s.at(i, 0);
        for (std::size_t j = 1; j < s.cols; ++j) m = std::max(m, s.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < s.cols; ++j) {
            double e = std::exp(s.at(i, j) - m);
            s.at(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < s.cols; ++j) s.at(i, j) /= sum;
    }
}

inline Mat attn_softmax(const Mat& Q, const Mat& K, const Mat& V) {
    Mat s = attention_scores(Q, K);
    softmax_rows_inplace(s);
    return matmul(s, V);
}

// relu(scores) normalized per row with an epsilon guard in the denominator.
inline Mat attn_relusoftmax(const Mat& Q, const Mat& K, const Mat& V, double eps = 1e-8) {
    Mat s = attention_scores(Q, K);
    for (std::size_t i = 0; i < s.rows; ++i) {
        double sum = eps;
        for (std::size_t j = 0; j < s.cols; ++j) {
            double r = std::max(s.at(i, j), 0.0);
            s.at(i, j) = r;
            sum += r;
        }
        for (std::size_t j = 0; j < s.cols; ++j) s.at(i, j) /= sum;
    }
    return matmul(s, V);
}

// Softmax-free scaling attention (1/n)(QK^T)V with n = token count. The
// reparameterized path (Q/sqrt(n))((K^T/sqrt(n))V) is algebraically equal but
// replaces an n x n intermediate with a d_k x d_k one.
inline Mat attn_scale(const Mat& Q, const Mat& K, const Mat& V, bool reparam = true) {
    double n = double(Q.rows);
    if (!reparam) {
        Mat s = scaled(matmul(Q, transposed(K)), 1.0 / n);
        return matmul(s, V);
    }
    double inv = 1.0 / std::sqrt(n);
    Mat kv = matmul(scaled(transposed(K), inv), V);
    return matmul(scaled(Q, inv), kv);
}

// Linformer: softmax(Q (E K)^T / sqrt(d_k)) (F V) with shared k x T
// projections E, F (deterministic Gaussian / sqrt(k) from the given seed).
inline Mat linformer_projection(std::size_t k, std::size_t T, u64 seed) {
    std::mt19937_64 rng(seed);
    Mat e = Mat::randn(k, T, rng, 1.0 / std::sqrt(double(k)));
    return e;
}

inline Mat attn_linformer(const Mat& Q, const Mat& K, const Mat& V, const Mat& E, const Mat& F) {
    Mat ek = matmul(E, K);  // k x d
    Mat fv = matmul(F, V);
    Mat s = matmul(Q, transposed(ek));
    double inv = 1.0 / std::sqrt(double(Q.cols));
    for (double& v : s.d) v *= inv;
    softmax_rows_inplace(s);
    return matmul(s, fv);
}

inline Mat attn_relu(const Mat& Q, const Mat& K, const Mat& V) {
    Mat s = attention_scores(Q, K);
    for (double& v : s.d) v = std::max(v, 0.0);
    return matmul(s, V);
}

inline Mat attn_relu6(const Mat& Q, const Mat& K, const Mat& V) {
    Mat s = attention_scores(Q, K);
    for (double& v : s.d) v = std::clamp(v, 0.0, 6.0);
    return matmul(s, V);
}

// Exact sparsemax (Euclidean projection of each score row onto the simplex).
inline void sparsemax_rows_inplace(Mat& s) {
    std::vector<double> z(s.cols);
    for (std::size_t i = 0; i < s.rows; ++i) {
        for (std::size_t j = 0; j < s.cols; ++j) z[j] = s.at(i, j);
        std::sort(z.begin(), z.end(), std::greater<double>());
        double cum = 0.0, tau = 0.0;
        std::size_t support = 0;
        for (std::size_t k = 0; k < z.size(); ++k) {
            cum += z[k];
            double t = (cum - 1.0) / double(k + 1);
            if (z[k] > t) {
                support = k + 1;
                tau = t;
            }
        }
        (void)support;
        for (std::size_t j = 0; j < s.cols; ++j)
            s.at(i, j) = std::max(s.at(i, j) - tau, 0.0);
    }
}

inline Mat attn_sparsemax(const Mat& Q, const Mat& K, const Mat& V) {
    Mat s = attention_scores(Q, K);
    sparsemax_rows_inplace(s);
    return matmul(s, V);
}

// XNorm: l2-normalize Q per feature column and K^T V per row, gamma = 1:
//   out = gamma * XN_col(Q) XN_row(K^T V)
inline Mat attn_xnorm(const Mat& Q, const Mat& K, const Mat& V, double gamma = 1.0) {
    Mat qn = Q;
    for (std::size_t j = 0; j < Q.cols; ++j) {
        double ss = 0.0;
        for (std::size_t i = 0; i < Q.rows; ++i) ss += Q.at(i, j) * Q.at(i, j);
        double inv = 1.0 / std::sqrt(ss + 1e-12);
        for (std::size_t i = 0; i < Q.rows; ++i) qn.at(i, j) = Q.at(i, j) * inv;
    }
    Mat kv = matmul(transposed(K), V);  // d x d
    for (std::size_t i = 0; i < kv.rows; ++i) {
        double ss = 0.0;
        for (std::size_t j = 0; j < kv.cols; ++j) ss += kv.at(i, j) * kv.at(i, j);
        double inv = 1.0 / std::sqrt(ss + 1e-12);
        for (std::size_t j = 0; j < kv.cols; ++j) kv.at(i, j) *= inv;
    }
    return scaled(matmul(qn, kv), gamma);
}

inline Mat attn_square(const Mat& Q, const Mat& K, const Mat& V) {
    Mat s = attention_scores(Q, K);
    for (double& v : s.d) v = v * v;
    return matmul(s, V);
}

// MPCFormer-style quadratic softmax substitute: (x + c)^2 normalized per row.
inline Mat attn_2quad(const Mat& Q, const Mat& K, const Mat& V, double c = 5.0) {
    Mat s = attention_scores(Q, K);
    for (std::size_t i = 0; i < s.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < s.cols; ++j) {
            double q = s.at(i, j) + c;
            q = q * q;
            s.at(i, j) = q;
            sum += q;
        }
        if (sum > 0.0)
            for (std::size_t j = 0; j < s.cols; ++j) s.at(i, j) /= sum;
    }
    return matmul(s, V);
}

struct AttentionOpts {
    double eps = 1e-8;        // ReLUSoftmax denominator guard
    std::size_t linformer_k = 0;  // 0 -> ceil(T/2)
    u64 linformer_seed = 7;
    double quad_c = 5.0;
    double xnorm_gamma = 1.0;
    bool scale_reparam = true;
};

inline Mat apply_attention(AttentionKind kind, const Mat& Q, const Mat& K, const Mat& V,
                           const AttentionOpts& o = {}) {
    switch (kind) {
        case AttentionKind::Softmax: return attn_softmax(Q, K, V);
        case AttentionKind::ReLUSoftmax: return attn_relusoftmax(Q, K, V, o.eps);
        case AttentionKind::ScaleAttn: return attn_scale(Q, K, V, o.scale_reparam);
        case AttentionKind::Linformer: {
            std::size_t k = o.linformer_k ? o.linformer_k : (Q.rows + 1) / 2;
            Mat E = linformer_projection(k, Q.rows, o.linformer_seed);
            Mat F = linformer_projection(k, Q.rows, o.linformer_seed + 1);
            return attn_linformer(Q, K, V, E, F);
        }
        case AttentionKind::ReLU: return attn_relu(Q, K, V);
        case AttentionKind::ReLU6: return attn_relu6(Q, K, V);
        case AttentionKind::Sparsemax: return attn_sparsemax(Q, K, V);
        case AttentionKind::XNorm: return attn_xnorm(Q, K, V, o.xnorm_gamma);
        case AttentionKind::Square: return attn_square(Q, K, V);
        case AttentionKind::TwoQuad: return attn_2quad(Q, K, V, o.quad_c);
    }
    throw ConfigError("unknown attention kind");
}

}  // namespace mpcvit
