#pragma once

#include <cstddef>
#include <vector>

#include "mpcvit/runtime.hpp"

namespace mpcvit {

// Nonlinear kernels on additively shared fixed-point values. Everything is
// built from the runtime primitives so traffic lands in the meter under
// "mul" / "matmul" / "compare"; public-constant work is free.

// Multiply by a public real: local integer multiply by encode(c), then one
// idealized truncation to drop the extra scale.
inline SharedVec mul_public_fixed(Session& s, const SharedVec& x, double c) {
    SharedVec y = s.mul_public_int(x, encode(c, s.params()));
    return s.truncate_shares(y, s.params().f);
}

// exp(x) ~= (1 + x/2^n)^(2^n): one public shift, then n squarings.
inline SharedVec mpc_exp(Session& s, const SharedVec& x, int n = 8) {
    SharedVec y = s.truncate_shares(x, n);  // x / 2^n
    y = s.add_public(y, encode(1.0, s.params()));
    for (int i = 0; i < n; ++i) y = s.mul_fixed(y, y);
    return y;
}

// Newton reciprocal with the published initializer y0 = 3 e^{0.5 - x} + 0.003.
// Converges iff 0 < x*y0 < 2, which holds on roughly (0, 666).
inline SharedVec mpc_reciprocal(Session& s, const SharedVec& x, int iters = 13) {
    const RingParams& p = s.params();
    SharedVec e = mpc_exp(s, s.add_public(s.neg(x), encode(0.5, p)));
    SharedVec y = mul_public_fixed(s, e, 3.0);
    y = s.add_public(y, encode(0.003, p));
    u64 two = encode(2.0, p);
    for (int i = 0; i < iters; ++i) {
        SharedVec t = s.mul_fixed(x, y);                // x*y
        SharedVec u = s.add_public(s.neg(t), two);      // 2 - x*y
        y = s.mul_fixed(y, u);
    }
    return y;
}

// relu(x) = [x >= 0] * x. The comparison bit is an integer share, so the
// product is an exact ring multiply with no truncation.
inline SharedVec mpc_relu(Session& s, const SharedVec& x) {
    SharedVec bit = s.drelu(x);
    return s.mul_shares(bit, x);
}

// Tournament-tree max over a shared vector; one batched comparison per tree
// level, so a k-element input costs ceil(log2 k) compare rounds.
inline SharedVec mpc_max(Session& s, const SharedVec& x) {
    if (x.size() == 0) throw ShapeError("mpc_max on empty vector");
    SharedVec cur = x;
    while (cur.size() > 1) {
        std::size_t pairs = cur.size() / 2;
        bool odd = cur.size() % 2 != 0;
        SharedVec a, b;
        a.v0.assign(cur.v0.begin(), cur.v0.begin() + pairs);
        a.v1.assign(cur.v1.begin(), cur.v1.begin() + pairs);
        b.v0.assign(cur.v0.begin() + pairs, cur.v0.begin() + 2 * pairs);
        b.v1.assign(cur.v1.begin() + pairs, cur.v1.begin() + 2 * pairs);
        SharedVec diff = s.sub(a, b);
        SharedVec bit = s.drelu(diff);                  // [a - b >= 0]
        SharedVec win = s.add(b, s.mul_shares(bit, diff));  // b + bit*(a-b)
        if (odd) {
            win.v0.push_back(cur.v0.back());
            win.v1.push_back(cur.v1.back());
        }
        cur = win;
    }
    return cur;
}

// Shared row-wise softmax, max-stabilized: e^{x_i - max} / sum_j e^{x_j - max}.
inline SharedVec mpc_softmax_row(Session& s, const SharedVec& row) {
    const RingParams& p = s.params();
    SharedVec m = mpc_max(s, row);
    SharedVec shifted = row;
    for (std::size_t i = 0; i < row.size(); ++i) {
        shifted.v0[i] = ring_sub(row.v0[i], m.v0[0], p);
        shifted.v1[i] = ring_sub(row.v1[i], m.v1[0], p);
    }
    SharedVec e = mpc_exp(s, shifted);
    SharedVec sum;
    sum.v0.assign(1, 0);
    sum.v1.assign(1, 0);
    for (std::size_t i = 0; i < e.size(); ++i) {
        sum.v0[0] = ring_add(sum.v0[0], e.v0[i], p);
        sum.v1[0] = ring_add(sum.v1[0], e.v1[i], p);
    }
    SharedVec inv = mpc_reciprocal(s, sum);
    SharedVec invb;
    invb.v0.assign(e.size(), inv.v0[0]);
    invb.v1.assign(e.size(), inv.v1[0]);
    return s.mul_fixed(e, invb);
}

// ReLU-based softmax substitute: relu(x_i) / (sum_j relu(x_j) + eps). If eps
// encodes to zero it is bumped to the smallest positive fixed-point value so
// the denominator stays nonzero on all-negative rows.
inline SharedVec mpc_relusoftmax_row(Session& s, const SharedVec& row, double eps = 1e-8) {
    const RingParams& p = s.params();
    SharedVec r = mpc_relu(s, row);
    u64 eps_fx = encode(eps, p);
    if (eps_fx == 0) eps_fx = 1;
    SharedVec sum;
    sum.v0.assign(1, eps_fx);  // party 0 absorbs the public eps
    sum.v1.assign(1, 0);
    for (std::size_t i = 0; i < r.size(); ++i) {
        sum.v0[0] = ring_add(sum.v0[0], r.v0[i], p);
        sum.v1[0] = ring_add(sum.v1[0], r.v1[i], p);
    }
    SharedVec inv = mpc_reciprocal(s, sum);
    SharedVec invb;
    invb.v0.assign(r.size(), inv.v0[0]);
    invb.v1.assign(r.size(), inv.v1[0]);
    return s.mul_fixed(r, invb);
}

// tanh-based GeLU, evaluated in a sign-split stable form:
//   u = sqrt(2/pi) (x + 0.044715 x^3)
//   sign = 2*[u >= 0] - 1,  a = |u| clamped to <= 8
//   w = exp(-2a) in (0,1],  tanh(u) = sign * (1-w) * recip(1+w)
//   gelu(x) = 0.5 x (1 + tanh(u))
// The reciprocal argument 1+w stays in [1,2], inside the Newton initializer's
// convergence region for any input magnitude.
inline SharedVec mpc_gelu(Session& s, const SharedVec& x) {
    const RingParams& p = s.params();
    SharedVec x2 = s.mul_fixed(x, x);
    SharedVec x3 = s.mul_fixed(x2, x);
    SharedVec u = s.add(x, mul_public_fixed(s, x3, 0.044715));
    u = mul_public_fixed(s, u, 0.7978845608028654);  // sqrt(2/pi)

    SharedVec bit = s.drelu(u);
    SharedVec sign = s.add_public(s.mul_public_int(bit, 2), ring_neg(1, p));  // +-1 integer
    SharedVec a = s.mul_shares(u, sign);  // |u|, exact ring product

    // a' = a - relu(a - 8) keeps exp(-2a') well above fixed-point underflow.
    SharedVec over = s.add_public(a, ring_neg(encode(8.0, p), p));
    SharedVec ap = s.sub(a, mpc_relu(s, over));

    SharedVec w = mpc_exp(s, s.mul_public_int(ap, ring_neg(2, p)));  // exp(-2a')
    u64 one = encode(1.0, p);
    SharedVec num = s.add_public(s.neg(w), one);   // 1 - w
    SharedVec den = s.add_public(w, one);          // 1 + w
    SharedVec t = s.mul_fixed(num, mpc_reciprocal(s, den));
    SharedVec tanh_u = s.mul_shares(t, sign);      // exact: sign is +-1 integer

    SharedVec prod = s.mul_fixed(x, s.add_public(tanh_u, one));  // x (1 + tanh)
    return s.truncate_shares(prod, 1);                            // * 0.5
}

// Newton inverse square root for LayerNorm: y <- 0.5 y (3 - v y^2). The seed
// mirrors the reciprocal initializer's shape; 14 iterations cover [1e-4, 300].
inline SharedVec mpc_isqrt(Session& s, const SharedVec& v, int iters = 14) {
    const RingParams& p = s.params();
    SharedVec scaled = s.truncate_shares(v, 1);                   // v/2
    SharedVec e = mpc_exp(s, s.neg(s.add_public(scaled, encode(0.2, p))));
    SharedVec y = mul_public_fixed(s, e, 2.2);
    y = s.add(y, mul_public_fixed(s, v, -0.0005));
    y = s.add_public(y, encode(0.2, p));
    u64 three = encode(3.0, p);
    for (int i = 0; i < iters; ++i) {
        SharedVec y2 = s.mul_fixed(y, y);
        SharedVec vy2 = s.mul_fixed(v, y2);
        SharedVec t = s.add_public(s.neg(vy2), three);
        y = s.truncate_shares(s.mul_fixed(y, t), 1);
    }
    return y;
}

// LayerNorm over one shared row with public affine parameters gamma/beta.
inline SharedVec mpc_layernorm_row(Session& s, const SharedVec& row,
                                   const std::vector<double>& gamma,
                                   const std::vector<double>& beta,
                                   double ln_eps = 1e-5) {
    const RingParams& p = s.params();
    std::size_t n = row.size();
    if (gamma.size() != n || beta.size() != n)
        throw ShapeError("layernorm parameter size mismatch");
    SharedVec sum;
    sum.v0.assign(1, 0);
    sum.v1.assign(1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        sum.v0[0] = ring_add(sum.v0[0], row.v0[i], p);
        sum.v1[0] = ring_add(sum.v1[0], row.v1[i], p);
    }
    SharedVec mean = mul_public_fixed(s, sum, 1.0 / double(n));
    SharedVec centered = row;
    for (std::size_t i = 0; i < n; ++i) {
        centered.v0[i] = ring_sub(row.v0[i], mean.v0[0], p);
        centered.v1[i] = ring_sub(row.v1[i], mean.v1[0], p);
    }
    SharedVec sq = s.mul_fixed(centered, centered);
    SharedVec var;
    var.v0.assign(1, 0);
    var.v1.assign(1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        var.v0[0] = ring_add(var.v0[0], sq.v0[i], p);
        var.v1[0] = ring_add(var.v1[0], sq.v1[i], p);
    }
    var = mul_public_fixed(s, var, 1.0 / double(n));
    var = s.add_public(var, encode(ln_eps, p));
    SharedVec inv = mpc_isqrt(s, var);
    SharedVec invb;
    invb.v0.assign(n, inv.v0[0]);
    invb.v1.assign(n, inv.v1[0]);
    SharedVec normed = s.mul_fixed(centered, invb);
    SharedVec out = normed;
    for (std::size_t i = 0; i < n; ++i) {
        SharedVec one_elem;
        one_elem.v0.assign(1, normed.v0[i]);
        one_elem.v1.assign(1, normed.v1[i]);
        // gamma/beta are public: scale locally, then shift party 0.
        u64 g = encode(gamma[i], p);
        u64 scaled0 = ring_mul(one_elem.v0[0], g, p);
        u64 scaled1 = ring_mul(one_elem.v1[0], g, p);
        SharedVec tmp;
        tmp.v0.assign(1, scaled0);
        tmp.v1.assign(1, scaled1);
        tmp = s.truncate_shares(tmp, p.f);
        out.v0[i] = ring_add(tmp.v0[0], encode(beta[i], p), p);
        out.v1[i] = tmp.v1[0];
    }
    return out;
}

}  // namespace mpcvit
