#include "mpcvit/mpc_vit.hpp"

#include <algorithm>
#include <cmath>

#include "mpcvit/kernels.hpp"

namespace mpcvit {

SharedVec share_mat(Session& s, const Mat& m) {
    std::vector<u64> clear(m.d.size());
    for (std::size_t i = 0; i < m.d.size(); ++i) clear[i] = encode(m.d[i], s.params());
    return s.share(clear);
}

namespace {

// Select elements [begin, end) of a shared vector (local).
SharedVec slice(const SharedVec& x, std::size_t begin, std::size_t end) {
    SharedVec out;
    out.v0.assign(x.v0.begin() + long(begin), x.v0.begin() + long(end));
    out.v1.assign(x.v1.begin() + long(begin), x.v1.begin() + long(end));
    return out;
}

void append(SharedVec& dst, const SharedVec& src) {
    dst.v0.insert(dst.v0.end(), src.v0.begin(), src.v0.end());
    dst.v1.insert(dst.v1.end(), src.v1.begin(), src.v1.end());
}

// Transpose a shared row-major matrix (local reindex).
SharedVec transpose_shares(const SharedVec& x, std::size_t rows, std::size_t cols) {
    SharedVec out;
    out.v0.resize(x.size());
    out.v1.resize(x.size());
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            out.v0[j * rows + i] = x.v0[i * cols + j];
            out.v1[j * rows + i] = x.v1[i * cols + j];
        }
    return out;
}

// Row sums of a shared matrix (local adds).
SharedVec row_sums(Session& s, const SharedVec& x, std::size_t rows, std::size_t cols) {
    const RingParams& p = s.params();
    SharedVec out;
    out.v0.assign(rows, 0);
    out.v1.assign(rows, 0);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            out.v0[i] = ring_add(out.v0[i], x.v0[i * cols + j], p);
            out.v1[i] = ring_add(out.v1[i], x.v1[i * cols + j], p);
        }
    return out;
}

// Broadcast a length-rows vector across cols (local).
SharedVec broadcast_rows(const SharedVec& v, std::size_t rows, std::size_t cols) {
    SharedVec out;
    out.v0.resize(rows * cols);
    out.v1.resize(rows * cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            out.v0[i * cols + j] = v.v0[i];
            out.v1[i * cols + j] = v.v1[i];
        }
    return out;
}

// LayerNorm over each row of a shared matrix, batched so the inverse sqrt
// runs once over the vector of row variances. gamma/beta are public.
SharedVec layernorm_rows_shared(Session& s, const SharedVec& x, std::size_t rows,
                                std::size_t cols, const Mat& gamma, const Mat& beta,
                                double ln_eps) {
    const RingParams& p = s.params();
    SharedVec mean = mul_public_fixed(s, row_sums(s, x, rows, cols), 1.0 / double(cols));
    SharedVec centered = s.sub(x, broadcast_rows(mean, rows, cols));
    SharedVec sq = s.mul_fixed(centered, centered);
    SharedVec var = mul_public_fixed(s, row_sums(s, sq, rows, cols), 1.0 / double(cols));
    var = s.add_public(var, encode(ln_eps, p));
    SharedVec inv = mpc_isqrt(s, var);
    SharedVec normed = s.mul_fixed(centered, broadcast_rows(inv, rows, cols));
    // Public affine: per-column scale then shift party 0's share.
    SharedVec out = normed;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            u64 g = encode(gamma.d[j], p);
            out.v0[i * cols + j] = ring_mul(normed.v0[i * cols + j], g, p);
            out.v1[i * cols + j] = ring_mul(normed.v1[i * cols + j], g, p);
        }
    out = s.truncate_shares(out, p.f);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            out.v0[i * cols + j] = ring_add(out.v0[i * cols + j], encode(beta.d[j], p), p);
    return out;
}

// ReLUSoftmax over all rows of a shared score matrix, batched: one drelu over
// the whole matrix, one reciprocal invocation over the row sums.
SharedVec relusoftmax_rows_shared(Session& s, const SharedVec& scores, std::size_t rows,
                                  std::size_t cols, double eps) {
    const RingParams& p = s.params();
    SharedVec bit = s.drelu(scores);
    SharedVec r = s.mul_shares(bit, scores);
    SharedVec sum = row_sums(s, r, rows, cols);
    u64 eps_fx = encode(eps, p);
    if (eps_fx == 0) eps_fx = 1;
    sum = s.add_public(sum, eps_fx);
    SharedVec inv = mpc_reciprocal(s, sum);
    return s.mul_fixed(r, broadcast_rows(inv, rows, cols));
}

// Sign-split GeLU over a whole shared matrix (same op sequence as mpc_gelu).
SharedVec gelu_shared(Session& s, const SharedVec& x) { return mpc_gelu(s, x); }

}  // namespace

MpcForwardResult mpc_forward(const ViTModel& model, const Mat& image, Session& s) {
    const ViTConfig& c = model.cfg;
    const RingParams& p = s.params();
    std::size_t t = std::size_t(c.tokens()), C = std::size_t(c.dim);
    std::size_t dk = std::size_t(c.head_dim()), K = std::size_t(c.mlp_dim());
    std::size_t pd = std::size_t(c.patch_dim()), patches = t - 1;

    // --- share weights (LayerNorm affines stay public) ---
    SharedVec patch_w = share_mat(s, model.patch_w.value());
    SharedVec patch_b = share_mat(s, model.patch_b.value());
    SharedVec cls = share_mat(s, model.cls_token.value());
    SharedVec pos = share_mat(s, model.pos_emb.value());
    struct BlockShares {
        std::vector<SharedVec> wq, wk, wv;
        SharedVec wo, bo, w1, b1, w2, b2, wf, bf;
    };
    std::vector<BlockShares> bs(std::size_t(c.depth));
    for (int l = 0; l < c.depth; ++l) {
        const BlockParams& b = model.blocks[std::size_t(l)];
        for (int n = 0; n < c.heads; ++n) {
            bs[std::size_t(l)].wq.push_back(share_mat(s, b.wq[std::size_t(n)].value()));
            bs[std::size_t(l)].wk.push_back(share_mat(s, b.wk[std::size_t(n)].value()));
            bs[std::size_t(l)].wv.push_back(share_mat(s, b.wv[std::size_t(n)].value()));
        }
        bs[std::size_t(l)].wo = share_mat(s, b.wo.value());
        bs[std::size_t(l)].bo = share_mat(s, b.bo.value());
        if (b.fused) {
            bs[std::size_t(l)].wf = share_mat(s, b.wf.value());
            bs[std::size_t(l)].bf = share_mat(s, b.bf.value());
        } else {
            bs[std::size_t(l)].w1 = share_mat(s, b.w1.value());
            bs[std::size_t(l)].b1 = share_mat(s, b.b1.value());
            bs[std::size_t(l)].w2 = share_mat(s, b.w2.value());
            bs[std::size_t(l)].b2 = share_mat(s, b.b2.value());
        }
    }
    SharedVec head_w = share_mat(s, model.head_w.value());
    SharedVec head_b = share_mat(s, model.head_b.value());

    // --- share the input sample ---
    SharedVec px = share_mat(s, patchify(image, c));

    auto add_bias_rows = [&](SharedVec& X, const SharedVec& bias, std::size_t rows,
                             std::size_t cols) {
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
                X.v0[i * cols + j] = ring_add(X.v0[i * cols + j], bias.v0[j], p);
                X.v1[i * cols + j] = ring_add(X.v1[i * cols + j], bias.v1[j], p);
            }
    };

    // --- embedding ---
    SharedVec emb = s.matmul_fixed(px, patches, pd, patch_w, C);
    add_bias_rows(emb, patch_b, patches, C);
    SharedVec x = cls;
    append(x, emb);
    x = s.add(x, pos);

    double inv_sqrt_dk = 1.0 / std::sqrt(double(dk));
    double inv_sqrt_n = 1.0 / std::sqrt(double(t));

    for (int l = 0; l < c.depth; ++l) {
        const BlockParams& b = model.blocks[std::size_t(l)];
        SharedVec h = layernorm_rows_shared(s, x, t, C, model.blocks[std::size_t(l)].ln1_g.value(),
                                            model.blocks[std::size_t(l)].ln1_b.value(), c.ln_eps);
        SharedVec cat;
        cat.v0.resize(t * C);
        cat.v1.resize(t * C);
        for (int n = 0; n < c.heads; ++n) {
            SharedVec Q = s.matmul_fixed(h, t, C, bs[std::size_t(l)].wq[std::size_t(n)], dk);
            SharedVec Km = s.matmul_fixed(h, t, C, bs[std::size_t(l)].wk[std::size_t(n)], dk);
            SharedVec V = s.matmul_fixed(h, t, C, bs[std::size_t(l)].wv[std::size_t(n)], dk);
            bool rsattn = model.alpha.value().at(std::size_t(l), std::size_t(n)) >= 0.5;
            SharedVec out;
            if (rsattn) {
                SharedVec Kt = transpose_shares(Km, t, dk);
                SharedVec scores = s.matmul_fixed(Q, t, dk, Kt, t);
                scores = mul_public_fixed(s, scores, inv_sqrt_dk);
                SharedVec w = relusoftmax_rows_shared(s, scores, t, t, c.rs_eps);
                out = s.matmul_fixed(w, t, t, V, dk);
            } else {
                // Reparameterized ScaleAttn with the mixed-forward 1/sqrt(d_k):
                // (Q/sqrt n)((K^T/sqrt n) V) / sqrt(d_k).
                SharedVec Kt = transpose_shares(mul_public_fixed(s, Km, inv_sqrt_n), t, dk);
                SharedVec kv = s.matmul_fixed(Kt, dk, t, V, dk);
                SharedVec Qs = mul_public_fixed(s, Q, inv_sqrt_n);
                out = s.matmul_fixed(Qs, t, dk, kv, dk);
                out = mul_public_fixed(s, out, inv_sqrt_dk);
            }
            for (std::size_t i = 0; i < t; ++i)
                for (std::size_t j = 0; j < dk; ++j) {
                    cat.v0[i * C + std::size_t(n) * dk + j] = out.v0[i * dk + j];
                    cat.v1[i * C + std::size_t(n) * dk + j] = out.v1[i * dk + j];
                }
        }
        SharedVec attn = s.matmul_fixed(cat, t, C, bs[std::size_t(l)].wo, C);
        add_bias_rows(attn, bs[std::size_t(l)].bo, t, C);
        x = s.add(x, attn);

        SharedVec h2 = layernorm_rows_shared(s, x, t, C, b.ln2_g.value(), b.ln2_b.value(),
                                             c.ln_eps);
        SharedVec mlp;
        if (b.fused) {
            mlp = s.matmul_fixed(h2, t, C, bs[std::size_t(l)].wf, C);
            add_bias_rows(mlp, bs[std::size_t(l)].bf, t, C);
            if (model.relu_added) mlp = mpc_relu(s, mlp);
        } else {
            SharedVec pre = s.matmul_fixed(h2, t, C, bs[std::size_t(l)].w1, K);
            add_bias_rows(pre, bs[std::size_t(l)].b1, t, K);
            SharedVec act = model.beta.value().at(std::size_t(l), 0) >= 0.5
                                ? gelu_shared(s, pre)
                                : pre;
            mlp = s.matmul_fixed(act, t, K, bs[std::size_t(l)].w2, C);
            add_bias_rows(mlp, bs[std::size_t(l)].b2, t, C);
        }
        x = s.add(x, mlp);
    }

    SharedVec f = layernorm_rows_shared(s, x, t, C, model.ln_f_g.value(), model.ln_f_b.value(),
                                        c.ln_eps);
    SharedVec cls_row = slice(f, 0, C);
    SharedVec logits = s.matmul_fixed(cls_row, 1, C, head_w, std::size_t(c.classes));
    add_bias_rows(logits, head_b, 1, std::size_t(c.classes));

    std::vector<u64> open = s.reconstruct(logits);
    MpcForwardResult r;
    r.logits.resize(open.size());
    for (std::size_t i = 0; i < open.size(); ++i) r.logits[i] = decode(open[i], p);
    r.argmax = int(std::max_element(r.logits.begin(), r.logits.end()) - r.logits.begin());
    return r;
}

}  // namespace mpcvit
