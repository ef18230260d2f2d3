#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mpcvit/attention.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace mpcvit;

namespace {
Mat randmat(std::mt19937_64& gen, size_t r, size_t c, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Mat m(r, c);
  for (auto& x : m.d) x = d(gen);
  return m;
}
}  // namespace

TEST_CASE("kind names round trip") {
  for (AttentionKind k :
       {AttentionKind::Softmax, AttentionKind::ReLUSoftmax, AttentionKind::ScaleAttn,
        AttentionKind::Linformer, AttentionKind::ReLU, AttentionKind::ReLU6,
        AttentionKind::Sparsemax, AttentionKind::XNorm, AttentionKind::Square,
        AttentionKind::TwoQuad}) {
    CHECK(attention_kind_from_string(to_string(k)) == k);
  }
  CHECK(to_string(AttentionKind::TwoQuad) == "2Quad");
  CHECK_THROWS_AS(attention_kind_from_string("nope"), ConfigError);
}

TEST_CASE("every variant produces finite t x d output") {
  std::mt19937_64 gen(3);
  size_t t = 10, dk = 8;
  Mat q = randmat(gen, t, dk), k = randmat(gen, t, dk), v = randmat(gen, t, dk);
  AttentionOpts opts;
  for (auto kind :
       {AttentionKind::Softmax, AttentionKind::ReLUSoftmax, AttentionKind::ScaleAttn,
        AttentionKind::Linformer, AttentionKind::ReLU, AttentionKind::ReLU6,
        AttentionKind::Sparsemax, AttentionKind::XNorm, AttentionKind::Square,
        AttentionKind::TwoQuad}) {
    Mat out = apply_attention(kind, q, k, v, opts);
    REQUIRE(out.rows == t);
    REQUIRE(out.cols == dk);
    for (double x : out.d) CHECK(std::isfinite(x));
  }
}

TEST_CASE("softmax rows sum to one") {
  std::mt19937_64 gen(5);
  Mat s = randmat(gen, 7, 11, 2.0);
  softmax_rows_inplace(s);
  for (size_t i = 0; i < s.rows; ++i) {
    double sum = 0;
    for (size_t j = 0; j < s.cols; ++j) {
      sum += s.at(i, j);
      CHECK(s.at(i, j) >= 0.0);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("relu-softmax weights are nonnegative and normalized") {
  std::mt19937_64 gen(6);
  size_t t = 9, dk = 4;
  Mat q = randmat(gen, t, dk), k = randmat(gen, t, dk);
  Mat v(t, dk);
  // v = identity-ish so the output exposes the weights directly
  for (size_t i = 0; i < t && i < dk; ++i) v.at(i, i) = 1.0;
  Mat scores = attention_scores(q, k);
  Mat w = scores;
  for (size_t i = 0; i < w.rows; ++i) {
    double z = 1e-8;
    for (size_t j = 0; j < w.cols; ++j) z += std::max(w.at(i, j), 0.0);
    for (size_t j = 0; j < w.cols; ++j) w.at(i, j) = std::max(w.at(i, j), 0.0) / z;
  }
  AttentionOpts opts;
  Mat out = attn_relusoftmax(q, k, v, opts.eps);
  Mat ref = matmul(w, v);
  CHECK(max_abs_diff(out, ref) < 1e-9);
}

TEST_CASE("scale attention reparameterization is exact") {
  std::mt19937_64 gen(7);
  size_t t = 16, dk = 32;
  for (int trial = 0; trial < 10; ++trial) {
    Mat q = randmat(gen, t, dk), k = randmat(gen, t, dk), v = randmat(gen, t, dk);
    Mat direct = attn_scale(q, k, v, /*reparam=*/false);
    Mat reparam = attn_scale(q, k, v, /*reparam=*/true);
    CHECK(max_abs_diff(direct, reparam) < 1e-9);
  }
}

TEST_CASE("scale attention is (1/n) QK^T V") {
  std::mt19937_64 gen(8);
  size_t t = 6, dk = 5;
  Mat q = randmat(gen, t, dk), k = randmat(gen, t, dk), v = randmat(gen, t, dk);
  Mat ref = matmul(scaled(matmul(q, transposed(k)), 1.0 / double(t)), v);
  CHECK(max_abs_diff(attn_scale(q, k, v, true), ref) < 1e-9);
}

TEST_CASE("linformer projects keys and values to k rows") {
  std::mt19937_64 gen(9);
  size_t t = 12, dk = 8, kdim = 6;
  Mat q = randmat(gen, t, dk), k = randmat(gen, t, dk), v = randmat(gen, t, dk);
  Mat e = linformer_projection(kdim, t, 7), f = linformer_projection(kdim, t, 7);
  REQUIRE(e.rows == kdim);
  REQUIRE(e.cols == t);
  CHECK(max_abs_diff(e, f) < 1e-15);  // shared projection, same seed
  Mat out = attn_linformer(q, k, v, e, f);
  // reference: softmax(q (E k)^T / sqrt(dk)) (F v)
  Mat ek = matmul(e, k), fv = matmul(f, v);
  Mat scores = attention_scores(q, ek);
  softmax_rows_inplace(scores);
  CHECK(max_abs_diff(out, matmul(scores, fv)) < 1e-12);
  // projection scaling: entries ~ N(0, 1/k)
  double ss = 0;
  for (double x : e.d) ss += x * x;
  CHECK(ss / double(e.d.size()) == doctest::Approx(1.0 / double(kdim)).epsilon(0.5));
}

TEST_CASE("sparsemax rows satisfy simplex KKT conditions") {
  std::mt19937_64 gen(10);
  size_t t = 8, dk = 8;
  Mat q = randmat(gen, t, dk, 2.0), k = randmat(gen, t, dk, 2.0);
  Mat v(t, dk);
  for (size_t i = 0; i < t; ++i) v.at(i, i % dk) = 1.0;
  Mat scores = attention_scores(q, k);
  Mat out = attn_sparsemax(q, k, v);
  // recover weights via v's one-hot columns: out(i,c) collects weights of the
  // rows j with j % dk == c; use dk == t so the map is 1-1
  for (size_t i = 0; i < t; ++i) {
    std::vector<double> w(t);
    for (size_t j = 0; j < t; ++j) w[j] = out.at(i, j % dk);
    double sum = std::accumulate(w.begin(), w.end(), 0.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    // KKT: active coordinates share a common z - tau, inactive have z <= tau
    double tau = -1e30;
    for (size_t j = 0; j < t; ++j)
      if (w[j] > 1e-12) tau = std::max(tau, scores.at(i, j) - w[j]);
    for (size_t j = 0; j < t; ++j) {
      if (w[j] > 1e-12)
        CHECK(scores.at(i, j) - w[j] == doctest::Approx(tau).epsilon(1e-6));
      else
        CHECK(scores.at(i, j) <= tau + 1e-9);
    }
  }
}

TEST_CASE("sparsemax saturates to argmax for peaked scores") {
  Mat q(1, 2), k(2, 2), v(2, 2);
  q.at(0, 0) = 100.0;
  k.at(0, 0) = 1.0;
  k.at(1, 0) = -1.0;
  v.at(0, 0) = 1.0;
  v.at(1, 1) = 1.0;
  Mat out = attn_sparsemax(q, k, v);
  CHECK(out.at(0, 0) == doctest::Approx(1.0));
  CHECK(out.at(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("xnorm normalizes q columns and kv rows") {
  std::mt19937_64 gen(11);
  size_t t = 10, dk = 6;
  Mat q = randmat(gen, t, dk), k = randmat(gen, t, dk), v = randmat(gen, t, dk);
  Mat out = attn_xnorm(q, k, v, 1.0);
  // reproduce: Q with unit-norm columns, (K^T V) with unit-norm rows
  Mat qn = q;
  for (size_t j = 0; j < dk; ++j) {
    double ss = 0;
    for (size_t i = 0; i < t; ++i) ss += q.at(i, j) * q.at(i, j);
    double inv = 1.0 / std::sqrt(ss);
    for (size_t i = 0; i < t; ++i) qn.at(i, j) *= inv;
  }
  Mat kv = matmul(transposed(k), v);
  for (size_t i = 0; i < kv.rows; ++i) {
    double ss = 0;
    for (size_t j = 0; j < kv.cols; ++j) ss += kv.at(i, j) * kv.at(i, j);
    double inv = 1.0 / std::sqrt(ss);
    for (size_t j = 0; j < kv.cols; ++j) kv.at(i, j) *= inv;
  }
  CHECK(max_abs_diff(out, matmul(qn, kv)) < 1e-12);
}

TEST_CASE("2quad rows are normalized squares") {
  std::mt19937_64 gen(12);
  size_t t = 4, dk = 4;  // dk == t so one-hot V is a permutation
  Mat q = randmat(gen, t, dk), k = randmat(gen, t, dk);
  Mat v(t, dk);
  for (size_t i = 0; i < t; ++i) v.at(i, i % dk) = 1.0;
  Mat scores = attention_scores(q, k);
  Mat out = attn_2quad(q, k, v, 5.0);
  for (size_t i = 0; i < t; ++i) {
    double z = 0;
    for (size_t j = 0; j < t; ++j) {
      double u = scores.at(i, j) + 5.0;
      z += u * u;
    }
    for (size_t j = 0; j < t && j < dk; ++j) {
      double u = scores.at(i, j) + 5.0;
      if (size_t(j % dk) == j)  // one-hot columns map 1-1 for j < dk
        CHECK(out.at(i, j) == doctest::Approx(u * u / z).epsilon(1e-9));
    }
  }
}

TEST_CASE("relu and relu6 variants clip scores") {
  Mat q(1, 1), k(2, 1), v(2, 1);
  q.at(0, 0) = 10.0;
  k.at(0, 0) = 1.0;
  k.at(1, 0) = -1.0;
  v.at(0, 0) = 1.0;
  v.at(1, 0) = 1.0;
  // scores = [10, -10] (dk=1 so scale=1)
  Mat r = attn_relu(q, k, v);
  CHECK(r.at(0, 0) == doctest::Approx(10.0));
  Mat r6 = attn_relu6(q, k, v);
  CHECK(r6.at(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("default linformer dim is ceil(t/2)") {
  AttentionOpts opts;
  std::mt19937_64 gen(13);
  size_t t = 9, dk = 4;
  Mat q = randmat(gen, t, dk), k = randmat(gen, t, dk), v = randmat(gen, t, dk);
  Mat out = apply_attention(AttentionKind::Linformer, q, k, v, opts);
  REQUIRE(out.rows == t);
  Mat e = linformer_projection((t + 1) / 2, t, opts.linformer_seed);
  Mat f = linformer_projection((t + 1) / 2, t, opts.linformer_seed + 1);
  CHECK(max_abs_diff(out, attn_linformer(q, k, v, e, f)) < 1e-12);
}
