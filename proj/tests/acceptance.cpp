// Acceptance gate: one pass/fail line per criterion, exit code = #failures.
//
// Criteria are property/oracle based at desk scale: exact sharing, kernel
// fidelity against double-precision oracles of the same formulas, trend-level
// reproductions (softmax error vs variance, Pareto direction, KD direction),
// and exact contract checks (binarization counts, comm metering, cost-table
// ordering).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mpcvit/attention.hpp"
#include "mpcvit/cost.hpp"
#include "mpcvit/data.hpp"
#include "mpcvit/distill.hpp"
#include "mpcvit/kernels.hpp"
#include "mpcvit/mpc_vit.hpp"
#include "mpcvit/nas.hpp"
#include "mpcvit/vit.hpp"

using namespace mpcvit;

namespace {

const RingParams kRing{64, 18};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::vector<double> decode_all(Session& s, const SharedVec& sv) {
  auto r = s.reconstruct(sv);
  std::vector<double> out(r.size());
  for (size_t i = 0; i < r.size(); ++i) out[i] = decode(r[i], kRing);
  return out;
}

SharedVec share_doubles(Session& s, const std::vector<double>& xs) {
  std::vector<u64> e(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) e[i] = encode(xs[i], kRing);
  return s.share(e);
}

double oracle_exp(double x, int n = 8) {
  double y = 1.0 + x / std::ldexp(1.0, n);
  for (int i = 0; i < n; ++i) y = y * y;
  return y;
}

double oracle_gelu(double x) {
  constexpr double c = 0.7978845608028654;
  return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

// --------------------------------------------------------------------------
// 1. sharing correctness
// --------------------------------------------------------------------------
Outcome criterion1() {
  Session s(kRing, 1);
  std::mt19937_64 gen(101);
  std::vector<u64> xs(10000);
  for (auto& x : xs) x = gen();
  auto back = s.reconstruct(s.share(xs));
  size_t exact = 0;
  for (size_t i = 0; i < xs.size(); ++i) exact += (back[i] == xs[i]);

  std::vector<u64> as(1000), bs(1000);
  for (auto& a : as) a = gen();
  for (auto& b : bs) b = gen();
  TripleBatch triples = s.deal_triples(1000);
  auto prod = s.reconstruct(s.mul_shares(s.share(as), s.share(bs), triples));
  size_t mul_exact = 0;
  for (size_t i = 0; i < as.size(); ++i)
    mul_exact += (prod[i] == ring_mul(as[i], bs[i], kRing));

  std::ostringstream d;
  d << exact << "/10000 roundtrips exact, " << mul_exact << "/1000 beaver products exact";
  return {exact == 10000 && mul_exact == 1000, d.str()};
}

// --------------------------------------------------------------------------
// 2. kernel fidelity vs same-formula oracles
// --------------------------------------------------------------------------
Outcome criterion2() {
  Session s(kRing, 2);
  double worst_exp = 0, worst_recip = 0, worst_gelu = 0;

  std::vector<double> xs;
  for (double x = -4.0; x <= 2.0 + 1e-9; x += 0.05) xs.push_back(x);
  auto ex = decode_all(s, mpc_exp(s, share_doubles(s, xs)));
  for (size_t i = 0; i < xs.size(); ++i)
    worst_exp = std::max(worst_exp,
                         std::abs(ex[i] - oracle_exp(xs[i])) / std::abs(oracle_exp(xs[i])));

  std::vector<double> rs;
  for (double e = -1.0; e <= 2.0 + 1e-9; e += 0.02) rs.push_back(std::pow(10.0, e));
  auto ry = decode_all(s, mpc_reciprocal(s, share_doubles(s, rs)));
  for (size_t i = 0; i < rs.size(); ++i)
    worst_recip = std::max(worst_recip, std::abs(rs[i] * ry[i] - 1.0));

  std::vector<double> gs;
  for (double x = -4.0; x <= 4.0 + 1e-9; x += 0.02) gs.push_back(x);
  auto gy = decode_all(s, mpc_gelu(s, share_doubles(s, gs)));
  for (size_t i = 0; i < gs.size(); ++i)
    worst_gelu = std::max(worst_gelu, std::abs(gy[i] - oracle_gelu(gs[i])));

  std::ostringstream d;
  d << "exp rel err " << worst_exp << " (<=0.01), recip |xy-1| " << worst_recip
    << " (<=1e-3), gelu abs err " << worst_gelu << " (<=1e-2)";
  return {worst_exp <= 1e-2 && worst_recip <= 1e-3 && worst_gelu <= 1e-2, d.str()};
}

// --------------------------------------------------------------------------
// 3. softmax error grows with variance; relu-softmax stays below it
// --------------------------------------------------------------------------
Outcome criterion3() {
  std::vector<double> grid{1, 2, 5, 10};
  std::vector<double> sm_err, rs_err;
  std::mt19937_64 gen(303);
  for (double var : grid) {
    std::normal_distribution<double> dist(0.0, std::sqrt(var));
    Session s(kRing, 3);
    double sm = 0, rs = 0;
    int rows = 100, n = 16;
    for (int r = 0; r < rows; ++r) {
      std::vector<double> row(n);
      for (auto& x : row) x = dist(gen);

      // per-element relative error: large-variance rows push entries deep
      // into the exp approximation's inaccurate region
      const double ulp = std::ldexp(1.0, -18);
      auto sm_mpc = decode_all(s, mpc_softmax_row(s, share_doubles(s, row)));
      double mx = *std::max_element(row.begin(), row.end());
      std::vector<double> ref(n);
      double z = 0;
      for (int i = 0; i < n; ++i) z += (ref[i] = std::exp(row[i] - mx));
      double acc = 0;
      for (int i = 0; i < n; ++i) {
        ref[i] /= z;
        acc += std::abs(sm_mpc[i] - ref[i]) / std::max(ref[i], ulp);
      }
      sm += acc / n;

      auto rs_mpc = decode_all(s, mpc_relusoftmax_row(s, share_doubles(s, row), 1e-8));
      double zr = 1e-8;
      for (int i = 0; i < n; ++i) zr += std::max(row[i], 0.0);
      acc = 0;
      for (int i = 0; i < n; ++i) {
        double rref = std::max(row[i], 0.0) / zr;
        acc += std::abs(rs_mpc[i] - rref) / std::max(rref, ulp);
      }
      rs += acc / n;
    }
    sm_err.push_back(sm / rows);
    rs_err.push_back(rs / rows);
  }
  bool monotone = true;
  for (size_t i = 0; i + 1 < sm_err.size(); ++i)
    monotone = monotone && (sm_err[i + 1] >= sm_err[i] - 1e-12);
  bool dominated = sm_err.back() > rs_err.back();
  std::ostringstream d;
  d << "softmax rel err over variance {1,2,5,10}: ";
  for (double e : sm_err) d << e << " ";
  d << "(non-decreasing: " << (monotone ? "yes" : "NO")
    << "); relu-softmax at var 10: " << rs_err.back();
  return {monotone && dominated, d.str()};
}

// --------------------------------------------------------------------------
// 4. scale-attention reparameterization
// --------------------------------------------------------------------------
Outcome criterion4() {
  std::mt19937_64 gen(404);
  std::normal_distribution<double> dist(0.0, 1.0);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    size_t n = 16, dk = 32;
    Mat q(n, dk), k(n, dk), v(n, dk);
    for (auto& x : q.d) x = dist(gen);
    for (auto& x : k.d) x = dist(gen);
    for (auto& x : v.d) x = dist(gen);
    worst = std::max(worst, max_abs_diff(attn_scale(q, k, v, false),
                                         attn_scale(q, k, v, true)));
  }
  std::ostringstream d;
  d << "max |direct - reparam| = " << worst << " over 100 instances (<=1e-6)";
  return {worst <= 1e-6, d.str()};
}

// --------------------------------------------------------------------------
// 5. linear fusion exactness + cost direction
// --------------------------------------------------------------------------
Outcome criterion5() {
  std::mt19937_64 gen(505);
  std::normal_distribution<double> dist(0.0, 1.0);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    size_t t = 16, C = 32, K = 128;
    Mat x(t, C), w1(C, K), w2(K, C);
    for (auto& e : x.d) e = dist(gen);
    for (auto& e : w1.d) e = dist(gen);
    for (auto& e : w2.d) e = dist(gen);
    Mat fused = matmul(x, matmul(w1, w2));
    Mat twostep = matmul(matmul(x, w1), w2);
    worst = std::max(worst, max_abs_diff(fused, twostep));
  }
  ViTConfig cfg;
  cfg.mlp_ratio = 4;  // C=32 -> K=128
  const CostTable& table = CostTable::default_table();
  double fused_cost = mlp_matmul_latency(cfg, true, table);
  double unfused_cost = mlp_matmul_latency(cfg, false, table);
  std::ostringstream d;
  d << "max assoc err " << worst << " (<=1e-5); fused " << fused_cost << " s < unfused "
    << unfused_cost << " s";
  return {worst <= 1e-5 && fused_cost < unfused_cost, d.str()};
}

// --------------------------------------------------------------------------
// 6. gradient integrity (finite differences)
// --------------------------------------------------------------------------
double fd_check(std::vector<Tensor> params, const std::function<Tensor()>& build,
                double h = 1e-5) {
  for (auto& p : params) p.zero_grad();
  Tensor loss = build();
  loss.backward();
  std::vector<Mat> analytic;
  for (auto& p : params) analytic.push_back(p.grad());
  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Mat& v = params[pi].value_mut();
    for (size_t i = 0; i < v.d.size(); ++i) {
      double keep = v.d[i];
      v.d[i] = keep + h;
      double up = build().value().d[0];
      v.d[i] = keep - h;
      double dn = build().value().d[0];
      v.d[i] = keep;
      double numeric = (up - dn) / (2.0 * h);
      double a = analytic[pi].d[i];
      worst = std::max(worst, std::abs(a - numeric) /
                                  std::max({1.0, std::abs(a), std::abs(numeric)}));
    }
  }
  return worst;
}

Outcome criterion6() {
  std::mt19937_64 gen(606);
  auto rnd = [&](size_t r, size_t c, double margin = 0.0) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Mat m(r, c);
    for (auto& x : m.d) {
      x = dist(gen);
      if (margin > 0 && std::abs(x) < margin) x += (x >= 0 ? margin : -margin);
    }
    return m;
  };
  double worst = 0;

  {  // primitives
    Tensor a(rnd(3, 4), true), b(rnd(3, 4), true), w(rnd(3, 4));
    worst = std::max(worst, fd_check({a, b}, [&] { return tmean_all(tmul(tadd(a, b), w)); }));
    worst = std::max(worst, fd_check({a, b}, [&] { return tmean_all(tmul(tsub(a, b), w)); }));
    worst = std::max(worst, fd_check({a, b}, [&] { return tmean_all(tmul(tmul(a, b), w)); }));
    worst = std::max(worst, fd_check({a}, [&] { return tmean_all(tmul(taffine(a, 2.5, -0.7), w)); }));
    Tensor m1(rnd(3, 5), true), m2(rnd(5, 4), true), bias(rnd(1, 4), true);
    worst = std::max(worst, fd_check({m1, m2, bias}, [&] {
      return tmean_all(tmul(tadd_bias_row(tmatmul(m1, m2), bias), w));
    }));
    Tensor wt(rnd(5, 3));
    worst = std::max(worst, fd_check({m1}, [&] { return tmean_all(tmul(ttranspose(m1), wt)); }));
    Tensor sc(rnd(1, 1), true), w35(rnd(3, 5));
    worst = std::max(worst, fd_check({sc, m1}, [&] {
      return tmean_all(tmul(tmul_scalar(sc, m1), w35));
    }));
    worst = std::max(worst, fd_check({m1}, [&] { return telem(m1, 2, 3); }));
    Tensor w15(rnd(1, 5));
    worst = std::max(worst, fd_check({m1}, [&] { return tmean_all(tmul(trow(m1, 1), w15)); }));
    Tensor r0(rnd(1, 4), true), r1(rnd(1, 4), true), w24(rnd(2, 4));
    worst = std::max(worst, fd_check({r0, r1}, [&] {
      return tmean_all(tmul(tconcat_rows({r0, r1}), w24));
    }));
    Tensor c0(rnd(3, 2), true), c1(rnd(3, 3), true);
    worst = std::max(worst, fd_check({c0, c1}, [&] {
      return tmean_all(tmul(tconcat_cols({c0, c1}), w35));
    }));
    Tensor x(rnd(4, 6, 0.05), true), w46(rnd(4, 6));
    worst = std::max(worst, fd_check({x}, [&] { return tmean_all(tmul(trelu(x), w46)); }));
    worst = std::max(worst, fd_check({x}, [&] { return tmean_all(tmul(tgelu(x), w46)); }));
    worst = std::max(worst, fd_check({x}, [&] { return tmean_all(tmul(tsoftmax_rows(x), w46)); }));
    worst = std::max(worst, fd_check({x}, [&] {
      return tmean_all(tmul(trelusoftmax_rows(x, 1e-8), w46));
    }));
    Tensor g(rnd(1, 6), true), be(rnd(1, 6), true);
    worst = std::max(worst, fd_check({x, g, be}, [&] {
      return tmean_all(tmul(tlayernorm_rows(x, g, be, 1e-5), w46));
    }));
    worst = std::max(worst, fd_check({x}, [&] { return tmean_all(x); }));
    Tensor z(rnd(1, 6), true);
    worst = std::max(worst, fd_check({z}, [&] { return tcross_entropy(z, 2); }));
    Mat teacher = rnd(1, 6);
    worst = std::max(worst, fd_check({z}, [&] { return tkl_div(z, teacher, 2.0); }));
    Tensor f(rnd(5, 8), true);
    Mat target = rnd(5, 8);
    worst = std::max(worst, fd_check({f}, [&] { return tl2_distance(f, target); }));
  }

  double worst_model = 0;
  {  // full 2-layer desk model with mixed alpha/beta and the composite KD loss
    ViTConfig cfg;
    cfg.classes = 3;
    cfg.dim = 8;  // keeps the all-entries FD pass fast
    ViTModel model = ViTModel::init(cfg, 66);
    std::uniform_real_distribution<double> dist(-0.6, 0.6);
    for (Tensor& p : model.weight_params())
      for (double& x : p.value_mut().d) x = dist(gen);
    model.alpha.value_mut().d = {0.62, 0.41, 0.83, 0.27};
    model.beta.value_mut().d = {0.55, 0.71};
    Mat image = rnd(8, 8);
    Mat t_logits = rnd(1, 3);
    Mat t_feat = rnd(size_t(cfg.tokens()), size_t(cfg.dim));
    std::vector<Tensor> params = model.weight_params();
    for (Tensor& a : model.arch_params()) params.push_back(a);
    auto build = [&] {
      ForwardOut out = model.forward(image);
      Tensor loss = taffine(tcross_entropy(out.logits, 1), 1.0, 0.0);
      loss = tadd(loss, tkl_div(out.logits, t_logits, 2.0));
      loss = tadd(loss, tl2_distance(out.features, t_feat));
      return loss;
    };
    worst_model = fd_check(params, build);
  }

  double overall = std::max(worst, worst_model);
  std::ostringstream d;
  d << "primitive max rel err " << worst << ", 2-layer model+KD max rel err "
    << worst_model << " (<=1e-4)";
  return {overall <= 1e-4, d.str()};
}

// --------------------------------------------------------------------------
// 7. binarization contract
// --------------------------------------------------------------------------
Outcome criterion7() {
  std::mt19937_64 gen(707);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  bool ok = true;
  std::ostringstream d;
  for (auto [L, N] : std::vector<std::pair<int, int>>{{2, 2}, {3, 4}}) {
    Mat alpha(static_cast<size_t>(L), static_cast<size_t>(N));
    for (auto& x : alpha.d) x = dist(gen);
    for (double mu : {0.0, 0.1, 0.3, 0.5, 0.7, 1.0}) {
      Mat b = binarize_topk(alpha, mu);
      int kept = 0;
      for (double x : b.d) kept += int(x);
      int want = int(std::ceil(mu * L * N));
      if (kept != want) {
        ok = false;
        d << "L=" << L << " N=" << N << " mu=" << mu << ": kept " << kept << " want "
          << want << "; ";
      }
    }
    Mat zeros = binarize_topk(alpha, 0.0), ones = binarize_topk(alpha, 1.0);
    for (double x : zeros.d) ok = ok && x == 0.0;
    for (double x : ones.d) ok = ok && x == 1.0;
  }
  if (ok) d << "ceil(mu*L*N) counts exact for mu in {0,0.1,0.3,0.5,0.7,1}; endpoints bitwise pure";
  return {ok, d.str()};
}

// --------------------------------------------------------------------------
// 8. NAS pressure test
// --------------------------------------------------------------------------
struct SearchRun {
  Mat alpha;
  double mean_alpha = 0;
  std::vector<double> layer_means;
};

SearchRun run_search(double lambda, u64 seed, const Dataset& ds) {
  ViTConfig cfg;  // desk: L=2, N=2, dim=32
  ViTModel model = ViTModel::init(cfg, seed);
  SearchConfig sc;
  sc.epochs = 2;
  sc.batch = 32;
  sc.lambda = lambda;
  sc.seed = seed;
  SearchResult res = nas_search(model, ds, sc, CostTable::default_table());
  SearchRun out;
  out.alpha = res.alpha;
  for (double a : res.alpha.d) out.mean_alpha += a;
  out.mean_alpha /= double(res.alpha.d.size());
  for (size_t l = 0; l < res.alpha.rows; ++l) {
    double m = 0;
    for (size_t h = 0; h < res.alpha.cols; ++h) m += res.alpha.at(l, h);
    out.layer_means.push_back(m / double(res.alpha.cols));
  }
  return out;
}

Outcome criterion8() {
  Dataset ds = synth_shapes(512, 8, 4, 88);
  const CostTable& table = CostTable::default_table();
  ViTConfig cfg;
  // auto lambda: reproduce the search's own scaling rule for the "scaled" run
  SearchRun free_run = run_search(0.0, 8, ds);
  SearchRun scaled = run_search(-1.0, 8, ds);

  // two pressure settings for the consistency analogue
  double lat = rsattn_head_latency(cfg, table);
  SearchConfig probe_cfg;
  (void)lat;
  SearchRun run_a = run_search(-1.0, 8, ds);
  ViTModel tmp = ViTModel::init(cfg, 8);
  SearchConfig sc_b;
  sc_b.epochs = 2;
  sc_b.batch = 32;
  sc_b.lambda = -1.0;
  sc_b.seed = 8;
  SearchResult rb = nas_search(tmp, ds, sc_b, table);
  double lambda_b = rb.lambda_used * 3.0;
  SearchRun run_b = run_search(lambda_b, 8, ds);

  // Spearman over per-layer profiles (L=2: sign agreement of the orderings)
  auto rank_dir = [](const std::vector<double>& v) { return v[0] < v[1] ? -1 : 1; };
  bool rank_positive = rank_dir(run_a.layer_means) == rank_dir(run_b.layer_means);

  bool drift_ok = std::abs(free_run.mean_alpha - 1.0) < 0.05;
  bool pressure_ok = scaled.mean_alpha < free_run.mean_alpha;
  std::ostringstream d;
  d << "lambda=0 mean alpha " << free_run.mean_alpha << " (init 1.0, drift<0.05); "
    << "scaled-lambda mean alpha " << scaled.mean_alpha
    << " (strictly lower); per-layer profiles rank-consistent across lambdas: "
    << (rank_positive ? "yes" : "NO");
  return {drift_ok && pressure_ok && rank_positive, d.str()};
}

// --------------------------------------------------------------------------
// 9 + 10. end-to-end Pareto sweep and KD ablation (shared artifacts)
// --------------------------------------------------------------------------
struct SweepLeg {
  double acc = 0;
  double latency = 0;
  int heads = 0;
};

struct SeedArtifacts {
  u64 seed;
  double teacher_acc = 0;
  std::map<double, SweepLeg> searched;  // by mu
  std::map<double, SweepLeg> uniform;
  SweepLeg all_rs, all_scale;
  SweepLeg ce_only_05;  // criterion 10: CE-only retrain at mu=0.5
};

ViTConfig sweep_cfg() {
  ViTConfig cfg;
  cfg.depth = 3;
  cfg.heads = 4;
  cfg.dim = 32;
  return cfg;
}

// Pixel noise for the sweep task: high enough that accuracies stay off the
// 100% ceiling and the searched/uniform and KD/CE comparisons are informative.
constexpr double kSweepNoise = 0.5;

SweepLeg retrain_leg(const ViTConfig& cfg, const Mat& alpha_bin, const Mat& beta_bin,
                     const ViTModel& teacher, const Dataset& train, const Dataset& eval,
                     u64 seed, bool kd_on) {
  ViTModel student = ViTModel::init(cfg, seed + 1000);
  apply_arch(student, alpha_bin, beta_bin, /*fuse=*/true, /*relu_added=*/false);
  TrainConfig tc;
  tc.epochs = 10;
  tc.batch = 32;
  tc.seed = seed;
  KDConfig kd;
  if (!kd_on) kd.use_logits = kd.use_feature = false;
  TrainResult res = train_model(student, train, eval, tc, kd_on ? &teacher : nullptr, kd);
  SweepLeg leg;
  leg.acc = res.final_eval_acc;
  leg.latency = estimate_model_latency(student, CostTable::default_table()).total_s;
  leg.heads = student.rsattn_heads();
  return leg;
}

const std::vector<SeedArtifacts>& sweep_artifacts() {
  static std::vector<SeedArtifacts> cache;
  if (!cache.empty()) return cache;
  ViTConfig cfg = sweep_cfg();
  const CostTable& table = CostTable::default_table();
  for (u64 seed : {1ull, 2ull, 3ull}) {
    SeedArtifacts art;
    art.seed = seed;
    Dataset train = synth_shapes(1024, 8, 4, seed, kSweepNoise);
    Dataset eval = synth_shapes(512, 8, 4, seed + 500, kSweepNoise);

    ViTModel teacher = ViTModel::init(cfg, seed);
    teacher.attn_mode = AttnMode::Softmax;
    TrainConfig tc;
    tc.epochs = 12;
    tc.batch = 32;
    tc.seed = seed;
    KDConfig no_kd;
    no_kd.use_logits = no_kd.use_feature = false;
    art.teacher_acc = train_model(teacher, train, eval, tc, nullptr, no_kd).final_eval_acc;

    ViTModel searched = ViTModel::init(cfg, seed);
    SearchConfig sc;
    sc.epochs = 6;
    sc.batch = 32;
    sc.seed = seed;
    SearchResult sr = nas_search(searched, train, sc, table);
    Mat beta_bin = binarize_threshold(sr.beta, 0.75);

    for (double mu : {0.1, 0.3, 0.5, 0.7}) {
      art.searched[mu] = retrain_leg(cfg, binarize_topk(sr.alpha, mu), beta_bin, teacher,
                                     train, eval, seed, true);
      art.uniform[mu] = retrain_leg(cfg, uniform_baseline(cfg.depth, cfg.heads, mu),
                                    beta_bin, teacher, train, eval, seed, true);
    }
    Mat beta_ones(size_t(cfg.depth), 1);
    for (auto& x : beta_ones.d) x = 1.0;
    art.all_rs = retrain_leg(cfg, uniform_baseline(cfg.depth, cfg.heads, 1.0), beta_ones,
                             teacher, train, eval, seed, true);
    art.all_scale = retrain_leg(cfg, uniform_baseline(cfg.depth, cfg.heads, 0.0),
                                beta_ones, teacher, train, eval, seed, true);
    art.ce_only_05 = retrain_leg(cfg, binarize_topk(sr.alpha, 0.5), beta_bin, teacher,
                                 train, eval, seed, false);
    std::cout << "    [sweep seed " << seed << "] teacher " << art.teacher_acc
              << ", mu=0.5 searched " << art.searched[0.5].acc << ", uniform "
              << art.uniform[0.5].acc << ", all-RS " << art.all_rs.acc << ", all-Scale "
              << art.all_scale.acc << ", CE-only " << art.ce_only_05.acc << std::endl;
    cache.push_back(std::move(art));
  }
  return cache;
}

Outcome criterion9() {
  const auto& arts = sweep_artifacts();
  bool monotone = true;
  bool budget_ok = true;
  int searched_wins = 0;
  double acc05 = 0, acc_scale = 0;
  std::ostringstream d;
  for (const auto& art : arts) {
    double prev = -1;
    for (double mu : {0.1, 0.3, 0.5, 0.7}) {
      double lat = art.searched.at(mu).latency;
      if (lat <= prev) monotone = false;
      prev = lat;
    }
    double ratio = art.searched.at(0.5).latency / art.all_rs.latency;
    if (ratio > 0.8) budget_ok = false;
    acc05 += art.searched.at(0.5).acc;
    acc_scale += art.all_scale.acc;
    double mean_s = 0, mean_u = 0;
    for (double mu : {0.1, 0.3, 0.5, 0.7}) {
      mean_s += art.searched.at(mu).acc;
      mean_u += art.uniform.at(mu).acc;
    }
    if (mean_s >= mean_u) ++searched_wins;
    d << "seed " << art.seed << ": lat(mu=.5)/lat(all-RS) " << ratio << ", searched-vs-uniform "
      << mean_s / 4 << "/" << mean_u / 4 << "; ";
  }
  acc05 /= double(arts.size());
  acc_scale /= double(arts.size());
  bool acc_ok = acc05 >= acc_scale - 0.005;
  d << "mean acc mu=0.5 " << acc05 << " vs all-Scale " << acc_scale
    << "; latency monotone in mu: " << (monotone ? "yes" : "NO") << "; searched>=uniform in "
    << searched_wins << "/3 seeds";
  return {monotone && budget_ok && acc_ok && searched_wins >= 2, d.str()};
}

Outcome criterion10() {
  const auto& arts = sweep_artifacts();
  int wins = 0;
  std::ostringstream d;
  for (const auto& art : arts) {
    bool win = art.searched.at(0.5).acc >= art.ce_only_05.acc;
    wins += win;
    d << "seed " << art.seed << ": KD " << art.searched.at(0.5).acc << " vs CE-only "
      << art.ce_only_05.acc << (win ? " (>=)" : " (<)") << "; ";
  }
  d << wins << "/3 seeds favor KD";
  return {wins >= 2, d.str()};
}

// --------------------------------------------------------------------------
// 11. secure/plaintext agreement + metering accuracy
// --------------------------------------------------------------------------
Outcome criterion11() {
  ViTConfig cfg;  // desk 2x2
  Dataset train = synth_shapes(512, 8, 4, 111);
  Dataset eval = synth_shapes(100, 8, 4, 112);
  ViTModel model = ViTModel::init(cfg, 11);
  Mat alpha(2, 2);
  alpha.d = {1, 0, 0, 1};  // heterogeneous: one RSAttn head per layer
  Mat beta(2, 1);
  beta.d = {1, 0};  // layer 1 keeps GeLU, layer 2 fused linear
  apply_arch(model, alpha, beta, true, false);
  TrainConfig tc;
  tc.epochs = 8;
  tc.batch = 32;
  tc.seed = 11;
  KDConfig no_kd;
  no_kd.use_logits = no_kd.use_feature = false;
  train_model(model, train, eval, tc, nullptr, no_kd);

  int agree = 0;
  CommMeter total;
  for (size_t i = 0; i < 100; ++i) {
    Session s(kRing, 1000 + i);
    MpcForwardResult sec = mpc_forward(model, eval.images[i], s);
    Mat logits = model.forward(eval.images[i]).logits.value();
    int plain = 0;
    for (size_t j = 1; j < logits.d.size(); ++j)
      if (logits.d[j] > logits.d[size_t(plain)]) plain = int(j);
    agree += (sec.argmax == plain);
    total.merge(s.meter());
  }

  auto est = estimate_forward_comm(model, kRing);
  double worst_drift = 0;
  for (const auto& [kind, bytes] : est) {
    double measured =
        total.rows.count(kind)
            ? double(total.rows.at(kind).bytes_p0 + total.rows.at(kind).bytes_p1) / 100.0
            : 0.0;
    worst_drift = std::max(worst_drift, bytes > 0 ? std::abs(measured - bytes) / bytes : 0.0);
  }
  std::ostringstream d;
  d << agree << "/100 argmax agreement (>=95); worst per-op-kind byte drift "
    << worst_drift * 100 << "% (<=5%)";
  return {agree >= 95 && worst_drift <= 0.05, d.str()};
}

// --------------------------------------------------------------------------
// 12. cost-table ordering + COT formula
// --------------------------------------------------------------------------
Outcome criterion12() {
  CalibrationResult cal = calibrate_cost_table();
  std::vector<std::pair<AttentionKind, double>> chain{
      {AttentionKind::ScaleAttn, 0.66},  {AttentionKind::Square, 0.72},
      {AttentionKind::ReLU6, 3.02},      {AttentionKind::Sparsemax, 3.23},
      {AttentionKind::TwoQuad, 4.22},    {AttentionKind::ReLUSoftmax, 5.32},
      {AttentionKind::Linformer, 5.44},  {AttentionKind::Softmax, 6.82},
      {AttentionKind::XNorm, 13.25}};
  bool ordered = true, pinned = true;
  for (size_t i = 0; i + 1 < chain.size(); ++i)
    if (cal.predicted.at(chain[i].first) >= cal.predicted.at(chain[i + 1].first))
      ordered = false;
  for (const auto& [kind, rounded] : chain)
    if (std::abs(cal.published.at(kind) - rounded) > 0.01) pinned = false;

  bool cot_ok = true;
  for (int k : {1, 2, 4})
    for (int l : {32, 64})
      for (int lam : {80, 128}) {
        CotCost c = cot_cost(k, l, lam);
        if (c.bits != u64(2 * lam + k * l) || c.rounds != 2) cot_ok = false;
      }
  std::ostringstream d;
  d << "predicted chain strictly ordered: " << (ordered ? "yes" : "NO")
    << "; published column matches; cot(k,l,lambda) = (2*lambda+k*l, 2) exact: "
    << (cot_ok ? "yes" : "NO") << "; max residual " << cal.max_abs_residual;
  return {ordered && pinned && cot_ok, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  struct Entry {
    int id;
    const char* name;
    Outcome (*fn)();
  };
  std::vector<Entry> entries{
      {1, "sharing correctness", criterion1},
      {2, "kernel fidelity vs formula oracles", criterion2},
      {3, "softmax error vs variance trend", criterion3},
      {4, "scale-attention reparameterization", criterion4},
      {5, "linear fusion exactness + cost", criterion5},
      {6, "gradient integrity", criterion6},
      {7, "binarization contract", criterion7},
      {8, "NAS latency-pressure test", criterion8},
      {9, "end-to-end Pareto sweep", criterion9},
      {10, "KD ablation direction", criterion10},
      {11, "secure/plaintext agreement + metering", criterion11},
      {12, "cost-table ordering + COT formula", criterion12},
  };

  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

  int failures = 0, ran = 0;
  for (const auto& e : entries) {
    if (!only.empty() && std::find(only.begin(), only.end(), e.id) == only.end())
      continue;
    ++ran;
    auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = e.fn();
    } catch (const std::exception& ex) {
      out = {false, std::string("exception: ") + ex.what()};
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %2d: %s — %s (%.1f s)\n", out.pass ? "PASS" : "FAIL",
                e.id, e.name, out.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !out.pass;
  }
  std::printf("ACCEPTANCE: %d/%d criteria passed\n", ran - failures, ran);
  return failures;
}
