#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mpcvit/distill.hpp>
#include <mpcvit/tensor.hpp>
#include <mpcvit/vit.hpp>

#include <cmath>
#include <functional>
#include <random>

using namespace mpcvit;

namespace {

Mat randmat(std::mt19937_64& gen, size_t r, size_t c, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Mat m(r, c);
  for (auto& x : m.d) x = d(gen);
  return m;
}

// Keep entries away from 0 so kinked ops (relu) see no sign flips under FD.
Mat randmat_nz(std::mt19937_64& gen, size_t r, size_t c, double margin = 0.05) {
  Mat m = randmat(gen, r, c);
  for (auto& x : m.d)
    if (std::abs(x) < margin) x = (x >= 0 ? margin : -margin) + x;
  return m;
}

// Central-difference check of d(loss)/d(param) for every entry of every param.
// build() must construct a fresh tape from the live param tensors.
double max_grad_rel_err(std::vector<Tensor> params, const std::function<Tensor()>& build,
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
      double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("elementwise and affine primitives") {
  std::mt19937_64 gen(1);
  Tensor a(randmat(gen, 3, 4), true), b(randmat(gen, 3, 4), true);
  Mat w = randmat(gen, 3, 4);
  Tensor wt(w);  // constant weighting so the scalar sees every entry differently

  CHECK(max_grad_rel_err({a, b}, [&] { return tmean_all(tmul(tadd(a, b), wt)); }) < 1e-6);
  CHECK(max_grad_rel_err({a, b}, [&] { return tmean_all(tmul(tsub(a, b), wt)); }) < 1e-6);
  CHECK(max_grad_rel_err({a, b}, [&] { return tmean_all(tmul(tmul(a, b), wt)); }) < 1e-6);
  CHECK(max_grad_rel_err({a}, [&] {
          return tmean_all(tmul(taffine(a, -1.7, 0.3), wt));
        }) < 1e-6);
  CHECK(max_grad_rel_err({a}, [&] { return tmean_all(tmul(a, wt)); }) < 1e-6);
}

TEST_CASE("matmul, transpose, bias row, concat, slicing") {
  std::mt19937_64 gen(2);
  Tensor a(randmat(gen, 3, 5), true), b(randmat(gen, 5, 4), true);
  Tensor bias(randmat(gen, 1, 4), true);
  Tensor w(randmat(gen, 3, 4));

  CHECK(max_grad_rel_err({a, b}, [&] { return tmean_all(tmul(tmatmul(a, b), w)); }) < 1e-6);
  Tensor wt(randmat(gen, 5, 3));
  CHECK(max_grad_rel_err({a}, [&] { return tmean_all(tmul(ttranspose(a), wt)); }) < 1e-6);
  CHECK(max_grad_rel_err({a, b, bias}, [&] {
          return tmean_all(tmul(tadd_bias_row(tmatmul(a, b), bias), w));
        }) < 1e-6);

  Tensor r0(randmat(gen, 1, 4), true), r1(randmat(gen, 1, 4), true);
  Tensor w2(randmat(gen, 2, 4));
  CHECK(max_grad_rel_err({r0, r1}, [&] {
          return tmean_all(tmul(tconcat_rows({r0, r1}), w2));
        }) < 1e-6);
  Tensor c0(randmat(gen, 3, 2), true), c1(randmat(gen, 3, 3), true);
  Tensor w3(randmat(gen, 3, 5));
  CHECK(max_grad_rel_err({c0, c1}, [&] {
          return tmean_all(tmul(tconcat_cols({c0, c1}), w3));
        }) < 1e-6);

  Tensor w4(randmat(gen, 1, 5));
  CHECK(max_grad_rel_err({a}, [&] { return tmean_all(tmul(trow(a, 1), w4)); }) < 1e-6);
  CHECK(max_grad_rel_err({a}, [&] { return telem(a, 2, 3); }) < 1e-6);

  Tensor s(randmat(gen, 1, 1), true);
  Tensor w5(randmat(gen, 3, 5));
  CHECK(max_grad_rel_err({s, a}, [&] { return tmean_all(tmul(tmul_scalar(s, a), w5)); }) < 1e-6);
}

TEST_CASE("nonlinearities") {
  std::mt19937_64 gen(3);
  Tensor x(randmat_nz(gen, 4, 6), true);
  Tensor w(randmat(gen, 4, 6));
  CHECK(max_grad_rel_err({x}, [&] { return tmean_all(tmul(trelu(x), w)); }) < 1e-6);
  CHECK(max_grad_rel_err({x}, [&] { return tmean_all(tmul(tgelu(x), w)); }) < 1e-6);
  CHECK(max_grad_rel_err({x}, [&] { return tmean_all(tmul(tsoftmax_rows(x), w)); }) < 1e-6);
  CHECK(max_grad_rel_err({x}, [&] {
          return tmean_all(tmul(trelusoftmax_rows(x, 1e-8), w));
        }) < 1e-5);
}

TEST_CASE("layernorm with affine parameters") {
  std::mt19937_64 gen(4);
  Tensor x(randmat(gen, 5, 8), true);
  Tensor g(randmat(gen, 1, 8, 0.5, 1.5), true), b(randmat(gen, 1, 8), true);
  Tensor w(randmat(gen, 5, 8));
  CHECK(max_grad_rel_err({x, g, b}, [&] {
          return tmean_all(tmul(tlayernorm_rows(x, g, b, 1e-5), w));
        }) < 1e-5);
}

TEST_CASE("loss heads: cross entropy, kl, feature distance") {
  std::mt19937_64 gen(5);
  Tensor z(randmat(gen, 1, 6), true);
  CHECK(max_grad_rel_err({z}, [&] { return tcross_entropy(z, 2); }) < 1e-6);

  Mat teacher = randmat(gen, 1, 6);
  CHECK(max_grad_rel_err({z}, [&] { return tkl_div(z, teacher, 1.0); }) < 1e-6);
  CHECK(max_grad_rel_err({z}, [&] { return tkl_div(z, teacher, 4.0); }) < 1e-6);

  Tensor f(randmat(gen, 5, 8), true);
  Mat target = randmat(gen, 5, 8);
  CHECK(max_grad_rel_err({f}, [&] { return tl2_distance(f, target); }) < 1e-6);
}

TEST_CASE("full two-layer vit gradients, all parameters") {
  ViTConfig cfg;
  cfg.image_size = 8;
  cfg.patch_size = 4;
  cfg.classes = 3;
  cfg.depth = 2;
  cfg.heads = 2;
  cfg.dim = 8;
  cfg.mlp_ratio = 2;
  ViTModel model = ViTModel::init(cfg, 11);

  // Rescale parameters so attention scores are O(1) and away from the
  // relusoftmax kink (trunc-normal 0.02 init keeps scores ~0, exactly where
  // finite differences are ill-posed).
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> d(-0.6, 0.6);
  for (Tensor& p : model.weight_params())
    for (double& x : p.value_mut().d) x = d(gen);
  model.alpha.value_mut().d = {0.62, 0.41, 0.83, 0.27};
  model.beta.value_mut().d = {0.55, 0.71};

  Mat image = randmat(gen, 8, 8);
  std::vector<Tensor> params = model.weight_params();
  for (Tensor& a : model.arch_params()) params.push_back(a);

  auto build = [&] { return tcross_entropy(model.forward(image).logits, 1); };
  double err = max_grad_rel_err(params, build);
  CHECK(err < 1e-4);
  MESSAGE("vit grad max rel err: ", err);
}

TEST_CASE("kd composite loss gradients through the student") {
  ViTConfig cfg;
  cfg.image_size = 8;
  cfg.patch_size = 4;
  cfg.classes = 3;
  cfg.depth = 1;
  cfg.heads = 2;
  cfg.dim = 8;
  ViTModel student = ViTModel::init(cfg, 3);
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> d(-0.6, 0.6);
  for (Tensor& p : student.weight_params())
    for (double& x : p.value_mut().d) x += d(gen);

  Mat image = randmat(gen, 8, 8);
  Mat t_logits = randmat(gen, 1, 3);
  Mat t_feat = randmat(gen, cfg.tokens(), cfg.dim);

  auto build = [&] {
    ForwardOut out = student.forward(image);
    Tensor loss = tcross_entropy(out.logits, 0);
    loss = tadd(loss, tkl_div(out.logits, t_logits, 2.0));
    loss = tadd(loss, tl2_distance(out.features, t_feat));
    return loss;
  };
  CHECK(max_grad_rel_err(student.weight_params(), build) < 1e-4);
}
