// Python bindings: fixed-point ring codec, the secure two-party session with
// its metered kernels, the plaintext attention zoo, and the cost model.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mpcvit/attention.hpp"
#include "mpcvit/cost.hpp"
#include "mpcvit/data.hpp"
#include "mpcvit/distill.hpp"
#include "mpcvit/kernels.hpp"
#include "mpcvit/mpc_vit.hpp"
#include "mpcvit/nas.hpp"
#include "mpcvit/vit.hpp"

namespace py = pybind11;
using namespace mpcvit;

namespace {

Mat to_mat(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ShapeError("matrix must be non-empty");
  Mat m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols) throw ShapeError("ragged matrix");
    for (std::size_t j = 0; j < m.cols; ++j) m.at(i, j) = rows[i][j];
  }
  return m;
}

std::vector<std::vector<double>> from_mat(const Mat& m) {
  std::vector<std::vector<double>> out(m.rows, std::vector<double>(m.cols));
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) out[i][j] = m.at(i, j);
  return out;
}

// Secure session facade: plaintext doubles in, plaintext doubles out, with
// encode/share/kernel/reconstruct handled internally and traffic metered.
class SecureSession {
 public:
  SecureSession(int l, int f, u64 seed) : ring_{l, f}, session_(ring_, seed) {}

  std::vector<double> share_reconstruct(const std::vector<double>& xs) {
    return open(session_.share(enc(xs)));
  }
  std::vector<double> mul(const std::vector<double>& xs, const std::vector<double>& ys) {
    return open(session_.mul_fixed(session_.share(enc(xs)), session_.share(enc(ys))));
  }
  std::vector<std::vector<double>> matmul(const std::vector<std::vector<double>>& a,
                                          const std::vector<std::vector<double>>& b) {
    Mat ma = to_mat(a), mb = to_mat(b);
    if (ma.cols != mb.rows) throw ShapeError("matmul inner dims");
    auto sc = session_.matmul_fixed(session_.share(enc(ma.d)), ma.rows, ma.cols,
                                    session_.share(enc(mb.d)), mb.cols);
    auto flat = open(sc);
    Mat out(ma.rows, mb.cols);
    out.d = flat;
    return from_mat(out);
  }
  std::vector<double> exp(const std::vector<double>& xs) {
    return open(mpc_exp(session_, session_.share(enc(xs))));
  }
  std::vector<double> reciprocal(const std::vector<double>& xs) {
    return open(mpc_reciprocal(session_, session_.share(enc(xs))));
  }
  std::vector<double> relu(const std::vector<double>& xs) {
    return open(mpc_relu(session_, session_.share(enc(xs))));
  }
  double max(const std::vector<double>& xs) {
    return open(mpc_max(session_, session_.share(enc(xs))))[0];
  }
  std::vector<double> softmax(const std::vector<double>& xs) {
    return open(mpc_softmax_row(session_, session_.share(enc(xs))));
  }
  std::vector<double> relusoftmax(const std::vector<double>& xs, double eps) {
    return open(mpc_relusoftmax_row(session_, session_.share(enc(xs)), eps));
  }
  std::vector<double> gelu(const std::vector<double>& xs) {
    return open(mpc_gelu(session_, session_.share(enc(xs))));
  }
  std::vector<double> isqrt(const std::vector<double>& xs) {
    return open(mpc_isqrt(session_, session_.share(enc(xs))));
  }
  std::vector<double> layernorm(const std::vector<double>& xs,
                                const std::vector<double>& gamma,
                                const std::vector<double>& beta, double eps) {
    return open(mpc_layernorm_row(session_, session_.share(enc(xs)), gamma, beta, eps));
  }

  // op -> (bytes_p0, bytes_p1, rounds, calls)
  std::map<std::string, std::tuple<u64, u64, u64, u64>> meter() const {
    std::map<std::string, std::tuple<u64, u64, u64, u64>> out;
    for (const auto& [k, r] : session_.meter().rows)
      out[k] = {r.bytes_p0, r.bytes_p1, r.rounds, r.calls};
    return out;
  }
  u64 total_bytes() const { return session_.meter().total_bytes(); }
  u64 total_rounds() const { return session_.meter().total_rounds(); }

 private:
  std::vector<u64> enc(const std::vector<double>& xs) const {
    std::vector<u64> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = encode(xs[i], ring_);
    return out;
  }
  std::vector<double> open(const SharedVec& sv) {
    auto r = session_.reconstruct(sv);
    std::vector<double> out(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) out[i] = decode(r[i], ring_);
    return out;
  }
  RingParams ring_;
  Session session_;
};

}  // namespace

PYBIND11_MODULE(_mpcvit, m) {
  m.doc() = "MPC-friendly vision transformer workbench (C++ core)";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<CorruptFile>(m, "CorruptFileError");
  py::register_exception<ShapeError>(m, "ShapeError");

  // fixed-point codec
  m.def(
      "encode",
      [](double x, int l, int f) { return encode(x, RingParams{l, f}); },
      py::arg("x"), py::arg("l") = 64, py::arg("f") = 18,
      "Encode a double into the fixed-point ring (round half away from zero).");
  m.def(
      "decode",
      [](u64 v, int l, int f) { return decode(v, RingParams{l, f}); },
      py::arg("v"), py::arg("l") = 64, py::arg("f") = 18);

  py::class_<SecureSession>(m, "SecureSession",
                            "Two-party additive-sharing simulator with metered traffic")
      .def(py::init<int, int, u64>(), py::arg("l") = 64, py::arg("f") = 18,
           py::arg("seed") = 1)
      .def("share_reconstruct", &SecureSession::share_reconstruct, py::arg("xs"))
      .def("mul", &SecureSession::mul, py::arg("xs"), py::arg("ys"))
      .def("matmul", &SecureSession::matmul, py::arg("a"), py::arg("b"))
      .def("exp", &SecureSession::exp, py::arg("xs"))
      .def("reciprocal", &SecureSession::reciprocal, py::arg("xs"))
      .def("relu", &SecureSession::relu, py::arg("xs"))
      .def("max", &SecureSession::max, py::arg("xs"))
      .def("softmax", &SecureSession::softmax, py::arg("xs"))
      .def("relusoftmax", &SecureSession::relusoftmax, py::arg("xs"),
           py::arg("eps") = 1e-8)
      .def("gelu", &SecureSession::gelu, py::arg("xs"))
      .def("isqrt", &SecureSession::isqrt, py::arg("xs"))
      .def("layernorm", &SecureSession::layernorm, py::arg("xs"), py::arg("gamma"),
           py::arg("beta"), py::arg("eps") = 1e-5)
      .def("meter", &SecureSession::meter)
      .def("total_bytes", &SecureSession::total_bytes)
      .def("total_rounds", &SecureSession::total_rounds);

  // plaintext attention zoo
  m.def(
      "attention",
      [](const std::string& kind, const std::vector<std::vector<double>>& q,
         const std::vector<std::vector<double>>& k,
         const std::vector<std::vector<double>>& v, double eps, int linformer_k,
         u64 linformer_seed, double quad_c) {
        AttentionOpts opts;
        opts.eps = eps;
        opts.linformer_k = std::size_t(linformer_k);
        opts.linformer_seed = linformer_seed;
        opts.quad_c = quad_c;
        return from_mat(apply_attention(attention_kind_from_string(kind), to_mat(q),
                                        to_mat(k), to_mat(v), opts));
      },
      py::arg("kind"), py::arg("q"), py::arg("k"), py::arg("v"), py::arg("eps") = 1e-8,
      py::arg("linformer_k") = 0, py::arg("linformer_seed") = 7, py::arg("quad_c") = 5.0,
      "Run one plaintext attention variant (kind: Softmax, ReLUSoftmax, ScaleAttn, "
      "Linformer, ReLU, ReLU6, Sparsemax, XNorm, Square, 2Quad).");
  m.def("attention_kinds", [] {
    std::vector<std::string> out;
    for (auto k : {AttentionKind::Softmax, AttentionKind::ReLUSoftmax,
                   AttentionKind::ScaleAttn, AttentionKind::Linformer, AttentionKind::ReLU,
                   AttentionKind::ReLU6, AttentionKind::Sparsemax, AttentionKind::XNorm,
                   AttentionKind::Square, AttentionKind::TwoQuad})
      out.push_back(to_string(k));
    return out;
  });

  // cost model
  m.def(
      "cot_cost",
      [](int k, int l, int lambda) {
        CotCost c = cot_cost(k, l, lambda);
        return py::make_tuple(c.bits, c.rounds);
      },
      py::arg("k"), py::arg("l"), py::arg("lambda_") = 128,
      "(bits, rounds) of one correlated-OT comparison batch element.");
  m.def("published_latencies", [] {
    std::map<std::string, double> out;
    for (const auto& [k, v] : published_variant_latency()) out[to_string(k)] = v;
    return out;
  });
  m.def("calibrate_cost_model", [] {
    CalibrationResult cal = calibrate_cost_table();
    py::dict out;
    py::dict units;
    for (const auto& [k, v] : cal.units) units[py::str(k)] = v;
    py::dict pred;
    for (const auto& [k, v] : cal.predicted) pred[py::str(to_string(k))] = v;
    out["units"] = units;
    out["base_latency_s"] = cal.base_latency_s;
    out["predicted"] = pred;
    out["max_abs_residual"] = cal.max_abs_residual;
    return out;
  });
  m.def(
      "variant_latency",
      [](const std::string& kind) {
        return variant_model_latency(attention_kind_from_string(kind),
                                     CostTable::default_table());
      },
      py::arg("kind"),
      "Whole-model latency (s) of a homogeneous variant at the CIFAR-style config.");
  m.def(
      "wan_seconds",
      [](u64 bytes, u64 rounds) { return wan_seconds(bytes, rounds); },
      py::arg("total_bytes"), py::arg("total_rounds"));

  // dataset + model round trips (path based)
  m.def(
      "gen_dataset",
      [](const std::string& path, std::size_t n, int image_size, int classes, u64 seed,
         double noise) {
        save_dataset_raw(synth_shapes(n, image_size, classes, seed, noise), path);
      },
      py::arg("path"), py::arg("n"), py::arg("image_size") = 8, py::arg("classes") = 4,
      py::arg("seed") = 1, py::arg("noise") = 0.08);
  m.def(
      "dataset_info",
      [](const std::string& path) {
        Dataset ds = load_dataset_raw(path);
        return py::make_tuple(ds.size(), ds.h, ds.w, ds.classes, ds.labels);
      },
      py::arg("path"));
  m.def(
      "forward_logits",
      [](const std::string& ckpt, const std::vector<std::vector<double>>& image) {
        ViTModel model = load_checkpoint(ckpt);
        Mat logits = model.forward(to_mat(image)).logits.value();
        return logits.d;
      },
      py::arg("checkpoint"), py::arg("image"),
      "Plaintext forward pass of a saved model; returns the logits row.");
  m.def(
      "mpc_forward",
      [](const std::string& ckpt, const std::vector<std::vector<double>>& image, int l,
         int f, u64 seed) {
        ViTModel model = load_checkpoint(ckpt);
        Session session(RingParams{l, f}, seed);
        MpcForwardResult r = mpc_forward(model, to_mat(image), session);
        py::dict meter;
        for (const auto& [k, row] : session.meter().rows)
          meter[py::str(k)] =
              py::make_tuple(row.bytes_p0, row.bytes_p1, row.rounds, row.calls);
        py::dict out;
        out["logits"] = r.logits;
        out["argmax"] = r.argmax;
        out["meter"] = meter;
        out["total_bytes"] = session.meter().total_bytes();
        out["total_rounds"] = session.meter().total_rounds();
        return out;
      },
      py::arg("checkpoint"), py::arg("image"), py::arg("l") = 64, py::arg("f") = 18,
      py::arg("seed") = 1,
      "Secure inference of a saved model over the two-party simulator.");
}
