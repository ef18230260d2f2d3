// mpcvit: desk-scale workbench for MPC-friendly vision transformers.
//
// Pipeline subcommands (gen-data -> train-teacher -> search -> binarize ->
// retrain -> infer / mpc-infer / estimate) plus the sweep and probe-error
// report generators. All knobs live in one flat JSON config; every key is
// also a CLI flag that overrides the file.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "mpcvit/cost.hpp"
#include "mpcvit/data.hpp"
#include "mpcvit/distill.hpp"
#include "mpcvit/io_util.hpp"
#include "mpcvit/kernels.hpp"
#include "mpcvit/mpc_vit.hpp"
#include "mpcvit/nas.hpp"
#include "mpcvit/vit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mpcvit;

namespace {

struct Options {
  // general
  u64 seed = 1;
  std::string out_dir;
  bool resume = false;
  // data
  std::string dataset, eval_dataset;
  int n_train = 2048, n_eval = 512;
  int image_size = 8, classes = 4;
  double noise = 0.08;
  // model
  int patch_size = 4, depth = 2, heads = 2, dim = 32, mlp_ratio = 2;
  // training
  int epochs = 20, batch = 32;
  double lr_max = 3e-3, lr_min = 1e-4, weight_decay = 1e-4;
  // search
  int search_epochs = 4;
  double arch_lr = 1e-3, lambda = -1.0, eta = -1.0;
  bool search_beta = false;
  // binarization
  double mu = 0.5, sigma = 0.75;
  bool fuse = true, relu_added = false, uniform = false;
  // distillation
  bool kd = true;
  double kd_temperature = 1.0, kd_chi = 1.0, kd_beta = 1.0, kd_gamma = 1.0;
  bool kd_logits = true, kd_feature = true;
  // file handles
  std::string teacher, model, arch;
  // secure runtime
  int ring_l = 64, ring_f = 18;
  std::string cost_table;
  // reports
  int samples = 100;
  std::string variances = "1,2,5,10";
  std::string mu_list = "0.1,0.3,0.5,0.7";
  std::string seeds = "1,2,3";
};

json options_to_json(const Options& o) {
  return json{{"seed", o.seed},
              {"out_dir", o.out_dir},
              {"resume", o.resume},
              {"dataset", o.dataset},
              {"eval_dataset", o.eval_dataset},
              {"n_train", o.n_train},
              {"n_eval", o.n_eval},
              {"image_size", o.image_size},
              {"classes", o.classes},
              {"noise", o.noise},
              {"patch_size", o.patch_size},
              {"depth", o.depth},
              {"heads", o.heads},
              {"dim", o.dim},
              {"mlp_ratio", o.mlp_ratio},
              {"epochs", o.epochs},
              {"batch", o.batch},
              {"lr_max", o.lr_max},
              {"lr_min", o.lr_min},
              {"weight_decay", o.weight_decay},
              {"search_epochs", o.search_epochs},
              {"arch_lr", o.arch_lr},
              {"lambda", o.lambda},
              {"eta", o.eta},
              {"search_beta", o.search_beta},
              {"mu", o.mu},
              {"sigma", o.sigma},
              {"fuse", o.fuse},
              {"relu_added", o.relu_added},
              {"uniform", o.uniform},
              {"kd", o.kd},
              {"kd_temperature", o.kd_temperature},
              {"kd_chi", o.kd_chi},
              {"kd_beta", o.kd_beta},
              {"kd_gamma", o.kd_gamma},
              {"kd_logits", o.kd_logits},
              {"kd_feature", o.kd_feature},
              {"teacher", o.teacher},
              {"model", o.model},
              {"arch", o.arch},
              {"ring_l", o.ring_l},
              {"ring_f", o.ring_f},
              {"cost_table", o.cost_table},
              {"samples", o.samples},
              {"variances", o.variances},
              {"mu_list", o.mu_list},
              {"seeds", o.seeds}};
}

void options_from_json(Options& o, const json& j) {
  json known = options_to_json(o);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.contains(it.key()))
      throw ConfigError("unknown config key '" + it.key() +
                        "' (see `mpcvit --help` for the recognized keys)");
  }
  auto get = [&](const char* k, auto& dst) {
    if (!j.contains(k)) return;
    try {
      dst = j.at(k).get<std::decay_t<decltype(dst)>>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("config key '") + k + "' has the wrong type");
    }
  };
  get("seed", o.seed);
  get("out_dir", o.out_dir);
  get("resume", o.resume);
  get("dataset", o.dataset);
  get("eval_dataset", o.eval_dataset);
  get("n_train", o.n_train);
  get("n_eval", o.n_eval);
  get("image_size", o.image_size);
  get("classes", o.classes);
  get("noise", o.noise);
  get("patch_size", o.patch_size);
  get("depth", o.depth);
  get("heads", o.heads);
  get("dim", o.dim);
  get("mlp_ratio", o.mlp_ratio);
  get("epochs", o.epochs);
  get("batch", o.batch);
  get("lr_max", o.lr_max);
  get("lr_min", o.lr_min);
  get("weight_decay", o.weight_decay);
  get("search_epochs", o.search_epochs);
  get("arch_lr", o.arch_lr);
  get("lambda", o.lambda);
  get("eta", o.eta);
  get("search_beta", o.search_beta);
  get("mu", o.mu);
  get("sigma", o.sigma);
  get("fuse", o.fuse);
  get("relu_added", o.relu_added);
  get("uniform", o.uniform);
  get("kd", o.kd);
  get("kd_temperature", o.kd_temperature);
  get("kd_chi", o.kd_chi);
  get("kd_beta", o.kd_beta);
  get("kd_gamma", o.kd_gamma);
  get("kd_logits", o.kd_logits);
  get("kd_feature", o.kd_feature);
  get("teacher", o.teacher);
  get("model", o.model);
  get("arch", o.arch);
  get("ring_l", o.ring_l);
  get("ring_f", o.ring_f);
  get("cost_table", o.cost_table);
  get("samples", o.samples);
  get("variances", o.variances);
  get("mu_list", o.mu_list);
  get("seeds", o.seeds);
}

void validate_options(const Options& o) {
  if (o.mu < 0.0 || o.mu > 1.0) throw ConfigError("mu must lie in [0,1]");
  if (o.sigma < 0.0 || o.sigma > 1.0) throw ConfigError("sigma must lie in [0,1]");
  if (o.epochs <= 0 || o.search_epochs <= 0) throw ConfigError("epochs must be positive");
  if (o.batch <= 0) throw ConfigError("batch must be positive");
  if (o.n_train <= 0 || o.n_eval <= 0) throw ConfigError("dataset sizes must be positive");
  if (o.samples <= 0) throw ConfigError("samples must be positive");
  RingParams{o.ring_l, o.ring_f}.validate();
}

ViTConfig vit_config(const Options& o) {
  ViTConfig cfg;
  cfg.image_size = o.image_size;
  cfg.patch_size = o.patch_size;
  cfg.classes = o.classes;
  cfg.depth = o.depth;
  cfg.heads = o.heads;
  cfg.dim = o.dim;
  cfg.mlp_ratio = o.mlp_ratio;
  cfg.validate();
  return cfg;
}

TrainConfig train_config(const Options& o) {
  TrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch = o.batch;
  tc.lr_max = o.lr_max;
  tc.lr_min = o.lr_min;
  tc.weight_decay = o.weight_decay;
  tc.seed = o.seed;
  return tc;
}

KDConfig kd_config(const Options& o) {
  KDConfig kd;
  kd.temperature = o.kd_temperature;
  kd.chi = o.kd_chi;
  kd.kd_beta = o.kd_beta;
  kd.gamma = o.kd_gamma;
  kd.use_logits = o.kd_logits;
  kd.use_feature = o.kd_feature;
  return kd;
}

CostTable cost_table(const Options& o) {
  if (!o.cost_table.empty()) return CostTable::load_csv(o.cost_table);
  return CostTable::default_table();
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      out.push_back(std::stod(tok));
    } catch (...) {
      throw ConfigError("cannot parse '" + tok + "' as a number in list '" + s + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty numeric list '" + s + "'");
  return out;
}

std::vector<u64> parse_seeds(const std::string& s) {
  std::vector<u64> out;
  for (double d : parse_doubles(s)) out.push_back(u64(d));
  return out;
}

std::string join(const std::string& dir, const std::string& leaf) {
  return (fs::path(dir) / leaf).string();
}

std::string train_path(const Options& o) {
  return o.dataset.empty() ? join(o.out_dir, "train.bin") : o.dataset;
}
std::string eval_path(const Options& o) {
  return o.eval_dataset.empty() ? join(o.out_dir, "eval.bin") : o.eval_dataset;
}

Dataset load_required(const std::string& path, const char* which) {
  if (!fs::exists(path))
    throw ConfigError(std::string(which) + " dataset not found at '" + path +
                      "' -- run `mpcvit gen-data` first or pass --dataset/--eval_dataset");
  return load_dataset_raw(path);
}

void write_metrics_csv(const std::vector<EpochMetrics>& hist, const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : hist)
    rows.push_back({std::to_string(e.epoch), std::to_string(e.ce), std::to_string(e.kl),
                    std::to_string(e.feat), std::to_string(e.train_acc),
                    std::to_string(e.eval_acc)});
  write_csv(path, {"epoch", "ce", "kl", "feat", "train_acc", "eval_acc"}, rows);
}

void write_alpha_beta_csv(const Mat& alpha, const Mat& beta, const std::string& dir) {
  std::vector<std::vector<std::string>> arows;
  for (std::size_t l = 0; l < alpha.rows; ++l)
    for (std::size_t h = 0; h < alpha.cols; ++h)
      arows.push_back({std::to_string(l), std::to_string(h),
                       std::to_string(alpha.at(l, h))});
  write_csv(join(dir, "alpha.csv"), {"layer", "head", "alpha"}, arows);
  std::vector<std::vector<std::string>> brows;
  for (std::size_t l = 0; l < beta.rows; ++l)
    brows.push_back({std::to_string(l), std::to_string(beta.at(l, 0))});
  write_csv(join(dir, "beta.csv"), {"layer", "beta"}, brows);
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int cmd_gen_data(const Options& o) {
  if (o.resume && stage_complete(o.out_dir, "gen-data")) {
    std::cout << "gen-data: already complete, skipping (resume)\n";
    return 0;
  }
  Dataset train = synth_shapes(std::size_t(o.n_train), o.image_size, o.classes, o.seed,
                               o.noise);
  Dataset eval = synth_shapes(std::size_t(o.n_eval), o.image_size, o.classes, o.seed + 1,
                              o.noise);
  save_dataset_raw(train, train_path(o));
  save_dataset_raw(eval, eval_path(o));
  std::cout << "gen-data: wrote " << train.size() << " train / " << eval.size()
            << " eval samples (" << o.image_size << "x" << o.image_size << ", "
            << o.classes << " classes)\n";
  write_manifest(o.out_dir, "gen-data", {train_path(o), eval_path(o)}, options_to_json(o));
  return 0;
}

int cmd_train_teacher(const Options& o) {
  std::string ckpt = o.teacher.empty() ? join(o.out_dir, "teacher.ckpt") : o.teacher;
  if (o.resume && stage_complete(o.out_dir, "train-teacher") && fs::exists(ckpt)) {
    std::cout << "train-teacher: already complete, skipping (resume)\n";
    return 0;
  }
  Dataset train = load_required(train_path(o), "train");
  Dataset eval = load_required(eval_path(o), "eval");
  ViTModel teacher = ViTModel::init(vit_config(o), o.seed);
  teacher.attn_mode = AttnMode::Softmax;
  KDConfig no_kd;
  no_kd.use_logits = no_kd.use_feature = false;
  TrainResult res = train_model(teacher, train, eval, train_config(o), nullptr, no_kd);
  save_checkpoint(teacher, ckpt);
  write_metrics_csv(res.history, join(o.out_dir, "teacher_metrics.csv"));
  std::cout << "train-teacher: eval accuracy " << res.final_eval_acc << " -> " << ckpt
            << "\n";
  write_manifest(o.out_dir, "train-teacher",
                 {ckpt, join(o.out_dir, "teacher_metrics.csv")}, options_to_json(o));
  return 0;
}

int cmd_search(const Options& o) {
  std::string ckpt = join(o.out_dir, "search.ckpt");
  if (o.resume && stage_complete(o.out_dir, "search") && fs::exists(ckpt)) {
    std::cout << "search: already complete, skipping (resume)\n";
    return 0;
  }
  Dataset train = load_required(train_path(o), "train");
  ViTModel model = ViTModel::init(vit_config(o), o.seed);
  SearchConfig sc;
  sc.epochs = o.search_epochs;
  sc.batch = o.batch;
  sc.lr_max = o.lr_max;
  sc.lr_min = o.lr_min;
  sc.weight_decay = o.weight_decay;
  sc.arch_lr = o.arch_lr;
  sc.lambda = o.lambda;
  sc.eta = o.eta;
  sc.search_beta = o.search_beta;
  sc.seed = o.seed;
  SearchResult res = nas_search(model, train, sc, cost_table(o));
  save_checkpoint(model, ckpt);
  write_alpha_beta_csv(res.alpha, res.beta, o.out_dir);
  std::vector<std::vector<std::string>> hrows;
  for (const auto& r : res.history)
    hrows.push_back({std::to_string(r.step), std::to_string(r.task_loss),
                     std::to_string(r.penalty), std::to_string(r.mean_alpha),
                     std::to_string(r.mean_beta)});
  write_csv(join(o.out_dir, "search_history.csv"),
            {"step", "task_loss", "penalty", "mean_alpha", "mean_beta"}, hrows);
  double mean_alpha = 0;
  for (double a : res.alpha.d) mean_alpha += a;
  mean_alpha /= double(res.alpha.d.size());
  json summary{{"lambda_used", res.lambda_used},
               {"eta_used", res.eta_used},
               {"mean_alpha", mean_alpha},
               {"steps", res.history.size()}};
  std::ofstream(join(o.out_dir, "search.json")) << summary.dump(2) << "\n";
  std::cout << "search: lambda " << res.lambda_used << ", mean alpha " << mean_alpha
            << " -> " << ckpt << "\n";
  write_manifest(o.out_dir, "search",
                 {ckpt, join(o.out_dir, "alpha.csv"), join(o.out_dir, "beta.csv"),
                  join(o.out_dir, "search_history.csv"), join(o.out_dir, "search.json")},
                 options_to_json(o));
  return 0;
}

int cmd_binarize(const Options& o) {
  std::string in = o.model.empty() ? join(o.out_dir, "search.ckpt") : o.model;
  std::string out = o.arch.empty() ? join(o.out_dir, "arch.json") : o.arch;
  if (!fs::exists(in))
    throw ConfigError("search checkpoint not found at '" + in +
                      "' -- run `mpcvit search` first or pass --model");
  ViTModel model = load_checkpoint(in);
  ArchSpec spec;
  spec.cfg = model.cfg;
  spec.alpha = o.uniform ? uniform_baseline(model.cfg.depth, model.cfg.heads, o.mu)
                         : binarize_topk(model.alpha.value(), o.mu);
  spec.beta = binarize_threshold(model.beta.value(), o.sigma);
  spec.fuse = o.fuse;
  spec.relu_added = o.relu_added;
  save_arch_json(spec, out);
  int kept = 0;
  for (double a : spec.alpha.d) kept += int(a);
  std::cout << "binarize: mu " << o.mu << (o.uniform ? " (uniform baseline)" : "")
            << " keeps " << kept << "/" << spec.alpha.d.size() << " RSAttn heads -> "
            << out << "\n";
  return 0;
}

int cmd_retrain(const Options& o) {
  std::string ckpt = o.model.empty() ? join(o.out_dir, "student.ckpt") : o.model;
  if (o.resume && stage_complete(o.out_dir, "retrain") && fs::exists(ckpt)) {
    std::cout << "retrain: already complete, skipping (resume)\n";
    return 0;
  }
  std::string arch_path = o.arch.empty() ? join(o.out_dir, "arch.json") : o.arch;
  if (!fs::exists(arch_path))
    throw ConfigError("architecture file not found at '" + arch_path +
                      "' -- run `mpcvit binarize` first or pass --arch");
  ArchSpec spec = load_arch_json(arch_path);
  Dataset train = load_required(train_path(o), "train");
  Dataset eval = load_required(eval_path(o), "eval");

  ViTModel student = ViTModel::init(spec.cfg, o.seed);
  apply_arch(student, spec.alpha, spec.beta, spec.fuse, spec.relu_added);

  ViTModel teacher;
  const ViTModel* teacher_ptr = nullptr;
  if (o.kd) {
    std::string tpath = o.teacher.empty() ? join(o.out_dir, "teacher.ckpt") : o.teacher;
    if (!fs::exists(tpath))
      throw ConfigError("teacher checkpoint not found at '" + tpath +
                        "' -- run `mpcvit train-teacher` first, pass --teacher, or "
                        "disable distillation with --kd false");
    teacher = load_checkpoint(tpath);
    teacher_ptr = &teacher;
  }
  TrainResult res = train_model(student, train, eval, train_config(o), teacher_ptr,
                                kd_config(o));
  save_checkpoint(student, ckpt);
  write_metrics_csv(res.history, join(o.out_dir, "student_metrics.csv"));
  std::cout << "retrain: eval accuracy " << res.final_eval_acc << " ("
            << student.rsattn_heads() << " RSAttn heads) -> " << ckpt << "\n";
  write_manifest(o.out_dir, "retrain",
                 {ckpt, join(o.out_dir, "student_metrics.csv")}, options_to_json(o));
  return 0;
}

int cmd_infer(const Options& o) {
  std::string ckpt = o.model.empty() ? join(o.out_dir, "student.ckpt") : o.model;
  if (!fs::exists(ckpt))
    throw ConfigError("model checkpoint not found at '" + ckpt + "'");
  ViTModel model = load_checkpoint(ckpt);
  Dataset eval = load_required(eval_path(o), "eval");
  std::vector<std::vector<std::string>> rows;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    Mat logits = model.forward(eval.images[i]).logits.value();
    int pred = 0;
    for (std::size_t j = 1; j < logits.d.size(); ++j)
      if (logits.d[j] > logits.d[std::size_t(pred)]) pred = int(j);
    correct += (pred == eval.labels[i]);
    rows.push_back({std::to_string(i), std::to_string(eval.labels[i]),
                    std::to_string(pred)});
  }
  write_csv(join(o.out_dir, "predictions.csv"), {"index", "label", "pred"}, rows);
  double acc = double(correct) / double(eval.size());
  std::cout << "infer: accuracy " << acc << " over " << eval.size() << " samples\n";
  return 0;
}

int cmd_mpc_infer(const Options& o) {
  std::string ckpt = o.model.empty() ? join(o.out_dir, "student.ckpt") : o.model;
  if (!fs::exists(ckpt))
    throw ConfigError("model checkpoint not found at '" + ckpt + "'");
  ViTModel model = load_checkpoint(ckpt);
  Dataset eval = load_required(eval_path(o), "eval");
  RingParams ring{o.ring_l, o.ring_f};

  std::size_t n = std::min<std::size_t>(std::size_t(o.samples), eval.size());
  CommMeter total;
  std::size_t agree = 0, secure_ok = 0, plain_ok = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Session session(ring, o.seed + i);
    MpcForwardResult sec = mpc_forward(model, eval.images[i], session);
    Mat logits = model.forward(eval.images[i]).logits.value();
    int plain = 0;
    for (std::size_t j = 1; j < logits.d.size(); ++j)
      if (logits.d[j] > logits.d[std::size_t(plain)]) plain = int(j);
    agree += (sec.argmax == plain);
    secure_ok += (sec.argmax == eval.labels[i]);
    plain_ok += (plain == eval.labels[i]);
    total.merge(session.meter());
  }

  write_meter_csv(total, join(o.out_dir, "meter.csv"));
  auto est = estimate_forward_comm(model, ring);
  double worst_drift = 0.0;
  json per_kind = json::object();
  for (const auto& [kind, bytes] : est) {
    double measured =
        total.rows.count(kind)
            ? double(total.rows.at(kind).bytes_p0 + total.rows.at(kind).bytes_p1) /
                  double(n)
            : 0.0;
    double drift = bytes > 0 ? std::abs(measured - bytes) / bytes : 0.0;
    worst_drift = std::max(worst_drift, drift);
    per_kind[kind] = {{"estimated_bytes", bytes}, {"measured_bytes", measured},
                      {"drift", drift}};
  }
  u64 per_sample_bytes = total.total_bytes() / n;
  u64 per_sample_rounds = total.total_rounds() / n;
  json report{{"samples", n},
              {"plain_secure_agreement", double(agree) / double(n)},
              {"secure_accuracy", double(secure_ok) / double(n)},
              {"plain_accuracy", double(plain_ok) / double(n)},
              {"bytes_per_sample", per_sample_bytes},
              {"rounds_per_sample", per_sample_rounds},
              {"wan_seconds_per_sample", wan_seconds(per_sample_bytes, per_sample_rounds)},
              {"comm_by_kind", per_kind},
              {"max_kind_drift", worst_drift}};
  std::ofstream(join(o.out_dir, "mpc_report.json")) << report.dump(2) << "\n";
  std::cout << "mpc-infer: " << n << " samples, plain/secure agreement "
            << double(agree) / double(n) << ", " << per_sample_bytes
            << " bytes/sample over " << per_sample_rounds << " rounds\n";
  return 0;
}

int cmd_estimate(const Options& o) {
  ViTModel model;
  if (!o.model.empty() || fs::exists(join(o.out_dir, "student.ckpt"))) {
    std::string ckpt = o.model.empty() ? join(o.out_dir, "student.ckpt") : o.model;
    if (!fs::exists(ckpt))
      throw ConfigError("model checkpoint not found at '" + ckpt + "'");
    model = load_checkpoint(ckpt);
  } else if (!o.arch.empty() || fs::exists(join(o.out_dir, "arch.json"))) {
    std::string apath = o.arch.empty() ? join(o.out_dir, "arch.json") : o.arch;
    ArchSpec spec = load_arch_json(apath);
    model = ViTModel::init(spec.cfg, o.seed);
    apply_arch(model, spec.alpha, spec.beta, spec.fuse, spec.relu_added);
  } else {
    throw ConfigError("estimate needs --model or --arch (or prior pipeline outputs in " +
                      o.out_dir + ")");
  }

  CostTable table = cost_table(o);
  LatencyBreakdown b = estimate_model_latency(model, table);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> labels;
  std::vector<double> values;
  for (const auto& [k, v] : b.by_component) {
    rows.push_back({k, std::to_string(v)});
    labels.push_back(k);
    values.push_back(v);
  }
  rows.push_back({"total", std::to_string(b.total_s)});
  write_csv(join(o.out_dir, "latency_components.csv"), {"component", "seconds"}, rows);
  std::vector<std::vector<std::string>> lrows;
  for (const auto& [k, v] : b.per_layer) lrows.push_back({k, std::to_string(v)});
  write_csv(join(o.out_dir, "latency_layers.csv"), {"layer", "seconds"}, lrows);
  write_svg_bars(join(o.out_dir, "latency.svg"), "estimated secure-inference latency",
                 labels, values, "seconds");

  RingParams ring{o.ring_l, o.ring_f};
  auto est = estimate_forward_comm(model, ring);
  std::vector<std::vector<std::string>> crow;
  double total_bytes = 0;
  for (const auto& [k, v] : est) {
    crow.push_back({k, std::to_string(v)});
    total_bytes += v;
  }
  write_csv(join(o.out_dir, "comm_estimate.csv"), {"op", "total_bytes"}, crow);
  table.save_csv(join(o.out_dir, "cost_table.csv"));

  std::cout << "estimate: " << b.total_s << " s/inference, " << u64(total_bytes)
            << " bytes/sample, " << model.rsattn_heads() << " RSAttn heads\n";
  return 0;
}

// One full pipeline leg used by the sweep: fresh student on an assignment.
struct SweepRow {
  u64 seed;
  double mu;
  std::string policy;
  int heads;
  double latency_s;
  double acc;
};

SweepRow sweep_leg(const Options& o, const Dataset& train, const Dataset& eval,
                   const ViTModel& teacher, const Mat& alpha_bin, const Mat& beta_bin,
                   u64 seed, double mu, const std::string& policy,
                   const CostTable& table) {
  ViTModel student = ViTModel::init(teacher.cfg, seed + 100);
  apply_arch(student, alpha_bin, beta_bin, o.fuse, o.relu_added);
  Options local = o;
  local.seed = seed;
  TrainResult res = train_model(student, train, eval, train_config(local),
                                o.kd ? &teacher : nullptr, kd_config(o));
  SweepRow row;
  row.seed = seed;
  row.mu = mu;
  row.policy = policy;
  row.heads = student.rsattn_heads();
  row.latency_s = estimate_model_latency(student, table).total_s;
  row.acc = res.final_eval_acc;
  std::cout << "  sweep: seed " << seed << " mu " << mu << " " << policy << ": acc "
            << row.acc << ", latency " << row.latency_s << " s\n";
  return row;
}

int cmd_sweep(const Options& o) {
  CostTable table = cost_table(o);
  std::vector<double> mus = parse_doubles(o.mu_list);
  std::vector<u64> seeds = parse_seeds(o.seeds);
  for (double m : mus)
    if (m < 0 || m > 1) throw ConfigError("mu_list entries must lie in [0,1]");

  std::vector<SweepRow> rows;
  for (u64 seed : seeds) {
    Options so = o;
    so.seed = seed;
    so.out_dir = join(o.out_dir, "seed" + std::to_string(seed));
    fs::create_directories(so.out_dir);
    so.dataset.clear();
    so.eval_dataset.clear();

    Dataset train, eval;
    if (o.resume && stage_complete(so.out_dir, "gen-data")) {
      train = load_dataset_raw(train_path(so));
      eval = load_dataset_raw(eval_path(so));
    } else {
      train = synth_shapes(std::size_t(o.n_train), o.image_size, o.classes, seed, o.noise);
      eval = synth_shapes(std::size_t(o.n_eval), o.image_size, o.classes, seed + 1, o.noise);
      save_dataset_raw(train, train_path(so));
      save_dataset_raw(eval, eval_path(so));
      write_manifest(so.out_dir, "gen-data", {train_path(so), eval_path(so)},
                     options_to_json(so));
    }

    std::string tpath = join(so.out_dir, "teacher.ckpt");
    ViTModel teacher;
    if (o.resume && stage_complete(so.out_dir, "train-teacher") && fs::exists(tpath)) {
      teacher = load_checkpoint(tpath);
    } else {
      teacher = ViTModel::init(vit_config(so), seed);
      teacher.attn_mode = AttnMode::Softmax;
      KDConfig no_kd;
      no_kd.use_logits = no_kd.use_feature = false;
      TrainResult tr = train_model(teacher, train, eval, train_config(so), nullptr, no_kd);
      save_checkpoint(teacher, tpath);
      write_metrics_csv(tr.history, join(so.out_dir, "teacher_metrics.csv"));
      std::cout << "  sweep: seed " << seed << " teacher acc " << tr.final_eval_acc
                << "\n";
      write_manifest(so.out_dir, "train-teacher", {tpath}, options_to_json(so));
    }

    std::string spath = join(so.out_dir, "search.ckpt");
    ViTModel searched;
    if (o.resume && stage_complete(so.out_dir, "search") && fs::exists(spath)) {
      searched = load_checkpoint(spath);
    } else {
      searched = ViTModel::init(vit_config(so), seed);
      SearchConfig sc;
      sc.epochs = o.search_epochs;
      sc.batch = o.batch;
      sc.lr_max = o.lr_max;
      sc.lr_min = o.lr_min;
      sc.weight_decay = o.weight_decay;
      sc.arch_lr = o.arch_lr;
      sc.lambda = o.lambda;
      sc.eta = o.eta;
      sc.search_beta = o.search_beta;
      sc.seed = seed;
      nas_search(searched, train, sc, table);
      save_checkpoint(searched, spath);
      write_manifest(so.out_dir, "search", {spath}, options_to_json(so));
    }

    Mat beta_bin = binarize_threshold(searched.beta.value(), o.sigma);
    for (double mu : mus) {
      rows.push_back(sweep_leg(o, train, eval, teacher,
                               binarize_topk(searched.alpha.value(), mu), beta_bin, seed,
                               mu, "searched", table));
      rows.push_back(sweep_leg(o, train, eval, teacher,
                               uniform_baseline(o.depth, o.heads, mu), beta_bin, seed, mu,
                               "uniform", table));
    }
    Mat ones = uniform_baseline(o.depth, o.heads, 1.0);
    Mat zeros = uniform_baseline(o.depth, o.heads, 0.0);
    Mat beta_ones(std::size_t(o.depth), 1);
    for (auto& x : beta_ones.d) x = 1.0;
    rows.push_back(
        sweep_leg(o, train, eval, teacher, ones, beta_ones, seed, 1.0, "all_rsattn", table));
    rows.push_back(sweep_leg(o, train, eval, teacher, zeros, beta_ones, seed, 0.0,
                             "all_scaleattn", table));
  }

  std::vector<std::vector<std::string>> csv;
  for (const auto& r : rows)
    csv.push_back({std::to_string(r.seed), std::to_string(r.mu), r.policy,
                   std::to_string(r.heads), std::to_string(r.latency_s),
                   std::to_string(r.acc)});
  write_csv(join(o.out_dir, "pareto.csv"),
            {"seed", "mu", "policy", "rsattn_heads", "latency_s", "eval_acc"}, csv);

  std::map<std::string, ChartSeries> series;
  for (const auto& r : rows) {
    auto& s = series[r.policy];
    s.name = r.policy;
    s.points.push_back({r.latency_s, r.acc});
  }
  std::vector<ChartSeries> slist;
  for (auto& [k, s] : series) {
    std::sort(s.points.begin(), s.points.end());
    slist.push_back(s);
  }
  write_svg_chart(join(o.out_dir, "pareto.svg"), "accuracy vs estimated latency",
                  "latency (s)", "eval accuracy", slist);

  json summary = json::array();
  for (double mu : mus) {
    double acc_s = 0, acc_u = 0, lat = 0;
    int n = 0;
    for (const auto& r : rows) {
      if (r.mu != mu) continue;
      if (r.policy == "searched") {
        acc_s += r.acc;
        lat += r.latency_s;
        ++n;
      } else if (r.policy == "uniform") {
        acc_u += r.acc;
      }
    }
    if (n)
      summary.push_back({{"mu", mu},
                         {"mean_acc_searched", acc_s / n},
                         {"mean_acc_uniform", acc_u / n},
                         {"mean_latency_s", lat / n}});
  }
  std::ofstream(join(o.out_dir, "sweep_summary.json")) << summary.dump(2) << "\n";
  std::cout << "sweep: " << rows.size() << " runs -> " << join(o.out_dir, "pareto.csv")
            << "\n";
  write_manifest(o.out_dir, "sweep",
                 {join(o.out_dir, "pareto.csv"), join(o.out_dir, "pareto.svg"),
                  join(o.out_dir, "sweep_summary.json")},
                 options_to_json(o));
  return 0;
}

int cmd_probe_error(const Options& o) {
  RingParams ring{o.ring_l, o.ring_f};
  std::vector<double> vars = parse_doubles(o.variances);
  std::size_t n = std::size_t(o.samples);

  struct Probe {
    std::string name;
    double max_err = 0, mean_err = 0;
  };
  std::vector<std::vector<std::string>> rows;
  std::map<std::string, ChartSeries> series;

  std::mt19937_64 gen(o.seed);
  for (double var : vars) {
    if (var <= 0) throw ConfigError("variances must be positive");
    double sd = std::sqrt(var);
    std::normal_distribution<double> dist(0.0, sd);
    auto record = [&](const std::string& kernel, double max_err, double mean_err) {
      rows.push_back({kernel, std::to_string(var), std::to_string(max_err),
                      std::to_string(mean_err)});
      auto& s = series[kernel];
      s.name = kernel;
      s.points.push_back({var, max_err});
    };
    auto run = [&](const std::string& kernel, auto make_input, auto reference,
                   auto secure) {
      Session s(ring, o.seed + u64(var * 977));
      std::vector<double> xs(n);
      for (auto& x : xs) x = make_input(dist(gen));
      std::vector<u64> enc(n);
      for (std::size_t i = 0; i < n; ++i) enc[i] = encode(xs[i], ring);
      SharedVec out = secure(s, s.share(enc));
      auto rec = s.reconstruct(out);
      double worst = 0, mean = 0;
      for (std::size_t i = 0; i < n; ++i) {
        double err = std::abs(decode(rec[i], ring) - reference(xs[i]));
        worst = std::max(worst, err);
        mean += err;
      }
      record(kernel, worst, mean / double(n));
    };

    // negative half-line (softmax-style stabilized inputs)
    run("exp", [](double x) { return -std::abs(x); },
        [](double x) { return std::exp(x); },
        [](Session& s, const SharedVec& v) { return mpc_exp(s, v); });
    run("reciprocal", [](double x) { return std::abs(x) + 0.05; },
        [](double x) { return 1.0 / x; },
        [](Session& s, const SharedVec& v) { return mpc_reciprocal(s, v); });
    run("gelu", [](double x) { return std::clamp(x, -8.0, 8.0); },
        [](double x) {
          return 0.5 * x *
                 (1.0 + std::tanh(0.7978845608028654 * (x + 0.044715 * x * x * x)));
        },
        [](Session& s, const SharedVec& v) { return mpc_gelu(s, v); });
    run("isqrt", [](double x) { return std::abs(x) + 0.01; },
        [](double x) { return 1.0 / std::sqrt(x); },
        [](Session& s, const SharedVec& v) { return mpc_isqrt(s, v); });

    // row kernels: max-abs error of the normalized rows
    {
      Session s(ring, o.seed + u64(var * 1009));
      std::size_t rows_n = std::max<std::size_t>(1, n / 16);
      double worst = 0, mean = 0;
      std::size_t cnt = 0;
      for (std::size_t r = 0; r < rows_n; ++r) {
        std::vector<double> xs(16);
        for (auto& x : xs) x = dist(gen);
        std::vector<u64> enc(16);
        for (std::size_t i = 0; i < 16; ++i) enc[i] = encode(xs[i], ring);
        auto rec = s.reconstruct(mpc_softmax_row(s, s.share(enc)));
        double mx = *std::max_element(xs.begin(), xs.end()), z = 0;
        std::vector<double> ref(16);
        for (std::size_t i = 0; i < 16; ++i) z += (ref[i] = std::exp(xs[i] - mx));
        for (std::size_t i = 0; i < 16; ++i) {
          double err = std::abs(decode(rec[i], ring) - ref[i] / z);
          worst = std::max(worst, err);
          mean += err;
          ++cnt;
        }
      }
      record("softmax", worst, mean / double(cnt));
    }
  }

  write_csv(join(o.out_dir, "errors.csv"),
            {"kernel", "variance", "max_abs_err", "mean_abs_err"}, rows);
  std::vector<ChartSeries> slist;
  for (auto& [k, s] : series) slist.push_back(s);
  write_svg_chart(join(o.out_dir, "errors.svg"), "fixed-point kernel error vs input variance",
                  "input variance", "max abs error", slist);
  std::cout << "probe-error: " << rows.size() << " probes -> "
            << join(o.out_dir, "errors.csv") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mpcvit: MPC-friendly vision transformer workbench"};
  app.require_subcommand(1);

  Options opts;
  std::string config_path;

  // Pre-scan for --config so file values load first and flags override them.
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError("config file '" + config_path + "' is not valid JSON: " +
                          e.what());
      }
      options_from_json(opts, j);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  app.add_option("--config", config_path, "flat JSON config file (flags override it)");
  app.add_option("--seed", opts.seed, "master RNG seed");
  app.add_option("--out_dir", opts.out_dir, "output directory (default $MPCVIT_OUT_ROOT or ./out)");
  app.add_flag("--resume,!--no-resume", opts.resume, "skip stages with a complete manifest");
  app.add_option("--dataset", opts.dataset, "training dataset file");
  app.add_option("--eval_dataset", opts.eval_dataset, "evaluation dataset file");
  app.add_option("--n_train", opts.n_train, "generated training set size");
  app.add_option("--n_eval", opts.n_eval, "generated evaluation set size");
  app.add_option("--image_size", opts.image_size, "image side length");
  app.add_option("--classes", opts.classes, "number of classes (2..10)");
  app.add_option("--noise", opts.noise, "pixel noise sigma for gen-data");
  app.add_option("--patch_size", opts.patch_size, "patch side length");
  app.add_option("--depth", opts.depth, "transformer layers");
  app.add_option("--heads", opts.heads, "attention heads per layer");
  app.add_option("--dim", opts.dim, "embedding dimension");
  app.add_option("--mlp_ratio", opts.mlp_ratio, "MLP hidden dim multiplier");
  app.add_option("--epochs", opts.epochs, "training epochs");
  app.add_option("--batch", opts.batch, "batch size");
  app.add_option("--lr_max", opts.lr_max, "cosine schedule peak lr");
  app.add_option("--lr_min", opts.lr_min, "cosine schedule floor lr");
  app.add_option("--weight_decay", opts.weight_decay, "AdamW weight decay");
  app.add_option("--search_epochs", opts.search_epochs, "architecture search epochs");
  app.add_option("--arch_lr", opts.arch_lr, "architecture weight lr");
  app.add_option("--lambda", opts.lambda, "latency pressure (<0 = auto-scale)");
  app.add_option("--eta", opts.eta, "GeLU pressure (<0 = balance rule)");
  app.add_flag("--search_beta,!--no-search_beta", opts.search_beta,
               "also search GeLU keep/drop");
  app.add_option("--mu", opts.mu, "RSAttn head budget fraction");
  app.add_option("--sigma", opts.sigma, "GeLU keep threshold");
  app.add_flag("--fuse,!--no-fuse", opts.fuse, "fuse linear MLPs after binarize");
  app.add_flag("--relu_added,!--no-relu_added", opts.relu_added,
               "add a ReLU after fused MLPs");
  app.add_flag("--uniform,!--no-uniform", opts.uniform,
               "binarize to the budget-matched uniform baseline");
  app.add_flag("--kd,!--no-kd", opts.kd, "distill from the teacher during retrain");
  app.add_option("--kd_temperature", opts.kd_temperature, "distillation temperature");
  app.add_option("--kd_chi", opts.kd_chi, "CE loss weight");
  app.add_option("--kd_beta", opts.kd_beta, "KL loss weight");
  app.add_option("--kd_gamma", opts.kd_gamma, "feature loss weight");
  app.add_flag("--kd_logits,!--no-kd_logits", opts.kd_logits, "enable the KL term");
  app.add_flag("--kd_feature,!--no-kd_feature", opts.kd_feature,
               "enable the feature term");
  app.add_option("--teacher", opts.teacher, "teacher checkpoint path");
  app.add_option("--model", opts.model, "model checkpoint path");
  app.add_option("--arch", opts.arch, "architecture JSON path");
  app.add_option("--ring_l", opts.ring_l, "ring bit width");
  app.add_option("--ring_f", opts.ring_f, "fixed-point fraction bits");
  app.add_option("--cost_table", opts.cost_table, "cost table CSV (default: calibrated)");
  app.add_option("--samples", opts.samples, "sample count for mpc-infer / probe-error");
  app.add_option("--variances", opts.variances, "probe-error input variances (csv)");
  app.add_option("--mu_list", opts.mu_list, "sweep budgets (csv)");
  app.add_option("--seeds", opts.seeds, "sweep seeds (csv)");

  auto* gen_data = app.add_subcommand("gen-data", "generate the synthetic shape datasets");
  auto* train_teacher =
      app.add_subcommand("train-teacher", "train the softmax-attention teacher");
  auto* search = app.add_subcommand("search", "latency-aware architecture search");
  auto* binarize = app.add_subcommand("binarize", "binarize searched weights into arch.json");
  auto* retrain = app.add_subcommand("retrain", "retrain a binarized student (with KD)");
  auto* infer = app.add_subcommand("infer", "plaintext evaluation of a checkpoint");
  auto* mpc_infer =
      app.add_subcommand("mpc-infer", "secure two-party inference with traffic metering");
  auto* estimate = app.add_subcommand("estimate", "latency/communication estimates");
  auto* sweep = app.add_subcommand("sweep", "multi-seed accuracy/latency Pareto sweep");
  auto* probe_error = app.add_subcommand("probe-error", "fixed-point kernel error probe");
  for (CLI::App* sub : {gen_data, train_teacher, search, binarize, retrain, infer,
                        mpc_infer, estimate, sweep, probe_error})
    sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (opts.out_dir.empty()) {
      const char* root = std::getenv("MPCVIT_OUT_ROOT");
      opts.out_dir = root && *root ? root : "out";
    }
    validate_options(opts);
    fs::create_directories(opts.out_dir);

    json effective = options_to_json(opts);
    std::cout << "config: " << effective.dump() << "\n";
    std::ofstream(join(opts.out_dir, "config.json")) << effective.dump(2) << "\n";

    if (gen_data->parsed()) return cmd_gen_data(opts);
    if (train_teacher->parsed()) return cmd_train_teacher(opts);
    if (search->parsed()) return cmd_search(opts);
    if (binarize->parsed()) return cmd_binarize(opts);
    if (retrain->parsed()) return cmd_retrain(opts);
    if (infer->parsed()) return cmd_infer(opts);
    if (mpc_infer->parsed()) return cmd_mpc_infer(opts);
    if (estimate->parsed()) return cmd_estimate(opts);
    if (sweep->parsed()) return cmd_sweep(opts);
    if (probe_error->parsed()) return cmd_probe_error(opts);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
