#include "mpcvit/nas.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "mpcvit/optim.hpp"

namespace mpcvit {

using json = nlohmann::json;

SearchResult nas_search(ViTModel& model, const Dataset& train, const SearchConfig& cfg,
                        const CostTable& table) {
    if (train.size() == 0) throw ConfigError("empty training set");
    std::mt19937_64 rng(cfg.seed);

    double lat_attn = rsattn_head_latency(model.cfg, table);
    double lat_gelu = gelu_site_latency(model.cfg, table);

    AdamW theta_opt(model.weight_params(), cfg.lr_max, cfg.weight_decay);
    std::vector<Tensor> arch = {model.alpha};
    if (cfg.search_beta) arch.push_back(model.beta);
    AdamW arch_opt(arch, cfg.arch_lr, /*weight_decay=*/0.0);

    long steps_per_epoch = long((train.size() + std::size_t(cfg.batch) - 1) / std::size_t(cfg.batch));
    CosineSchedule sched{cfg.lr_max, cfg.lr_min, cfg.epochs * steps_per_epoch};

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    SearchResult res;
    double lambda = cfg.lambda, eta = cfg.eta;
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t off = 0; off < train.size(); off += std::size_t(cfg.batch)) {
            std::size_t bsz = std::min(std::size_t(cfg.batch), train.size() - off);
            theta_opt.zero_grad();
            arch_opt.zero_grad();
            model.alpha.zero_grad();
            model.beta.zero_grad();

            Tensor task;
            for (std::size_t b = 0; b < bsz; ++b) {
                std::size_t i = order[off + b];
                ForwardOut out = model.forward(train.images[i]);
                Tensor ce = tcross_entropy(out.logits, std::size_t(train.labels[i]));
                task = b == 0 ? ce : tadd(task, ce);
            }
            task = taffine(task, 1.0 / double(bsz), 0.0);

            if (lambda < 0.0) {
                // Auto-scale: initial penalty ~= 10% of the initial task loss
                // at the all-ones initialization.
                double denom = double(model.cfg.depth * model.cfg.heads) * lat_attn;
                lambda = 0.1 * task.value().d[0] / denom;
            }
            if (!cfg.search_beta)
                eta = 0.0;
            else if (eta < 0.0)
                eta = lambda * lat_gelu / lat_attn;

            Tensor loss = task;
            Tensor penalty;
            bool have_penalty = false;
            for (int l = 0; l < model.cfg.depth; ++l) {
                for (int n = 0; n < model.cfg.heads; ++n) {
                    Tensor term = taffine(telem(model.alpha, std::size_t(l), std::size_t(n)),
                                          lambda * lat_attn, 0.0);
                    penalty = have_penalty ? tadd(penalty, term) : term;
                    have_penalty = true;
                }
                if (cfg.search_beta) {
                    Tensor term = taffine(telem(model.beta, std::size_t(l), 0),
                                          eta * lat_gelu, 0.0);
                    penalty = tadd(penalty, term);
                }
            }
            loss = tadd(loss, penalty);
            loss.backward();

            theta_opt.set_lr(sched.lr(step));
            theta_opt.step();
            arch_opt.step();
            model.clamp_arch();
            ++step;

            double mean_a = 0;
            for (double v : model.alpha.value().d) mean_a += v;
            mean_a /= double(model.alpha.value().d.size());
            double mean_b = 0;
            for (double v : model.beta.value().d) mean_b += v;
            mean_b /= double(model.beta.value().d.size());
            res.history.push_back({int(step), task.value().d[0], penalty.value().d[0],
                                   mean_a, mean_b});
        }
    }
    res.alpha = model.alpha.value();
    res.beta = model.beta.value();
    res.lambda_used = std::max(lambda, 0.0);
    res.eta_used = std::max(eta, 0.0);
    return res;
}

Mat binarize_topk(const Mat& alpha, double mu) {
    if (mu < 0.0 || mu > 1.0) throw ConfigError("mu must be in [0,1]");
    std::size_t total = alpha.d.size();
    std::size_t k = std::size_t(std::ceil(mu * double(total)));
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (alpha.d[a] != alpha.d[b]) return alpha.d[a] > alpha.d[b];
        return a < b;  // ties toward the lower flat index
    });
    Mat out(alpha.rows, alpha.cols);
    for (std::size_t i = 0; i < k; ++i) out.d[idx[i]] = 1.0;
    return out;
}

Mat binarize_threshold(const Mat& beta, double sigma) {
    Mat out(beta.rows, beta.cols);
    for (std::size_t i = 0; i < beta.d.size(); ++i) out.d[i] = beta.d[i] > sigma ? 1.0 : 0.0;
    return out;
}

Mat uniform_baseline(int depth, int heads, double mu) {
    if (mu < 0.0 || mu > 1.0) throw ConfigError("mu must be in [0,1]");
    std::size_t total = std::size_t(depth) * std::size_t(heads);
    std::size_t k = std::size_t(std::ceil(mu * double(total)));
    Mat out(static_cast<std::size_t>(depth), static_cast<std::size_t>(heads));
    std::size_t base = k / std::size_t(depth), extra = k % std::size_t(depth);
    for (std::size_t l = 0; l < std::size_t(depth); ++l) {
        std::size_t keep = base + (l < extra ? 1 : 0);
        for (std::size_t n = 0; n < keep && n < std::size_t(heads); ++n) out.at(l, n) = 1.0;
    }
    return out;
}

void apply_arch(ViTModel& model, const Mat& alpha_bin, const Mat& beta_bin, bool fuse,
                bool relu_added) {
    if (alpha_bin.rows != std::size_t(model.cfg.depth) ||
        alpha_bin.cols != std::size_t(model.cfg.heads))
        throw ShapeError("alpha assignment shape mismatch");
    if (beta_bin.rows != std::size_t(model.cfg.depth) || beta_bin.cols != 1)
        throw ShapeError("beta assignment shape mismatch");
    model.alpha.value_mut() = alpha_bin;
    model.beta.value_mut() = beta_bin;
    model.relu_added = relu_added;
    if (fuse)
        for (int l = 0; l < model.cfg.depth; ++l)
            if (beta_bin.at(std::size_t(l), 0) < 0.5) model.fuse_mlp(l);
}

void save_arch_json(const ArchSpec& spec, const std::string& path) {
    json j;
    j["config"] = {{"image_size", spec.cfg.image_size}, {"patch_size", spec.cfg.patch_size},
                   {"channels", spec.cfg.channels},     {"classes", spec.cfg.classes},
                   {"depth", spec.cfg.depth},           {"heads", spec.cfg.heads},
                   {"dim", spec.cfg.dim},               {"mlp_ratio", spec.cfg.mlp_ratio},
                   {"ln_eps", spec.cfg.ln_eps},         {"rs_eps", spec.cfg.rs_eps}};
    json alpha = json::array();
    for (std::size_t l = 0; l < spec.alpha.rows; ++l) {
        json row = json::array();
        for (std::size_t n = 0; n < spec.alpha.cols; ++n)
            row.push_back(int(spec.alpha.at(l, n)));
        alpha.push_back(row);
    }
    j["alpha"] = alpha;
    json beta = json::array();
    for (std::size_t l = 0; l < spec.beta.rows; ++l) beta.push_back(int(spec.beta.at(l, 0)));
    j["beta"] = beta;
    j["fuse"] = spec.fuse;
    j["relu_added"] = spec.relu_added;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open arch file for writing: " + path);
    f << j.dump(2) << "\n";
}

ArchSpec load_arch_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw CorruptFile("cannot open arch file: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw CorruptFile(std::string("arch file is not valid JSON: ") + e.what());
    }
    ArchSpec s;
    try {
        const json& c = j.at("config");
        s.cfg.image_size = c.at("image_size").get<int>();
        s.cfg.patch_size = c.at("patch_size").get<int>();
        s.cfg.channels = c.at("channels").get<int>();
        s.cfg.classes = c.at("classes").get<int>();
        s.cfg.depth = c.at("depth").get<int>();
        s.cfg.heads = c.at("heads").get<int>();
        s.cfg.dim = c.at("dim").get<int>();
        s.cfg.mlp_ratio = c.at("mlp_ratio").get<int>();
        s.cfg.ln_eps = c.at("ln_eps").get<double>();
        s.cfg.rs_eps = c.at("rs_eps").get<double>();
        s.cfg.validate();
        s.alpha = Mat(std::size_t(s.cfg.depth), std::size_t(s.cfg.heads));
        const json& a = j.at("alpha");
        if (a.size() != std::size_t(s.cfg.depth)) throw CorruptFile("alpha row count");
        for (std::size_t l = 0; l < a.size(); ++l) {
            if (a[l].size() != std::size_t(s.cfg.heads)) throw CorruptFile("alpha col count");
            for (std::size_t n = 0; n < a[l].size(); ++n)
                s.alpha.at(l, n) = a[l][n].get<double>();
        }
        s.beta = Mat(std::size_t(s.cfg.depth), 1);
        const json& b = j.at("beta");
        if (b.size() != std::size_t(s.cfg.depth)) throw CorruptFile("beta count");
        for (std::size_t l = 0; l < b.size(); ++l) s.beta.at(l, 0) = b[l].get<double>();
        s.fuse = j.at("fuse").get<bool>();
        s.relu_added = j.at("relu_added").get<bool>();
    } catch (const json::exception& e) {
        throw CorruptFile(std::string("arch file missing fields: ") + e.what());
    }
    return s;
}

}  // namespace mpcvit
