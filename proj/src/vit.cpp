#include "mpcvit/vit.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

#include <json.hpp>

#include "mpcvit/errors.hpp"

namespace mpcvit {

using json = nlohmann::json;

void ViTConfig::validate() const {
    if (image_size <= 0 || patch_size <= 0 || channels <= 0)
        throw ConfigError("image/patch/channels must be positive");
    if (image_size % patch_size != 0)
        throw ConfigError("image_size must be divisible by patch_size");
    if (dim % heads != 0) throw ConfigError("dim must be divisible by heads");
    if (depth <= 0 || heads <= 0 || dim <= 0 || classes <= 1)
        throw ConfigError("depth/heads/dim/classes out of range");
    if (mlp_ratio <= 0) throw ConfigError("mlp_ratio must be positive");
}

static Tensor param_randn(std::size_t r, std::size_t c, std::mt19937_64& rng, double stddev) {
    // truncated normal: resample anything beyond 2 sigma
    std::normal_distribution<double> dist(0.0, stddev);
    Mat m(r, c);
    for (double& e : m.d) {
        do {
            e = dist(rng);
        } while (std::abs(e) > 2.0 * stddev);
    }
    return Tensor(m, /*requires_grad=*/true);
}

static Tensor param_const(std::size_t r, std::size_t c, double v) {
    Mat m(r, c);
    for (double& e : m.d) e = v;
    return Tensor(m, /*requires_grad=*/true);
}

ViTModel ViTModel::init(const ViTConfig& cfg, u64 seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    const double w_std = 0.02;
    ViTModel m;
    m.cfg = cfg;
    int C = cfg.dim, dk = cfg.head_dim(), K = cfg.mlp_dim();
    m.patch_w = param_randn(cfg.patch_dim(), C, rng, w_std);
    m.patch_b = param_const(1, C, 0.0);
    m.cls_token = param_randn(1, C, rng, w_std);
    m.pos_emb = param_randn(cfg.tokens(), C, rng, w_std);
    for (int l = 0; l < cfg.depth; ++l) {
        BlockParams b;
        b.ln1_g = param_const(1, C, 1.0);
        b.ln1_b = param_const(1, C, 0.0);
        for (int h = 0; h < cfg.heads; ++h) {
            b.wq.push_back(param_randn(C, dk, rng, w_std));
            b.wk.push_back(param_randn(C, dk, rng, w_std));
            b.wv.push_back(param_randn(C, dk, rng, w_std));
        }
        b.wo = param_randn(C, C, rng, w_std);
        b.bo = param_const(1, C, 0.0);
        b.ln2_g = param_const(1, C, 1.0);
        b.ln2_b = param_const(1, C, 0.0);
        b.w1 = param_randn(C, K, rng, w_std);
        b.b1 = param_const(1, K, 0.0);
        b.w2 = param_randn(K, C, rng, w_std);
        b.b2 = param_const(1, C, 0.0);
        m.blocks.push_back(std::move(b));
    }
    m.ln_f_g = param_const(1, C, 1.0);
    m.ln_f_b = param_const(1, C, 0.0);
    m.head_w = param_randn(C, cfg.classes, rng, w_std);
    m.head_b = param_const(1, cfg.classes, 0.0);
    m.alpha = param_const(cfg.depth, cfg.heads, 1.0);
    m.beta = param_const(cfg.depth, 1, 1.0);
    return m;
}

std::vector<Tensor> ViTModel::weight_params() const {
    std::vector<Tensor> p = {patch_w, patch_b, cls_token, pos_emb};
    for (const BlockParams& b : blocks) {
        p.push_back(b.ln1_g);
        p.push_back(b.ln1_b);
        for (std::size_t h = 0; h < b.wq.size(); ++h) {
            p.push_back(b.wq[h]);
            p.push_back(b.wk[h]);
            p.push_back(b.wv[h]);
        }
        p.push_back(b.wo);
        p.push_back(b.bo);
        p.push_back(b.ln2_g);
        p.push_back(b.ln2_b);
        if (b.fused) {
            p.push_back(b.wf);
            p.push_back(b.bf);
        } else {
            p.push_back(b.w1);
            p.push_back(b.b1);
            p.push_back(b.w2);
            p.push_back(b.b2);
        }
    }
    p.push_back(ln_f_g);
    p.push_back(ln_f_b);
    p.push_back(head_w);
    p.push_back(head_b);
    return p;
}

std::vector<Tensor> ViTModel::arch_params() const { return {alpha, beta}; }

Mat patchify(const Mat& image, const ViTConfig& cfg) {
    int g = cfg.grid(), p = cfg.patch_size, c = cfg.channels;
    if (int(image.rows) != cfg.image_size || int(image.cols) != cfg.image_size * c)
        throw ShapeError("patchify: image shape does not match config");
    Mat out(g * g, cfg.patch_dim());
    for (int pi = 0; pi < g; ++pi)
        for (int pj = 0; pj < g; ++pj) {
            std::size_t row = std::size_t(pi) * g + pj;
            std::size_t k = 0;
            for (int di = 0; di < p; ++di)
                for (int dj = 0; dj < p * c; ++dj)
                    out.at(row, k++) = image.at(std::size_t(pi * p + di),
                                                std::size_t(pj * p * c) + dj);
        }
    return out;
}

ForwardOut ViTModel::forward(const Mat& image) const {
    const ViTConfig& c = cfg;
    double inv_sqrt_dk = 1.0 / std::sqrt(double(c.head_dim()));
    double inv_n = 1.0 / double(c.tokens());

    Tensor patches(patchify(image, c));  // constant input
    Tensor emb = tadd_bias_row(tmatmul(patches, patch_w), patch_b);
    std::vector<Tensor> rows = {cls_token};
    for (int i = 0; i < c.tokens() - 1; ++i) rows.push_back(trow(emb, std::size_t(i)));
    Tensor x = tadd(tconcat_rows(rows), pos_emb);

    for (int l = 0; l < c.depth; ++l) {
        const BlockParams& b = blocks[std::size_t(l)];
        Tensor h = tlayernorm_rows(x, b.ln1_g, b.ln1_b, c.ln_eps);
        std::vector<Tensor> head_outs;
        for (int n = 0; n < c.heads; ++n) {
            Tensor Q = tmatmul(h, b.wq[std::size_t(n)]);
            Tensor K = tmatmul(h, b.wk[std::size_t(n)]);
            Tensor V = tmatmul(h, b.wv[std::size_t(n)]);
            Tensor scores_raw = tmatmul(Q, ttranspose(K));
            if (attn_mode == AttnMode::Softmax) {
                Tensor sm = tsoftmax_rows(taffine(scores_raw, inv_sqrt_dk, 0.0));
                head_outs.push_back(tmatmul(sm, V));
                continue;
            }
            // Mixed head: alpha * RSAttn + (1-alpha) * ScaleAttn / sqrt(d_k).
            Tensor rs = tmatmul(
                trelusoftmax_rows(taffine(scores_raw, inv_sqrt_dk, 0.0), c.rs_eps), V);
            Tensor sc = taffine(tmatmul(scores_raw, V), inv_n * inv_sqrt_dk, 0.0);
            Tensor a = telem(alpha, std::size_t(l), std::size_t(n));
            head_outs.push_back(
                tadd(tmul_scalar(a, rs), tmul_scalar(taffine(a, -1.0, 1.0), sc)));
        }
        Tensor cat = tconcat_cols(head_outs);
        x = tadd(x, tadd_bias_row(tmatmul(cat, b.wo), b.bo));

        Tensor h2 = tlayernorm_rows(x, b.ln2_g, b.ln2_b, c.ln_eps);
        Tensor mlp_out;
        if (b.fused) {
            Tensor m = tadd_bias_row(tmatmul(h2, b.wf), b.bf);
            mlp_out = relu_added ? trelu(m) : m;
        } else {
            Tensor pre = tadd_bias_row(tmatmul(h2, b.w1), b.b1);
            // beta-weighted activation: beta*GeLU(h) + (1-beta)*h.
            Tensor bt = telem(beta, std::size_t(l), 0);
            Tensor act =
                tadd(tmul_scalar(bt, tgelu(pre)), tmul_scalar(taffine(bt, -1.0, 1.0), pre));
            mlp_out = tadd_bias_row(tmatmul(act, b.w2), b.b2);
        }
        x = tadd(x, mlp_out);
    }

    Tensor f = tlayernorm_rows(x, ln_f_g, ln_f_b, c.ln_eps);
    Tensor logits = tadd_bias_row(tmatmul(trow(f, 0), head_w), head_b);
    return {logits, f};
}

void ViTModel::clamp_arch() {
    for (double& v : alpha.value_mut().d) v = std::clamp(v, 0.0, 1.0);
    for (double& v : beta.value_mut().d) v = std::clamp(v, 0.0, 1.0);
}

void ViTModel::fuse_mlp(int layer) {
    BlockParams& b = blocks.at(std::size_t(layer));
    if (b.fused) return;
    Mat wf = matmul(b.w1.value(), b.w2.value());
    Mat bf = matmul(b.b1.value(), b.w2.value());
    for (std::size_t j = 0; j < bf.d.size(); ++j) bf.d[j] += b.b2.value().d[j];
    b.wf = Tensor(wf, /*requires_grad=*/true);
    b.bf = Tensor(bf, /*requires_grad=*/true);
    b.fused = true;
}

int ViTModel::rsattn_heads() const {
    int n = 0;
    for (double v : alpha.value().d)
        if (v >= 0.5) ++n;
    return n;
}

// ---------------------------------------------------------------------------
// Checkpoint format: magic, u32 version, u64 header bytes, JSON header,
// then named float64 little-endian blobs in header order.
// ---------------------------------------------------------------------------

static constexpr char kMagic[8] = {'M', 'P', 'C', 'V', 'I', 'T', 'C', 'K'};
static constexpr std::uint32_t kVersion = 1;

namespace {

struct NamedTensor {
    std::string name;
    Tensor t;
};

std::vector<NamedTensor> named_tensors(const ViTModel& m) {
    std::vector<NamedTensor> out = {
        {"patch_w", m.patch_w}, {"patch_b", m.patch_b},
        {"cls_token", m.cls_token}, {"pos_emb", m.pos_emb},
    };
    for (std::size_t l = 0; l < m.blocks.size(); ++l) {
        const BlockParams& b = m.blocks[l];
        std::string pre = "blk" + std::to_string(l) + ".";
        out.push_back({pre + "ln1_g", b.ln1_g});
        out.push_back({pre + "ln1_b", b.ln1_b});
        for (std::size_t h = 0; h < b.wq.size(); ++h) {
            std::string hp = pre + "h" + std::to_string(h) + ".";
            out.push_back({hp + "wq", b.wq[h]});
            out.push_back({hp + "wk", b.wk[h]});
            out.push_back({hp + "wv", b.wv[h]});
        }
        out.push_back({pre + "wo", b.wo});
        out.push_back({pre + "bo", b.bo});
        out.push_back({pre + "ln2_g", b.ln2_g});
        out.push_back({pre + "ln2_b", b.ln2_b});
        if (b.fused) {
            out.push_back({pre + "wf", b.wf});
            out.push_back({pre + "bf", b.bf});
        } else {
            out.push_back({pre + "w1", b.w1});
            out.push_back({pre + "b1", b.b1});
            out.push_back({pre + "w2", b.w2});
            out.push_back({pre + "b2", b.b2});
        }
    }
    out.push_back({"ln_f_g", m.ln_f_g});
    out.push_back({"ln_f_b", m.ln_f_b});
    out.push_back({"head_w", m.head_w});
    out.push_back({"head_b", m.head_b});
    out.push_back({"alpha", m.alpha});
    out.push_back({"beta", m.beta});
    return out;
}

json config_to_json(const ViTConfig& c) {
    return json{{"image_size", c.image_size}, {"patch_size", c.patch_size},
                {"channels", c.channels},     {"classes", c.classes},
                {"depth", c.depth},           {"heads", c.heads},
                {"dim", c.dim},               {"mlp_ratio", c.mlp_ratio},
                {"ln_eps", c.ln_eps},         {"rs_eps", c.rs_eps}};
}

ViTConfig config_from_json(const json& j) {
    ViTConfig c;
    c.image_size = j.at("image_size").get<int>();
    c.patch_size = j.at("patch_size").get<int>();
    c.channels = j.at("channels").get<int>();
    c.classes = j.at("classes").get<int>();
    c.depth = j.at("depth").get<int>();
    c.heads = j.at("heads").get<int>();
    c.dim = j.at("dim").get<int>();
    c.mlp_ratio = j.at("mlp_ratio").get<int>();
    c.ln_eps = j.at("ln_eps").get<double>();
    c.rs_eps = j.at("rs_eps").get<double>();
    return c;
}

void write_f64_le(std::ofstream& f, const std::vector<double>& v) {
    // Assumes little-endian host (checked at save time).
    f.write(reinterpret_cast<const char*>(v.data()),
            std::streamsize(v.size() * sizeof(double)));
}

}  // namespace

void save_checkpoint(const ViTModel& model, const std::string& path) {
    static_assert(sizeof(double) == 8);
    std::uint16_t probe = 1;
    if (*reinterpret_cast<const char*>(&probe) != 1)
        throw std::runtime_error("checkpoint writer requires a little-endian host");

    auto tensors = named_tensors(model);
    json header;
    header["config"] = config_to_json(model.cfg);
    header["attn_mode"] = model.attn_mode == AttnMode::Softmax ? "softmax" : "mixed";
    header["relu_added"] = model.relu_added;
    json fused = json::array();
    for (const BlockParams& b : model.blocks) fused.push_back(b.fused);
    header["fused"] = fused;
    json tl = json::array();
    for (const NamedTensor& nt : tensors)
        tl.push_back({{"name", nt.name}, {"rows", nt.t.rows()}, {"cols", nt.t.cols()}});
    header["tensors"] = tl;
    std::string hs = header.dump();

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    f.write(kMagic, 8);
    std::uint32_t ver = kVersion;
    f.write(reinterpret_cast<const char*>(&ver), 4);
    std::uint64_t hlen = hs.size();
    f.write(reinterpret_cast<const char*>(&hlen), 8);
    f.write(hs.data(), std::streamsize(hs.size()));
    for (const NamedTensor& nt : tensors) write_f64_le(f, nt.t.value().d);
    if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

ViTModel load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CorruptFile("cannot open checkpoint: " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw CorruptFile("bad checkpoint magic: " + path);
    std::uint32_t ver = 0;
    f.read(reinterpret_cast<char*>(&ver), 4);
    if (!f) throw CorruptFile("truncated checkpoint header: " + path);
    if (ver != kVersion)
        throw VersionMismatch("checkpoint version " + std::to_string(ver) +
                              ", expected " + std::to_string(kVersion));
    std::uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), 8);
    if (!f || hlen > (1u << 26)) throw CorruptFile("bad checkpoint header length");
    std::string hs(hlen, '\0');
    f.read(hs.data(), std::streamsize(hlen));
    if (!f) throw CorruptFile("truncated checkpoint header: " + path);
    json header;
    try {
        header = json::parse(hs);
    } catch (const json::exception& e) {
        throw CorruptFile(std::string("checkpoint header is not valid JSON: ") + e.what());
    }

    ViTConfig cfg = config_from_json(header.at("config"));
    cfg.validate();
    ViTModel m = ViTModel::init(cfg, /*seed=*/0);
    m.attn_mode =
        header.at("attn_mode").get<std::string>() == "softmax" ? AttnMode::Softmax
                                                               : AttnMode::Mixed;
    m.relu_added = header.at("relu_added").get<bool>();
    auto fused = header.at("fused");
    if (fused.size() != m.blocks.size()) throw CorruptFile("fused flag count mismatch");
    for (std::size_t l = 0; l < m.blocks.size(); ++l) {
        if (fused[l].get<bool>()) {
            // Materialize fused tensors with the right shapes before loading.
            m.blocks[l].wf = Tensor(Mat(std::size_t(cfg.dim), std::size_t(cfg.dim)), true);
            m.blocks[l].bf = Tensor(Mat(1, std::size_t(cfg.dim)), true);
            m.blocks[l].fused = true;
        }
    }

    auto tensors = named_tensors(m);
    auto tl = header.at("tensors");
    if (tl.size() != tensors.size())
        throw CorruptFile("checkpoint tensor list mismatch (" + std::to_string(tl.size()) +
                          " vs " + std::to_string(tensors.size()) + ")");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const auto& e = tl[i];
        if (e.at("name").get<std::string>() != tensors[i].name)
            throw CorruptFile("checkpoint tensor order mismatch at " + tensors[i].name);
        std::size_t r = e.at("rows").get<std::size_t>(), c = e.at("cols").get<std::size_t>();
        if (r != tensors[i].t.rows() || c != tensors[i].t.cols())
            throw CorruptFile("checkpoint tensor shape mismatch at " + tensors[i].name);
        Mat& dst = tensors[i].t.value_mut();
        f.read(reinterpret_cast<char*>(dst.d.data()),
               std::streamsize(dst.d.size() * sizeof(double)));
        if (!f) throw CorruptFile("truncated checkpoint blob at " + tensors[i].name);
    }
    return m;
}

}  // namespace mpcvit
