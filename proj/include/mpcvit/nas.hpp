#pragma once

#include <string>
#include <vector>

#include "mpcvit/cost.hpp"
#include "mpcvit/data.hpp"
#include "mpcvit/vit.hpp"

namespace mpcvit {

// Differentiable architecture search over the per-head attention weights
// alpha (and optionally the per-layer GeLU weights beta). Single-level joint
// optimization: every batch updates both the network weights and the
// architecture weights, then projects the latter back into [0,1].
struct SearchConfig {
    int epochs = 4;
    int batch = 32;
    double lr_max = 3e-3;
    double lr_min = 1e-4;
    double weight_decay = 1e-4;
    double arch_lr = 1e-3;
    // Latency pressure. lambda < 0 auto-scales so the initial penalty is
    // ~10% of the initial task loss; eta < 0 uses the balance rule
    // eta = lambda * Lat(GeLU site) / Lat(RSAttn head).
    double lambda = -1.0;
    double eta = -1.0;
    bool search_beta = false;  // also search GeLU keep/drop (the "+" variant)
    u64 seed = 1;
};

struct SearchHistoryRow {
    int step = 0;
    double task_loss = 0, penalty = 0, mean_alpha = 0, mean_beta = 0;
};

struct SearchResult {
    Mat alpha;  // continuous, in [0,1]
    Mat beta;
    double lambda_used = 0, eta_used = 0;
    std::vector<SearchHistoryRow> history;
};

SearchResult nas_search(ViTModel& model, const Dataset& train, const SearchConfig& cfg,
                        const CostTable& table);

// Keep the ceil(mu * depth * heads) largest alpha entries (ties broken toward
// the lower flat index); returns a 0/1 matrix. mu=0 and mu=1 are bitwise
// all-zero / all-one.
Mat binarize_topk(const Mat& alpha, double mu);

// beta > sigma keeps the GeLU (1); otherwise the activation turns linear (0).
Mat binarize_threshold(const Mat& beta, double sigma);

// Budget-matched per-layer-uniform baseline: the same total RSAttn head count
// spread evenly across layers (extras to earlier layers, lowest head indices
// first within a layer).
Mat uniform_baseline(int depth, int heads, double mu);

// Install a binary assignment into a model; layers with beta=0 get their MLP
// fused into one linear when fuse is set.
void apply_arch(ViTModel& model, const Mat& alpha_bin, const Mat& beta_bin, bool fuse,
                bool relu_added);

// Binary architecture description (JSON file): config + assignment + flags.
struct ArchSpec {
    ViTConfig cfg;
    Mat alpha;  // depth x heads, entries in {0,1}
    Mat beta;   // depth x 1, entries in {0,1}
    bool fuse = true;
    bool relu_added = false;
};

void save_arch_json(const ArchSpec& spec, const std::string& path);
ArchSpec load_arch_json(const std::string& path);

}  // namespace mpcvit
