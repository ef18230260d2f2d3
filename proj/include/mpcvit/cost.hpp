#pragma once

#include <map>
#include <string>
#include <vector>

#include "mpcvit/attention.hpp"
#include "mpcvit/runtime.hpp"
#include "mpcvit/vit.hpp"

namespace mpcvit {

// ---------------------------------------------------------------------------
// Cost table: per-op-kind unit costs
// ---------------------------------------------------------------------------
//
// unit_latency_s is calibrated against the nine published whole-variant
// latencies at the CIFAR-style config (bounded least squares; residuals are
// exposed). unit_bytes stays pinned to the idealized protocol (Beaver multiply
// = 4 ring elements total, comparison = one 2-round COT), so byte estimates
// agree exactly with the simulator meter.

struct CostEntry {
    std::string op_kind;
    double unit_latency_s = 0.0;
    double unit_bytes = 0.0;
    double rounds = 0.0;
    std::string scaling_rule;
};

struct CostTable {
    std::vector<CostEntry> entries;

    const CostEntry& at(const std::string& op_kind) const;
    bool has(const std::string& op_kind) const;
    double latency_unit(const std::string& op_kind) const { return at(op_kind).unit_latency_s; }

    void save_csv(const std::string& path) const;
    static CostTable load_csv(const std::string& path);

    // Calibrated default (cached after the first call).
    static const CostTable& default_table();
};

// WAN network profile for converting metered traffic into wall time.
struct NetProfile {
    double bandwidth_bytes_per_s = 44.0e6;  // 44 MBps
    double rtt_s = 0.040;                   // 40 ms round trip
};

inline double wan_seconds(u64 total_bytes, u64 total_rounds, const NetProfile& net = {}) {
    return double(total_bytes) / net.bandwidth_bytes_per_s + double(total_rounds) * net.rtt_s;
}

// Correlated-OT comparison cost: (2*lambda + k*l) bits over 2 rounds.
struct CotCost {
    u64 bits = 0;
    u64 rounds = 2;
};
inline CotCost cot_cost(int k, int l, int lambda = 128) {
    return {u64(2 * lambda) + u64(k) * u64(l), 2};
}

// ---------------------------------------------------------------------------
// Calibration against the published per-variant latencies
// ---------------------------------------------------------------------------

struct CalibrationResult {
    std::map<std::string, double> units;      // op_kind -> unit_latency_s
    double base_latency_s = 0.0;              // shared non-attention portion
    std::map<AttentionKind, double> predicted;
    std::map<AttentionKind, double> published;
    double max_abs_residual = 0.0;
};

// The nine published whole-model latencies (seconds) at the CIFAR-style
// config: depth 7, heads 4, dim 256, tokens 65, head_dim 64.
const std::map<AttentionKind, double>& published_variant_latency();

CalibrationResult calibrate_cost_table();

// Attention-variant op counts per head (token count t, head dim d) in table
// op-kind units; multiplied out by layers*heads for whole-model figures.
std::map<std::string, double> attention_variant_counts(AttentionKind kind, int t, int d);

// Whole-model latency for a homogeneous attention variant at a config,
// using the calibrated units (attention part + fitted base).
double variant_model_latency(AttentionKind kind, const CostTable& table);

// ---------------------------------------------------------------------------
// Model-level estimates for the heterogeneous ViT
// ---------------------------------------------------------------------------

struct LatencyBreakdown {
    double total_s = 0.0;
    std::map<std::string, double> by_component;  // "attention", "mlp", "layernorm", ...
    std::map<std::string, double> per_layer;     // "layer0", "layer1", ...
};

// Latency of one RSAttn / ScaleAttn head at a config (used by the search
// penalty and by model estimates).
double rsattn_head_latency(const ViTConfig& cfg, const CostTable& table);
double scaleattn_head_latency(const ViTConfig& cfg, const CostTable& table);
double gelu_site_latency(const ViTConfig& cfg, const CostTable& table);

// Estimate secure-inference latency of a (possibly heterogeneous) model.
// Continuous alpha/beta are priced by linear interpolation between the two
// branch costs, which makes the search penalty differentiable in spirit and
// exact at the binarized endpoints.
LatencyBreakdown estimate_model_latency(const ViTModel& model, const CostTable& table);

// MLP cost comparison used by the fusion check: per-layer latency of the
// unfused (dim->K->dim) vs fused (dim->dim) linear path, activations excluded.
double mlp_matmul_latency(const ViTConfig& cfg, bool fused, const CostTable& table);

// Expected simulator traffic of mpc_forward for one sample, per meter op kind
// ("share", "reconstruct", "mul", "matmul", "compare") in total bytes across
// both parties. Mirrors mpc_forward's batching exactly.
std::map<std::string, double> estimate_forward_comm(const ViTModel& model,
                                                    const RingParams& ring);

}  // namespace mpcvit
