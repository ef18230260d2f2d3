#pragma once

#include <string>
#include <vector>

#include "mpcvit/ring.hpp"
#include "mpcvit/tensor.hpp"

namespace mpcvit {

// Transformer encoder configuration. Defaults are the desk-scale setup; the
// CIFAR-style (depth 7, heads 4, dim 256) and Tiny-ImageNet-style (depth 9,
// heads 12, dim 192) configs are expressible with the same fields.
struct ViTConfig {
    int image_size = 8;
    int patch_size = 4;
    int channels = 1;
    int classes = 4;
    int depth = 2;
    int heads = 2;
    int dim = 32;
    int mlp_ratio = 2;
    double ln_eps = 1e-5;
    double rs_eps = 1e-8;  // ReLUSoftmax denominator guard

    int grid() const { return image_size / patch_size; }
    int tokens() const { return grid() * grid() + 1; }  // patches + class token
    int head_dim() const { return dim / heads; }
    int patch_dim() const { return patch_size * patch_size * channels; }
    int mlp_dim() const { return dim * mlp_ratio; }

    void validate() const;
    bool operator==(const ViTConfig&) const = default;
};

// How attention heads are evaluated.
//  - Mixed: alpha-weighted blend  alpha*RSAttn + (1-alpha)*ScaleAttn/sqrt(d_k).
//    Binarized models are the alpha in {0,1} special case of the same path.
//  - Softmax: plain softmax attention (teacher network).
enum class AttnMode { Mixed, Softmax };

struct BlockParams {
    Tensor ln1_g, ln1_b;
    std::vector<Tensor> wq, wk, wv;  // per head, dim x head_dim
    Tensor wo, bo;
    Tensor ln2_g, ln2_b;
    Tensor w1, b1, w2, b2;  // MLP: dim->mlp_dim->dim
    Tensor wf, bf;          // fused linear replacing the MLP pair
    bool fused = false;
};

struct ForwardOut {
    Tensor logits;    // 1 x classes
    Tensor features;  // T x dim, final-LayerNorm output (distillation tap)
};

struct ViTModel {
    ViTConfig cfg;
    AttnMode attn_mode = AttnMode::Mixed;
    bool relu_added = false;  // optional ReLU after a fused MLP linear

    Tensor patch_w, patch_b;  // patch_dim x dim, 1 x dim
    Tensor cls_token;         // 1 x dim
    Tensor pos_emb;           // T x dim
    std::vector<BlockParams> blocks;
    Tensor ln_f_g, ln_f_b;
    Tensor head_w, head_b;  // dim x classes

    // Architecture weights: alpha is depth x heads, beta is depth x 1. During
    // search they are trainable; otherwise they hold fixed (usually binary)
    // values and the same forward path applies.
    Tensor alpha;
    Tensor beta;

    static ViTModel init(const ViTConfig& cfg, u64 seed);

    std::vector<Tensor> weight_params() const;
    std::vector<Tensor> arch_params() const;

    // Forward for a single image (rows=H, cols=W*channels interleaved).
    ForwardOut forward(const Mat& image) const;

    // Project architecture weights back into [0,1] after an optimizer step.
    void clamp_arch();

    // Replace layer l's MLP by the fused single linear W1*W2 (+ folded bias).
    void fuse_mlp(int layer);

    // Count of RSAttn heads (alpha rounded) -- convenience for reports.
    int rsattn_heads() const;
};

Mat patchify(const Mat& image, const ViTConfig& cfg);

// Checkpoint I/O: JSON header + little-endian float64 blobs.
void save_checkpoint(const ViTModel& model, const std::string& path);
ViTModel load_checkpoint(const std::string& path);

}  // namespace mpcvit
