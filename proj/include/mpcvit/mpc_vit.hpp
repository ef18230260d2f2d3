#pragma once

#include <vector>

#include "mpcvit/runtime.hpp"
#include "mpcvit/vit.hpp"

namespace mpcvit {

struct MpcForwardResult {
    std::vector<double> logits;  // reconstructed and decoded
    int argmax = -1;
};

// Secure inference of a binarized model (alpha/beta are read as booleans at
// 0.5) over the two-party simulator. Weights and the input sample are
// secret-shared; LayerNorm affine parameters stay public. Traffic lands in
// session.meter() under "share" / "matmul" / "mul" / "compare" /
// "reconstruct" and matches estimate_forward_comm exactly.
MpcForwardResult mpc_forward(const ViTModel& model, const Mat& image, Session& session);

// Share a plaintext matrix (row-major) as encoded fixed-point elements.
SharedVec share_mat(Session& session, const Mat& m);

}  // namespace mpcvit
