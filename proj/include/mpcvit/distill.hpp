#pragma once

#include <vector>

#include "mpcvit/data.hpp"
#include "mpcvit/vit.hpp"

namespace mpcvit {

struct TrainConfig {
    int epochs = 20;
    int batch = 32;
    double lr_max = 3e-3;
    double lr_min = 1e-4;
    double weight_decay = 1e-4;
    u64 seed = 1;
};

// Knowledge-distillation loss weights:
//   chi * CE(student, y)
// + kd_beta * KL(softmax(teacher/T) || softmax(student/T))
// + gamma * ||student_features - teacher_features||_2
// The feature tap is the final-LayerNorm output over all tokens; the teacher
// is evaluated without gradient tracking.
struct KDConfig {
    double temperature = 1.0;
    double chi = 1.0;
    double kd_beta = 1.0;
    double gamma = 1.0;
    bool use_logits = true;   // ablation switch for the KL term
    bool use_feature = true;  // ablation switch for the feature term
};

struct EpochMetrics {
    int epoch = 0;
    double ce = 0, kl = 0, feat = 0;
    double train_acc = 0, eval_acc = 0;
};

struct TrainResult {
    std::vector<EpochMetrics> history;
    double final_eval_acc = 0;
};

double evaluate(const ViTModel& model, const Dataset& ds);

// Train (optionally with a distillation teacher). The teacher, when present,
// must share image geometry and class count with the student.
TrainResult train_model(ViTModel& model, const Dataset& train, const Dataset& eval,
                        const TrainConfig& cfg, const ViTModel* teacher = nullptr,
                        const KDConfig& kd = {});

}  // namespace mpcvit
