#include "mpcvit/distill.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "mpcvit/errors.hpp"
#include "mpcvit/optim.hpp"

namespace mpcvit {

double evaluate(const ViTModel& model, const Dataset& ds) {
    if (ds.size() == 0) throw ConfigError("empty evaluation set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        ForwardOut out = model.forward(ds.images[i]);
        const Mat& z = out.logits.value();
        std::size_t am = 0;
        for (std::size_t j = 1; j < z.d.size(); ++j)
            if (z.d[j] > z.d[am]) am = j;
        if (int(am) == ds.labels[i]) ++correct;
    }
    return double(correct) / double(ds.size());
}

TrainResult train_model(ViTModel& model, const Dataset& train, const Dataset& eval,
                        const TrainConfig& cfg, const ViTModel* teacher, const KDConfig& kd) {
    if (train.size() == 0) throw ConfigError("empty training set");
    if (teacher) {
        if (teacher->cfg.image_size != model.cfg.image_size ||
            teacher->cfg.classes != model.cfg.classes ||
            teacher->cfg.dim != model.cfg.dim)
            throw ConfigError("teacher/student geometry mismatch");
    }
    std::mt19937_64 rng(cfg.seed);
    AdamW opt(model.weight_params(), cfg.lr_max, cfg.weight_decay);
    long steps_per_epoch =
        long((train.size() + std::size_t(cfg.batch) - 1) / std::size_t(cfg.batch));
    CosineSchedule sched{cfg.lr_max, cfg.lr_min, cfg.epochs * steps_per_epoch};

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult res;
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double sum_ce = 0, sum_kl = 0, sum_feat = 0;
        std::size_t train_correct = 0;
        for (std::size_t off = 0; off < train.size(); off += std::size_t(cfg.batch)) {
            std::size_t bsz = std::min(std::size_t(cfg.batch), train.size() - off);
            opt.zero_grad();
            Tensor loss;
            for (std::size_t b = 0; b < bsz; ++b) {
                std::size_t i = order[off + b];
                ForwardOut out = model.forward(train.images[i]);

                const Mat& z = out.logits.value();
                std::size_t am = 0;
                for (std::size_t j = 1; j < z.d.size(); ++j)
                    if (z.d[j] > z.d[am]) am = j;
                if (int(am) == train.labels[i]) ++train_correct;

                Tensor ce = tcross_entropy(out.logits, std::size_t(train.labels[i]));
                sum_ce += ce.value().d[0];
                Tensor sample = taffine(ce, kd.chi, 0.0);
                if (teacher && (kd.use_logits || kd.use_feature)) {
                    ForwardOut tout = teacher->forward(train.images[i]);
                    if (kd.use_logits) {
                        Tensor kl = tkl_div(out.logits, tout.logits.value(), kd.temperature);
                        sum_kl += kl.value().d[0];
                        sample = tadd(sample, taffine(kl, kd.kd_beta, 0.0));
                    }
                    if (kd.use_feature) {
                        Tensor ft = tl2_distance(out.features, tout.features.value());
                        sum_feat += ft.value().d[0];
                        sample = tadd(sample, taffine(ft, kd.gamma, 0.0));
                    }
                }
                loss = b == 0 ? sample : tadd(loss, sample);
            }
            loss = taffine(loss, 1.0 / double(bsz), 0.0);
            loss.backward();
            opt.set_lr(sched.lr(step));
            opt.step();
            ++step;
        }
        EpochMetrics em;
        em.epoch = epoch;
        em.ce = sum_ce / double(train.size());
        em.kl = sum_kl / double(train.size());
        em.feat = sum_feat / double(train.size());
        em.train_acc = double(train_correct) / double(train.size());
        em.eval_acc = evaluate(model, eval);
        res.history.push_back(em);
    }
    res.final_eval_acc = res.history.empty() ? 0.0 : res.history.back().eval_acc;
    return res;
}

}  // namespace mpcvit
