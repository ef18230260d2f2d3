#pragma once

#include <cmath>
#include <vector>

#include "mpcvit/tensor.hpp"

namespace mpcvit {

// AdamW with decoupled weight decay. One instance per parameter group (the
// search uses a second, decay-free group for the architecture weights).
class AdamW {
  public:
    explicit AdamW(std::vector<Tensor> params, double lr = 1e-3, double weight_decay = 0.0,
                   double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), wd_(weight_decay),
          b1_(beta1), b2_(beta2), eps_(eps) {
        for (const Tensor& p : params_) {
            m_.emplace_back(p.rows(), p.cols());
            v_.emplace_back(p.rows(), p.cols());
        }
    }

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

    void zero_grad() {
        for (Tensor& p : params_) p.zero_grad();
    }

    void step() {
        ++t_;
        double bc1 = 1.0 - std::pow(b1_, double(t_));
        double bc2 = 1.0 - std::pow(b2_, double(t_));
        for (std::size_t k = 0; k < params_.size(); ++k) {
            Mat& val = params_[k].value_mut();
            const Mat& g = params_[k].grad();
            for (std::size_t i = 0; i < val.d.size(); ++i) {
                double gi = g.d[i];
                m_[k].d[i] = b1_ * m_[k].d[i] + (1.0 - b1_) * gi;
                v_[k].d[i] = b2_ * v_[k].d[i] + (1.0 - b2_) * gi * gi;
                double mh = m_[k].d[i] / bc1;
                double vh = v_[k].d[i] / bc2;
                val.d[i] -= lr_ * (mh / (std::sqrt(vh) + eps_) + wd_ * val.d[i]);
            }
        }
    }

    const std::vector<Tensor>& params() const { return params_; }

  private:
    std::vector<Tensor> params_;
    std::vector<Mat> m_, v_;
    double lr_, wd_, b1_, b2_, eps_;
    long t_ = 0;
};

// Cosine decay from lr_max to lr_min over total_steps.
struct CosineSchedule {
    double lr_max = 1e-3;
    double lr_min = 1e-5;
    long total_steps = 1;

    double lr(long step) const {
        if (step >= total_steps) return lr_min;
        double frac = double(step) / double(total_steps);
        return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(frac * 3.14159265358979323846));
    }
};

}  // namespace mpcvit
