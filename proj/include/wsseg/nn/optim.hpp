// Copyright 2026 The wsseg authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <vector>

#include "wsseg/nn/layers.hpp"

namespace wsseg::nn {

inline void zero_grads(const std::vector<Param*>& params) {
    for (Param* p : params) p->grad.fill(0.f);
}

/// SGD with momentum and coupled weight decay; per-group learning rates
/// (group index clamps to the last configured rate).
class Sgd {
public:
    Sgd(std::vector<Param*> params, std::vector<double> group_lrs, double momentum = 0.0,
        double weight_decay = 0.0)
        : params_(std::move(params)),
          lrs_(std::move(group_lrs)),
          momentum_(momentum),
          weight_decay_(weight_decay) {
        WSSEG_CHECK(!lrs_.empty(), "Sgd: need at least one learning rate");
        for (Param* p : params_) velocity_.emplace_back(p->value.n, p->value.c, p->value.h, p->value.w);
    }

    void step() {
        for (size_t k = 0; k < params_.size(); ++k) {
            Param& p = *params_[k];
            float lr = float(lrs_[std::min(size_t(p.group), lrs_.size() - 1)]);
            Tensor& vel = velocity_[k];
            for (int64_t i = 0; i < p.value.size(); ++i) {
                float g = p.grad.v[size_t(i)] + float(weight_decay_) * p.value.v[size_t(i)];
                vel.v[size_t(i)] = float(momentum_) * vel.v[size_t(i)] + g;
                p.value.v[size_t(i)] -= lr * vel.v[size_t(i)];
            }
        }
    }

private:
    std::vector<Param*> params_;
    std::vector<double> lrs_;
    double momentum_, weight_decay_;
    std::vector<Tensor> velocity_;
};

/// Adam with per-group learning rates and coupled weight decay.
class Adam {
public:
    Adam(std::vector<Param*> params, std::vector<double> group_lrs, double beta1 = 0.9,
         double beta2 = 0.999, double eps = 1e-8, double weight_decay = 0.0)
        : params_(std::move(params)),
          lrs_(std::move(group_lrs)),
          beta1_(beta1),
          beta2_(beta2),
          eps_(eps),
          weight_decay_(weight_decay) {
        WSSEG_CHECK(!lrs_.empty(), "Adam: need at least one learning rate");
        for (Param* p : params_) {
            m_.emplace_back(p->value.n, p->value.c, p->value.h, p->value.w);
            v_.emplace_back(p->value.n, p->value.c, p->value.h, p->value.w);
        }
    }

    void step() {
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, t_);
        double bc2 = 1.0 - std::pow(beta2_, t_);
        for (size_t k = 0; k < params_.size(); ++k) {
            Param& p = *params_[k];
            double lr = lrs_[std::min(size_t(p.group), lrs_.size() - 1)];
            for (int64_t i = 0; i < p.value.size(); ++i) {
                double g = p.grad.v[size_t(i)] + weight_decay_ * p.value.v[size_t(i)];
                double m = m_[k].v[size_t(i)] = float(beta1_ * m_[k].v[size_t(i)] + (1 - beta1_) * g);
                double v = v_[k].v[size_t(i)] = float(beta2_ * v_[k].v[size_t(i)] + (1 - beta2_) * g * g);
                p.value.v[size_t(i)] -= float(lr * (m / bc1) / (std::sqrt(v / bc2) + eps_));
            }
        }
    }

private:
    std::vector<Param*> params_;
    std::vector<double> lrs_;
    double beta1_, beta2_, eps_, weight_decay_;
    int t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace wsseg::nn
