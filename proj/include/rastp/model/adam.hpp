// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "rastp/model/params.hpp"

namespace rastp::model {

struct AdamConfig {
    double lr = 1e-3;
    double weight_decay = 1e-4;  // coupled L2: added to the gradient before the moments
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam over a Params tree.
template <typename T>
class Adam {
public:
    Adam(const ModelConfig& config, AdamConfig options);

    void step(Params<T>& params, const Params<T>& grads);
    long long steps() const { return t_; }

private:
    AdamConfig opt_;
    Params<T> m_;
    Params<T> v_;
    long long t_ = 0;
};

}  // namespace rastp::model
