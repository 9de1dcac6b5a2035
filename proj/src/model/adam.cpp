// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/model/adam.hpp"

#include <cmath>
#include <vector>

namespace rastp::model {

template <typename T>
Adam<T>::Adam(const ModelConfig& config, AdamConfig options)
    : opt_(options), m_(Params<T>::zeros(config)), v_(Params<T>::zeros(config)) {}

template <typename T>
void Adam<T>::step(Params<T>& params, const Params<T>& grads) {
    ++t_;
    const T b1 = static_cast<T>(opt_.beta1);
    const T b2 = static_cast<T>(opt_.beta2);
    const T lr_t = static_cast<T>(opt_.lr / (1.0 - std::pow(opt_.beta1, static_cast<double>(t_))));
    const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(opt_.beta2, static_cast<double>(t_))));
    const T wd = static_cast<T>(opt_.weight_decay);
    const T eps = static_cast<T>(opt_.eps);

    std::vector<const Mat<T>*> g;
    std::vector<Mat<T>*> m;
    std::vector<Mat<T>*> v;
    grads.for_each([&](const std::string&, const Mat<T>& x) { g.push_back(&x); });
    m_.for_each([&](const std::string&, Mat<T>& x) { m.push_back(&x); });
    v_.for_each([&](const std::string&, Mat<T>& x) { v.push_back(&x); });
    std::size_t i = 0;
    params.for_each([&](const std::string&, Mat<T>& p) {
        const Mat<T> grad = *g[i] + wd * p;
        *m[i] = b1 * *m[i] + (T(1) - b1) * grad;
        *v[i] = b2 * *v[i] + (T(1) - b2) * grad.cwiseAbs2();
        p.array() -= lr_t * m[i]->array() / ((v[i]->array() * c2).sqrt() + eps);
        ++i;
    });
}

template class Adam<float>;
template class Adam<double>;

}  // namespace rastp::model
