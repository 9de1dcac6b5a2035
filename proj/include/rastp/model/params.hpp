// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rastp/core/tensor.hpp"
#include "rastp/model/config.hpp"

namespace rastp::model {

// Linear maps are stored input-major (in x out) so that y = x * W.
// Norm gains are 1 x d_model rows.

template <typename T>
struct EncoderLayerParams {
    Mat<T> norm1, wq, wk, wv, wo;
    Mat<T> norm2, w1, w2;
};

template <typename T>
struct DecoderLayerParams {
    Mat<T> norm1, wq, wk, wv, wo;        // causal self-attention
    Mat<T> norm2, cq, ck, cv, co;        // cross-attention over the encoder output
    Mat<T> norm3, w1, w2;
};

template <typename T>
struct Params {
    Mat<T> enc_tok, enc_pos;
    std::vector<EncoderLayerParams<T>> enc;
    Mat<T> enc_norm;
    Mat<T> dec_tok, dec_pos;
    std::vector<DecoderLayerParams<T>> dec;
    Mat<T> dec_norm;
    Mat<T> out_proj;

    /// Every tensor zero, shaped for `config`.
    static Params zeros(const ModelConfig& config);
    /// Random init: embeddings ~ N(0, 1), projections ~ N(0, 1/fan_in), gains 1.
    static Params init(const ModelConfig& config, std::uint64_t seed);

    /// Calls f(name, tensor) for every tensor in a fixed order.
    template <typename F>
    void for_each(F&& f) {
        visit(*this, f);
    }
    template <typename F>
    void for_each(F&& f) const {
        visit(*this, f);
    }

    std::size_t num_scalars() const;

    template <typename U>
    Params<U> cast() const;

private:
    template <typename Self, typename F>
    static void visit(Self& p, F& f) {
        f(std::string("enc_tok"), p.enc_tok);
        f(std::string("enc_pos"), p.enc_pos);
        for (std::size_t i = 0; i < p.enc.size(); ++i) {
            const std::string pre = "enc." + std::to_string(i) + ".";
            auto& l = p.enc[i];
            f(pre + "norm1", l.norm1);
            f(pre + "wq", l.wq);
            f(pre + "wk", l.wk);
            f(pre + "wv", l.wv);
            f(pre + "wo", l.wo);
            f(pre + "norm2", l.norm2);
            f(pre + "w1", l.w1);
            f(pre + "w2", l.w2);
        }
        f(std::string("enc_norm"), p.enc_norm);
        f(std::string("dec_tok"), p.dec_tok);
        f(std::string("dec_pos"), p.dec_pos);
        for (std::size_t i = 0; i < p.dec.size(); ++i) {
            const std::string pre = "dec." + std::to_string(i) + ".";
            auto& l = p.dec[i];
            f(pre + "norm1", l.norm1);
            f(pre + "wq", l.wq);
            f(pre + "wk", l.wk);
            f(pre + "wv", l.wv);
            f(pre + "wo", l.wo);
            f(pre + "norm2", l.norm2);
            f(pre + "cq", l.cq);
            f(pre + "ck", l.ck);
            f(pre + "cv", l.cv);
            f(pre + "co", l.co);
            f(pre + "norm3", l.norm3);
            f(pre + "w1", l.w1);
            f(pre + "w2", l.w2);
        }
        f(std::string("dec_norm"), p.dec_norm);
        f(std::string("out_proj"), p.out_proj);
    }
};

template <typename T>
template <typename U>
Params<U> Params<T>::cast() const {
    Params<U> out;
    out.enc.resize(enc.size());
    out.dec.resize(dec.size());
    std::vector<const Mat<T>*> src;
    for_each([&](const std::string&, const Mat<T>& m) { src.push_back(&m); });
    std::size_t i = 0;
    out.for_each([&](const std::string&, Mat<U>& m) { m = src[i++]->template cast<U>(); });
    return out;
}

}  // namespace rastp::model
