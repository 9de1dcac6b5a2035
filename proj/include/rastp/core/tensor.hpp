// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "rastp/core/error.hpp"

namespace rastp {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using Vec = Eigen::Matrix<T, 1, Eigen::Dynamic, Eigen::RowMajor>;

/// Binary attention mask [batch, seq]; 1 marks a real token, 0 a pad.
struct Mask {
    int batch = 0;
    int seq = 0;
    std::vector<std::uint8_t> bits;

    Mask() = default;
    Mask(int b, int s, std::uint8_t fill = 1) : batch(b), seq(s), bits(static_cast<std::size_t>(b) * s, fill) {}

    std::uint8_t at(int b, int s) const { return bits[static_cast<std::size_t>(b) * seq + s]; }
    std::uint8_t& at(int b, int s) { return bits[static_cast<std::size_t>(b) * seq + s]; }

    int count(int b) const {
        int n = 0;
        for (int s = 0; s < seq; ++s) n += at(b, s);
        return n;
    }

    bool operator==(const Mask&) const = default;
};

/// Padded token ids [batch, seq] with their mask. Pads are right-aligned.
struct TokenBatch {
    int batch = 0;
    int seq = 0;
    std::vector<std::int32_t> ids;
    Mask mask;

    TokenBatch() = default;
    TokenBatch(int b, int s) : batch(b), seq(s), ids(static_cast<std::size_t>(b) * s, 0), mask(b, s, 0) {}

    std::int32_t id(int b, int s) const { return ids[static_cast<std::size_t>(b) * seq + s]; }
    std::int32_t& id(int b, int s) { return ids[static_cast<std::size_t>(b) * seq + s]; }
};

/// Residual-stream states [batch, seq, dim], stored as a (batch*seq) x dim matrix.
template <typename T>
struct HiddenStates {
    int batch = 0;
    int seq = 0;
    int dim = 0;
    Mat<T> values;

    HiddenStates() = default;
    HiddenStates(int b, int s, int d) : batch(b), seq(s), dim(d), values(Mat<T>::Zero(static_cast<Eigen::Index>(b) * s, d)) {}

    auto row(int b, int s) { return values.row(static_cast<Eigen::Index>(b) * seq + s); }
    auto row(int b, int s) const { return values.row(static_cast<Eigen::Index>(b) * seq + s); }
};

/// Multi-head attention probabilities [batch, heads, query, key].
template <typename T>
struct AttentionTensor {
    int batch = 0;
    int heads = 0;
    int seq = 0;
    std::vector<T> weights;

    AttentionTensor() = default;
    AttentionTensor(int b, int h, int s)
        : batch(b), heads(h), seq(s), weights(static_cast<std::size_t>(b) * h * s * s, T(0)) {}

    std::size_t offset(int b, int h) const {
        return (static_cast<std::size_t>(b) * heads + h) * seq * seq;
    }
    T at(int b, int h, int q, int k) const { return weights[offset(b, h) + static_cast<std::size_t>(q) * seq + k]; }

    Eigen::Map<Mat<T>> block(int b, int h) { return {weights.data() + offset(b, h), seq, seq}; }
    Eigen::Map<const Mat<T>> block(int b, int h) const { return {weights.data() + offset(b, h), seq, seq}; }
};

}  // namespace rastp
