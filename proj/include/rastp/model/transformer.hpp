// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "rastp/core/tensor.hpp"
#include "rastp/model/config.hpp"
#include "rastp/model/params.hpp"
#include "rastp/prune/pruner.hpp"

namespace rastp::model {

/// Decoder targets: one row of token ids per example, each of length max_target.
using TargetTokens = std::vector<std::vector<int>>;

template <typename T>
struct EncodeOutput {
    HiddenStates<T> hidden;        // residual stream after the stop layer
    AttentionTensor<T> attention;  // attention probabilities of the stop layer
    TokenBatch batch;
};

/// Pre-norm encoder-decoder transformer over semantic-id tokens.
///
/// Encoder layers use bidirectional attention restricted to real tokens;
/// decoder layers use causal self-attention plus cross-attention over the
/// RMS-normalized encoder output. All inference entry points run without
/// dropout.
template <typename T>
class Seq2Seq {
public:
    Seq2Seq(ModelConfig config, Params<T> params);
    static Seq2Seq create(const ModelConfig& config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    const Params<T>& params() const { return params_; }
    Params<T>& params() { return params_; }

    /// Runs embeddings and encoder layers 1..stop_layer.
    EncodeOutput<T> encode_until(const TokenBatch& batch, int stop_layer) const;
    /// Runs encoder layers start_layer..n_enc_layers on a (possibly pruned) sequence.
    HiddenStates<T> encode_resume(const HiddenStates<T>& hidden, const Mask& mask, int start_layer) const;
    /// Full encoder stack.
    HiddenStates<T> encode(const TokenBatch& batch) const;

    /// Mean over rows of sum_i -log P(target_i | target_<i, encoder output).
    T decode_loss(const HiddenStates<T>& enc_out, const Mask& enc_mask, const TargetTokens& targets) const;

    /// Next-token log-probabilities after each decoder prefix (BOS is implicit).
    /// Row r attends to encoder row enc_row[r]. Returns prefixes.size() x vocab_size.
    Mat<T> next_token_logprobs(const HiddenStates<T>& enc_out, const Mask& enc_mask,
                               const std::vector<std::vector<int>>& prefixes, const std::vector<int>& enc_row) const;

private:
    void check_batch(const TokenBatch& batch) const;

    ModelConfig config_;
    Params<T> params_;
};

/// Encoder output after an optional mid-encoder strategy at `prune_layer`.
template <typename T>
struct PrunedEncoding {
    HiddenStates<T> hidden;
    Mask mask;
};

/// encode_until(prune_layer) -> strategy -> encode_resume. Kind::none runs the plain encoder.
template <typename T>
PrunedEncoding<T> encode_with_strategy(const Seq2Seq<T>& model, const TokenBatch& batch,
                                       const prune::PruneStrategy& strategy, int prune_layer);

/// Loss of the pruned forward pass, composed from the public inference operations.
template <typename T>
T strategy_loss(const Seq2Seq<T>& model, const TokenBatch& batch, const TargetTokens& targets,
                const prune::PruneStrategy& strategy, int prune_layer);

/// One training forward/backward pass. Gradients are accumulated into `grads`
/// (shaped like the model parameters). Dropout is active when `rng` is set and
/// config().dropout > 0.
template <typename T>
T loss_and_grad(const Seq2Seq<T>& model, const TokenBatch& batch, const TargetTokens& targets,
                const prune::PruneStrategy& strategy, int prune_layer, std::mt19937_64* rng, Params<T>& grads);

}  // namespace rastp::model
