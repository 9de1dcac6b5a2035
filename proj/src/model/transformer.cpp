// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/model/transformer.hpp"

#include <cmath>

#include <fmt/format.h>

#include "kernels.hpp"

namespace rastp::model {

void ModelConfig::validate() const {
    require(vocab_size > kNumSpecials, fmt::format("vocab_size must exceed {}, got {}", kNumSpecials, vocab_size));
    require(d_model >= 1 && n_heads >= 1 && d_mlp >= 1, "d_model, n_heads and d_mlp must be >= 1");
    require(d_model % n_heads == 0,
            fmt::format("d_model ({}) must be divisible by n_heads ({})", d_model, n_heads));
    require(n_enc_layers >= 1 && n_dec_layers >= 1, "layer counts must be >= 1");
    require(dropout >= 0.0 && dropout < 1.0, fmt::format("dropout must be in [0, 1), got {}", dropout));
    require(max_seq >= 1 && max_target >= 1, "max_seq and max_target must be >= 1");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = {{"vocab_size", c.vocab_size}, {"d_model", c.d_model},   {"n_heads", c.n_heads},
         {"d_mlp", c.d_mlp},           {"n_enc_layers", c.n_enc_layers}, {"n_dec_layers", c.n_dec_layers},
         {"dropout", c.dropout},       {"max_seq", c.max_seq},   {"max_target", c.max_target}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    j.at("vocab_size").get_to(c.vocab_size);
    j.at("d_model").get_to(c.d_model);
    j.at("n_heads").get_to(c.n_heads);
    j.at("d_mlp").get_to(c.d_mlp);
    j.at("n_enc_layers").get_to(c.n_enc_layers);
    j.at("n_dec_layers").get_to(c.n_dec_layers);
    j.at("dropout").get_to(c.dropout);
    j.at("max_seq").get_to(c.max_seq);
    j.at("max_target").get_to(c.max_target);
}

template <typename T>
Params<T> Params<T>::zeros(const ModelConfig& c) {
    c.validate();
    const int d = c.d_model;
    auto z = [](int r, int k) { return Mat<T>::Zero(r, k); };
    Params<T> p;
    p.enc_tok = z(c.vocab_size, d);
    p.enc_pos = z(c.max_seq, d);
    p.enc.resize(c.n_enc_layers);
    for (auto& l : p.enc) {
        l.norm1 = z(1, d);
        l.wq = z(d, d);
        l.wk = z(d, d);
        l.wv = z(d, d);
        l.wo = z(d, d);
        l.norm2 = z(1, d);
        l.w1 = z(d, c.d_mlp);
        l.w2 = z(c.d_mlp, d);
    }
    p.enc_norm = z(1, d);
    p.dec_tok = z(c.vocab_size, d);
    p.dec_pos = z(c.max_target, d);
    p.dec.resize(c.n_dec_layers);
    for (auto& l : p.dec) {
        l.norm1 = z(1, d);
        l.wq = z(d, d);
        l.wk = z(d, d);
        l.wv = z(d, d);
        l.wo = z(d, d);
        l.norm2 = z(1, d);
        l.cq = z(d, d);
        l.ck = z(d, d);
        l.cv = z(d, d);
        l.co = z(d, d);
        l.norm3 = z(1, d);
        l.w1 = z(d, c.d_mlp);
        l.w2 = z(c.d_mlp, d);
    }
    p.dec_norm = z(1, d);
    p.out_proj = z(d, c.vocab_size);
    return p;
}

template <typename T>
Params<T> Params<T>::init(const ModelConfig& c, std::uint64_t seed) {
    Params<T> p = zeros(c);
    std::mt19937_64 rng(seed);
    p.for_each([&](const std::string& name, Mat<T>& m) {
        if (name.find("norm") != std::string::npos) {
            m.setOnes();
            return;
        }
        const bool embedding = name.ends_with("_tok") || name.ends_with("_pos");
        const double std = embedding ? 1.0 : 1.0 / std::sqrt(static_cast<double>(m.rows()));
        std::normal_distribution<double> dist(0.0, std);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(dist(rng));
    });
    return p;
}

template <typename T>
std::size_t Params<T>::num_scalars() const {
    std::size_t n = 0;
    for_each([&n](const std::string&, const Mat<T>& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
}

template <typename T>
Seq2Seq<T>::Seq2Seq(ModelConfig config, Params<T> params) : config_(config), params_(std::move(params)) {
    config_.validate();
    require(static_cast<int>(params_.enc.size()) == config_.n_enc_layers &&
                static_cast<int>(params_.dec.size()) == config_.n_dec_layers &&
                params_.enc_tok.rows() == config_.vocab_size && params_.enc_tok.cols() == config_.d_model,
            "parameters do not match the model config");
}

template <typename T>
Seq2Seq<T> Seq2Seq<T>::create(const ModelConfig& config, std::uint64_t seed) {
    return Seq2Seq(config, Params<T>::init(config, seed));
}

template <typename T>
void Seq2Seq<T>::check_batch(const TokenBatch& batch) const {
    require(batch.seq >= 1 && batch.seq <= config_.max_seq,
            fmt::format("sequence length {} outside [1, {}]", batch.seq, config_.max_seq));
    require(batch.ids.size() == static_cast<std::size_t>(batch.batch) * batch.seq &&
                batch.mask.batch == batch.batch && batch.mask.seq == batch.seq,
            "token batch shape mismatch");
    for (auto id : batch.ids) {
        require(id >= 0 && id < config_.vocab_size, fmt::format("token id {} outside vocabulary", id));
    }
    for (int b = 0; b < batch.batch; ++b) require(batch.mask.count(b) >= 1, fmt::format("row {} is fully masked", b));
}

template <typename T>
EncodeOutput<T> Seq2Seq<T>::encode_until(const TokenBatch& batch, int stop_layer) const {
    require(stop_layer >= 1 && stop_layer <= config_.n_enc_layers,
            fmt::format("stop_layer {} outside [1, {}]", stop_layer, config_.n_enc_layers));
    check_batch(batch);
    Mat<T> x = detail::embed(params_.enc_tok, params_.enc_pos, batch.ids, batch.batch, batch.seq);
    detail::EncoderLayerCache<T> cache;
    Mat<T> next;
    for (int l = 0; l < stop_layer; ++l) {
        detail::encoder_layer_forward(params_.enc[l], x, batch.batch, batch.seq, config_.n_heads, batch.mask, 0.0,
                                      nullptr, cache, next);
        x.swap(next);
    }
    EncodeOutput<T> out;
    out.hidden.batch = batch.batch;
    out.hidden.seq = batch.seq;
    out.hidden.dim = config_.d_model;
    out.hidden.values = std::move(x);
    out.attention.batch = batch.batch;
    out.attention.heads = config_.n_heads;
    out.attention.seq = batch.seq;
    out.attention.weights = std::move(cache.probs);
    out.batch = batch;
    return out;
}

template <typename T>
HiddenStates<T> Seq2Seq<T>::encode_resume(const HiddenStates<T>& hidden, const Mask& mask, int start_layer) const {
    require(start_layer >= 1 && start_layer <= config_.n_enc_layers + 1,
            fmt::format("start_layer {} outside [1, {}]", start_layer, config_.n_enc_layers + 1));
    require(hidden.dim == config_.d_model && hidden.values.rows() == static_cast<Eigen::Index>(hidden.batch) * hidden.seq &&
                hidden.values.cols() == config_.d_model,
            "hidden state shape mismatch");
    require(mask.batch == hidden.batch && mask.seq == hidden.seq, "mask shape does not match hidden states");
    for (int b = 0; b < mask.batch; ++b) require(mask.count(b) >= 1, fmt::format("row {} is fully masked", b));
    HiddenStates<T> out = hidden;
    detail::EncoderLayerCache<T> cache;
    Mat<T> next;
    for (int l = start_layer - 1; l < config_.n_enc_layers; ++l) {
        detail::encoder_layer_forward(params_.enc[l], out.values, hidden.batch, hidden.seq, config_.n_heads, mask, 0.0,
                                      nullptr, cache, next);
        out.values.swap(next);
    }
    return out;
}

template <typename T>
HiddenStates<T> Seq2Seq<T>::encode(const TokenBatch& batch) const {
    return encode_until(batch, config_.n_enc_layers).hidden;
}

template <typename T>
T Seq2Seq<T>::decode_loss(const HiddenStates<T>& enc_out, const Mask& enc_mask, const TargetTokens& targets) const {
    require(static_cast<int>(targets.size()) == enc_out.batch, "one target row per encoder row is required");
    require(enc_out.values.allFinite(), "encoder output contains non-finite values");
    const int seq = targets.empty() ? 0 : static_cast<int>(targets.front().size());
    require(seq >= 1 && seq <= config_.max_target, fmt::format("target length {} outside [1, {}]", seq, config_.max_target));
    for (const auto& row : targets) {
        require(static_cast<int>(row.size()) == seq, "all target rows must have the same length");
        for (int t : row) require(t >= 0 && t < config_.vocab_size, fmt::format("target token {} outside vocabulary", t));
    }
    const auto ids = detail::shift_right(targets, seq);
    detail::DecoderForward<T> f;
    detail::decoder_forward(params_, config_, enc_out.values, enc_out.batch, enc_out.seq, enc_mask, ids, enc_out.batch,
                            seq, nullptr, 0.0, nullptr, f);
    return detail::cross_entropy<T>(f.logits, targets, seq, nullptr);
}

template <typename T>
Mat<T> Seq2Seq<T>::next_token_logprobs(const HiddenStates<T>& enc_out, const Mask& enc_mask,
                                       const std::vector<std::vector<int>>& prefixes,
                                       const std::vector<int>& enc_row) const {
    require(prefixes.size() == enc_row.size(), "one encoder row per prefix is required");
    if (prefixes.empty()) return Mat<T>(0, config_.vocab_size);
    const int len = static_cast<int>(prefixes.front().size());
    require(len < config_.max_target, "prefix already spans every decoder position");
    const int seq = len + 1;
    const int rows = static_cast<int>(prefixes.size());
    std::vector<std::int32_t> ids(static_cast<std::size_t>(rows) * seq);
    for (int r = 0; r < rows; ++r) {
        require(static_cast<int>(prefixes[r].size()) == len, "all prefixes must have the same length");
        require(enc_row[r] >= 0 && enc_row[r] < enc_out.batch, "encoder row out of range");
        ids[static_cast<std::size_t>(r) * seq] = kBosToken;
        for (int t = 0; t < len; ++t) ids[static_cast<std::size_t>(r) * seq + t + 1] = prefixes[r][t];
    }
    detail::DecoderForward<T> f;
    detail::decoder_forward(params_, config_, enc_out.values, enc_out.batch, enc_out.seq, enc_mask, ids, rows, seq,
                            &enc_row, 0.0, nullptr, f);
    Mat<T> out(rows, config_.vocab_size);
    for (int r = 0; r < rows; ++r) {
        const auto logits = f.logits.row(static_cast<Eigen::Index>(r) * seq + len);
        const T mx = logits.maxCoeff();
        const T lse = mx + std::log((logits.array() - mx).exp().sum());
        out.row(r) = logits.array() - lse;
    }
    return out;
}

template <typename T>
PrunedEncoding<T> encode_with_strategy(const Seq2Seq<T>& model, const TokenBatch& batch,
                                       const prune::PruneStrategy& strategy, int prune_layer) {
    if (strategy.kind == prune::Kind::none) return {model.encode(batch), batch.mask};
    strategy.validate(batch.seq);
    auto stage = model.encode_until(batch, prune_layer);
    auto pruned = prune::apply_strategy(strategy, stage.hidden, stage.attention, batch.mask);
    return {model.encode_resume(pruned.hidden, pruned.mask, prune_layer + 1), std::move(pruned.mask)};
}

template <typename T>
T strategy_loss(const Seq2Seq<T>& model, const TokenBatch& batch, const TargetTokens& targets,
                const prune::PruneStrategy& strategy, int prune_layer) {
    const auto enc = encode_with_strategy(model, batch, strategy, prune_layer);
    return model.decode_loss(enc.hidden, enc.mask, targets);
}

template <typename T>
T loss_and_grad(const Seq2Seq<T>& model, const TokenBatch& batch, const TargetTokens& targets,
                const prune::PruneStrategy& strategy, int prune_layer, std::mt19937_64* rng, Params<T>& grads) {
    const auto& cfg = model.config();
    const auto& P = model.params();
    const int B = batch.batch;
    const int n_enc = cfg.n_enc_layers;
    const bool pruning = strategy.kind != prune::Kind::none;
    if (pruning) {
        require(prune_layer >= 1 && prune_layer <= n_enc,
                fmt::format("prune_layer {} outside [1, {}]", prune_layer, n_enc));
        strategy.validate(batch.seq);
    }
    require(static_cast<int>(targets.size()) == B, "one target row per batch row is required");
    const int dec_seq = static_cast<int>(targets.front().size());
    const double p = rng != nullptr ? cfg.dropout : 0.0;

    Mat<T> x = detail::embed(P.enc_tok, P.enc_pos, batch.ids, B, batch.seq);
    Mat<T> drop0;
    detail::dropout(x, p, rng, drop0);

    std::vector<detail::EncoderLayerCache<T>> caches(n_enc);
    Mask mask = batch.mask;
    int seq = batch.seq;
    prune::PruneResult<T> pruned;
    HiddenStates<T> source;
    Mask source_mask;
    Mat<T> next;
    for (int l = 0; l < n_enc; ++l) {
        detail::encoder_layer_forward(P.enc[l], x, B, seq, cfg.n_heads, mask, p, rng, caches[l], next);
        x.swap(next);
        if (pruning && l + 1 == prune_layer) {
            source.batch = B;
            source.seq = seq;
            source.dim = cfg.d_model;
            source.values = std::move(x);
            AttentionTensor<T> attention;
            attention.batch = B;
            attention.heads = cfg.n_heads;
            attention.seq = seq;
            attention.weights.swap(caches[l].probs);
            pruned = prune::apply_strategy(strategy, source, attention, mask);
            attention.weights.swap(caches[l].probs);
            source_mask = mask;
            x = pruned.hidden.values;
            mask = pruned.mask;
            seq = pruned.hidden.seq;
        }
    }

    const auto dec_ids = detail::shift_right(targets, dec_seq);
    detail::DecoderForward<T> f;
    detail::decoder_forward(P, cfg, x, B, seq, mask, dec_ids, B, dec_seq, nullptr, p, rng, f);
    Mat<T> d_logits;
    const T loss = detail::cross_entropy<T>(f.logits, targets, dec_seq, &d_logits);
    require(std::isfinite(static_cast<double>(loss)), "non-finite loss");

    Mat<T> dx = detail::decoder_backward(P, cfg, f, dec_ids, d_logits, grads);
    for (int l = n_enc - 1; l >= 0; --l) {
        std::vector<int> active;
        const std::vector<int>* active_ptr = nullptr;
        if (pruning && l + 1 == prune_layer) {
            dx = prune::backprop(pruned, source, source_mask, dx);
            const auto used = prune::contributing_rows(pruned, source_mask);
            for (int r = 0; r < static_cast<int>(used.size()); ++r) {
                if (used[r]) active.push_back(r);
            }
            if (active.size() < used.size()) active_ptr = &active;
        }
        dx = detail::encoder_layer_backward(P.enc[l], caches[l], dx, cfg.n_heads, active_ptr, grads.enc[l]);
    }
    detail::dropout_backward(dx, drop0);
    detail::embed_backward(dx, batch.ids, B, batch.seq, grads.enc_tok, grads.enc_pos);
    return loss;
}

#define RASTP_INSTANTIATE(T)                                                                                         \
    template struct Params<T>;                                                                                       \
    template class Seq2Seq<T>;                                                                                       \
    template PrunedEncoding<T> encode_with_strategy(const Seq2Seq<T>&, const TokenBatch&, const prune::PruneStrategy&, \
                                                    int);                                                            \
    template T strategy_loss(const Seq2Seq<T>&, const TokenBatch&, const TargetTokens&, const prune::PruneStrategy&, \
                             int);                                                                                   \
    template T loss_and_grad(const Seq2Seq<T>&, const TokenBatch&, const TargetTokens&, const prune::PruneStrategy&, \
                             int, std::mt19937_64*, Params<T>&);

RASTP_INSTANTIATE(float)
RASTP_INSTANTIATE(double)
#undef RASTP_INSTANTIATE

}  // namespace rastp::model
