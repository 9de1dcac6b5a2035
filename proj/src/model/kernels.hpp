// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

// Forward/backward building blocks shared by inference and training. All
// activations are (rows x features) row-major matrices; a sequence batch of
// shape [B, S, d] lives in a (B*S) x d matrix.

#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "rastp/core/tensor.hpp"
#include "rastp/model/params.hpp"

namespace rastp::model::detail {

template <typename T>
using ColVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

inline constexpr double kNormEps = 1e-6;

// ---------------------------------------------------------------- RMS norm

template <typename T>
void rms_norm(const Mat<T>& x, const Mat<T>& gain, Mat<T>& out, ColVec<T>& inv_rms) {
    const T d = static_cast<T>(x.cols());
    inv_rms = ((x.array().square().rowwise().sum() / d) + static_cast<T>(kNormEps)).rsqrt().matrix();
    out = (x.array().colwise() * inv_rms.array()).rowwise() * gain.row(0).array();
}

template <typename T>
Mat<T> rms_norm_backward(const Mat<T>& dy, const Mat<T>& x, const ColVec<T>& inv_rms, const Mat<T>& gain,
                         Mat<T>& dgain) {
    const T d = static_cast<T>(x.cols());
    dgain += (dy.array() * x.array() * (inv_rms.replicate(1, x.cols())).array()).colwise().sum().matrix();
    const Mat<T> g = (dy.array().rowwise() * gain.row(0).array()).matrix();
    const ColVec<T> dot = (g.array() * x.array()).rowwise().sum().matrix();
    const ColVec<T> coef = (inv_rms.array().cube() * dot.array() / d).matrix();
    return ((g.array().colwise() * inv_rms.array()) - (x.array().colwise() * coef.array())).matrix();
}

// ---------------------------------------------------------------- dropout

/// Fills `keep` with 0 or 1/(1-p) and scales `x` in place. Leaves `keep` empty when inactive.
template <typename T>
void dropout(Mat<T>& x, double p, std::mt19937_64* rng, Mat<T>& keep) {
    if (rng == nullptr || p <= 0.0) {
        keep.resize(0, 0);
        return;
    }
    keep.resize(x.rows(), x.cols());
    std::bernoulli_distribution drop(p);
    const T scale = static_cast<T>(1.0 / (1.0 - p));
    for (Eigen::Index i = 0; i < keep.size(); ++i) keep.data()[i] = drop(*rng) ? T(0) : scale;
    x.array() *= keep.array();
}

template <typename T>
void dropout_backward(Mat<T>& grad, const Mat<T>& keep) {
    if (keep.size() != 0) grad.array() *= keep.array();
}

// ---------------------------------------------------------------- attention

struct AttnShape {
    int batch = 0;  // query batch
    int sq = 0;
    int sk = 0;
    int heads = 0;
    int dh = 0;
};

/// probs: [batch, heads, sq, sk]. Masked or future keys get weight exactly 0.
/// kv_row maps a query batch row to its key/value batch row (identity if null).
template <typename T>
void attention_forward(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v, const AttnShape& s, const Mask* key_mask,
                       bool causal, const std::vector<int>* kv_row, std::vector<T>& probs, Mat<T>& ctx) {
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(s.dh)));
    probs.resize(static_cast<std::size_t>(s.batch) * s.heads * s.sq * s.sk);
    ctx.resize(static_cast<Eigen::Index>(s.batch) * s.sq, static_cast<Eigen::Index>(s.heads) * s.dh);
    std::vector<char> allowed(s.sk);
    for (int b = 0; b < s.batch; ++b) {
        const int kb = kv_row ? (*kv_row)[b] : b;
        for (int h = 0; h < s.heads; ++h) {
            Eigen::Map<Mat<T>> P(probs.data() + (static_cast<std::size_t>(b) * s.heads + h) * s.sq * s.sk, s.sq, s.sk);
            const auto Q = q.block(static_cast<Eigen::Index>(b) * s.sq, h * s.dh, s.sq, s.dh);
            const auto K = k.block(static_cast<Eigen::Index>(kb) * s.sk, h * s.dh, s.sk, s.dh);
            const auto V = v.block(static_cast<Eigen::Index>(kb) * s.sk, h * s.dh, s.sk, s.dh);
            P.noalias() = Q * K.transpose();
            for (int i = 0; i < s.sq; ++i) {
                T mx = -std::numeric_limits<T>::infinity();
                for (int j = 0; j < s.sk; ++j) {
                    allowed[j] = (key_mask == nullptr || key_mask->at(kb, j)) && (!causal || j <= i);
                    if (allowed[j]) mx = std::max(mx, P(i, j) * scale);
                }
                T sum = 0;
                for (int j = 0; j < s.sk; ++j) {
                    const T e = allowed[j] ? std::exp(P(i, j) * scale - mx) : T(0);
                    P(i, j) = e;
                    sum += e;
                }
                P.row(i) /= sum;
            }
            ctx.block(static_cast<Eigen::Index>(b) * s.sq, h * s.dh, s.sq, s.dh).noalias() = P * V;
        }
    }
}

/// Accumulates into dq, dk, dv (pre-sized, zeroed by the caller). When
/// `active` is given only those query rows (per batch row) carry gradient;
/// the remaining rows of d_ctx must be zero.
template <typename T>
void attention_backward(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v, const AttnShape& s,
                        const std::vector<T>& probs, const Mat<T>& d_ctx,
                        const std::vector<std::vector<int>>* active, Mat<T>& dq, Mat<T>& dk, Mat<T>& dv) {
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(s.dh)));
    for (int b = 0; b < s.batch; ++b) {
        const Eigen::Index qo = static_cast<Eigen::Index>(b) * s.sq;
        const Eigen::Index ko = static_cast<Eigen::Index>(b) * s.sk;
        for (int h = 0; h < s.heads; ++h) {
            Eigen::Map<const Mat<T>> P(probs.data() + (static_cast<std::size_t>(b) * s.heads + h) * s.sq * s.sk, s.sq,
                                       s.sk);
            const auto K = k.block(ko, h * s.dh, s.sk, s.dh);
            const auto V = v.block(ko, h * s.dh, s.sk, s.dh);
            if (active == nullptr) {
                const auto Q = q.block(qo, h * s.dh, s.sq, s.dh);
                const auto dO = d_ctx.block(qo, h * s.dh, s.sq, s.dh);
                dv.block(ko, h * s.dh, s.sk, s.dh).noalias() += P.transpose() * dO;
                Mat<T> dP = dO * V.transpose();
                const ColVec<T> rowdot = (dP.array() * P.array()).rowwise().sum().matrix();
                dP = (P.array() * (dP.array().colwise() - rowdot.array())).matrix() * scale;
                dq.block(qo, h * s.dh, s.sq, s.dh).noalias() += dP * K;
                dk.block(ko, h * s.dh, s.sk, s.dh).noalias() += dP.transpose() * Q;
                continue;
            }
            const auto& rows = (*active)[b];
            if (rows.empty()) continue;
            const Mat<T> Pa = P(rows, Eigen::all);
            const Mat<T> Qa = q.block(qo, h * s.dh, s.sq, s.dh)(rows, Eigen::all);
            const Mat<T> dOa = d_ctx.block(qo, h * s.dh, s.sq, s.dh)(rows, Eigen::all);
            dv.block(ko, h * s.dh, s.sk, s.dh).noalias() += Pa.transpose() * dOa;
            Mat<T> dP = dOa * V.transpose();
            const ColVec<T> rowdot = (dP.array() * Pa.array()).rowwise().sum().matrix();
            dP = (Pa.array() * (dP.array().colwise() - rowdot.array())).matrix() * scale;
            const Mat<T> dQa = dP * K;
            auto dQ = dq.block(qo, h * s.dh, s.sq, s.dh);
            for (std::size_t r = 0; r < rows.size(); ++r) dQ.row(rows[r]) += dQa.row(static_cast<Eigen::Index>(r));
            dk.block(ko, h * s.dh, s.sk, s.dh).noalias() += dP.transpose() * Qa;
        }
    }
}

// ---------------------------------------------------------------- encoder layer

template <typename T>
struct EncoderLayerCache {
    int batch = 0;
    int seq = 0;
    Mat<T> x_in, n1, q, k, v, ctx, drop1, x_mid, n2, h_pre, h_act, drop2;
    ColVec<T> inv1, inv2;
    std::vector<T> probs;  // [B, H, S, S]
};

template <typename T>
void encoder_layer_forward(const EncoderLayerParams<T>& p, const Mat<T>& x, int batch, int seq, int heads,
                           const Mask& mask, double dropout_p, std::mt19937_64* rng, EncoderLayerCache<T>& c,
                           Mat<T>& out) {
    c.batch = batch;
    c.seq = seq;
    c.x_in = x;
    rms_norm(x, p.norm1, c.n1, c.inv1);
    c.q.noalias() = c.n1 * p.wq;
    c.k.noalias() = c.n1 * p.wk;
    c.v.noalias() = c.n1 * p.wv;
    const int d = static_cast<int>(x.cols());
    const AttnShape shape{batch, seq, seq, heads, d / heads};
    attention_forward(c.q, c.k, c.v, shape, &mask, false, nullptr, c.probs, c.ctx);
    Mat<T> a = c.ctx * p.wo;
    dropout(a, dropout_p, rng, c.drop1);
    c.x_mid = x + a;
    rms_norm(c.x_mid, p.norm2, c.n2, c.inv2);
    c.h_pre.noalias() = c.n2 * p.w1;
    c.h_act = c.h_pre.cwiseMax(T(0));
    Mat<T> m = c.h_act * p.w2;
    dropout(m, dropout_p, rng, c.drop2);
    out = c.x_mid + m;
}

/// `active_rows` (global row ids, ascending) restricts the rows whose output
/// gradient may be non-zero; null means every row.
template <typename T>
Mat<T> encoder_layer_backward(const EncoderLayerParams<T>& p, const EncoderLayerCache<T>& c, const Mat<T>& d_out,
                              int heads, const std::vector<int>* active_rows, EncoderLayerParams<T>& g) {
    const int d = static_cast<int>(d_out.cols());
    const AttnShape shape{c.batch, c.seq, c.seq, heads, d / heads};
    Mat<T> dq = Mat<T>::Zero(c.q.rows(), c.q.cols());
    Mat<T> dk = Mat<T>::Zero(c.k.rows(), c.k.cols());
    Mat<T> dv = Mat<T>::Zero(c.v.rows(), c.v.cols());

    if (active_rows == nullptr) {
        Mat<T> dm = d_out;
        dropout_backward(dm, c.drop2);
        g.w2.noalias() += c.h_act.transpose() * dm;
        Mat<T> dh = (dm * p.w2.transpose()).array() * (c.h_pre.array() > T(0)).template cast<T>();
        g.w1.noalias() += c.n2.transpose() * dh;
        const Mat<T> dn2 = dh * p.w1.transpose();
        const Mat<T> dx_mid = d_out + rms_norm_backward(dn2, c.x_mid, c.inv2, p.norm2, g.norm2);
        Mat<T> da = dx_mid;
        dropout_backward(da, c.drop1);
        g.wo.noalias() += c.ctx.transpose() * da;
        const Mat<T> dctx = da * p.wo.transpose();
        attention_backward(c.q, c.k, c.v, shape, c.probs, dctx, nullptr, dq, dk, dv);
        g.wq.noalias() += c.n1.transpose() * dq;
        g.wk.noalias() += c.n1.transpose() * dk;
        g.wv.noalias() += c.n1.transpose() * dv;
        Mat<T> dn1 = dq * p.wq.transpose();
        dn1.noalias() += dk * p.wk.transpose();
        dn1.noalias() += dv * p.wv.transpose();
        return dx_mid + rms_norm_backward(dn1, c.x_in, c.inv1, p.norm1, g.norm1);
    }

    const auto& R = *active_rows;
    const Mat<T> d_out_r = d_out(R, Eigen::all);
    Mat<T> dm = d_out_r;
    if (c.drop2.size() != 0) dm.array() *= c.drop2(R, Eigen::all).array();
    const Mat<T> h_act_r = c.h_act(R, Eigen::all);
    g.w2.noalias() += h_act_r.transpose() * dm;
    Mat<T> dh = (dm * p.w2.transpose()).array() * (c.h_pre(R, Eigen::all).array() > T(0)).template cast<T>();
    const Mat<T> n2_r = c.n2(R, Eigen::all);
    g.w1.noalias() += n2_r.transpose() * dh;
    const Mat<T> dn2 = dh * p.w1.transpose();
    const Mat<T> x_mid_r = c.x_mid(R, Eigen::all);
    const ColVec<T> inv2_r = c.inv2(R);
    const Mat<T> dx_mid_r = d_out_r + rms_norm_backward(dn2, x_mid_r, inv2_r, p.norm2, g.norm2);
    Mat<T> da = dx_mid_r;
    if (c.drop1.size() != 0) da.array() *= c.drop1(R, Eigen::all).array();
    const Mat<T> ctx_r = c.ctx(R, Eigen::all);
    g.wo.noalias() += ctx_r.transpose() * da;
    Mat<T> dctx = Mat<T>::Zero(c.ctx.rows(), c.ctx.cols());
    dctx(R, Eigen::all) = da * p.wo.transpose();

    std::vector<std::vector<int>> per_batch(c.batch);
    for (int r : R) per_batch[r / c.seq].push_back(r % c.seq);
    attention_backward(c.q, c.k, c.v, shape, c.probs, dctx, &per_batch, dq, dk, dv);

    const Mat<T> n1_r = c.n1(R, Eigen::all);
    const Mat<T> dq_r = dq(R, Eigen::all);
    g.wq.noalias() += n1_r.transpose() * dq_r;
    g.wk.noalias() += c.n1.transpose() * dk;
    g.wv.noalias() += c.n1.transpose() * dv;
    Mat<T> dn1 = dk * p.wk.transpose();
    dn1.noalias() += dv * p.wv.transpose();
    dn1(R, Eigen::all) += dq_r * p.wq.transpose();
    Mat<T> dx = rms_norm_backward(dn1, c.x_in, c.inv1, p.norm1, g.norm1);
    dx(R, Eigen::all) += dx_mid_r;
    return dx;
}

// ---------------------------------------------------------------- decoder layer

template <typename T>
struct DecoderLayerCache {
    int batch = 0;
    int seq = 0;
    Mat<T> x_in, n1, q, k, v, ctx, drop1, x1;
    Mat<T> n2, cq, cctx, drop2, x2;
    Mat<T> n3, h_pre, h_act, drop3;
    ColVec<T> inv1, inv2, inv3;
    std::vector<T> self_probs, cross_probs;
};

/// enc_k / enc_v are this layer's cross-attention keys and values of the
/// (normalized) encoder output, (B_enc * S_enc) x d.
template <typename T>
void decoder_layer_forward(const DecoderLayerParams<T>& p, const Mat<T>& x, int batch, int seq, int heads,
                           const Mat<T>& enc_k, const Mat<T>& enc_v, int enc_seq, const Mask& enc_mask,
                           const std::vector<int>* kv_row, double dropout_p, std::mt19937_64* rng,
                           DecoderLayerCache<T>& c, Mat<T>& out) {
    c.batch = batch;
    c.seq = seq;
    const int d = static_cast<int>(x.cols());
    c.x_in = x;
    rms_norm(x, p.norm1, c.n1, c.inv1);
    c.q.noalias() = c.n1 * p.wq;
    c.k.noalias() = c.n1 * p.wk;
    c.v.noalias() = c.n1 * p.wv;
    attention_forward(c.q, c.k, c.v, AttnShape{batch, seq, seq, heads, d / heads}, nullptr, true, nullptr,
                      c.self_probs, c.ctx);
    Mat<T> a = c.ctx * p.wo;
    dropout(a, dropout_p, rng, c.drop1);
    c.x1 = x + a;

    rms_norm(c.x1, p.norm2, c.n2, c.inv2);
    c.cq.noalias() = c.n2 * p.cq;
    attention_forward(c.cq, enc_k, enc_v, AttnShape{batch, seq, enc_seq, heads, d / heads}, &enc_mask, false, kv_row,
                      c.cross_probs, c.cctx);
    Mat<T> ca = c.cctx * p.co;
    dropout(ca, dropout_p, rng, c.drop2);
    c.x2 = c.x1 + ca;

    rms_norm(c.x2, p.norm3, c.n3, c.inv3);
    c.h_pre.noalias() = c.n3 * p.w1;
    c.h_act = c.h_pre.cwiseMax(T(0));
    Mat<T> m = c.h_act * p.w2;
    dropout(m, dropout_p, rng, c.drop3);
    out = c.x2 + m;
}

/// Returns d(x_in); accumulates the cross-attention key/value gradients into d_enc_k / d_enc_v.
template <typename T>
Mat<T> decoder_layer_backward(const DecoderLayerParams<T>& p, const DecoderLayerCache<T>& c, const Mat<T>& d_out,
                              int heads, const Mat<T>& enc_k, const Mat<T>& enc_v, int enc_seq,
                              DecoderLayerParams<T>& g, Mat<T>& d_enc_k, Mat<T>& d_enc_v) {
    const int d = static_cast<int>(d_out.cols());
    Mat<T> dm = d_out;
    dropout_backward(dm, c.drop3);
    g.w2.noalias() += c.h_act.transpose() * dm;
    Mat<T> dh = (dm * p.w2.transpose()).array() * (c.h_pre.array() > T(0)).template cast<T>();
    g.w1.noalias() += c.n3.transpose() * dh;
    const Mat<T> dn3 = dh * p.w1.transpose();
    const Mat<T> dx2 = d_out + rms_norm_backward(dn3, c.x2, c.inv3, p.norm3, g.norm3);

    Mat<T> dca = dx2;
    dropout_backward(dca, c.drop2);
    g.co.noalias() += c.cctx.transpose() * dca;
    const Mat<T> dcctx = dca * p.co.transpose();
    Mat<T> dcq = Mat<T>::Zero(c.cq.rows(), c.cq.cols());
    attention_backward(c.cq, enc_k, enc_v, AttnShape{c.batch, c.seq, enc_seq, heads, d / heads}, c.cross_probs, dcctx,
                       nullptr, dcq, d_enc_k, d_enc_v);
    g.cq.noalias() += c.n2.transpose() * dcq;
    const Mat<T> dn2 = dcq * p.cq.transpose();
    const Mat<T> dx1 = dx2 + rms_norm_backward(dn2, c.x1, c.inv2, p.norm2, g.norm2);

    Mat<T> da = dx1;
    dropout_backward(da, c.drop1);
    g.wo.noalias() += c.ctx.transpose() * da;
    const Mat<T> dctx = da * p.wo.transpose();
    Mat<T> dq = Mat<T>::Zero(c.q.rows(), c.q.cols());
    Mat<T> dk = Mat<T>::Zero(c.k.rows(), c.k.cols());
    Mat<T> dv = Mat<T>::Zero(c.v.rows(), c.v.cols());
    attention_backward(c.q, c.k, c.v, AttnShape{c.batch, c.seq, c.seq, heads, d / heads}, c.self_probs, dctx, nullptr,
                       dq, dk, dv);
    g.wq.noalias() += c.n1.transpose() * dq;
    g.wk.noalias() += c.n1.transpose() * dk;
    g.wv.noalias() += c.n1.transpose() * dv;
    Mat<T> dn1 = dq * p.wq.transpose();
    dn1.noalias() += dk * p.wk.transpose();
    dn1.noalias() += dv * p.wv.transpose();
    return dx1 + rms_norm_backward(dn1, c.x_in, c.inv1, p.norm1, g.norm1);
}

// ---------------------------------------------------------------- embeddings

template <typename T>
Mat<T> embed(const Mat<T>& tok, const Mat<T>& pos, const std::vector<std::int32_t>& ids, int batch, int seq) {
    Mat<T> x(static_cast<Eigen::Index>(batch) * seq, tok.cols());
    for (int b = 0; b < batch; ++b) {
        for (int s = 0; s < seq; ++s) {
            const Eigen::Index r = static_cast<Eigen::Index>(b) * seq + s;
            x.row(r) = tok.row(ids[r]) + pos.row(s);
        }
    }
    return x;
}

template <typename T>
void embed_backward(const Mat<T>& dx, const std::vector<std::int32_t>& ids, int batch, int seq, Mat<T>& dtok,
                    Mat<T>& dpos) {
    for (int b = 0; b < batch; ++b) {
        for (int s = 0; s < seq; ++s) {
            const Eigen::Index r = static_cast<Eigen::Index>(b) * seq + s;
            dtok.row(ids[r]) += dx.row(r);
            dpos.row(s) += dx.row(r);
        }
    }
}

}  // namespace rastp::model::detail

namespace rastp::model::detail {

// ---------------------------------------------------------------- decoder stack

template <typename T>
struct DecoderForward {
    int enc_batch = 0;
    int enc_seq = 0;
    int batch = 0;
    int seq = 0;
    Mat<T> enc_in, enc_normed;
    ColVec<T> enc_inv;
    std::vector<Mat<T>> enc_k, enc_v;
    Mat<T> drop0;
    std::vector<DecoderLayerCache<T>> layers;
    Mat<T> x_final, normed;
    ColVec<T> inv;
    Mat<T> logits;
};

/// Final encoder norm, cross-attention projections, decoder layers and the
/// output projection. `enc_hidden` is the raw encoder residual stream.
template <typename T>
void decoder_forward(const Params<T>& P, const ModelConfig& cfg, const Mat<T>& enc_hidden, int enc_batch,
                     int enc_seq, const Mask& enc_mask, const std::vector<std::int32_t>& dec_ids, int batch, int seq,
                     const std::vector<int>* kv_row, double dropout_p, std::mt19937_64* rng, DecoderForward<T>& f) {
    f.enc_batch = enc_batch;
    f.enc_seq = enc_seq;
    f.batch = batch;
    f.seq = seq;
    f.enc_in = enc_hidden;
    rms_norm(enc_hidden, P.enc_norm, f.enc_normed, f.enc_inv);
    const auto n_dec = P.dec.size();
    f.enc_k.resize(n_dec);
    f.enc_v.resize(n_dec);
    f.layers.resize(n_dec);
    for (std::size_t l = 0; l < n_dec; ++l) {
        f.enc_k[l].noalias() = f.enc_normed * P.dec[l].ck;
        f.enc_v[l].noalias() = f.enc_normed * P.dec[l].cv;
    }
    Mat<T> x = embed(P.dec_tok, P.dec_pos, dec_ids, batch, seq);
    dropout(x, dropout_p, rng, f.drop0);
    Mat<T> next;
    for (std::size_t l = 0; l < n_dec; ++l) {
        decoder_layer_forward(P.dec[l], x, batch, seq, cfg.n_heads, f.enc_k[l], f.enc_v[l], enc_seq, enc_mask, kv_row,
                              dropout_p, rng, f.layers[l], next);
        x.swap(next);
    }
    f.x_final = std::move(x);
    rms_norm(f.x_final, P.dec_norm, f.normed, f.inv);
    f.logits.noalias() = f.normed * P.out_proj;
}

/// Returns the gradient with respect to the raw encoder residual stream.
template <typename T>
Mat<T> decoder_backward(const Params<T>& P, const ModelConfig& cfg, const DecoderForward<T>& f,
                        const std::vector<std::int32_t>& dec_ids, const Mat<T>& d_logits, Params<T>& G) {
    G.out_proj.noalias() += f.normed.transpose() * d_logits;
    const Mat<T> d_normed = d_logits * P.out_proj.transpose();
    Mat<T> dx = rms_norm_backward(d_normed, f.x_final, f.inv, P.dec_norm, G.dec_norm);
    Mat<T> d_enc_normed = Mat<T>::Zero(f.enc_normed.rows(), f.enc_normed.cols());
    for (std::size_t l = P.dec.size(); l-- > 0;) {
        Mat<T> d_ek = Mat<T>::Zero(f.enc_k[l].rows(), f.enc_k[l].cols());
        Mat<T> d_ev = Mat<T>::Zero(f.enc_v[l].rows(), f.enc_v[l].cols());
        dx = decoder_layer_backward(P.dec[l], f.layers[l], dx, cfg.n_heads, f.enc_k[l], f.enc_v[l], f.enc_seq, G.dec[l],
                                    d_ek, d_ev);
        G.dec[l].ck.noalias() += f.enc_normed.transpose() * d_ek;
        G.dec[l].cv.noalias() += f.enc_normed.transpose() * d_ev;
        d_enc_normed.noalias() += d_ek * P.dec[l].ck.transpose();
        d_enc_normed.noalias() += d_ev * P.dec[l].cv.transpose();
    }
    dropout_backward(dx, f.drop0);
    embed_backward(dx, dec_ids, f.batch, f.seq, G.dec_tok, G.dec_pos);
    return rms_norm_backward(d_enc_normed, f.enc_in, f.enc_inv, P.enc_norm, G.enc_norm);
}

/// Teacher-forcing decoder inputs: BOS followed by all but the last target.
inline std::vector<std::int32_t> shift_right(const std::vector<std::vector<int>>& targets, int seq) {
    std::vector<std::int32_t> ids(targets.size() * static_cast<std::size_t>(seq));
    for (std::size_t b = 0; b < targets.size(); ++b) {
        ids[b * seq] = kBosToken;
        for (int t = 1; t < seq; ++t) ids[b * seq + t] = targets[b][t - 1];
    }
    return ids;
}

/// Mean over rows of the summed token negative log-likelihood. Fills d_logits when non-null.
template <typename T>
T cross_entropy(const Mat<T>& logits, const std::vector<std::vector<int>>& targets, int seq, Mat<T>* d_logits) {
    const auto rows = static_cast<int>(targets.size());
    double total = 0.0;
    if (d_logits) d_logits->resize(logits.rows(), logits.cols());
    for (int b = 0; b < rows; ++b) {
        for (int t = 0; t < seq; ++t) {
            const Eigen::Index r = static_cast<Eigen::Index>(b) * seq + t;
            const T mx = logits.row(r).maxCoeff();
            const T lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
            total += static_cast<double>(lse - logits(r, targets[b][t]));
            if (d_logits) {
                d_logits->row(r) = (logits.row(r).array() - lse).exp().matrix() / static_cast<T>(rows);
                (*d_logits)(r, targets[b][t]) -= T(1) / static_cast<T>(rows);
            }
        }
    }
    return static_cast<T>(total / rows);
}

}  // namespace rastp::model::detail
