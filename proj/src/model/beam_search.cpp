// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/model/beam_search.hpp"

#include <algorithm>

namespace rastp::model {

namespace {

bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.sid.codes < b.sid.codes;
}

}  // namespace

template <typename T>
std::vector<std::vector<Hypothesis>> generate(const Seq2Seq<T>& model, const HiddenStates<T>& enc_out,
                                              const Mask& enc_mask, const sid::SidIndex& index, int beam) {
    require(beam >= 1, "beam width must be >= 1");
    require(index.num_items() > 0, "cannot decode against an empty trie");
    const int levels = index.levels();
    const int width = index.width();
    require(levels <= model.config().max_target, "semantic ids are longer than the decoder");

    std::vector<std::vector<Hypothesis>> beams(enc_out.batch, std::vector<Hypothesis>{Hypothesis{}});
    for (int step = 0; step < levels; ++step) {
        std::vector<std::vector<int>> prefixes;
        std::vector<int> enc_row;
        for (int b = 0; b < enc_out.batch; ++b) {
            for (const auto& h : beams[b]) {
                std::vector<int> tokens(h.sid.codes.size());
                for (std::size_t t = 0; t < tokens.size(); ++t) {
                    tokens[t] = sid_token(static_cast<int>(t), h.sid.codes[t], width);
                }
                prefixes.push_back(std::move(tokens));
                enc_row.push_back(b);
            }
        }
        const Mat<T> logp = model.next_token_logprobs(enc_out, enc_mask, prefixes, enc_row);
        Eigen::Index r = 0;
        for (int b = 0; b < enc_out.batch; ++b) {
            std::vector<Hypothesis> candidates;
            for (const auto& h : beams[b]) {
                for (int code : index.children(h.sid.codes)) {
                    Hypothesis next = h;
                    next.sid.codes.push_back(code);
                    next.log_prob += static_cast<double>(logp(r, sid_token(step, code, width)));
                    candidates.push_back(std::move(next));
                }
                ++r;
            }
            const auto keep = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(beam));
            std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                              candidates.end(), ranks_before);
            candidates.resize(keep);
            beams[b] = std::move(candidates);
        }
    }
    return beams;
}

template std::vector<std::vector<Hypothesis>> generate(const Seq2Seq<float>&, const HiddenStates<float>&, const Mask&,
                                                       const sid::SidIndex&, int);
template std::vector<std::vector<Hypothesis>> generate(const Seq2Seq<double>&, const HiddenStates<double>&,
                                                       const Mask&, const sid::SidIndex&, int);

}  // namespace rastp::model
