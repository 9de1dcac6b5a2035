// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/bench/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace rastp::bench {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<KeySpec>& known_keys() {
    static const std::vector<KeySpec> keys = {
        {"experiment", "rastp", "label written into sweep tables"},
        // inputs
        {"interactions", "", "interaction log (user<TAB>item<TAB>timestamp); empty means synthesize"},
        {"items", "", "item embeddings (.txt or .f32 with .json sidecar); empty means synthesize"},
        {"codebooks", "", "previously fitted codebooks; empty means fit during the run"},
        {"synth_users", "2000", "synthetic users"},
        {"synth_items", "500", "synthetic items"},
        {"synth_clusters", "20", "synthetic item clusters"},
        {"synth_d_feat", "32", "synthetic embedding dimension"},
        {"synth_seed", "1", "synthetic corpus seed"},
        {"synth_in_cluster", "0.8", "probability a synthetic step stays in the preferred cluster"},
        {"synth_max_stride", "1", "largest in-cluster step of the synthetic walk"},
        {"synth_min_length", "8", "shortest synthetic history"},
        {"synth_max_length", "40", "longest synthetic history"},
        {"synth_spread", "1.0", "std-dev of items around their cluster center"},
        // tokenizer and data
        {"levels", "3", "semantic id levels"},
        {"width", "32", "codes per level"},
        {"kmeans_iters", "25", "Lloyd iterations per level"},
        {"tokenizer_seed", "7", "k-means seed"},
        {"disambiguate", "false", "append a collision-rank level"},
        {"max_seq", "120", "encoder tokens per history"},
        {"min_interactions", "5", "k for the iterative k-core filter"},
        {"single_target", "false", "one training example per user instead of every prefix"},
        // model
        {"d_model", "64", "model width"},
        {"n_heads", "4", "attention heads"},
        {"d_mlp", "256", "feed-forward width"},
        {"n_enc_layers", "2", "encoder layers"},
        {"n_dec_layers", "2", "decoder layers"},
        // training
        {"strategy", "rastp", "none|rastp|l2norm|maxpool|avgpool"},
        {"rho", "0.7", "fraction of tokens kept"},
        {"pool_window", "2", "pooling window"},
        {"prune_layer", "2", "encoder layer after which the strategy runs"},
        {"lr", "0.001", "Adam learning rate"},
        {"weight_decay", "0.0001", "L2 penalty"},
        {"dropout", "0.1", "dropout probability"},
        {"batch_size", "64", "examples per step"},
        {"max_steps", "1000", "optimizer step budget"},
        {"valid_interval", "200", "steps between validations"},
        {"patience", "10", "validations without improvement before stopping"},
        {"seed", "42", "model init, batch order and dropout seed"},
        {"beam", "20", "beam width"},
        {"eval_prune", "true", "keep the strategy active during generation"},
        {"valid_subsample", "1000", "validation users per check"},
        {"eval_batch", "64", "users per generation batch"},
        // timing
        {"timing_warmup", "50", "leading steps excluded from timing"},
        {"timing_window", "50", "steps per timing window"},
        // sweeps
        {"axis", "strategy", "sweep axis: strategy|layer|rho"},
        {"values", "none,rastp,l2norm,maxpool,avgpool", "comma-separated sweep values"},
        {"seeds", "1,42,999,1024,2025", "comma-separated sweep seeds"},
    };
    return keys;
}

Settings::Settings() {
    for (const auto& k : known_keys()) values_.emplace(k.name, k.fallback);
}

Settings Settings::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), fmt::format("cannot open config file '{}'", path.string()));
    Settings s;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        require(eq != std::string_view::npos, fmt::format("{}:{}: expected key = value", path.string(), line_no));
        const auto key = trim(body.substr(0, eq));
        auto value = trim(body.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        try {
            s.set(key, std::string(value));
        } catch (const Error& e) {
            throw Error(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
    }
    return s;
}

void Settings::set(std::string_view key, std::string value) {
    const auto it = values_.find(key);
    require(it != values_.end(), fmt::format("unknown setting '{}'", key));
    it->second = std::move(value);
}

const std::string& Settings::get(std::string_view key) const {
    const auto it = values_.find(key);
    require(it != values_.end(), fmt::format("unknown setting '{}'", key));
    return it->second;
}

int Settings::integer(std::string_view key) const {
    const auto& v = get(key);
    int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    require(ec == std::errc() && ptr == v.data() + v.size() && !v.empty(),
            fmt::format("setting '{}' must be an integer, got '{}'", key, v));
    return out;
}

std::uint64_t Settings::seed(std::string_view key) const {
    const auto& v = get(key);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    require(ec == std::errc() && ptr == v.data() + v.size() && !v.empty(),
            fmt::format("setting '{}' must be a non-negative integer, got '{}'", key, v));
    return out;
}

double Settings::real(std::string_view key) const {
    const auto& v = get(key);
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    require(used == v.size() && !v.empty(), fmt::format("setting '{}' must be a number, got '{}'", key, v));
    return out;
}

bool Settings::flag(std::string_view key) const {
    const auto& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(fmt::format("setting '{}' must be true or false, got '{}'", key, v));
}

std::vector<std::string> Settings::list(std::string_view key) const { return split_list(get(key)); }

nlohmann::json Settings::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
}

std::string Settings::to_text() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
    return out.str();
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = std::min(text.find(',', start), text.size());
        const auto part = trim(text.substr(start, comma - start));
        if (!part.empty()) out.emplace_back(part);
        start = comma + 1;
    }
    return out;
}

}  // namespace rastp::bench
