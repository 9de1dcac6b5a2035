// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/sid/embedding_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "rastp/core/blob.hpp"

namespace rastp::sid {

namespace {

std::filesystem::path sidecar(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".json");
}

}  // namespace

std::vector<ItemEmbedding> load_embeddings_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open embeddings file " + path.string());
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), path.string() + ": missing header");
    std::istringstream header(line);
    int dim = 0;
    long long n = 0;
    require(static_cast<bool>(header >> dim >> n) && dim > 0 && n >= 0,
            path.string() + ":1: header must be 'd_feat N'");
    std::vector<ItemEmbedding> items;
    items.reserve(static_cast<std::size_t>(n));
    for (long long row = 0; row < n; ++row) {
        const long long lineno = row + 2;
        require(static_cast<bool>(std::getline(in, line)),
                fmt::format("{}: expected {} rows, found {}", path.string(), n, row));
        std::istringstream fields(line);
        ItemEmbedding e;
        require(static_cast<bool>(fields >> e.item_id), fmt::format("{}:{}: missing item id", path.string(), lineno));
        e.vector.resize(dim);
        for (int j = 0; j < dim; ++j) {
            std::string tok;
            require(static_cast<bool>(fields >> tok),
                    fmt::format("{}:{}: expected {} values", path.string(), lineno, dim));
            try {
                e.vector[j] = std::stof(tok);
            } catch (const std::exception&) {
                throw Error(fmt::format("{}:{}: bad value '{}'", path.string(), lineno, tok));
            }
            require(std::isfinite(e.vector[j]),
                    fmt::format("{}:{}: item '{}' has a non-finite value", path.string(), lineno, e.item_id));
        }
        std::string extra;
        require(!(fields >> extra), fmt::format("{}:{}: more than {} values", path.string(), lineno, dim));
        items.push_back(std::move(e));
    }
    return items;
}

void save_embeddings_text(const std::filesystem::path& path, const std::vector<ItemEmbedding>& items) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot write " + path.string());
    const std::size_t dim = items.empty() ? 0 : items.front().vector.size();
    out << dim << ' ' << items.size() << '\n';
    for (const auto& e : items) {
        out << e.item_id;
        for (float v : e.vector) out << ' ' << fmt::format("{}", v);
        out << '\n';
    }
}

std::vector<ItemEmbedding> load_embeddings_binary(const std::filesystem::path& path) {
    std::ifstream meta_in(sidecar(path));
    require(static_cast<bool>(meta_in), "missing sidecar manifest " + sidecar(path).string());
    const auto meta = nlohmann::json::parse(meta_in);
    const int dim = meta.at("d_feat").get<int>();
    const auto n = meta.at("n").get<std::size_t>();
    const auto ids = meta.at("item_ids").get<std::vector<std::string>>();
    require(ids.size() == n, sidecar(path).string() + ": item_ids length differs from n");
    const auto values = read_f32_le(path);
    require(values.size() == n * static_cast<std::size_t>(dim),
            fmt::format("{}: expected {} floats, found {}", path.string(), n * dim, values.size()));
    std::vector<ItemEmbedding> items(n);
    for (std::size_t i = 0; i < n; ++i) {
        items[i].item_id = ids[i];
        items[i].vector.assign(values.begin() + static_cast<std::ptrdiff_t>(i * dim),
                               values.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
        for (float v : items[i].vector) {
            require(std::isfinite(v), fmt::format("{}: item '{}' has a non-finite value", path.string(), ids[i]));
        }
    }
    return items;
}

void save_embeddings_binary(const std::filesystem::path& path, const std::vector<ItemEmbedding>& items) {
    const std::size_t dim = items.empty() ? 0 : items.front().vector.size();
    std::vector<float> values;
    std::vector<std::string> ids;
    values.reserve(items.size() * dim);
    for (const auto& e : items) {
        require(e.vector.size() == dim, "all embeddings must share one dimension");
        values.insert(values.end(), e.vector.begin(), e.vector.end());
        ids.push_back(e.item_id);
    }
    write_f32_le(path, values);
    std::ofstream meta(sidecar(path));
    require(static_cast<bool>(meta), "cannot write " + sidecar(path).string());
    meta << nlohmann::json{{"d_feat", dim}, {"n", items.size()}, {"item_ids", ids}}.dump(2) << '\n';
}

std::vector<ItemEmbedding> load_embeddings(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".f32" || ext == ".bin") return load_embeddings_binary(path);
    return load_embeddings_text(path);
}

}  // namespace rastp::sid
