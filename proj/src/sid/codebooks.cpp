// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/sid/codebooks.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "rastp/core/blob.hpp"

namespace rastp::sid {

namespace {

constexpr std::uint8_t kCodebookVersion = 1;

using MatD = Mat<double>;

double sq_dist(const double* a, const float* b, int dim) {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double d = a[i] - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

int nearest(const double* point, const Mat<float>& centroids, double* best_dist = nullptr) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        const double d = sq_dist(point, centroids.row(c).data(), static_cast<int>(centroids.cols()));
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    if (best_dist != nullptr) *best_dist = best_d;
    return best;
}

// k-means++ seeding followed by Lloyd iterations. The returned centroids are
// always the means of the final assignment.
Mat<float> kmeans(const MatD& data, int k, int iters, std::mt19937_64& rng) {
    const auto n = static_cast<int>(data.rows());
    const auto dim = static_cast<int>(data.cols());

    MatD centers(k, dim);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::vector<char> chosen(n, 0);
    int first = std::uniform_int_distribution<int>(0, n - 1)(rng);
    centers.row(0) = data.row(first);
    chosen[first] = 1;
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], (data.row(i) - centers.row(c - 1)).squaredNorm());
            total += d2[i];
        }
        int pick = -1;
        if (total > 0.0) {
            double r = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (int i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) continue;
                pick = i;
                r -= d2[i];
                if (r < 0.0) break;
            }
        } else {
            // every point coincides with a center already; take the first unused one
            for (int i = 0; i < n && pick < 0; ++i) {
                if (!chosen[i]) pick = i;
            }
        }
        chosen[pick] = 1;
        centers.row(c) = data.row(pick);
    }

    Mat<float> cf = centers.cast<float>();
    std::vector<int> assign(n, 0);
    std::vector<double> dist(n, 0.0);
    std::vector<int> counts(k, 0);
    for (int it = 0; it < iters; ++it) {
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < n; ++i) {
            assign[i] = nearest(data.row(i).data(), cf, &dist[i]);
            ++counts[assign[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            // move the point farthest from its centroid into the empty cluster
            int donor = -1;
            for (int i = 0; i < n; ++i) {
                if (counts[assign[i]] < 2) continue;
                if (donor < 0 || dist[i] > dist[donor]) donor = i;
            }
            if (donor < 0) continue;
            --counts[assign[donor]];
            assign[donor] = c;
            counts[c] = 1;
            dist[donor] = 0.0;
        }
        MatD sums = MatD::Zero(k, dim);
        for (int i = 0; i < n; ++i) sums.row(assign[i]) += data.row(i);
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) cf.row(c) = (sums.row(c) / counts[c]).cast<float>();
        }
    }
    return cf;
}

void check_finite(const ItemEmbedding& item) {
    for (float v : item.vector) {
        require(std::isfinite(v), fmt::format("item '{}' has a non-finite embedding value", item.item_id));
    }
}

}  // namespace

std::string corpus_fingerprint(std::span<const ItemEmbedding> embeddings) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& e : embeddings) {
        mix(e.item_id.data(), e.item_id.size());
        mix(e.vector.data(), e.vector.size() * sizeof(float));
    }
    return fmt::format("{:016x}", h);
}

SidCodebooks fit_codebooks(std::span<const ItemEmbedding> embeddings, int levels, int width, int iters,
                           std::uint64_t seed) {
    require(levels >= 1, "codebook levels must be >= 1");
    require(width >= 1, "codebook width must be >= 1");
    require(iters >= 1, "k-means iterations must be >= 1");
    require(static_cast<int>(embeddings.size()) >= width,
            fmt::format("insufficient corpus: {} items for codebook width {}", embeddings.size(), width));

    const auto dim = static_cast<int>(embeddings.front().vector.size());
    require(dim > 0, "embeddings must be non-empty");
    MatD residual(static_cast<Eigen::Index>(embeddings.size()), dim);
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        const auto& e = embeddings[i];
        require(static_cast<int>(e.vector.size()) == dim,
                fmt::format("item '{}' has dimension {}, expected {}", e.item_id, e.vector.size(), dim));
        check_finite(e);
        for (int j = 0; j < dim; ++j) residual(static_cast<Eigen::Index>(i), j) = e.vector[j];
    }

    SidCodebooks books;
    books.levels = levels;
    books.width = width;
    books.dim = dim;
    books.seed = seed;
    books.fingerprint = corpus_fingerprint(embeddings);

    std::mt19937_64 rng(seed);
    for (int level = 0; level < levels; ++level) {
        Mat<float> centroids = kmeans(residual, width, iters, rng);
        for (Eigen::Index i = 0; i < residual.rows(); ++i) {
            const int code = nearest(residual.row(i).data(), centroids);
            residual.row(i) -= centroids.row(code).cast<double>();
        }
        books.centroids.push_back(std::move(centroids));
    }
    return books;
}

SidSequence encode_item(const SidCodebooks& codebooks, std::span<const float> embedding) {
    require(static_cast<int>(embedding.size()) == codebooks.dim,
            fmt::format("embedding dimension {} does not match codebook dimension {}", embedding.size(),
                        codebooks.dim));
    std::vector<double> residual(embedding.begin(), embedding.end());
    SidSequence out;
    out.codes.reserve(codebooks.levels);
    for (const auto& centroids : codebooks.centroids) {
        const int code = nearest(residual.data(), centroids);
        for (int j = 0; j < codebooks.dim; ++j) residual[j] -= centroids(code, j);
        out.codes.push_back(code);
    }
    return out;
}

std::vector<double> residual_profile(const SidCodebooks& codebooks, std::span<const ItemEmbedding> embeddings) {
    std::vector<double> profile(codebooks.levels + 1, 0.0);
    if (embeddings.empty()) return profile;
    for (const auto& e : embeddings) {
        std::vector<double> r(e.vector.begin(), e.vector.end());
        auto norm2 = [&r] {
            double acc = 0.0;
            for (double v : r) acc += v * v;
            return acc;
        };
        profile[0] += norm2();
        for (int level = 0; level < codebooks.levels; ++level) {
            const auto& c = codebooks.centroids[level];
            const int code = nearest(r.data(), c);
            for (int j = 0; j < codebooks.dim; ++j) r[j] -= c(code, j);
            profile[level + 1] += norm2();
        }
    }
    for (double& p : profile) p /= static_cast<double>(embeddings.size());
    return profile;
}

void save_codebooks(const std::filesystem::path& path, const SidCodebooks& codebooks) {
    Blob blob;
    blob.version = kCodebookVersion;
    blob.manifest = {{"L", codebooks.levels},
                     {"W", codebooks.width},
                     {"d_feat", codebooks.dim},
                     {"seed", codebooks.seed},
                     {"fingerprint", codebooks.fingerprint}};
    blob.payload.reserve(static_cast<std::size_t>(codebooks.levels) * codebooks.width * codebooks.dim);
    for (const auto& c : codebooks.centroids) {
        blob.payload.insert(blob.payload.end(), c.data(), c.data() + c.size());
    }
    write_blob(path, blob);
}

SidCodebooks load_codebooks(const std::filesystem::path& path) {
    const Blob blob = read_blob(path, kCodebookVersion);
    SidCodebooks books;
    books.levels = blob.manifest.at("L").get<int>();
    books.width = blob.manifest.at("W").get<int>();
    books.dim = blob.manifest.at("d_feat").get<int>();
    books.seed = blob.manifest.at("seed").get<std::uint64_t>();
    books.fingerprint = blob.manifest.value("fingerprint", std::string{});
    const std::size_t per_level = static_cast<std::size_t>(books.width) * books.dim;
    require(blob.payload.size() == per_level * books.levels, path.string() + ": payload size does not match manifest");
    for (int level = 0; level < books.levels; ++level) {
        Mat<float> c(books.width, books.dim);
        std::copy_n(blob.payload.begin() + static_cast<std::ptrdiff_t>(per_level * level), per_level, c.data());
        for (Eigen::Index i = 0; i < c.size(); ++i) {
            require(std::isfinite(c.data()[i]), path.string() + ": non-finite centroid");
        }
        books.centroids.push_back(std::move(c));
    }
    return books;
}

}  // namespace rastp::sid
