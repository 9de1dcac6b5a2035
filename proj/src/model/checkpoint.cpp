// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#include "rastp/model/checkpoint.hpp"

#include <fmt/format.h>

#include "rastp/core/blob.hpp"

namespace rastp::model {

namespace {
constexpr std::uint8_t kCheckpointVersion = 1;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    Blob blob;
    blob.version = kCheckpointVersion;
    nlohmann::json tensors = nlohmann::json::array();
    checkpoint.params.for_each([&](const std::string& name, const Mat<float>& m) {
        tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
        blob.payload.insert(blob.payload.end(), m.data(), m.data() + m.size());
    });
    blob.manifest = {{"config", checkpoint.config},
                     {"step", checkpoint.step},
                     {"seed", checkpoint.seed},
                     {"tensors", tensors}};
    write_blob(path, blob);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const Blob blob = read_blob(path, kCheckpointVersion);
    Checkpoint ck;
    ck.config = blob.manifest.at("config").get<ModelConfig>();
    ck.step = blob.manifest.at("step").get<long long>();
    ck.seed = blob.manifest.at("seed").get<std::uint64_t>();
    ck.params = Params<float>::zeros(ck.config);
    const auto& tensors = blob.manifest.at("tensors");
    std::size_t offset = 0;
    std::size_t i = 0;
    ck.params.for_each([&](const std::string& name, Mat<float>& m) {
        require(i < tensors.size() && tensors[i].at("name").get<std::string>() == name &&
                    tensors[i].at("rows").get<Eigen::Index>() == m.rows() &&
                    tensors[i].at("cols").get<Eigen::Index>() == m.cols(),
                fmt::format("{}: tensor '{}' does not match the manifest config", path.string(), name));
        require(offset + static_cast<std::size_t>(m.size()) <= blob.payload.size(),
                path.string() + ": payload shorter than manifest");
        std::copy_n(blob.payload.begin() + static_cast<std::ptrdiff_t>(offset), m.size(), m.data());
        offset += static_cast<std::size_t>(m.size());
        ++i;
    });
    require(offset == blob.payload.size(), path.string() + ": payload longer than manifest");
    return ck;
}

}  // namespace rastp::model
