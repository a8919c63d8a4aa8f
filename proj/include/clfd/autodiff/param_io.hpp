#pragma once

#include "clfd/autodiff/mlp.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>

namespace clfd::ad {

/// Writes `values` as little-endian IEEE-754 doubles.
void write_blob(const std::filesystem::path& path, const Eigen::VectorXd& values);
/// Reads a blob written by write_blob; `expected_length` is checked when set.
Eigen::VectorXd read_blob(const std::filesystem::path& path,
                          std::optional<std::size_t> expected_length = std::nullopt);

nlohmann::json architecture_to_json(const Architecture& arch);
Architecture architecture_from_json(const nlohmann::json& j);

/// Stores `<stem>.json` (architecture, length, seed) and `<stem>.bin`.
void save_params(const ParamVector& params, const std::filesystem::path& stem,
                 std::uint64_t seed);
ParamVector load_params(const std::filesystem::path& stem);

}  // namespace clfd::ad
