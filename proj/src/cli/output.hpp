#pragma once

// File emission: every artifact carries the resolved config and the code
// version, and lands on disk through a temporary file and a rename.

#include <filesystem>
#include <string>

#include <json.hpp>

namespace lspdyn::cli {

std::string_view version();

/// Writes `content` to `<path>.tmp` and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Comment lines opening every CSV: version and the compact config.
std::string csv_preamble(const nlohmann::json& config);

/// {"version": ..., "config": ...} merged with `body`.
nlohmann::json with_provenance(const nlohmann::json& config, nlohmann::json body);

/// Pretty JSON with a trailing newline.
std::string dump(const nlohmann::json& doc);

}  // namespace lspdyn::cli
