#include "cli/output.hpp"

#include <fstream>

#include <fmt/format.h>

#include "lspdyn/error.hpp"

#ifndef LSPDYN_VERSION
#define LSPDYN_VERSION "unknown"
#endif

namespace lspdyn::cli {

std::string_view version() { return LSPDYN_VERSION; }

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cli_runner", Errc::io, fmt::format("cannot open '{}' for writing", tmp.string()));
    out << content;
    out.flush();
    if (!out) throw Error("cli_runner", Errc::io, fmt::format("write to '{}' failed", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cli_runner", Errc::io, fmt::format("cannot rename '{}' into place", path.string()));
  }
}

std::string csv_preamble(const nlohmann::json& config) {
  return fmt::format("# lspdyn {}\n# config: {}\n", version(), config.dump());
}

nlohmann::json with_provenance(const nlohmann::json& config, nlohmann::json body) {
  nlohmann::json doc = {{"version", version()}, {"config", config}};
  doc.update(body);
  return doc;
}

std::string dump(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

}  // namespace lspdyn::cli
