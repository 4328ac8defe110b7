#pragma once

// Built-in scenario sets: fig2 (pair), fig3 (ring size), fig4 (four emitters).

#include <string_view>
#include <vector>

#include "cli/config.hpp"

namespace lspdyn::cli {

/// Names accepted by preset().
std::vector<std::string_view> preset_names();

/// Jobs of a preset; throws ConfigError for an unknown name.
std::vector<RunConfig> preset(std::string_view name);

}  // namespace lspdyn::cli
