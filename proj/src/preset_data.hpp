#pragma once

#include <string>
#include <utility>
#include <vector>

namespace stratlabor {

/// (name, text) of every file in configs/, generated at build time.
const std::vector<std::pair<std::string, std::string>>& embedded_presets();

}  // namespace stratlabor
