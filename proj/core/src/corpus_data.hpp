#pragma once

#include <string>
#include <utility>
#include <vector>

namespace fbflow::detail {

// (name, yaml text) pairs for every shipped corpus config, sorted by file name.
const std::vector<std::pair<std::string, std::string>>& embedded_corpus();

}  // namespace fbflow::detail
