#pragma once

#include <string>

#include "json.hpp"

namespace aspectsum {

// Parses the TOML subset used by config files into a JSON object:
// [section] and [a.b] tables, key = value pairs with string/integer/float/
// boolean scalars, single-line arrays of scalars, and # comments. Enough for
// declarative experiment configs; anything fancier belongs in a JSON config.
nlohmann::json parse_minitoml(const std::string& content,
                              const std::string& origin = "<string>");

}  // namespace aspectsum
