#pragma once

#include <string>

namespace mhe::util {

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

}  // namespace mhe::util
