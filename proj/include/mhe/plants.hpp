#pragma once

#include <string>
#include <vector>

#include "mhe/system.hpp"

namespace mhe {

/// Built-in plants:
///   s1  x+ = 0.5 x + w,                   y = x + v
///   s2  x+ = 2 x + u + w,                 y = x + v, closed loop u = -1.5 y
///   s3  x+ = 0.5 sin(x) + w,              y = x + v
///   s4  x1+ = 0.7 x1 + 0.1 tanh(x2) + u + w1
///       x2+ = 0.2 x1 + 0.6 x2 - 0.1 tanh(x2) + w2,   y = x1 + v
SystemModel make_plant(const std::string& id);
std::vector<std::string> plant_ids();

}  // namespace mhe
