#pragma once

#include <stdexcept>

namespace arrayins {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace arrayins
