#pragma once

#include <stdexcept>
#include <string>

namespace tgm {

// default tail mass beyond a distribution's truncated support
inline constexpr double kTruncationEps = 1e-10;

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

inline void require_numeric(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

}  // namespace tgm
