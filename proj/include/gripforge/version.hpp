#pragma once

#include <utility>
#include <vector>

namespace gripforge {

inline constexpr const char* kVersion = "0.1.0";

/// Per-module schema versions recorded in run manifests; bump a module's
/// entry when its on-disk format or numerical behavior changes.
inline std::vector<std::pair<const char*, int>> module_versions() {
  return {
      {"geometry", 1}, {"synergy", 1}, {"spline", 1},
      {"cmaes", 1},    {"sim", 1},     {"objective", 1},
      {"refiner", 1},  {"metrics", 1}, {"scenario", 1},
  };
}

}  // namespace gripforge
