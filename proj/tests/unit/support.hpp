#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include <optional>

#include "spatialecon/error.hpp"
#include "spatialecon/panel.hpp"
#include "spatialecon/rng.hpp"

namespace testing {

// One indicator, one year, regions "r0".."r{n-1}" split into two microregions.
inline spatialecon::PanelDataset cross_section_panel(const std::vector<double>& values,
                                                     const std::string& indicator = "X",
                                                     int year = 2009) {
  std::vector<spatialecon::RegionId> regions;
  for (std::size_t i = 0; i < values.size(); ++i)
    regions.push_back({"r" + std::to_string(i), "Region " + std::to_string(i),
                       i < values.size() / 2 ? "M1" : "M2", i == 0});
  spatialecon::PanelDataset p(regions, {indicator}, {year});
  for (std::size_t i = 0; i < values.size(); ++i) p.set(Eigen::Index(i), 0, 0, values[i]);
  return p;
}

inline Eigen::VectorXd normal_vector(std::uint64_t seed, Eigen::Index n) {
  spatialecon::StreamRng rng(seed, 0, 0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

}  // namespace testing

namespace testing {

// Kind of the spatialecon::Error thrown by f, or nullopt when none is thrown.
template <typename F>
std::optional<spatialecon::ErrorKind> error_kind(F&& f) {
  try {
    f();
  } catch (const spatialecon::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace testing
