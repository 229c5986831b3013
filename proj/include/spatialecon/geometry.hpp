#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <limits>
#include <string>
#include <vector>

namespace spatialecon {

using Ring = std::vector<Eigen::Vector2d>;  // closed: front() == back()

struct Polygon {
  Ring outer;
  std::vector<Ring> holes;
};

using MultiPolygon = std::vector<Polygon>;

struct RegionGeometry {
  std::string id;
  MultiPolygon shape;
};

/// Reads Polygon/MultiPolygon features; the region id comes from
/// properties[id_property], falling back to the feature's "id" member.
std::vector<RegionGeometry> read_geojson_regions(const nlohmann::json& collection,
                                                 const std::string& id_property);

/// Throws a geometry error naming `region` when a ring is unclosed, has fewer
/// than three distinct vertices, zero area, or crosses itself.
void validate_region(const RegionGeometry& region);

struct BoundingBox {
  Eigen::Vector2d lo{std::numeric_limits<double>::infinity(),
                     std::numeric_limits<double>::infinity()};
  Eigen::Vector2d hi{-std::numeric_limits<double>::infinity(),
                     -std::numeric_limits<double>::infinity()};

  void extend(const Eigen::Vector2d& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  bool overlaps(const BoundingBox& o, double tol) const {
    return (lo.array() <= o.hi.array() + tol).all() && (o.lo.array() <= hi.array() + tol).all();
  }
  double diagonal() const { return (hi - lo).norm(); }
};

BoundingBox bounding_box(const MultiPolygon& shape);

/// Minimum distance between segments [a0, a1] and [b0, b1].
double segment_distance(const Eigen::Vector2d& a0, const Eigen::Vector2d& a1,
                        const Eigen::Vector2d& b0, const Eigen::Vector2d& b1);

}  // namespace spatialecon
