#include "spatialecon/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "spatialecon/error.hpp"

namespace spatialecon {
namespace {

Error geometry_error(const std::string& op, const std::string& msg) {
  return Error(ErrorKind::Geometry, "spatial_weights", op, msg);
}

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

int sign(double v) { return (v > 0) - (v < 0); }

bool on_segment(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect(const Eigen::Vector2d& a0, const Eigen::Vector2d& a1,
                        const Eigen::Vector2d& b0, const Eigen::Vector2d& b1) {
  const int d1 = sign(cross(b0, b1, a0));
  const int d2 = sign(cross(b0, b1, a1));
  const int d3 = sign(cross(a0, a1, b0));
  const int d4 = sign(cross(a0, a1, b1));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(a0, b0, b1)) return true;
  if (d2 == 0 && on_segment(a1, b0, b1)) return true;
  if (d3 == 0 && on_segment(b0, a0, a1)) return true;
  if (d4 == 0 && on_segment(b1, a0, a1)) return true;
  return false;
}

double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

Ring read_ring(const nlohmann::json& coords, const std::string& region) {
  if (!coords.is_array())
    throw geometry_error("read_geojson", "region " + region + ": ring is not an array");
  Ring ring;
  ring.reserve(coords.size());
  for (const auto& pt : coords) {
    if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number())
      throw geometry_error("read_geojson", "region " + region + ": malformed position");
    ring.emplace_back(pt[0].get<double>(), pt[1].get<double>());
  }
  return ring;
}

Polygon read_polygon(const nlohmann::json& rings, const std::string& region) {
  if (!rings.is_array() || rings.empty())
    throw geometry_error("read_geojson", "region " + region + ": empty polygon");
  Polygon poly;
  poly.outer = read_ring(rings[0], region);
  for (std::size_t i = 1; i < rings.size(); ++i) poly.holes.push_back(read_ring(rings[i], region));
  return poly;
}

void validate_ring(const Ring& ring, const std::string& region) {
  const auto where = "region " + region + ": ";
  if (ring.size() < 4)
    throw geometry_error("queen_contiguity", where + "ring has fewer than 4 positions");
  for (const auto& p : ring)
    if (!p.allFinite()) throw geometry_error("queen_contiguity", where + "non-finite coordinate");
  if (ring.front() != ring.back())
    throw geometry_error("queen_contiguity", where + "ring is not closed");

  double area2 = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i)
    area2 += ring[i].x() * ring[i + 1].y() - ring[i + 1].x() * ring[i].y();
  if (area2 == 0.0) throw geometry_error("queen_contiguity", where + "ring has zero area");

  const std::size_t edges = ring.size() - 1;
  for (std::size_t i = 0; i < edges; ++i) {
    if (ring[i] == ring[i + 1])
      throw geometry_error("queen_contiguity", where + "repeated consecutive vertex");
    for (std::size_t j = i + 2; j < edges; ++j) {
      if (i == 0 && j == edges - 1) continue;  // closing edge touches the first
      if (segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1]))
        throw geometry_error("queen_contiguity", where + "ring self-intersects");
    }
  }
}

}  // namespace

std::vector<RegionGeometry> read_geojson_regions(const nlohmann::json& collection,
                                                 const std::string& id_property) {
  if (!collection.is_object() || collection.value("type", "") != "FeatureCollection" ||
      !collection.contains("features"))
    throw Error(ErrorKind::Format, "spatial_weights", "read_geojson",
                "expected a GeoJSON FeatureCollection");
  std::vector<RegionGeometry> out;
  for (const auto& f : collection["features"]) {
    std::string id;
    const auto props = f.value("properties", nlohmann::json::object());
    const nlohmann::json* raw = nullptr;
    if (props.is_object() && props.contains(id_property)) raw = &props[id_property];
    else if (f.contains("id")) raw = &f["id"];
    if (!raw)
      throw Error(ErrorKind::Format, "spatial_weights", "read_geojson",
                  "feature lacks id property '" + id_property + "'");
    id = raw->is_string() ? raw->get<std::string>() : raw->dump();

    RegionGeometry region{id, {}};
    const auto& geom = f.value("geometry", nlohmann::json());
    if (geom.is_null() || !geom.contains("coordinates"))
      throw geometry_error("read_geojson", "region " + id + " has empty geometry");
    const auto type = geom.value("type", "");
    if (type == "Polygon") {
      region.shape.push_back(read_polygon(geom["coordinates"], id));
    } else if (type == "MultiPolygon") {
      for (const auto& p : geom["coordinates"]) region.shape.push_back(read_polygon(p, id));
    } else {
      throw geometry_error("read_geojson",
                           "region " + id + ": unsupported geometry type '" + type + "'");
    }
    out.push_back(std::move(region));
  }
  return out;
}

void validate_region(const RegionGeometry& region) {
  if (region.shape.empty())
    throw geometry_error("queen_contiguity", "region " + region.id + " has empty geometry");
  for (const auto& poly : region.shape) {
    validate_ring(poly.outer, region.id);
    for (const auto& h : poly.holes) validate_ring(h, region.id);
  }
}

BoundingBox bounding_box(const MultiPolygon& shape) {
  BoundingBox box;
  for (const auto& poly : shape)
    for (const auto& p : poly.outer) box.extend(p);
  return box;
}

double segment_distance(const Eigen::Vector2d& a0, const Eigen::Vector2d& a1,
                        const Eigen::Vector2d& b0, const Eigen::Vector2d& b1) {
  if (segments_intersect(a0, a1, b0, b1)) return 0.0;
  return std::min({point_segment_distance(a0, b0, b1), point_segment_distance(a1, b0, b1),
                   point_segment_distance(b0, a0, a1), point_segment_distance(b1, a0, a1)});
}

}  // namespace spatialecon
