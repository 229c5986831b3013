#include <doctest.h>

#include <cmath>
#include <sstream>

#include "spatialecon/geometry.hpp"
#include "spatialecon/weights.hpp"
#include "support.hpp"

using namespace spatialecon;
using testing::error_kind;

namespace {

Ring square(double x, double y, double size = 1.0) {
  return {{x, y}, {x + size, y}, {x + size, y + size}, {x, y + size}, {x, y}};
}

RegionGeometry region(std::string id, Ring outer, std::vector<Ring> holes = {}) {
  return {std::move(id), {Polygon{std::move(outer), std::move(holes)}}};
}

std::vector<RegionGeometry> grid(int rows, int cols, double gap = 0.0) {
  std::vector<RegionGeometry> out;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out.push_back(region(std::to_string(r) + "_" + std::to_string(c),
                           square(c * (1.0 + gap), r * (1.0 + gap))));
  return out;
}

}  // namespace

TEST_SUITE("spatial_weights") {

TEST_CASE("2x2 grid: queen gives 3 neighbours, rook 2") {
  const auto q = queen_contiguity(grid(2, 2));
  const auto r = rook_contiguity(grid(2, 2));
  for (Eigen::Index i = 0; i < 4; ++i) {
    CHECK(q.cardinality(i) == 3);
    CHECK(r.cardinality(i) == 2);
  }
}

TEST_CASE("3x3 grid connectivity oracle") {
  const auto w = queen_contiguity(grid(3, 3));
  CHECK(w == lattice_weights(3, 3, true));
  CHECK(rook_contiguity(grid(3, 3)) == lattice_weights(3, 3, false));
  const auto s = connectivity_summary(w);
  CHECK(s.min_neighbors == 3);
  CHECK(s.max_neighbors == 8);
  CHECK(s.median_neighbors == 5.0);
  CHECK(s.mean_neighbors == doctest::Approx(40.0 / 9.0));
  CHECK(s.pct_nonzero == doctest::Approx(4000.0 / 81.0));
  CHECK(s.histogram.at(3) == 4);
  CHECK(s.histogram.at(5) == 4);
  CHECK(s.histogram.at(8) == 1);
  CHECK(s.n_isolates == 0);
  CHECK(w.is_symmetric());
}

TEST_CASE("vertex contact is queen but not rook") {
  const std::vector<RegionGeometry> diag{region("a", square(0, 0)), region("b", square(1, 1))};
  CHECK(queen_contiguity(diag).cardinality(0) == 1);
  CHECK(rook_contiguity(diag).cardinality(0) == 0);
}

TEST_CASE("snap tolerance absorbs round-off but not real gaps") {
  const auto tiny = connectivity_summary(queen_contiguity(grid(3, 3, 1e-13)));
  CHECK(tiny.max_neighbors == 8);
  const auto gapped = connectivity_summary(queen_contiguity(grid(3, 3, 1e-4)));
  CHECK(gapped.n_isolates == 9);
}

TEST_CASE("isolates are listed and excluded from the minimum") {
  auto regions = grid(2, 2);
  regions.push_back(region("far", square(50, 50)));
  const auto w = queen_contiguity(regions);
  const auto s = connectivity_summary(w);
  CHECK(s.n_isolates == 1);
  CHECK(s.isolates == std::vector<std::string>{"far"});
  CHECK(s.min_neighbors == 3);
  CHECK(s.mean_neighbors == doctest::Approx(12.0 / 5.0));
  CHECK(s.median_neighbors == 3.0);
}

TEST_CASE("polygon inside a hole touches the hole boundary") {
  const Ring outer{{0, 0}, {3, 0}, {3, 3}, {0, 3}, {0, 0}};
  const Ring hole{{1, 1}, {1, 2}, {2, 2}, {2, 1}, {1, 1}};
  const std::vector<RegionGeometry> regions{region("ring", outer, {hole}),
                                            region("core", square(1, 1))};
  const auto w = rook_contiguity(regions);
  CHECK(w.cardinality(0) == 1);
  CHECK(w.cardinality(1) == 1);
}

TEST_CASE("pct_nonzero equals mean neighbours over n") {
  for (int r = 1; r <= 7; ++r)
    for (int c = 2; c <= 7; ++c)
      for (bool queen : {true, false}) {
        const auto s = connectivity_summary(lattice_weights(r, c, queen));
        CHECK(std::abs(s.pct_nonzero - 100.0 * s.mean_neighbors / double(s.n_regions)) < 1e-9);
      }
  // Mean 5.28 neighbours over 89 regions.
  CHECK(std::abs(100.0 * 5.28 / 89.0 - 5.93) < 0.005);
}

TEST_CASE("row standardization") {
  const auto w = row_standardize(lattice_weights(4, 5, true));
  CHECK(w.standardized());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    double sum = 0.0;
    for (const auto& nb : w.neighbors(i)) sum += nb.weight;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(w.size());
  CHECK((w.lag(ones) - ones).cwiseAbs().maxCoeff() < 1e-15);
  const Eigen::VectorXd z = testing::normal_vector(3, w.size());
  CHECK((w.lag(z) - w.to_sparse() * z).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("GAL round trip and header forms") {
  auto w = lattice_weights(3, 4, true);
  w.layer = "grid";
  w.id_variable = "cell";
  std::ostringstream out;
  save_gal(out, w);
  std::istringstream in(out.str());
  const auto back = load_gal(in);
  CHECK(back == w);
  CHECK(back.layer == "grid");
  CHECK(back.id_variable == "cell");

  std::istringstream plain("3\na 1\nb\nb 1\na\nc 0\n\n");
  const auto p = load_gal(plain);
  CHECK(p.size() == 3);
  CHECK(p.is_isolate(2));
  CHECK(p.cardinality(0) == 1);
}

TEST_CASE("GAL errors") {
  auto load = [](const std::string& text) {
    std::istringstream in(text);
    return load_gal(in);
  };
  CHECK(error_kind([&] { load(""); }) == ErrorKind::Format);
  CHECK(error_kind([&] { load("2\na 1\nb\n"); }) == ErrorKind::Format);  // count mismatch
  CHECK(error_kind([&] { load("2\na 2\nb\nb 1\na\n"); }) == ErrorKind::Format);
  CHECK(error_kind([&] { load("2\na 1\nz\nb 1\na\n"); }) == ErrorKind::Referential);
  CHECK(error_kind([&] { load("1 2\na 0\n\n"); }) == ErrorKind::Format);
  CHECK(error_kind([&] { load("1\na 1\na\n"); }) == ErrorKind::Format);  // self link
}

TEST_CASE("geometry validation") {
  CHECK(error_kind([] { validate_region(region("x", {{0, 0}, {1, 0}, {0, 0}})); }) ==
        ErrorKind::Geometry);
  CHECK(error_kind([] { validate_region(region("x", {{0, 0}, {1, 0}, {1, 1}, {0, 1}})); }) ==
        ErrorKind::Geometry);
  const Ring bowtie{{0, 0}, {1, 1}, {1, 0}, {0, 1}, {0, 0}};
  CHECK(error_kind([&] { validate_region(region("x", bowtie)); }) == ErrorKind::Geometry);
  CHECK(error_kind([] { validate_region(region("x", {{0, 0}, {1, 0}, {2, 0}, {0, 0}})); }) ==
        ErrorKind::Geometry);
  CHECK_NOTHROW(validate_region(region("x", square(0, 0))));
}

TEST_CASE("segment distance") {
  using V = Eigen::Vector2d;
  CHECK(segment_distance(V(0, 0), V(1, 0), V(0.5, -1), V(0.5, 1)) == 0.0);
  CHECK(segment_distance(V(0, 0), V(1, 0), V(0, 2), V(1, 2)) == doctest::Approx(2.0));
  CHECK(segment_distance(V(0, 0), V(1, 0), V(2, 1), V(3, 1)) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("GeoJSON reader") {
  const auto fc = nlohmann::json::parse(R"({
    "type": "FeatureCollection",
    "features": [
      {"type": "Feature", "properties": {"code": "A"},
       "geometry": {"type": "Polygon", "coordinates": [[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
      {"type": "Feature", "id": "B", "properties": {},
       "geometry": {"type": "MultiPolygon", "coordinates": [
         [[[1,0],[2,0],[2,1],[1,1],[1,0]]], [[[5,5],[6,5],[6,6],[5,6],[5,5]]]]}}
    ]})");
  const auto regions = read_geojson_regions(fc, "code");
  REQUIRE(regions.size() == 2);
  CHECK(regions[1].id == "B");
  CHECK(regions[1].shape.size() == 2);
  CHECK(queen_contiguity(regions).cardinality(0) == 1);

  auto bad = fc;
  bad["features"][0]["geometry"]["type"] = "LineString";
  CHECK(error_kind([&] { read_geojson_regions(bad, "code"); }) == ErrorKind::Geometry);
}

TEST_CASE("construction checks and permutation") {
  CHECK(error_kind([] { SpatialWeights({"a", "b"}, {{{0, 1.0}}, {}}); }) == ErrorKind::Format);
  CHECK(error_kind([] { SpatialWeights({"a", "b"}, {{{5, 1.0}}, {}}); }) ==
        ErrorKind::Referential);
  CHECK(error_kind([] { SpatialWeights({"a", "b"}, {{{1, -1.0}}, {}}); }) == ErrorKind::Value);
  const auto w = lattice_weights(2, 3, true);
  const auto p = w.permuted({5, 4, 3, 2, 1, 0});
  CHECK(p.ids().front() == "1_2");
  CHECK(p.is_symmetric());
  CHECK(connectivity_summary(p).histogram == connectivity_summary(w).histogram);
}

}  // TEST_SUITE
