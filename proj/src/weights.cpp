#include "spatialecon/weights.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "spatialecon/descriptive.hpp"
#include "spatialecon/error.hpp"

namespace spatialecon {
namespace {

struct Segment {
  Eigen::Vector2d a, b;
  BoundingBox box;
};

std::vector<Segment> boundary_segments(const MultiPolygon& shape) {
  std::vector<Segment> out;
  auto add_ring = [&](const Ring& ring) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      Segment s{ring[i], ring[i + 1], {}};
      s.box.extend(s.a);
      s.box.extend(s.b);
      out.push_back(s);
    }
  };
  for (const auto& poly : shape) {
    add_ring(poly.outer);
    for (const auto& h : poly.holes) add_ring(h);
  }
  return out;
}

std::vector<const Segment*> near(const std::vector<Segment>& segs, const BoundingBox& box,
                                 double tol) {
  std::vector<const Segment*> out;
  for (const auto& s : segs)
    if (s.box.overlaps(box, tol)) out.push_back(&s);
  return out;
}

double collinear_overlap(const Segment& s, const Segment& t, double tol) {
  const Eigen::Vector2d d = s.b - s.a;
  const double len = d.norm();
  if (len == 0.0) return 0.0;
  const Eigen::Vector2d u = d / len;
  auto off_line = [&](const Eigen::Vector2d& p) {
    const Eigen::Vector2d r = p - s.a;
    return std::abs(u.x() * r.y() - u.y() * r.x());
  };
  if (off_line(t.a) > tol || off_line(t.b) > tol) return 0.0;
  const double t0 = (t.a - s.a).dot(u);
  const double t1 = (t.b - s.a).dot(u);
  const double lo = std::max(0.0, std::min(t0, t1));
  const double hi = std::min(len, std::max(t0, t1));
  return hi - lo;
}

enum class Contiguity { Queen, Rook };

SpatialWeights contiguity(const std::vector<RegionGeometry>& regions, Contiguity kind) {
  const std::size_t n = regions.size();
  std::vector<std::string> ids;
  std::set<std::string> seen;
  BoundingBox all;
  std::vector<BoundingBox> boxes;
  std::vector<std::vector<Segment>> segments;
  for (const auto& r : regions) {
    validate_region(r);
    if (!seen.insert(r.id).second)
      throw Error(ErrorKind::Geometry, "spatial_weights", "queen_contiguity",
                  "duplicate region id " + r.id);
    ids.push_back(r.id);
    boxes.push_back(bounding_box(r.shape));
    all.extend(boxes.back().lo);
    all.extend(boxes.back().hi);
    segments.push_back(boundary_segments(r.shape));
  }
  const double tol = kSnapFraction * all.diagonal();

  std::vector<std::vector<Neighbor>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!boxes[i].overlaps(boxes[j], tol)) continue;
      const auto si = near(segments[i], boxes[j], tol);
      const auto sj = near(segments[j], boxes[i], tol);
      bool linked = false;
      for (const Segment* a : si) {
        for (const Segment* b : sj) {
          if (!a->box.overlaps(b->box, tol)) continue;
          if (kind == Contiguity::Queen) {
            linked = segment_distance(a->a, a->b, b->a, b->b) <= tol;
          } else {
            linked = collinear_overlap(*a, *b, tol) > tol;
          }
          if (linked) break;
        }
        if (linked) break;
      }
      if (linked) {
        rows[i].push_back({Eigen::Index(j), 1.0});
        rows[j].push_back({Eigen::Index(i), 1.0});
      }
    }
  }
  return SpatialWeights(std::move(ids), std::move(rows), false);
}

Error format_error(const std::string& msg) {
  return Error(ErrorKind::Format, "spatial_weights", "load_gal", msg);
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string t; ss >> t;) out.push_back(t);
  return out;
}

Eigen::Index parse_count(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  long long v = -1;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || v < 0) throw format_error("bad " + what + " '" + s + "'");
  return Eigen::Index(v);
}

}  // namespace

SpatialWeights::SpatialWeights(std::vector<std::string> ids,
                               std::vector<std::vector<Neighbor>> rows, bool standardized)
    : ids_(std::move(ids)), rows_(std::move(rows)), standardized_(standardized) {
  if (ids_.size() != rows_.size())
    throw Error(ErrorKind::Alignment, "spatial_weights", "construct",
                "id count differs from row count");
  const auto n = Eigen::Index(ids_.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    std::set<Eigen::Index> used;
    for (const auto& nb : rows_[std::size_t(i)]) {
      if (nb.index < 0 || nb.index >= n)
        throw Error(ErrorKind::Referential, "spatial_weights", "construct",
                    "region " + ids_[std::size_t(i)] + " links to an out-of-range index");
      if (nb.index == i)
        throw Error(ErrorKind::Format, "spatial_weights", "construct",
                    "region " + ids_[std::size_t(i)] + " links to itself");
      if (!used.insert(nb.index).second)
        throw Error(ErrorKind::Format, "spatial_weights", "construct",
                    "region " + ids_[std::size_t(i)] + " repeats neighbour " +
                        ids_[std::size_t(nb.index)]);
      if (!(nb.weight >= 0.0) || !std::isfinite(nb.weight))
        throw Error(ErrorKind::Value, "spatial_weights", "construct",
                    "region " + ids_[std::size_t(i)] + " has an invalid weight");
    }
  }
}

std::vector<Eigen::Index> SpatialWeights::isolates() const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < size(); ++i)
    if (is_isolate(i)) out.push_back(i);
  return out;
}

Eigen::Index SpatialWeights::link_count() const noexcept {
  Eigen::Index links = 0;
  for (const auto& r : rows_) links += Eigen::Index(r.size());
  return links;
}

bool SpatialWeights::is_symmetric() const {
  std::set<std::pair<Eigen::Index, Eigen::Index>> links;
  for (Eigen::Index i = 0; i < size(); ++i)
    for (const auto& nb : rows_[std::size_t(i)]) links.emplace(i, nb.index);
  for (const auto& [i, j] : links)
    if (!links.count({j, i})) return false;
  return true;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> SpatialWeights::to_sparse() const {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(std::size_t(link_count()));
  for (Eigen::Index i = 0; i < size(); ++i)
    for (const auto& nb : rows_[std::size_t(i)]) t.emplace_back(i, nb.index, nb.weight);
  Eigen::SparseMatrix<double, Eigen::RowMajor> m(size(), size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SpatialWeights SpatialWeights::permuted(const std::vector<Eigen::Index>& order) const {
  if (Eigen::Index(order.size()) != size())
    throw Error(ErrorKind::Alignment, "spatial_weights", "permuted", "order has wrong length");
  std::vector<Eigen::Index> position(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) position[std::size_t(order[k])] = Eigen::Index(k);
  std::vector<std::string> ids;
  std::vector<std::vector<Neighbor>> rows;
  for (auto old : order) {
    ids.push_back(ids_[std::size_t(old)]);
    std::vector<Neighbor> row;
    for (const auto& nb : rows_[std::size_t(old)])
      row.push_back({position[std::size_t(nb.index)], nb.weight});
    rows.push_back(std::move(row));
  }
  SpatialWeights out(std::move(ids), std::move(rows), standardized_);
  out.layer = layer;
  out.id_variable = id_variable;
  return out;
}

SpatialWeights queen_contiguity(const std::vector<RegionGeometry>& regions) {
  return contiguity(regions, Contiguity::Queen);
}

SpatialWeights rook_contiguity(const std::vector<RegionGeometry>& regions) {
  return contiguity(regions, Contiguity::Rook);
}

SpatialWeights row_standardize(const SpatialWeights& w) {
  std::vector<std::vector<Neighbor>> rows;
  rows.reserve(std::size_t(w.size()));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    auto row = w.neighbors(i);
    double total = 0.0;
    for (const auto& nb : row) total += nb.weight;
    if (total > 0.0)
      for (auto& nb : row) nb.weight /= total;
    rows.push_back(std::move(row));
  }
  SpatialWeights out(w.ids(), std::move(rows), true);
  out.layer = w.layer;
  out.id_variable = w.id_variable;
  return out;
}

SpatialWeights lattice_weights(int nrows, int ncols, bool queen) {
  std::vector<std::string> ids;
  std::vector<std::vector<Neighbor>> rows;
  for (int r = 0; r < nrows; ++r) {
    for (int c = 0; c < ncols; ++c) {
      ids.push_back(std::to_string(r) + "_" + std::to_string(c));
      std::vector<Neighbor> row;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (!queen && dr != 0 && dc != 0) continue;
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= nrows || cc < 0 || cc >= ncols) continue;
          row.push_back({Eigen::Index(rr * ncols + cc), 1.0});
        }
      }
      rows.push_back(std::move(row));
    }
  }
  return SpatialWeights(std::move(ids), std::move(rows), false);
}

ConnectivitySummary connectivity_summary(const SpatialWeights& w) {
  ConnectivitySummary s;
  s.n_regions = w.size();
  if (s.n_regions == 0) return s;
  Eigen::VectorXd card(w.size());
  Eigen::Index min_linked = -1;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const Eigen::Index k = w.cardinality(i);
    card(i) = double(k);
    ++s.histogram[k];
    if (k == 0) {
      ++s.n_isolates;
      s.isolates.push_back(w.ids()[std::size_t(i)]);
    } else if (min_linked < 0 || k < min_linked) {
      min_linked = k;
    }
    s.max_neighbors = std::max(s.max_neighbors, k);
  }
  s.min_neighbors = std::max<Eigen::Index>(min_linked, 0);
  s.mean_neighbors = card.mean();
  s.median_neighbors = median(card);
  const double n = double(s.n_regions);
  s.pct_nonzero = double(w.link_count()) / (n * n) * 100.0;
  return s;
}

SpatialWeights load_gal(std::istream& in) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    header = tokens(line);
    if (!header.empty()) break;
  }
  if (header.empty()) throw format_error("missing GAL header");

  Eigen::Index n = 0;
  std::string layer = "unknown", id_variable = "id";
  if (header.size() == 1) {
    n = parse_count(header[0], "region count");
  } else if (header.size() == 4) {
    n = parse_count(header[1], "region count");
    layer = header[2];
    id_variable = header[3];
  } else {
    throw format_error("GAL header must be 'n' or '0 n layer idvar'");
  }

  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> neighbor_ids;
  std::unordered_map<std::string, Eigen::Index> index;
  while (std::getline(in, line)) {
    const auto head = tokens(line);
    if (head.empty()) continue;
    if (head.size() != 2) throw format_error("block header '" + line + "' is not 'id count'");
    const Eigen::Index count = parse_count(head[1], "neighbour count for " + head[0]);
    std::string list;
    if (!std::getline(in, list))
      throw format_error("region " + head[0] + " is missing its neighbour line");
    auto nbrs = tokens(list);
    if (Eigen::Index(nbrs.size()) != count)
      throw format_error("region " + head[0] + " declares " + std::to_string(count) +
                         " neighbours but lists " + std::to_string(nbrs.size()));
    if (!index.emplace(head[0], Eigen::Index(ids.size())).second)
      throw format_error("region " + head[0] + " appears twice");
    ids.push_back(head[0]);
    neighbor_ids.push_back(std::move(nbrs));
  }
  if (Eigen::Index(ids.size()) != n)
    throw format_error("header declares " + std::to_string(n) + " regions but file has " +
                       std::to_string(ids.size()));

  std::vector<std::vector<Neighbor>> rows(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (const auto& nb : neighbor_ids[i]) {
      auto it = index.find(nb);
      if (it == index.end())
        throw Error(ErrorKind::Referential, "spatial_weights", "load_gal",
                    "region " + ids[i] + " names unknown neighbour " + nb);
      rows[i].push_back({it->second, 1.0});
    }
  }
  SpatialWeights w(std::move(ids), std::move(rows), false);
  w.layer = layer;
  w.id_variable = id_variable;
  return w;
}

void save_gal(std::ostream& out, const SpatialWeights& w) {
  out << "0 " << w.size() << ' ' << w.layer << ' ' << w.id_variable << '\n';
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    out << w.ids()[std::size_t(i)] << ' ' << w.cardinality(i) << '\n';
    bool first = true;
    for (const auto& nb : w.neighbors(i)) {
      if (!first) out << ' ';
      out << w.ids()[std::size_t(nb.index)];
      first = false;
    }
    out << '\n';
  }
}

nlohmann::json to_json(const ConnectivitySummary& s) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& [k, count] : s.histogram)
    hist.push_back({{"neighbors", k},
                    {"regions", count},
                    {"percent", 100.0 * double(count) / double(s.n_regions)}});
  return {{"n_regions", s.n_regions},
          {"n_isolates", s.n_isolates},
          {"isolates", s.isolates},
          {"min_neighbors", s.min_neighbors},
          {"max_neighbors", s.max_neighbors},
          {"mean_neighbors", s.mean_neighbors},
          {"median_neighbors", s.median_neighbors},
          {"pct_nonzero", s.pct_nonzero},
          {"histogram", hist}};
}

}  // namespace spatialecon
