#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "spatialecon/geometry.hpp"

namespace spatialecon {

struct Neighbor {
  Eigen::Index index = 0;
  double weight = 1.0;

  bool operator==(const Neighbor&) const = default;
};

/// Neighbour lists over an ordered set of region ids. Neighbour order is
/// preserved as given so GAL files round-trip byte for byte.
class SpatialWeights {
 public:
  SpatialWeights() = default;
  /// Throws on self-links, out-of-range or repeated neighbours, and negative
  /// weights.
  SpatialWeights(std::vector<std::string> ids, std::vector<std::vector<Neighbor>> rows,
                 bool standardized = false);

  Eigen::Index size() const noexcept { return Eigen::Index(ids_.size()); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<Neighbor>& neighbors(Eigen::Index i) const { return rows_[std::size_t(i)]; }
  Eigen::Index cardinality(Eigen::Index i) const { return Eigen::Index(rows_[std::size_t(i)].size()); }
  bool standardized() const noexcept { return standardized_; }

  bool is_isolate(Eigen::Index i) const { return rows_[std::size_t(i)].empty(); }
  std::vector<Eigen::Index> isolates() const;
  Eigen::Index link_count() const noexcept;

  /// j in N(i) <=> i in N(j).
  bool is_symmetric() const;

  Eigen::SparseMatrix<double, Eigen::RowMajor> to_sparse() const;

  /// (W z)_i, the weighted sum over neighbours of i.
  template <typename Derived>
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> lag(
      const Eigen::MatrixBase<Derived>& z) const {
    Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out(size());
    for (Eigen::Index i = 0; i < size(); ++i) {
      typename Derived::Scalar acc(0);
      for (const auto& nb : rows_[std::size_t(i)]) acc += nb.weight * z(nb.index);
      out(i) = acc;
    }
    return out;
  }

  /// Same links and weights with ids and rows reordered by `order`
  /// (new position k holds old region order[k]).
  SpatialWeights permuted(const std::vector<Eigen::Index>& order) const;

  // GAL header metadata, ignored by operator==.
  std::string layer = "unknown";
  std::string id_variable = "id";

  bool operator==(const SpatialWeights& other) const {
    return ids_ == other.ids_ && rows_ == other.rows_ && standardized_ == other.standardized_;
  }

 private:
  std::vector<std::string> ids_;
  std::vector<std::vector<Neighbor>> rows_;
  bool standardized_ = false;
};

/// Relative snapping distance for shared-point detection, scaled by the
/// dataset's bounding-box diagonal.
inline constexpr double kSnapFraction = 1e-9;

/// Binary weights: regions are neighbours iff their boundaries share at least
/// one point (vertex or edge) within the snapping tolerance.
SpatialWeights queen_contiguity(const std::vector<RegionGeometry>& regions);

/// Binary weights: neighbours iff boundaries share a segment of positive length.
SpatialWeights rook_contiguity(const std::vector<RegionGeometry>& regions);

/// Rows with neighbours scaled to sum to one; isolates stay empty.
SpatialWeights row_standardize(const SpatialWeights& w);

/// Queen or rook weights for an nrows x ncols lattice, row-major ids "r_c".
SpatialWeights lattice_weights(int nrows, int ncols, bool queen = true);

struct ConnectivitySummary {
  Eigen::Index n_regions = 0;
  Eigen::Index n_isolates = 0;
  Eigen::Index min_neighbors = 0;  // over regions with at least one neighbour
  Eigen::Index max_neighbors = 0;
  double mean_neighbors = 0.0;     // over all regions
  double median_neighbors = 0.0;   // over all regions
  double pct_nonzero = 0.0;        // links / n^2 * 100
  std::map<Eigen::Index, Eigen::Index> histogram;  // cardinality -> region count
  std::vector<std::string> isolates;
};

ConnectivitySummary connectivity_summary(const SpatialWeights& w);

/// Reads "0 n layer idvar" (or a bare "n") followed by per-region blocks
/// "id count" / "neighbour ids". Weights are binary.
SpatialWeights load_gal(std::istream& in);
void save_gal(std::ostream& out, const SpatialWeights& w);

nlohmann::json to_json(const ConnectivitySummary& s);

}  // namespace spatialecon
