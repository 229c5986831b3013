#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "spatialecon/weights.hpp"

namespace spatialecon {

struct PermutationConfig {
  int n_permutations = 9999;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = hardware concurrency; never affects results
};

struct MoranGlobal {
  double statistic = 0.0;
  double expected = 0.0;  // -1 / (n_used - 1)
  Eigen::Index n_used = 0;
  double pseudo_p = std::numeric_limits<double>::quiet_NaN();  // NaN: no permutations
  int n_permutations = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> isolates;
};

enum class Quadrant { HH, LL, LH, HL, Missing };

std::string_view to_string(Quadrant q) noexcept;

/// Quadrant of a (value, lag) pair by sign; zero counts as low.
inline Quadrant quadrant_of(double z, double lag) noexcept {
  const bool high = z > 0.0;
  const bool high_lag = lag > 0.0;
  if (high) return high_lag ? Quadrant::HH : Quadrant::HL;
  return high_lag ? Quadrant::LH : Quadrant::LL;
}

inline const std::vector<double> kDefaultThresholds{0.05, 0.01, 0.001};

struct LisaResult {
  std::vector<std::string> ids;
  Eigen::VectorXd local;     // NaN for isolates
  Eigen::VectorXd z;         // deviations (standard scores for bivariate)
  Eigen::VectorXd lag;       // W z (W z_y for bivariate)
  std::vector<Quadrant> quadrant;
  Eigen::VectorXd pseudo_p;  // NaN for isolates
  std::vector<std::string> significance;  // "ns", "p<.05", ..., "missing"
  int n_permutations = 0;
  std::uint64_t seed = 0;
  bool bivariate = false;
};

/// Moran's I with row-standardized weights (binary input is standardized
/// first). Isolates are excluded from n, the mean and the variance.
MoranGlobal global_moran(const Eigen::Ref<const Eigen::VectorXd>& values,
                         const SpatialWeights& weights);

/// global_moran plus a two-sided pseudo p from random relabelling of values
/// across non-isolate regions: (extreme + 1) / (M + 1), extremeness measured
/// by |I - E[I]|.
MoranGlobal moran_permutation(const Eigen::Ref<const Eigen::VectorXd>& values,
                              const SpatialWeights& weights, const PermutationConfig& config);

/// z_i (W z)_i / m2 with m2 = sum z^2 / n over non-isolates; NaN for isolates.
Eigen::VectorXd local_moran(const Eigen::Ref<const Eigen::VectorXd>& values,
                            const SpatialWeights& weights);

/// Local Moran with conditional permutation (region value held fixed,
/// neighbours drawn from the other non-isolate values), quadrants, and
/// significance classes.
LisaResult lisa_classify(const Eigen::Ref<const Eigen::VectorXd>& values,
                         const SpatialWeights& weights, const PermutationConfig& config,
                         const std::vector<double>& thresholds = kDefaultThresholds);

/// Bivariate local Moran: z_x,i (W z_y)_i / m2_y with both variables
/// standardized over non-isolates; x_i is held fixed while y is permuted.
LisaResult bivariate_local_moran(const Eigen::Ref<const Eigen::VectorXd>& x,
                                 const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const SpatialWeights& weights,
                                 const PermutationConfig& config,
                                 const std::vector<double>& thresholds = kDefaultThresholds);

/// Tightest threshold the p-value passes (p <= t), as "p<.05"-style labels.
std::string significance_class(double pseudo_p,
                               const std::vector<double>& thresholds = kDefaultThresholds);

std::vector<std::string> significance_map(const Eigen::Ref<const Eigen::VectorXd>& pseudo_p,
                                          const std::vector<double>& thresholds =
                                              kDefaultThresholds);

nlohmann::json to_json(const MoranGlobal& m);
nlohmann::json to_json(const LisaResult& r);

/// Copies `collection` and adds lisa_* properties to features whose id
/// (properties[id_property] or "id") matches a result id.
nlohmann::json merge_lisa_geojson(const nlohmann::json& collection,
                                  const std::string& id_property, const LisaResult& result);

}  // namespace spatialecon
