#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spatialecon/panel.hpp"

namespace spatialecon::pls {

/// Reflective path model: named constructs, one indicator block each, and
/// directed structural edges forming a DAG.
class PathModel {
 public:
  PathModel() = default;
  /// Throws a parameter error unless every construct has at least one
  /// indicator, indicators are unique across blocks, edges reference known
  /// constructs, and the structural graph is acyclic.
  PathModel(std::vector<std::string> constructs, std::vector<std::vector<std::string>> blocks,
            std::vector<std::pair<std::string, std::string>> edges);

  static PathModel from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;

  Eigen::Index construct_count() const noexcept { return Eigen::Index(constructs_.size()); }
  const std::vector<std::string>& constructs() const noexcept { return constructs_; }
  const std::vector<std::vector<std::string>>& blocks() const noexcept { return blocks_; }
  const std::vector<std::pair<Eigen::Index, Eigen::Index>>& edges() const noexcept { return edges_; }

  Eigen::Index construct_index(std::string_view name) const;
  /// Flattened indicator order; data matrices use these columns.
  const std::vector<std::string>& indicators() const noexcept { return indicators_; }
  /// Column indices of construct j's block within indicators().
  const std::vector<Eigen::Index>& block_columns(Eigen::Index j) const { return columns_[std::size_t(j)]; }
  const std::vector<Eigen::Index>& predecessors(Eigen::Index j) const { return pred_[std::size_t(j)]; }
  const std::vector<Eigen::Index>& successors(Eigen::Index j) const { return succ_[std::size_t(j)]; }
  bool endogenous(Eigen::Index j) const { return !pred_[std::size_t(j)].empty(); }

  std::string edge_label(std::size_t e, std::string_view sep = "----") const;

 private:
  std::vector<std::string> constructs_;
  std::vector<std::vector<std::string>> blocks_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> edges_;
  std::vector<std::string> indicators_;
  std::vector<std::vector<Eigen::Index>> columns_;
  std::vector<std::vector<Eigen::Index>> pred_;
  std::vector<std::vector<Eigen::Index>> succ_;
};

struct PlsConfig {
  double tolerance = 1e-7;  // max absolute change in outer weights
  int max_iterations = 300;
  int bootstrap = 5000;
  int omission_distance = 7;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  /// Disattenuate construct correlations by rho_A before estimating paths
  /// (consistent PLS). Off gives the classic composite-score regression.
  bool consistent = false;
};

struct PathEstimates {
  Eigen::VectorXd outer_weights;  // per indicator, on standardized data
  Eigen::VectorXd loadings;       // per indicator: corr(indicator, composite score)
  Eigen::VectorXd factor_loadings;  // consistent loadings; equal to `loadings` when classic
  Eigen::VectorXd rho_a;          // per construct reliability; 1 for single indicators
  Eigen::MatrixXd scores;         // observations x constructs, unit variance
  Eigen::VectorXd paths;          // per edge, in model edge order
  Eigen::VectorXd r_squared;      // per construct, NaN for exogenous
  Eigen::MatrixXd construct_correlations;  // disattenuated when consistent
  Eigen::RowVectorXd column_mean;  // raw indicator means used to standardize
  Eigen::RowVectorXd column_sd;
  int iterations = 0;
};

/// PLS path modelling: Mode A outer estimation, path weighting inner scheme,
/// dominant-loading sign alignment, then per-endogenous least squares on the
/// construct correlation matrix (rho_A-corrected when config.consistent is
/// set). Columns of `data` follow model.indicators(); every entry must be
/// finite. When `reference` is given, construct signs follow its loadings.
PathEstimates fit_pls(const PathModel& model, const Eigen::Ref<const Eigen::MatrixXd>& data,
                      const PlsConfig& config = {}, const PathEstimates* reference = nullptr);

struct ConstructQuality {
  std::string construct;
  Eigen::Index indicators = 0;
  double cronbach_alpha = 1.0;
  double composite_reliability = 1.0;
  double ave = 1.0;
  bool alpha_ok = true;  // >= 0.7
  bool cr_ok = true;     // >= 0.7
  bool ave_ok = true;    // >= 0.5
};

std::vector<ConstructQuality> measurement_quality(const PathModel& model,
                                                  const PathEstimates& estimates,
                                                  const Eigen::Ref<const Eigen::MatrixXd>& data);

/// k r / (1 + (k - 1) r) over the mean inter-item correlation r; 1 for k = 1.
double standardized_alpha(const Eigen::Ref<const Eigen::MatrixXd>& item_correlations);
double composite_reliability(const Eigen::Ref<const Eigen::VectorXd>& loadings);
double average_variance_extracted(const Eigen::Ref<const Eigen::VectorXd>& loadings);

struct DiscriminantValidity {
  Eigen::MatrixXd htmt;            // symmetric, unit diagonal
  Eigen::MatrixXd fornell_larcker; // sqrt(AVE) on the diagonal, construct correlations off it
  std::vector<bool> fornell_larcker_ok;
};

DiscriminantValidity discriminant_validity(const PathModel& model, const PathEstimates& estimates,
                                           const Eigen::Ref<const Eigen::MatrixXd>& data);

/// HTMT from an indicator correlation matrix and block column sets.
double htmt(const Eigen::Ref<const Eigen::MatrixXd>& correlations,
            const std::vector<Eigen::Index>& block_a, const std::vector<Eigen::Index>& block_b);

struct VifEntry {
  std::string endogenous;
  std::string predictor;
  double vif = 1.0;
  bool overflow = false;  // perfectly collinear
};

/// 1 / (1 - R^2_k), regressing column k on the remaining columns.
Eigen::VectorXd variance_inflation(const Eigen::Ref<const Eigen::MatrixXd>& predictors);

std::vector<VifEntry> structural_collinearity(const PathModel& model,
                                              const PathEstimates& estimates);

struct BootstrapEdge {
  std::string relation;
  double beta = 0.0;  // full-sample estimate
  double mean = 0.0;
  double standard_error = 0.0;
  double t = 0.0;
  double p_value = 1.0;  // two-tailed, B - 1 degrees of freedom
  double ci_low = 0.0;   // 2.5% percentile
  double ci_high = 0.0;  // 97.5% percentile
  double r_squared = 0.0;  // of the edge's target construct
};

struct BootstrapResult {
  int resamples = 0;
  int redrawn = 0;
  std::uint64_t seed = 0;
  std::vector<BootstrapEdge> edges;
};

BootstrapResult bootstrap_paths(const PathModel& model,
                                const Eigen::Ref<const Eigen::MatrixXd>& data,
                                const PlsConfig& config);

struct Q2Entry {
  std::string construct;
  double q2 = 0.0;
  double sse = 0.0;
  double sso = 0.0;
  bool predictive_relevance = false;  // q2 > 0
};

/// Cross-validated redundancy by blindfolding with omission distance
/// config.omission_distance, which must be >= 2 and must not divide n.
std::vector<Q2Entry> blindfold_q2(const PathModel& model,
                                  const Eigen::Ref<const Eigen::MatrixXd>& data,
                                  const PlsConfig& config);

/// Pools (region, year) rows with every model indicator observed; `year`
/// restricts to one cross-section. Returns the matrix and the dropped count.
struct PooledData {
  Eigen::MatrixXd matrix;
  std::vector<std::string> row_labels;  // "code:year"
  std::size_t dropped = 0;
};
PooledData pool_panel(const PathModel& model, const PanelDataset& panel,
                      std::optional<int> year = std::nullopt);

struct PlsReport {
  PathEstimates estimates;
  std::vector<ConstructQuality> quality;
  DiscriminantValidity discriminant;
  std::vector<VifEntry> vif;
  std::vector<Q2Entry> q2;
  BootstrapResult bootstrap;
  bool consistent = false;
};

PlsReport run_pls(const PathModel& model, const Eigen::Ref<const Eigen::MatrixXd>& data,
                  const PlsConfig& config);

/// Report laid out as the reliability, AVE, composite reliability, VIF,
/// HTMT, Q^2 and path-coefficient tables.
nlohmann::json to_json(const PathModel& model, const PlsReport& report);

}  // namespace spatialecon::pls
