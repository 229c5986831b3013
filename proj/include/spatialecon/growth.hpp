#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spatialecon/panel.hpp"

namespace spatialecon {

/// canonical: Y = K^alpha A^(1 - alpha); product: Y = A K; as_published: Y = A^K.
enum class CobbDouglasMode { Canonical, Product, AsPublished };

std::string_view to_string(CobbDouglasMode mode) noexcept;
CobbDouglasMode parse_cobb_douglas_mode(std::string_view text);

template <typename Scalar>
Scalar cobb_douglas(Scalar a, Scalar k, Scalar alpha, CobbDouglasMode mode) {
  using std::pow;
  switch (mode) {
    case CobbDouglasMode::Canonical: return pow(k, alpha) * pow(a, Scalar(1) - alpha);
    case CobbDouglasMode::Product: return a * k;
    case CobbDouglasMode::AsPublished: return pow(a, k);
  }
  return Scalar(0);
}

/// Elementwise evaluation over aligned panels; throws a domain error for a
/// nonpositive base in the exponent modes or alpha outside [0, 1].
Eigen::ArrayXd cobb_douglas_eval(const Eigen::Ref<const Eigen::ArrayXd>& a,
                                 const Eigen::Ref<const Eigen::ArrayXd>& k, double alpha,
                                 CobbDouglasMode mode);

struct CobbDouglasFit {
  Eigen::Index n = 0;
  double alpha = 0.0;  // constrained: coefficients on log K and log A sum to 1
  double scale = 1.0;  // exp(intercept)
  double r_squared = 0.0;
  double residual_se = 0.0;
  double max_abs_residual = 0.0;
  // log Y = c + b_k log K + b_a log A
  double free_intercept = 0.0;
  double free_beta_k = 0.0;
  double free_beta_a = 0.0;
  double free_r_squared = 0.0;
};

/// Log-linear least squares on strictly positive (Y, A, K) triples.
CobbDouglasFit cobb_douglas_fit(const Eigen::Ref<const Eigen::ArrayXd>& y,
                                const Eigen::Ref<const Eigen::ArrayXd>& a,
                                const Eigen::Ref<const Eigen::ArrayXd>& k);

struct IndicatorPair {
  std::string predictor;
  std::string response;
};

std::vector<IndicatorPair> parse_pairs(std::string_view text);  // "TIC:PIB,CBO:PIB"

enum class Grouping { Microregion, Whole, Both };

inline constexpr std::string_view kWholeGroup = "mesoregion";

struct RegressionRow {
  std::string group;
  std::string predictor;
  std::string response;
  int year = 0;
  Eigen::Index n = 0;
  std::optional<double> slope;
  std::optional<double> intercept;
  std::optional<double> r_squared;
  std::optional<double> p_value;
  std::string reason;  // non-empty for null rows
};

/// Simple OLS per (group, pair, year), sorted by group, pair, year. Slices
/// with fewer than 3 paired observations or a constant predictor become null
/// rows carrying the reason.
std::vector<RegressionRow> group_ols(const PanelDataset& data, Grouping grouping,
                                     const std::vector<IndicatorPair>& pairs,
                                     const std::vector<int>& years, unsigned threads = 0);

/// "0.000"-style rounding used by the display columns; p below 1e-15 shows
/// as "<1e-15".
std::string display_p(double p);
std::string display_round(double v, int decimals = 3);

void write_regression_csv(std::ostream& out, const std::vector<RegressionRow>& rows);
nlohmann::json to_json(const RegressionRow& row);
nlohmann::json to_json(const CobbDouglasFit& fit);

}  // namespace spatialecon
