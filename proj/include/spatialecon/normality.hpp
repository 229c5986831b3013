#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <string>

namespace spatialecon {

enum class NormalityDecision { RejectNormality, FailToReject };

/// How `p_value` should be read: a point estimate, or a bound when the
/// statistic falls outside the tabled critical values.
enum class PValueKind { Exact, AtLeast, AtMost };

struct NormalityResult {
  std::string test;  // "shapiro_wilk" or "ryan_joiner"
  double statistic = 0.0;
  double p_value = 0.0;
  PValueKind p_kind = PValueKind::Exact;
  Eigen::Index n = 0;
  double alpha = 0.05;
  NormalityDecision decision = NormalityDecision::FailToReject;
};

/// Shapiro-Wilk W with Royston's coefficient and p-value approximations.
/// Requires 3 <= n <= 5000 and a non-constant sample.
NormalityResult shapiro_wilk(const Eigen::Ref<const Eigen::VectorXd>& values,
                             double alpha = 0.05);

/// Ryan-Joiner probability-plot correlation with (i - 3/8)/(n + 1/4) normal
/// scores. The p-value is interpolated between the 0.10/0.05/0.01 critical
/// values and reported as a bound outside that band. alpha in [0.01, 0.10].
NormalityResult ryan_joiner(const Eigen::Ref<const Eigen::VectorXd>& values,
                            double alpha = 0.05);

/// Critical correlation below which normality is rejected at `alpha`.
double ryan_joiner_critical(Eigen::Index n, double alpha);

/// Blom-type expected normal order statistics, (i - 3/8)/(n + 1/4).
Eigen::VectorXd normal_scores(Eigen::Index n);

nlohmann::json to_json(const NormalityResult& r);

}  // namespace spatialecon
