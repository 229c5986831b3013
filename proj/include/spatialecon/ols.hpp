#pragma once

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>

namespace spatialecon {

template <typename Scalar>
struct SimpleFit {
  Eigen::Index n = 0;
  Scalar slope{};
  Scalar intercept{};
  Scalar r_squared{};
  Scalar slope_se{};
  Scalar t{};
  Scalar p_value{};  // two-tailed, n - 2 degrees of freedom
};

/// Two-tailed p for a t statistic; 0 when |t| is infinite.
template <typename Scalar>
Scalar two_tailed_t_p(Scalar t, Scalar dof) {
  using std::abs;
  if (!std::isfinite(double(t))) return Scalar(0);
  const boost::math::students_t_distribution<Scalar> dist(dof);
  return Scalar(2) * boost::math::cdf(boost::math::complement(dist, abs(t)));
}

/// y = intercept + slope x by least squares. Callers guarantee n >= 3 and a
/// non-constant predictor.
template <typename DerivedX, typename DerivedY>
SimpleFit<typename DerivedX::Scalar> simple_ols(const Eigen::MatrixBase<DerivedX>& x,
                                                const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  SimpleFit<Scalar> fit;
  fit.n = x.size();
  const Scalar mx = x.mean();
  const Scalar my = y.mean();
  const auto dx = (x.array() - mx).eval();
  const auto dy = (y.array() - my).eval();
  const Scalar sxx = dx.square().sum();
  const Scalar syy = dy.square().sum();
  const Scalar sxy = (dx * dy).sum();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > Scalar(0) ? (sxy * sxy) / (sxx * syy) : Scalar(1);
  if (fit.r_squared > Scalar(1)) fit.r_squared = Scalar(1);
  const Scalar dof = Scalar(fit.n - 2);
  Scalar sse = syy - fit.slope * sxy;
  if (sse < Scalar(0)) sse = Scalar(0);
  fit.slope_se = std::sqrt(sse / dof / sxx);
  fit.t = fit.slope_se > Scalar(0) ? fit.slope / fit.slope_se
                                   : std::numeric_limits<Scalar>::infinity();
  fit.p_value = fit.slope == Scalar(0) && fit.slope_se == Scalar(0)
                    ? Scalar(1)
                    : two_tailed_t_p(fit.t, dof);
  return fit;
}

}  // namespace spatialecon
