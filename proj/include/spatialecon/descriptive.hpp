#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace spatialecon {

template <typename Scalar>
struct DescriptiveStats {
  Eigen::Index n = 0;
  Scalar mean{};
  Scalar sd{};  // n-1 denominator
  Scalar variance{};
  Scalar coef_var{};  // percent, 100 * sd / mean
  Scalar min{};
  Scalar median{};
  Scalar max{};
  Scalar range{};
};

template <typename Derived>
typename Derived::Scalar sample_variance(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = x.size();
  if (n < 2) return Scalar(0);
  const Scalar mu = x.mean();
  return (x.array() - mu).square().sum() / Scalar(n - 1);
}

template <typename Derived>
typename Derived::Scalar sample_sd(const Eigen::MatrixBase<Derived>& x) {
  using std::sqrt;
  return sqrt(sample_variance(x));
}

/// Order statistics of a vector expression, ascending.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> sorted(
    const Eigen::MatrixBase<Derived>& x) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> s = x;
  std::sort(s.data(), s.data() + s.size());
  return s;
}

/// Linear interpolation between order statistics ("type 7"):
/// h = (n - 1) p, q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
template <typename Derived>
typename Derived::Scalar quantile(const Eigen::MatrixBase<Derived>& x,
                                  typename Derived::Scalar p) {
  using Scalar = typename Derived::Scalar;
  const auto s = sorted(x);
  const Eigen::Index n = s.size();
  const Scalar h = Scalar(n - 1) * p;
  const auto lo = static_cast<Eigen::Index>(std::floor(h));
  if (lo >= n - 1) return s(n - 1);
  return s(lo) + (h - Scalar(lo)) * (s(lo + 1) - s(lo));
}

/// Midpoint of the two central order statistics for even n.
template <typename Derived>
typename Derived::Scalar median(const Eigen::MatrixBase<Derived>& x) {
  const auto s = sorted(x);
  const Eigen::Index n = s.size();
  if (n % 2 == 1) return s(n / 2);
  return (s(n / 2 - 1) + s(n / 2)) / 2;
}

template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar pearson(const Eigen::MatrixBase<DerivedX>& x,
                                  const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  const auto dx = (x.array() - x.mean()).matrix().eval();
  const auto dy = (y.array() - y.mean()).matrix().eval();
  const Scalar denom = std::sqrt(dx.squaredNorm() * dy.squaredNorm());
  return dx.dot(dy) / denom;
}

/// Summary over all entries of `x`; callers strip missing values first.
template <typename Derived>
DescriptiveStats<typename Derived::Scalar> describe_values(
    const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  DescriptiveStats<Scalar> out;
  out.n = x.size();
  out.mean = x.mean();
  out.variance = sample_variance(x);
  out.sd = std::sqrt(out.variance);
  out.coef_var = out.mean == Scalar(0) ? Scalar(0) : Scalar(100) * out.sd / out.mean;
  out.min = x.minCoeff();
  out.max = x.maxCoeff();
  out.median = median(x);
  out.range = out.max - out.min;
  return out;
}

/// Columnwise standard scores with the n-1 standard deviation.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
standardize_columns(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> z = x;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const Scalar mu = z.col(j).mean();
    z.col(j).array() -= mu;
    const Scalar sd = std::sqrt(z.col(j).squaredNorm() / Scalar(z.rows() - 1));
    if (sd > Scalar(0)) z.col(j) /= sd;
  }
  return z;
}

}  // namespace spatialecon
