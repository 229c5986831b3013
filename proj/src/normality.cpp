#include "spatialecon/normality.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "spatialecon/descriptive.hpp"
#include "spatialecon/error.hpp"

namespace spatialecon {
namespace {

// c0 + c1 x + c2 x^2 + ...
template <std::size_t N>
double poly(const std::array<double, N>& c, double x) {
  double r = 0.0;
  for (std::size_t i = N; i-- > 0;) r = r * x + c[i];
  return r;
}

double qnorm(double p) {
  static const boost::math::normal_distribution<double> unit;
  return boost::math::quantile(unit, p);
}

double upper_normal(double x, double mean, double sd) {
  const boost::math::normal_distribution<double> d(mean, sd);
  return boost::math::cdf(boost::math::complement(d, x));
}

void require_non_constant(const Eigen::VectorXd& sorted_x, const char* op) {
  const double range = sorted_x(sorted_x.size() - 1) - sorted_x(0);
  const double scale = std::max(std::abs(sorted_x(0)), std::abs(sorted_x(sorted_x.size() - 1)));
  if (!(range > 1e-12 * std::max(scale, 1.0)))
    throw Error(ErrorKind::Degenerate, "stat_tests", op, "sample is constant");
}

void require_finite(const Eigen::Ref<const Eigen::VectorXd>& values, const char* op) {
  if (!values.allFinite())
    throw Error(ErrorKind::Value, "stat_tests", op, "sample contains non-finite values");
}

}  // namespace

Eigen::VectorXd normal_scores(Eigen::Index n) {
  Eigen::VectorXd m(n);
  for (Eigen::Index i = 0; i < n; ++i)
    m(i) = qnorm((double(i + 1) - 0.375) / (double(n) + 0.25));
  return m;
}

NormalityResult shapiro_wilk(const Eigen::Ref<const Eigen::VectorXd>& values, double alpha) {
  const Eigen::Index n = values.size();
  if (n < 3 || n > 5000)
    throw Error(ErrorKind::UnsupportedSize, "stat_tests", "shapiro_wilk",
                "sample size " + std::to_string(n) + " outside [3, 5000]");
  require_finite(values, "shapiro_wilk");
  const Eigen::VectorXd x = sorted(values);
  require_non_constant(x, "shapiro_wilk");

  // Coefficients for the upper half, largest first.
  const Eigen::Index half = n / 2;
  Eigen::VectorXd a(half);
  if (n == 3) {
    a(0) = std::numbers::sqrt2 / 2.0;
  } else {
    static constexpr std::array<double, 6> c1{0.0, 0.221157, -0.147981, -2.07119, 4.434685,
                                              -2.706056};
    static constexpr std::array<double, 6> c2{0.0, 0.042981, -0.293762, -1.752461, 5.682633,
                                              -3.582633};
    const Eigen::VectorXd m = normal_scores(n);
    const double summ2 = m.squaredNorm();
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(double(n));
    const double mn = m(n - 1);
    const double a1 = poly(c1, rsn) + mn / ssumm2;
    double fac = 0.0;
    Eigen::Index first = 0;
    if (n > 5) {
      const double mn1 = m(n - 2);
      const double a2 = poly(c2, rsn) + mn1 / ssumm2;
      fac = std::sqrt((summ2 - 2.0 * mn * mn - 2.0 * mn1 * mn1) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a(1) = a2;
      first = 2;
    } else {
      fac = std::sqrt((summ2 - 2.0 * mn * mn) / (1.0 - 2.0 * a1 * a1));
      first = 1;
    }
    a(0) = a1;
    for (Eigen::Index i = first; i < half; ++i) a(i) = m(n - 1 - i) / fac;
  }

  double numerator = 0.0;
  for (Eigen::Index i = 0; i < half; ++i) numerator += a(i) * (x(n - 1 - i) - x(i));
  const double ss = (x.array() - x.mean()).square().sum();
  const double w = std::min(1.0, numerator * numerator / ss);

  double p = 0.0;
  if (n == 3) {
    p = 6.0 / std::numbers::pi * (std::asin(std::sqrt(w)) - std::numbers::pi / 3.0);
    p = std::clamp(p, 0.0, 1.0);
  } else {
    const double an = double(n);
    double y = std::log1p(-w);
    double mean = 0.0, sd = 1.0;
    if (n <= 11) {
      static constexpr std::array<double, 2> g{-2.273, 0.459};
      static constexpr std::array<double, 4> c3{0.544, -0.39978, 0.025054, -6.714e-4};
      static constexpr std::array<double, 4> c4{1.3822, -0.77857, 0.062767, -0.0020322};
      const double gamma = poly(g, an);
      if (y >= gamma) {
        p = 1e-99;
      } else {
        y = -std::log(gamma - y);
        mean = poly(c3, an);
        sd = std::exp(poly(c4, an));
        p = upper_normal(y, mean, sd);
      }
    } else {
      static constexpr std::array<double, 4> c5{-1.5861, -0.31082, -0.083751, 0.0038915};
      static constexpr std::array<double, 3> c6{-0.4803, -0.082676, 0.0030302};
      const double ln = std::log(an);
      mean = poly(c5, ln);
      sd = std::exp(poly(c6, ln));
      p = upper_normal(y, mean, sd);
    }
  }

  NormalityResult r;
  r.test = "shapiro_wilk";
  r.statistic = w;
  r.p_value = p;
  r.n = n;
  r.alpha = alpha;
  r.decision = p < alpha ? NormalityDecision::RejectNormality : NormalityDecision::FailToReject;
  return r;
}

double ryan_joiner_critical(Eigen::Index n, double alpha) {
  const double an = double(n);
  const double rn = std::sqrt(an);
  const double c10 = 1.0071 - 0.1371 / rn - 0.3682 / an + 0.7780 / (an * an);
  const double c05 = 1.0063 - 0.1288 / rn - 0.6118 / an + 1.3505 / (an * an);
  const double c01 = 0.9963 - 0.0211 / rn - 1.4106 / an + 3.1791 / (an * an);
  if (!(alpha >= 0.01 && alpha <= 0.10))
    throw Error(ErrorKind::Parameter, "stat_tests", "ryan_joiner",
                "alpha must lie in [0.01, 0.10]");
  if (alpha <= 0.05) return c01 + (alpha - 0.01) / 0.04 * (c05 - c01);
  return c05 + (alpha - 0.05) / 0.05 * (c10 - c05);
}

NormalityResult ryan_joiner(const Eigen::Ref<const Eigen::VectorXd>& values, double alpha) {
  const Eigen::Index n = values.size();
  if (n < 4)
    throw Error(ErrorKind::UnsupportedSize, "stat_tests", "ryan_joiner",
                "sample size " + std::to_string(n) + " below 4");
  require_finite(values, "ryan_joiner");
  const Eigen::VectorXd x = sorted(values);
  require_non_constant(x, "ryan_joiner");
  // Validates alpha before any work is reported.
  const double critical = ryan_joiner_critical(n, alpha);

  const Eigen::VectorXd b = normal_scores(n);
  const double r = std::min(1.0, pearson(x, b));

  const double c10 = ryan_joiner_critical(n, 0.10);
  const double c05 = ryan_joiner_critical(n, 0.05);
  const double c01 = ryan_joiner_critical(n, 0.01);

  NormalityResult out;
  out.test = "ryan_joiner";
  out.statistic = r;
  out.n = n;
  out.alpha = alpha;
  if (r >= c10) {
    out.p_value = 0.10;
    out.p_kind = PValueKind::AtLeast;
  } else if (r < c01) {
    out.p_value = 0.01;
    out.p_kind = PValueKind::AtMost;
  } else if (r >= c05) {
    out.p_value = 0.05 + (r - c05) / (c10 - c05) * 0.05;
  } else {
    out.p_value = 0.01 + (r - c01) / (c05 - c01) * 0.04;
  }
  out.decision =
      r < critical ? NormalityDecision::RejectNormality : NormalityDecision::FailToReject;
  return out;
}

nlohmann::json to_json(const NormalityResult& r) {
  const char* kind = r.p_kind == PValueKind::Exact     ? "exact"
                     : r.p_kind == PValueKind::AtLeast ? "at_least"
                                                       : "at_most";
  return {{"test", r.test},
          {"statistic", r.statistic},
          {"p_value", r.p_value},
          {"p_kind", kind},
          {"n", r.n},
          {"alpha", r.alpha},
          {"decision", r.decision == NormalityDecision::RejectNormality ? "reject_normality"
                                                                         : "fail_to_reject"}};
}

}  // namespace spatialecon
