#include <doctest.h>

#include <cmath>
#include <sstream>

#include "spatialecon/growth.hpp"
#include "spatialecon/ols.hpp"
#include "support.hpp"

using namespace spatialecon;
using testing::error_kind;

TEST_SUITE("growth_regression") {

// scipy.stats.linregress on the same five points.
TEST_CASE("simple OLS oracle") {
  Eigen::VectorXd x(5), y(5);
  x << 1, 2, 3, 4, 5;
  y << 2.1, 3.9, 6.0, 8.1, 9.9;
  const auto fit = simple_ols(x, y);
  CHECK(fit.slope == doctest::Approx(1.98).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(0.06).epsilon(1e-9));
  CHECK(fit.r_squared == doctest::Approx(0.9990825688073395).epsilon(1e-12));
  CHECK(fit.p_value == doctest::Approx(1.1796921510979865e-05).epsilon(1e-9));

  // Closed form: sxx = 10, sxy = 19.8, syy = 39.24.
  const double sse = 39.24 - 1.98 * 19.8;
  CHECK(fit.slope_se == doctest::Approx(std::sqrt(sse / 3.0 / 10.0)).epsilon(1e-10));
}

TEST_CASE("t tail probabilities") {
  // scipy.stats.t.ppf(0.975, 4999)
  CHECK(two_tailed_t_p(1.9604386466615242, 4999.0) == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(two_tailed_t_p(0.0, 10.0) == doctest::Approx(1.0));
  CHECK(two_tailed_t_p(std::numeric_limits<double>::infinity(), 10.0) == 0.0);
}

TEST_CASE("OLS is templated over the scalar") {
  Eigen::VectorXf x(4), y(4);
  x << 0, 1, 2, 3;
  y << 1, 3, 5, 7.5f;
  const auto fit = simple_ols(x, y);
  static_assert(std::is_same_v<decltype(fit.slope), float>);
  CHECK(fit.slope == doctest::Approx(2.15f).epsilon(1e-5));
}

TEST_CASE("Cobb-Douglas evaluation") {
  CHECK(cobb_douglas(4.0, 9.0, 0.5, CobbDouglasMode::Canonical) == doctest::Approx(6.0));
  CHECK(cobb_douglas(4.0, 9.0, 0.5, CobbDouglasMode::Product) == 36.0);
  CHECK(cobb_douglas(2.0, 3.0, 0.5, CobbDouglasMode::AsPublished) == 8.0);
  CHECK(cobb_douglas(4.0, 9.0, 1.0, CobbDouglasMode::Canonical) == doctest::Approx(9.0));
  CHECK(cobb_douglas(4.0, 9.0, 0.0, CobbDouglasMode::Canonical) == doctest::Approx(4.0));

  Eigen::ArrayXd a(2), k(2);
  a << 4, 1;
  k << 9, 16;
  const auto y = cobb_douglas_eval(a, k, 0.5, CobbDouglasMode::Canonical);
  CHECK(y(0) == doctest::Approx(6.0));
  CHECK(y(1) == doctest::Approx(4.0));
  CHECK(error_kind([&] { cobb_douglas_eval(a, k, 1.5, CobbDouglasMode::Canonical); }) ==
        ErrorKind::Domain);
  a(1) = -1.0;
  CHECK(error_kind([&] { cobb_douglas_eval(a, k, 0.5, CobbDouglasMode::Canonical); }) ==
        ErrorKind::Domain);
  CHECK_NOTHROW(cobb_douglas_eval(a, k, 0.5, CobbDouglasMode::Product));
  CHECK(error_kind([&] { cobb_douglas_eval(a, k.head(1), 0.5, CobbDouglasMode::Product); }) ==
        ErrorKind::Alignment);
  CHECK(parse_cobb_douglas_mode("as-published") == CobbDouglasMode::AsPublished);
  CHECK(error_kind([] { parse_cobb_douglas_mode("cubic"); }) == ErrorKind::Parameter);
}

TEST_CASE("Cobb-Douglas fit recovers alpha") {
  const Eigen::Index n = 40;
  const Eigen::VectorXd u = testing::normal_vector(21, n), v = testing::normal_vector(22, n);
  const Eigen::ArrayXd a = (0.5 * u.array()).exp() * 3.0;
  const Eigen::ArrayXd k = (0.7 * v.array()).exp() * 5.0;
  const Eigen::ArrayXd y = 1.7 * k.pow(0.35) * a.pow(0.65);
  const auto fit = cobb_douglas_fit(y, a, k);
  CHECK(fit.alpha == doctest::Approx(0.35).epsilon(1e-10));
  CHECK(fit.scale == doctest::Approx(1.7).epsilon(1e-10));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.free_beta_k == doctest::Approx(0.35).epsilon(1e-9));
  CHECK(fit.free_beta_a == doctest::Approx(0.65).epsilon(1e-9));
  CHECK(fit.max_abs_residual < 1e-10);

  Eigen::ArrayXd bad = y;
  bad(0) = 0.0;
  CHECK(error_kind([&] { cobb_douglas_fit(bad, a, k); }) == ErrorKind::Domain);
  CHECK(error_kind([&] { cobb_douglas_fit(y.head(2), a.head(2), k.head(2)); }) ==
        ErrorKind::InsufficientData);
  CHECK(error_kind([&] { cobb_douglas_fit(y, a, a); }) == ErrorKind::Rank);
}

TEST_CASE("pair parsing") {
  const auto pairs = parse_pairs("TIC:POB,CBO:POB");
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[1].predictor == "CBO");
  CHECK(pairs[1].response == "POB");
  CHECK(error_kind([] { parse_pairs("TIC"); }) == ErrorKind::Parameter);
  CHECK(error_kind([] { parse_pairs("TIC:"); }) == ErrorKind::Parameter);
}

TEST_CASE("grouped regressions") {
  // r0..r5: M1 holds r0..r2, M2 holds r3..r5.
  std::vector<RegionId> regions;
  for (int i = 0; i < 6; ++i)
    regions.push_back({"r" + std::to_string(i), "", i < 3 ? "M1" : "M2", i == 0});
  PanelDataset p(regions, {"X", "Y"}, {2010, 2011});
  const double xs[] = {1, 2, 3, 4, 5, 6};
  for (int i = 0; i < 6; ++i) {
    p.set(i, 0, 0, xs[i]);
    p.set(i, 1, 0, 2.0 * xs[i] + (i % 2 ? 0.1 : -0.1));
  }
  p.set(0, 0, 1, 1.0);
  p.set(0, 1, 1, 1.0);
  const auto rows = group_ols(p, Grouping::Both, parse_pairs("X:Y"), {2010, 2011});
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].group == "M1");
  CHECK(rows[4].group == "mesoregion");
  CHECK(rows[4].n == 6);
  CHECK(rows[4].slope.has_value());
  CHECK(*rows[4].slope == doctest::Approx(simple_ols(Eigen::Map<const Eigen::VectorXd>(xs, 6),
                                                     Eigen::Map<const Eigen::VectorXd>(
                                                         std::vector<double>{1.9, 4.1, 5.9, 8.1,
                                                                             9.9, 12.1}
                                                             .data(),
                                                         6))
                                              .slope));
  CHECK_FALSE(rows[5].slope.has_value());
  CHECK(rows[5].reason == "fewer than 3 paired observations");

  const auto whole = group_ols(p, Grouping::Whole, parse_pairs("X:Y"), {2010}, 1);
  REQUIRE(whole.size() == 1);
  CHECK(*whole[0].r_squared == *rows[4].r_squared);

  p.set(3, 0, 0, 2.0);
  p.set(4, 0, 0, 2.0);
  p.set(5, 0, 0, 2.0);
  const auto flat = group_ols(p, Grouping::Microregion, parse_pairs("X:Y"), {2010});
  CHECK(flat[1].reason == "predictor has zero variance");
}

TEST_CASE("display rounding") {
  CHECK(display_round(0.12345) == ".123");
  CHECK(display_round(-0.0001) == ".000");
  CHECK(display_round(1.5) == "1.500");
  CHECK(display_p(1e-20) == "<1e-15");
  CHECK(display_p(0.04) == ".040");
}

TEST_CASE("regression CSV") {
  RegressionRow r;
  r.group = "Micro 1";
  r.predictor = "TIC";
  r.response = "POB";
  r.year = 2010;
  r.n = 2;
  r.reason = "fewer than 3 paired observations";
  std::ostringstream out;
  write_regression_csv(out, {r});
  const auto text = out.str();
  CHECK(text.rfind("group,pair,year,n,", 0) == 0);
  CHECK(text.find("Micro 1,TIC----POB,2010,2,,,,,,,fewer") != std::string::npos);
}

}  // TEST_SUITE
