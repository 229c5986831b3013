#include "spatialecon/growth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <tuple>

#include "spatialecon/error.hpp"
#include "spatialecon/ols.hpp"
#include "spatialecon/parallel.hpp"

namespace spatialecon {
namespace {

Error growth_error(ErrorKind kind, const std::string& op, const std::string& msg) {
  return Error(kind, "growth_regression", op, msg);
}

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string_view to_string(CobbDouglasMode mode) noexcept {
  switch (mode) {
    case CobbDouglasMode::Canonical: return "canonical";
    case CobbDouglasMode::Product: return "product";
    case CobbDouglasMode::AsPublished: return "as_published";
  }
  return "canonical";
}

CobbDouglasMode parse_cobb_douglas_mode(std::string_view text) {
  if (text == "canonical") return CobbDouglasMode::Canonical;
  if (text == "product") return CobbDouglasMode::Product;
  if (text == "as_published" || text == "as-published") return CobbDouglasMode::AsPublished;
  throw growth_error(ErrorKind::Parameter, "cobb_douglas_eval",
                     "unknown mode '" + std::string(text) + "'");
}

Eigen::ArrayXd cobb_douglas_eval(const Eigen::Ref<const Eigen::ArrayXd>& a,
                                 const Eigen::Ref<const Eigen::ArrayXd>& k, double alpha,
                                 CobbDouglasMode mode) {
  if (a.size() != k.size())
    throw growth_error(ErrorKind::Alignment, "cobb_douglas_eval", "A and K differ in length");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw growth_error(ErrorKind::Domain, "cobb_douglas_eval", "alpha must lie in [0, 1]");
  if (mode == CobbDouglasMode::Canonical && ((a <= 0.0).any() || (k <= 0.0).any()))
    throw growth_error(ErrorKind::Domain, "cobb_douglas_eval",
                       "canonical mode needs strictly positive A and K");
  if (mode == CobbDouglasMode::AsPublished && (a <= 0.0).any())
    throw growth_error(ErrorKind::Domain, "cobb_douglas_eval",
                       "as_published mode needs strictly positive A");
  Eigen::ArrayXd y(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) y(i) = cobb_douglas(a(i), k(i), alpha, mode);
  return y;
}

CobbDouglasFit cobb_douglas_fit(const Eigen::Ref<const Eigen::ArrayXd>& y,
                                const Eigen::Ref<const Eigen::ArrayXd>& a,
                                const Eigen::Ref<const Eigen::ArrayXd>& k) {
  const Eigen::Index n = y.size();
  if (a.size() != n || k.size() != n)
    throw growth_error(ErrorKind::Alignment, "cobb_douglas_fit", "Y, A and K differ in length");
  if (n < 3)
    throw growth_error(ErrorKind::InsufficientData, "cobb_douglas_fit",
                       "at least 3 observations are required");
  if ((y <= 0.0).any() || (a <= 0.0).any() || (k <= 0.0).any())
    throw growth_error(ErrorKind::Domain, "cobb_douglas_fit",
                       "Y, A and K must be strictly positive");

  const Eigen::ArrayXd ly = y.log(), la = a.log(), lk = k.log();

  // Unconstrained: log Y = c + b_k log K + b_a log A.
  Eigen::MatrixXd design(n, 3);
  design.col(0).setOnes();
  design.col(1) = lk.matrix();
  design.col(2) = la.matrix();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3)
    throw growth_error(ErrorKind::Rank, "cobb_douglas_fit",
                       "log A is collinear with log K (or constant)");
  const Eigen::Vector3d beta = qr.solve(ly.matrix());

  CobbDouglasFit fit;
  fit.n = n;
  fit.free_intercept = beta(0);
  fit.free_beta_k = beta(1);
  fit.free_beta_a = beta(2);
  const double sst = (ly - ly.mean()).square().sum();
  const Eigen::ArrayXd free_resid = ly - (design * beta).array();
  fit.free_r_squared = sst > 0.0 ? 1.0 - free_resid.square().sum() / sst : 1.0;

  // Constrained: log(Y/A) = log s + alpha log(K/A).
  const Eigen::ArrayXd lhs = ly - la;
  const Eigen::ArrayXd rhs = lk - la;
  const double mx = rhs.mean(), my = lhs.mean();
  const double sxx = (rhs - mx).square().sum();
  fit.alpha = ((rhs - mx) * (lhs - my)).sum() / sxx;
  const double intercept = my - fit.alpha * mx;
  fit.scale = std::exp(intercept);
  const Eigen::ArrayXd resid = ly - (intercept + fit.alpha * lk + (1.0 - fit.alpha) * la);
  fit.r_squared = sst > 0.0 ? 1.0 - resid.square().sum() / sst : 1.0;
  fit.residual_se = std::sqrt(resid.square().sum() / double(n - 2));
  fit.max_abs_residual = resid.abs().maxCoeff();
  return fit;
}

std::vector<IndicatorPair> parse_pairs(std::string_view text) {
  std::vector<IndicatorPair> out;
  std::stringstream ss{std::string(text)};
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == item.size())
      throw growth_error(ErrorKind::Parameter, "group_ols",
                         "pair '" + item + "' is not predictor:response");
    out.push_back({item.substr(0, colon), item.substr(colon + 1)});
  }
  return out;
}

std::vector<RegressionRow> group_ols(const PanelDataset& data, Grouping grouping,
                                     const std::vector<IndicatorPair>& pairs,
                                     const std::vector<int>& years, unsigned threads) {
  std::vector<std::string> groups;
  if (grouping != Grouping::Microregion) groups.emplace_back(kWholeGroup);
  if (grouping != Grouping::Whole)
    for (const auto& m : microregions(data)) groups.push_back(m);

  struct Task {
    std::string group;
    IndicatorPair pair;
    int year;
  };
  std::vector<Task> tasks;
  for (const auto& g : groups)
    for (const auto& p : pairs)
      for (int y : years) tasks.push_back({g, p, y});

  std::vector<RegressionRow> rows(tasks.size());
  parallel_for(tasks.size(), threads, [&](std::size_t t) {
    const auto& task = tasks[t];
    RegressionRow row;
    row.group = task.group;
    row.predictor = task.pair.predictor;
    row.response = task.pair.response;
    row.year = task.year;
    const auto xi = data.indicator_index(task.pair.predictor);
    const auto yi = data.indicator_index(task.pair.response);
    const auto year = data.find_year(task.year);
    std::vector<double> xs, ys;
    if (year) {
      for (Eigen::Index r = 0; r < data.region_count(); ++r) {
        if (task.group != kWholeGroup &&
            data.regions()[std::size_t(r)].microregion != task.group)
          continue;
        const auto x = data.value(r, xi, *year);
        const auto y = data.value(r, yi, *year);
        if (x && y) {
          xs.push_back(*x);
          ys.push_back(*y);
        }
      }
    }
    row.n = Eigen::Index(xs.size());
    if (xs.size() < 3) {
      row.reason = "fewer than 3 paired observations";
    } else {
      const Eigen::Map<const Eigen::VectorXd> x(xs.data(), row.n), y(ys.data(), row.n);
      if ((x.array() == x(0)).all()) {
        row.reason = "predictor has zero variance";
      } else {
        const auto fit = simple_ols(x, y);
        row.slope = fit.slope;
        row.intercept = fit.intercept;
        row.r_squared = fit.r_squared;
        row.p_value = fit.p_value;
      }
    }
    rows[t] = std::move(row);
  });

  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.group, a.predictor, a.response, a.year) <
           std::tie(b.group, b.predictor, b.response, b.year);
  });
  return rows;
}

std::string display_round(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  std::string s(buf);
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  else if (s.rfind("-0.", 0) == 0) s.erase(1, 1);
  if (s == "-.000" || s == "-.0" || s == "-.00") s.erase(0, 1);
  return s;
}

std::string display_p(double p) {
  if (p < 1e-15) return "<1e-15";
  return display_round(p, 3);
}

void write_regression_csv(std::ostream& out, const std::vector<RegressionRow>& rows) {
  out << "group,pair,year,n,slope,intercept,r_squared,p_value,r_squared_display,p_display,"
         "reason\n";
  auto full = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : rows) {
    std::string group = r.group;
    if (group.find(',') != std::string::npos) group = "\"" + group + "\"";
    out << group << ',' << r.predictor << "----" << r.response << ',' << r.year << ','
        << r.n << ',' << full(r.slope) << ',' << full(r.intercept) << ','
        << full(r.r_squared) << ',' << full(r.p_value) << ','
        << (r.r_squared ? display_round(*r.r_squared) : "") << ','
        << (r.p_value ? display_p(*r.p_value) : "") << ',' << r.reason << '\n';
  }
}

nlohmann::json to_json(const RegressionRow& row) {
  return {{"group", row.group},
          {"predictor", row.predictor},
          {"response", row.response},
          {"year", row.year},
          {"n", row.n},
          {"slope", opt(row.slope)},
          {"intercept", opt(row.intercept)},
          {"r_squared", opt(row.r_squared)},
          {"p_value", opt(row.p_value)},
          {"p_display", row.p_value ? display_p(*row.p_value) : std::string()},
          {"reason", row.reason}};
}

nlohmann::json to_json(const CobbDouglasFit& fit) {
  return {{"n", fit.n},
          {"alpha", fit.alpha},
          {"scale", fit.scale},
          {"r_squared", fit.r_squared},
          {"residual_se", fit.residual_se},
          {"max_abs_residual", fit.max_abs_residual},
          {"unconstrained",
           {{"intercept", fit.free_intercept},
            {"beta_k", fit.free_beta_k},
            {"beta_a", fit.free_beta_a},
            {"r_squared", fit.free_r_squared}}}};
}

}  // namespace spatialecon
