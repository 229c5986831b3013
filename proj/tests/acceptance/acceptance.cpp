// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// --known-red=5,7 lists criteria whose failure is expected; the exit status then
// reflects only the others, while their FAIL lines are still printed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spatialecon/autocorr.hpp"
#include "spatialecon/cli.hpp"
#include "spatialecon/descriptive.hpp"
#include "spatialecon/geometry.hpp"
#include "spatialecon/growth.hpp"
#include "spatialecon/ols.hpp"
#include "spatialecon/panel.hpp"
#include "spatialecon/parallel.hpp"
#include "spatialecon/pls.hpp"
#include "spatialecon/rng.hpp"
#include "spatialecon/weights.hpp"

namespace fs = std::filesystem;
using namespace spatialecon;

namespace {

const fs::path kFixture = SPATIALECON_FIXTURE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

Eigen::VectorXd noise(std::uint64_t seed, Eigen::Index n) {
  StreamRng rng(seed, 0xACCE, 0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

// ---------------------------------------------------------------- 1

Outcome standardization_cross_check() {
  // 89 values with mean exactly 285 and sample sd exactly 284, one of them 896.
  const Eigen::Index n = 89;
  Eigen::VectorXd u = noise(1, n - 1);
  u.array() -= u.mean();
  u.normalize();
  const double a = (285.0 * double(n) - 896.0) / double(n - 1);
  const double b = std::sqrt(284.0 * 284.0 * double(n - 1) - (896.0 - 285.0) * (896.0 - 285.0) -
                             double(n - 1) * (a - 285.0) * (a - 285.0));
  std::vector<RegionId> regions;
  for (Eigen::Index i = 0; i < n; ++i)
    regions.push_back({"m" + std::to_string(i), "", "M", i == 0});
  PanelDataset panel(regions, {"TIC"}, {2009});
  panel.set(0, 0, 0, 896.0);
  for (Eigen::Index i = 1; i < n; ++i) panel.set(i, 0, 0, a + b * u(i - 1));

  const auto stats = describe(panel, "TIC", 2009);
  const double z = *standardize(panel).value(0, 0, 0);
  const bool ok = std::abs(stats.mean - 285.0) < 1e-9 && std::abs(stats.sd - 284.0) < 1e-9 &&
                  std::abs(z - 2.149) <= 0.02;
  return {ok, fmt("mean %.6f sd %.6f, z(896) = %.4f (target 2.149 +/- 0.02)", stats.mean,
                  stats.sd, z)};
}

// ---------------------------------------------------------------- 2

Outcome connectivity_identity() {
  std::vector<SpatialWeights> objects;
  for (int r = 1; r <= 10; ++r)
    for (int c = 2; c <= 10; ++c) {
      objects.push_back(lattice_weights(r, c, true));
      objects.push_back(lattice_weights(r, c, false));
    }
  std::ifstream geo(kFixture / "regions.geojson");
  const auto regions = read_geojson_regions(nlohmann::json::parse(geo), "code");
  objects.push_back(queen_contiguity(regions));
  objects.push_back(rook_contiguity(regions));
  std::ifstream gal(kFixture / "grid3x3.gal");
  objects.push_back(load_gal(gal));

  double worst = 0.0;
  for (const auto& w : objects) {
    const auto s = connectivity_summary(w);
    worst = std::max(worst, std::abs(s.pct_nonzero / 100.0 -
                                     s.mean_neighbors / double(s.n_regions)));
  }
  const double rounded_pct = std::round(100.0 * 5.28 / 89.0 * 100.0) / 100.0;

  const auto q22 = connectivity_summary(lattice_weights(2, 2, true));
  const auto r22 = connectivity_summary(lattice_weights(2, 2, false));
  const auto q33 = connectivity_summary(lattice_weights(3, 3, true));
  const auto r33 = connectivity_summary(lattice_weights(3, 3, false));
  const bool grids = q22.min_neighbors == 3 && q22.max_neighbors == 3 &&
                     r22.min_neighbors == 2 && r22.max_neighbors == 2 &&
                     q33.min_neighbors == 3 && q33.max_neighbors == 8 &&
                     q33.median_neighbors == 5.0 && r33.min_neighbors == 2 &&
                     r33.max_neighbors == 4;
  const bool ok = worst < 1e-9 && rounded_pct == 5.93 && grids;
  return {ok, fmt("%zu weights objects, max |pct/100 - mean/n| = %.2e; 5.28/89 -> %.2f%%; "
                  "grid oracles %s (municipal polygons not supplied)",
                  objects.size(), worst, rounded_pct, grids ? "match" : "differ")};
}

// ---------------------------------------------------------------- 3

SpatialWeights random_grid(std::uint64_t seed) {
  StreamRng rng(seed, 3, 0);
  int rows = 0, cols = 0;
  do {
    rows = 2 + int(rng.below(9));
    cols = 2 + int(rng.below(49));
  } while (rows * cols < 10 || rows * cols > 100);
  const auto base = lattice_weights(rows, cols, rng.below(2) == 0);
  // Randomly thin links symmetrically, never creating an isolate.
  std::vector<std::vector<Neighbor>> adj(std::size_t(base.size()));
  for (Eigen::Index i = 0; i < base.size(); ++i) adj[std::size_t(i)] = base.neighbors(i);
  for (Eigen::Index i = 0; i < base.size(); ++i)
    for (const auto& nb : base.neighbors(i)) {
      if (nb.index < i || rng.uniform() >= 0.2) continue;
      auto& ai = adj[std::size_t(i)];
      auto& aj = adj[std::size_t(nb.index)];
      if (ai.size() < 2 || aj.size() < 2) continue;
      ai.erase(std::find(ai.begin(), ai.end(), nb));
      aj.erase(std::find(aj.begin(), aj.end(), Neighbor{i, 1.0}));
    }
  return SpatialWeights(base.ids(), std::move(adj));
}

Outcome lisa_decomposition() {
  double worst = 0.0;
  Eigen::Index smallest = 1000, largest = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto w = random_grid(s);
    const Eigen::VectorXd x = noise(1000 + s, w.size());
    const double global = global_moran(x, w).statistic;
    const double total = local_moran(x, w).sum();
    worst = std::max(worst, std::abs(total - double(w.size()) * global));
    smallest = std::min(smallest, w.size());
    largest = std::max(largest, w.size());
  }
  return {worst < 1e-10, fmt("100 instances, n in [%ld, %ld], max |sum I_i - n I| = %.2e",
                             long(smallest), long(largest), worst)};
}

// ---------------------------------------------------------------- 4

Outcome permutation_calibration() {
  const auto w = lattice_weights(6, 6, true);
  int rejections = 0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    const auto m = moran_permutation(noise(5000 + s, 36), w, {999, derive_seed(s, "moran"), 0});
    if (m.pseudo_p <= 0.05) ++rejections;
  }
  const double rate = rejections / 500.0;
  return {std::abs(rate - 0.05) <= 0.02,
          fmt("%d / 500 trials with pseudo p <= .05 (%.1f%%, target 5%% +/- 2%%)", rejections,
              100.0 * rate)};
}

// ---------------------------------------------------------------- 5-7

pls::PathModel reflective_model() {
  return pls::PathModel({"X", "Y"}, {{"x1", "x2", "x3"}, {"y1", "y2", "y3"}}, {{"X", "Y"}});
}

// Standardized latent xi -> eta with path beta; loadings 0.9, 0.8, 0.7 per block.
Eigen::MatrixXd reflective_data(std::uint64_t seed, Eigen::Index n, double beta) {
  const double lambda[3] = {0.9, 0.8, 0.7};
  StreamRng rng(seed, 5, 0);
  Eigen::MatrixXd x(n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xi = rng.normal();
    const double eta = beta * xi + std::sqrt(1.0 - beta * beta) * rng.normal();
    for (int k = 0; k < 3; ++k) {
      x(i, k) = lambda[k] * xi + std::sqrt(1.0 - lambda[k] * lambda[k]) * rng.normal();
      x(i, k + 3) = lambda[k] * eta + std::sqrt(1.0 - lambda[k] * lambda[k]) * rng.normal();
    }
  }
  return x;
}

Outcome pls_recovery() {
  const auto model = reflective_model();
  int classic_hits = 0, consistent_hits = 0;
  double classic_sum = 0.0, consistent_sum = 0.0;
  pls::PlsConfig classic;
  pls::PlsConfig consistent;
  consistent.consistent = true;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto data = reflective_data(s, 500, 0.6);
    const double b0 = pls::fit_pls(model, data, classic).paths(0);
    const double b1 = pls::fit_pls(model, data, consistent).paths(0);
    classic_sum += b0;
    consistent_sum += b1;
    classic_hits += std::abs(b0 - 0.6) <= 0.05;
    consistent_hits += std::abs(b1 - 0.6) <= 0.05;
  }

  // Single-indicator degenerate model.
  const pls::PathModel single({"AED", "CER"}, {{"TIC"}, {"PIB"}}, {{"AED", "CER"}});
  const Eigen::VectorXd a = noise(77, 200), e = noise(78, 200);
  Eigen::MatrixXd d(200, 2);
  d.col(0) = a;
  d.col(1) = 0.7 * a + e;
  const auto est = pls::fit_pls(single, d);
  const double r = pearson(d.col(0), d.col(1));
  bool unit = true;
  for (const auto& q : pls::measurement_quality(single, est, d))
    unit = unit && std::abs(q.cronbach_alpha - 1) < 1e-12 &&
           std::abs(q.composite_reliability - 1) < 1e-12 && std::abs(q.ave - 1) < 1e-12;
  const double vif = pls::structural_collinearity(single, est).at(0).vif;
  const bool single_ok = std::abs(est.paths(0) - r) < 1e-10 && unit && std::abs(vif - 1) < 1e-12;

  const int best = std::max(classic_hits, consistent_hits);
  return {best >= 45 && single_ok,
          fmt("beta within +/-.05 in %d/50 seeds classic (mean %.4f), %d/50 consistent "
              "(mean %.4f), need 45; single-indicator beta - r = %.1e, alpha=CR=AVE=1 %s, "
              "VIF %.3f",
              classic_hits, classic_sum / 50, consistent_hits, consistent_sum / 50,
              std::abs(est.paths(0) - r), unit ? "yes" : "no", vif)};
}

Outcome bootstrap_calibration() {
  const auto model = reflective_model();
  int rejections = 0, redrawn = 0;
  double dof = 0.0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    pls::PlsConfig cfg;
    cfg.bootstrap = 1000;
    cfg.seed = derive_seed(s, "plssem");
    const auto res = pls::bootstrap_paths(model, reflective_data(10000 + s, 200, 0.0), cfg);
    rejections += std::abs(res.edges[0].t) > 1.96;
    redrawn += res.redrawn;
    dof = res.resamples - 1;
  }
  const double rate = rejections / 200.0;
  // Reference critical value at the rounded_pct resample count.
  const double p_at_critical = two_tailed_t_p(1.960, 4999.0);
  return {std::abs(rate - 0.05) <= 0.03 && std::abs(p_at_critical - 0.05) < 1e-3,
          fmt("|t| > 1.96 in %d / 200 trials (%.1f%%, target 5%% +/- 3%%), dof %.0f, "
              "%d redraws; p(|t| > 1.960; 4999) = %.4f",
              rejections, 100.0 * rate, dof, redrawn, p_at_critical)};
}

Outcome blindfolding_sign() {
  const auto model = reflective_model();
  pls::PlsConfig cfg;
  cfg.omission_distance = 7;
  int positive = 0, null_nonpositive = 0;
  double min_predictive = 1e300, max_null = -1e300, null_sum = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const double q = pls::blindfold_q2(model, reflective_data(20000 + s, 201, 0.6), cfg)[0].q2;
    const double z = pls::blindfold_q2(model, reflective_data(30000 + s, 201, 0.0), cfg)[0].q2;
    positive += q > 0.0;
    null_nonpositive += z <= 0.0;
    min_predictive = std::min(min_predictive, q);
    max_null = std::max(max_null, z);
    null_sum += z;
  }
  return {positive == 20 && null_nonpositive == 20,
          fmt("Q2 > 0 in %d/20 predictive seeds (min %.4f); Q2 <= 0 in %d/20 null seeds "
              "(max %.4f, mean %.4f)",
              positive, min_predictive, null_nonpositive, max_null, null_sum / 20)};
}

// ---------------------------------------------------------------- 8

Outcome ols_oracle() {
  Eigen::VectorXd x(5), y(5);
  x << 1, 2, 3, 4, 5;
  y << 2.1, 3.9, 6.0, 8.1, 9.9;
  // By hand: x mean 3, y mean 6, sxx 10, sxy 19.8, syy 39.24.
  const double slope = 19.8 / 10.0;
  const double r2 = 19.8 * 19.8 / (10.0 * 39.24);
  const double se = std::sqrt((39.24 - slope * 19.8) / 3.0 / 10.0);
  const double p = two_tailed_t_p(slope / se, 3.0);
  const auto fit = simple_ols(x, y);
  const double fixed_err = std::max({std::abs(fit.slope - slope), std::abs(fit.r_squared - r2),
                                     std::abs(fit.p_value - p),
                                     std::abs(fit.intercept - (6.0 - slope * 3.0))});
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    StreamRng rng(s, 8, 0);
    const Eigen::Index n = 3 + Eigen::Index(rng.below(60));
    const Eigen::VectorXd u = noise(40000 + s, n);
    const Eigen::VectorXd v = rng.uniform() * u + noise(50000 + s, n);
    const double r = pearson(u, v);
    worst = std::max(worst, std::abs(simple_ols(u, v).r_squared - r * r));
  }
  return {fixed_err < 1e-10 && worst < 1e-12,
          fmt("5-point max deviation %.1e (slope %.4f, R2 %.6f, p %.3e); 100 instances "
              "max |R2 - r^2| = %.1e",
              fixed_err, fit.slope, fit.r_squared, fit.p_value, worst)};
}

// ---------------------------------------------------------------- 9

Outcome cobb_douglas_check() {
  double homogeneity = 0.0, loglinear = 0.0, recovery = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    StreamRng rng(s, 9, 0);
    const double alpha = rng.uniform();
    const Eigen::Index n = 20;
    const Eigen::ArrayXd a = (noise(60000 + s, n).array() * 0.5).exp() * 2.0;
    const Eigen::ArrayXd k = (noise(70000 + s, n).array() * 0.8).exp() * 7.0;
    const double lambda = 0.5 + 3.0 * rng.uniform();
    const auto y = cobb_douglas_eval(a, k, alpha, CobbDouglasMode::Canonical);
    const auto ys = cobb_douglas_eval(lambda * a, lambda * k, alpha, CobbDouglasMode::Canonical);
    homogeneity = std::max(homogeneity, ((ys - lambda * y) / (lambda * y)).abs().maxCoeff());
    loglinear = std::max(loglinear,
                         (y.log() - (alpha * k.log() + (1 - alpha) * a.log())).abs().maxCoeff());
    recovery = std::max(recovery, std::abs(cobb_douglas_fit(y, a, k).alpha - alpha));
  }
  return {homogeneity < 1e-12 && loglinear < 1e-12 && recovery < 1e-8,
          fmt("50 instances: homogeneity %.1e, log-linearity %.1e, alpha recovery %.1e",
              homogeneity, loglinear, recovery)};
}

// ---------------------------------------------------------------- 10

int invoke(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"spatialecon"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(int(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "spatialecon_acceptance";
  fs::remove_all(root);
  const unsigned wide = std::max(8u, default_threads());
  const std::vector<std::string> threads{"1", "1", std::to_string(wide), "0"};
  std::size_t files = 0, mismatches = 0;
  for (const std::string cmd : {"lisa", "plssem"}) {
    std::vector<fs::path> dirs;
    for (std::size_t k = 0; k < threads.size(); ++k) {
      dirs.push_back(root / (cmd + std::to_string(k)));
      std::vector<std::string> args{cmd,
                                    "--input", (kFixture / "panel.csv").string(),
                                    "--out", dirs.back().string(),
                                    "--seed", "2024",
                                    "--threads", threads[k]};
      if (cmd == "lisa") {
        args.insert(args.end(), {"--geometry", (kFixture / "regions.geojson").string(),
                                 "--permutations", "999", "--variable", "TIC,PIB", "--year", "2017"});
      } else {
        args.insert(args.end(), {"--model", (kFixture / "model.json").string(),
                                 "--bootstrap", "1000"});
      }
      if (invoke(args) != 0) return {false, cmd + " failed to run"};
    }
    for (const auto& entry : fs::recursive_directory_iterator(dirs[0])) {
      if (!entry.is_regular_file()) continue;
      const auto rel = fs::relative(entry.path(), dirs[0]);
      const auto reference = slurp(entry.path());
      ++files;
      for (std::size_t k = 1; k < dirs.size(); ++k) mismatches += slurp(dirs[k] / rel) != reference;
    }
  }
  fs::remove_all(root);
  return {files > 0 && mismatches == 0,
          fmt("lisa and plssem at threads 1, 1, %u and all cores: %zu files, %zu mismatches",
              wide, files, mismatches)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known_red;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    const std::string flag = "--known-red=";
    if (arg.rfind(flag, 0) != 0) {
      std::cerr << "unknown argument " << arg << std::endl;
      return 2;
    }
    std::stringstream list(arg.substr(flag.size()));
    for (std::string id; std::getline(list, id, ',');)
      if (!id.empty()) known_red.insert(std::stoi(id));
  }

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "standardization cross-check", 1, standardization_cross_check},
      {2, "connectivity identity", 5, connectivity_identity},
      {3, "LISA decomposition", 10, lisa_decomposition},
      {4, "permutation-null calibration", 60, permutation_calibration},
      {5, "PLS recovery", 60, pls_recovery},
      {6, "bootstrap calibration", 300, bootstrap_calibration},
      {7, "blindfolding sign check", 60, blindfolding_sign},
      {8, "OLS oracle", 5, ols_oracle},
      {9, "Cobb-Douglas", 1, cobb_douglas_check},
      {10, "determinism", 120, determinism}};

  int failed = 0, unexpected = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs < c.budget_s;
    const bool pass = o.pass && in_budget;
    failed += !pass;
    unexpected += !pass && !known_red.contains(c.id);
    std::cout << "criterion " << c.id << ' ' << (pass ? "PASS" : "FAIL") << " [" << c.name
              << "] " << fmt("%.2fs / %.0fs", secs, c.budget_s)
              << (in_budget ? "" : " over budget") << ": " << o.detail
              << (!pass && known_red.contains(c.id) ? " (known red)" : "") << std::endl;
  }
  std::cout << (criteria.size() - std::size_t(failed)) << '/' << criteria.size()
            << " criteria passed";
  if (!known_red.empty()) std::cout << ", " << unexpected << " unexpected failures";
  std::cout << std::endl;
  return unexpected == 0 ? 0 : 1;
}
