#include "spatialecon/autocorr.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "spatialecon/error.hpp"
#include "spatialecon/panel.hpp"
#include "spatialecon/parallel.hpp"
#include "spatialecon/rng.hpp"

namespace spatialecon {
namespace {

constexpr std::uint64_t kGlobalStream = ~std::uint64_t{0};
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Error autocorr_error(ErrorKind kind, const std::string& op, const std::string& msg) {
  return Error(kind, "spatial_autocorr", op, msg);
}

struct Prepared {
  SpatialWeights w;                 // row-standardized
  std::vector<Eigen::Index> used;   // non-isolates
  std::vector<Eigen::Index> slot;   // region -> position in `used`, -1 for isolates
  Eigen::VectorXd z;                // deviations from the non-isolate mean
  double ss = 0.0;                  // sum z^2 over non-isolates
  double m2 = 0.0;                  // ss / n_used
};

Prepared prepare(const Eigen::Ref<const Eigen::VectorXd>& values, const SpatialWeights& weights,
                 const std::string& op) {
  if (values.size() != weights.size())
    throw autocorr_error(ErrorKind::Alignment, op,
                         "values have " + std::to_string(values.size()) +
                             " entries but weights cover " + std::to_string(weights.size()) +
                             " regions");
  if (!values.allFinite())
    throw autocorr_error(ErrorKind::Value, op, "values contain non-finite entries");

  Prepared p{weights.standardized() ? weights : row_standardize(weights), {}, {}, {}, 0.0, 0.0};
  p.slot.assign(std::size_t(values.size()), -1);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!weights.is_isolate(i)) {
      p.slot[std::size_t(i)] = Eigen::Index(p.used.size());
      p.used.push_back(i);
    }
  }
  const auto n = Eigen::Index(p.used.size());
  if (n < 3)
    throw autocorr_error(ErrorKind::InsufficientData, op,
                         "fewer than 3 regions with neighbours");
  double mean = 0.0, lo = values(p.used[0]), hi = lo;
  for (auto i : p.used) {
    mean += values(i);
    lo = std::min(lo, values(i));
    hi = std::max(hi, values(i));
  }
  mean /= double(n);
  if (!(hi - lo > 1e-12 * std::max({std::abs(lo), std::abs(hi), 1e-300})))
    throw autocorr_error(ErrorKind::Degenerate, op, "values are constant across regions");
  p.z = values.array() - mean;
  for (auto i : p.used) p.ss += p.z(i) * p.z(i);
  p.m2 = p.ss / double(n);
  return p;
}

double moran_of(const Prepared& p, const Eigen::VectorXd& z) {
  double num = 0.0;
  for (auto i : p.used) {
    double lag = 0.0;
    for (const auto& nb : p.w.neighbors(i)) lag += nb.weight * z(nb.index);
    num += z(i) * lag;
  }
  return num / p.ss;
}

std::vector<std::string> isolate_ids(const SpatialWeights& w) {
  std::vector<std::string> out;
  for (auto i : w.isolates()) out.push_back(w.ids()[std::size_t(i)]);
  return out;
}

bool at_least_as_extreme(double deviation, double observed) {
  return deviation >= observed * (1.0 - 1e-12);
}

// Conditional permutation for every non-isolate region. `fixed` supplies the
// region's own factor and `source` the values drawn for its neighbours.
Eigen::VectorXd conditional_pseudo_p(const Prepared& p, const Eigen::VectorXd& fixed,
                                     const Eigen::VectorXd& source, double m2,
                                     const Eigen::VectorXd& local,
                                     const PermutationConfig& config) {
  const auto n = Eigen::Index(p.used.size());
  double source_total = 0.0;
  for (auto i : p.used) source_total += source(i);
  Eigen::VectorXd pseudo = Eigen::VectorXd::Constant(p.w.size(), kNaN);
  std::vector<double> slots(p.used.size(), kNaN);

  parallel_for(p.used.size(), config.threads, [&](std::size_t k) {
    const Eigen::Index i = p.used[k];
    const auto& row = p.w.neighbors(i);
    const auto pool = std::size_t(n - 1);
    const std::size_t draw = std::min(row.size(), pool);
    double row_weight = 0.0;
    for (const auto& nb : row) row_weight += nb.weight;
    const double expected_lag = row_weight * (source_total - source(i)) / double(pool);
    const double expected = fixed(i) * expected_lag / m2;
    const double observed = std::abs(local(i) - expected);

    std::vector<std::size_t> chosen;
    chosen.reserve(draw);
    long extreme = 0;
    for (int perm = 0; perm < config.n_permutations; ++perm) {
      StreamRng rng(config.seed, std::uint64_t(i), std::uint64_t(perm));
      // Floyd's sampling of `draw` distinct pool positions, then a shuffle so
      // unequal weights are paired with neighbours uniformly at random.
      chosen.clear();
      for (std::size_t j = pool - draw; j < pool; ++j) {
        const auto t = std::size_t(rng.below(j + 1));
        if (std::find(chosen.begin(), chosen.end(), t) == chosen.end()) chosen.push_back(t);
        else chosen.push_back(j);
      }
      rng.partial_shuffle(std::span<std::size_t>(chosen), chosen.size());
      double lag = 0.0;
      for (std::size_t l = 0; l < draw; ++l) {
        const std::size_t t = chosen[l];
        const Eigen::Index region = p.used[t < k ? t : t + 1];
        lag += row[l].weight * source(region);
      }
      const double stat = fixed(i) * lag / m2;
      if (at_least_as_extreme(std::abs(stat - expected), observed)) ++extreme;
    }
    slots[k] = double(extreme + 1) / double(config.n_permutations + 1);
  });

  for (std::size_t k = 0; k < p.used.size(); ++k) pseudo(p.used[k]) = slots[k];
  return pseudo;
}

void check_permutations(const PermutationConfig& config, const std::string& op) {
  if (config.n_permutations < 99)
    throw autocorr_error(ErrorKind::Parameter, op, "at least 99 permutations are required");
}

std::string threshold_label(double t) {
  std::string s = format_double(t);
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  return "p<" + s;
}

nlohmann::json number_or_null(double v) {
  return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
}

}  // namespace

std::string_view to_string(Quadrant q) noexcept {
  switch (q) {
    case Quadrant::HH: return "HH";
    case Quadrant::LL: return "LL";
    case Quadrant::LH: return "LH";
    case Quadrant::HL: return "HL";
    case Quadrant::Missing: return "missing";
  }
  return "missing";
}

MoranGlobal global_moran(const Eigen::Ref<const Eigen::VectorXd>& values,
                         const SpatialWeights& weights) {
  const Prepared p = prepare(values, weights, "global_moran");
  MoranGlobal out;
  out.statistic = moran_of(p, p.z);
  out.n_used = Eigen::Index(p.used.size());
  out.expected = -1.0 / double(out.n_used - 1);
  out.isolates = isolate_ids(weights);
  return out;
}

MoranGlobal moran_permutation(const Eigen::Ref<const Eigen::VectorXd>& values,
                              const SpatialWeights& weights, const PermutationConfig& config) {
  check_permutations(config, "moran_permutation");
  const Prepared p = prepare(values, weights, "moran_permutation");
  MoranGlobal out;
  out.statistic = moran_of(p, p.z);
  out.n_used = Eigen::Index(p.used.size());
  out.expected = -1.0 / double(out.n_used - 1);
  out.isolates = isolate_ids(weights);
  out.n_permutations = config.n_permutations;
  out.seed = config.seed;

  std::vector<double> base(p.used.size());
  for (std::size_t k = 0; k < p.used.size(); ++k) base[k] = p.z(p.used[k]);
  std::vector<double> stats(std::size_t(config.n_permutations));
  parallel_for(stats.size(), config.threads, [&](std::size_t perm) {
    StreamRng rng(config.seed, kGlobalStream, perm);
    std::vector<double> shuffled = base;
    rng.partial_shuffle(std::span<double>(shuffled), shuffled.size());
    Eigen::VectorXd z = p.z;
    for (std::size_t k = 0; k < p.used.size(); ++k) z(p.used[k]) = shuffled[k];
    stats[perm] = moran_of(p, z);
  });

  const double observed = std::abs(out.statistic - out.expected);
  long extreme = 0;
  for (double s : stats)
    if (at_least_as_extreme(std::abs(s - out.expected), observed)) ++extreme;
  out.pseudo_p = double(extreme + 1) / double(config.n_permutations + 1);
  return out;
}

Eigen::VectorXd local_moran(const Eigen::Ref<const Eigen::VectorXd>& values,
                            const SpatialWeights& weights) {
  const Prepared p = prepare(values, weights, "local_moran");
  const Eigen::VectorXd lag = p.w.lag(p.z);
  Eigen::VectorXd local = Eigen::VectorXd::Constant(values.size(), kNaN);
  for (auto i : p.used) local(i) = p.z(i) * lag(i) / p.m2;
  return local;
}

LisaResult lisa_classify(const Eigen::Ref<const Eigen::VectorXd>& values,
                         const SpatialWeights& weights, const PermutationConfig& config,
                         const std::vector<double>& thresholds) {
  check_permutations(config, "lisa_classify");
  const Prepared p = prepare(values, weights, "lisa_classify");
  LisaResult r;
  r.ids = weights.ids();
  r.z = p.z;
  r.lag = p.w.lag(p.z);
  r.local = Eigen::VectorXd::Constant(values.size(), kNaN);
  for (auto i : p.used) r.local(i) = p.z(i) * r.lag(i) / p.m2;
  r.pseudo_p = conditional_pseudo_p(p, p.z, p.z, p.m2, r.local, config);
  r.quadrant.assign(std::size_t(values.size()), Quadrant::Missing);
  for (auto i : p.used) r.quadrant[std::size_t(i)] = quadrant_of(r.z(i), r.lag(i));
  r.significance = significance_map(r.pseudo_p, thresholds);
  r.n_permutations = config.n_permutations;
  r.seed = config.seed;
  return r;
}

LisaResult bivariate_local_moran(const Eigen::Ref<const Eigen::VectorXd>& x,
                                 const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const SpatialWeights& weights, const PermutationConfig& config,
                                 const std::vector<double>& thresholds) {
  check_permutations(config, "bivariate_local_moran");
  const Prepared px = prepare(x, weights, "bivariate_local_moran");
  const Prepared py = prepare(y, weights, "bivariate_local_moran");
  const Eigen::VectorXd zx = px.z / std::sqrt(px.m2);
  const Eigen::VectorXd zy = py.z / std::sqrt(py.m2);
  double m2y = 0.0;
  for (auto i : py.used) m2y += zy(i) * zy(i);
  m2y /= double(py.used.size());

  LisaResult r;
  r.bivariate = true;
  r.ids = weights.ids();
  r.z = zx;
  r.lag = py.w.lag(zy);
  r.local = Eigen::VectorXd::Constant(x.size(), kNaN);
  for (auto i : px.used) r.local(i) = zx(i) * r.lag(i) / m2y;
  r.pseudo_p = conditional_pseudo_p(px, zx, zy, m2y, r.local, config);
  r.quadrant.assign(std::size_t(x.size()), Quadrant::Missing);
  for (auto i : px.used) r.quadrant[std::size_t(i)] = quadrant_of(zx(i), r.lag(i));
  r.significance = significance_map(r.pseudo_p, thresholds);
  r.n_permutations = config.n_permutations;
  r.seed = config.seed;
  return r;
}

std::string significance_class(double pseudo_p, const std::vector<double>& thresholds) {
  if (std::isnan(pseudo_p)) return "missing";
  std::vector<double> t = thresholds;
  std::sort(t.begin(), t.end());
  for (double level : t)
    if (pseudo_p <= level) return threshold_label(level);
  return "ns";
}

std::vector<std::string> significance_map(const Eigen::Ref<const Eigen::VectorXd>& pseudo_p,
                                          const std::vector<double>& thresholds) {
  std::vector<std::string> out;
  out.reserve(std::size_t(pseudo_p.size()));
  for (Eigen::Index i = 0; i < pseudo_p.size(); ++i)
    out.push_back(significance_class(pseudo_p(i), thresholds));
  return out;
}

nlohmann::json to_json(const MoranGlobal& m) {
  return {{"I", m.statistic},
          {"expected", m.expected},
          {"n_used", m.n_used},
          {"pseudo_p", number_or_null(m.pseudo_p)},
          {"n_permutations", m.n_permutations},
          {"seed", m.seed},
          {"isolates", m.isolates}};
}

nlohmann::json to_json(const LisaResult& r) {
  nlohmann::json regions = nlohmann::json::array();
  for (std::size_t i = 0; i < r.ids.size(); ++i) {
    const auto k = Eigen::Index(i);
    regions.push_back({{"id", r.ids[i]},
                       {"local_I", number_or_null(r.local(k))},
                       {"z", r.z(k)},
                       {"lag", r.lag(k)},
                       {"quadrant", to_string(r.quadrant[i])},
                       {"pseudo_p", number_or_null(r.pseudo_p(k))},
                       {"class", r.significance[i]}});
  }
  return {{"bivariate", r.bivariate},
          {"n_permutations", r.n_permutations},
          {"seed", r.seed},
          {"regions", regions}};
}

nlohmann::json merge_lisa_geojson(const nlohmann::json& collection,
                                  const std::string& id_property, const LisaResult& result) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < result.ids.size(); ++i) index.emplace(result.ids[i], i);
  nlohmann::json out = collection;
  for (auto& f : out["features"]) {
    if (!f.contains("properties") || !f["properties"].is_object())
      f["properties"] = nlohmann::json::object();
    auto& props = f["properties"];
    const nlohmann::json* raw = nullptr;
    if (props.contains(id_property)) raw = &props[id_property];
    else if (f.contains("id")) raw = &f["id"];
    if (!raw) continue;
    const auto id = raw->is_string() ? raw->get<std::string>() : raw->dump();
    auto it = index.find(id);
    if (it == index.end()) continue;
    const auto k = Eigen::Index(it->second);
    props["lisa_I"] = number_or_null(result.local(k));
    props["lisa_p"] = number_or_null(result.pseudo_p(k));
    props["lisa_quadrant"] = to_string(result.quadrant[it->second]);
    props["lisa_class"] = result.significance[it->second];
  }
  return out;
}

}  // namespace spatialecon
