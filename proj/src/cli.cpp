#include "spatialecon/cli.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <ostream>
#include <sstream>

#include "spatialecon/autocorr.hpp"
#include "spatialecon/error.hpp"
#include "spatialecon/growth.hpp"
#include "spatialecon/normality.hpp"
#include "spatialecon/panel.hpp"
#include "spatialecon/pls.hpp"
#include "spatialecon/rng.hpp"
#include "spatialecon/weights.hpp"

#ifndef SPATIALECON_VERSION
#define SPATIALECON_VERSION "0.0.0"
#endif

namespace spatialecon::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Error cli_error(ErrorKind kind, const std::string& op, const std::string& msg) {
  return Error(kind, "cli_report", op, msg);
}

std::string read_file(const std::string& path, const std::string& op) {
  if (path.empty()) throw cli_error(ErrorKind::Io, op, "required input path not given");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cli_error(ErrorKind::Io, op, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

json options_json(const Options& o) {
  json j{{"input", o.input},
         {"geometry", o.geometry},
         {"gal", o.gal},
         {"model", o.model},
         {"id_property", o.id_property},
         {"contiguity", o.contiguity},
         {"delimiter", std::string(1, o.delimiter)},
         {"seed", o.seed},
         {"permutations", o.permutations},
         {"alpha", o.alpha},
         {"mode", o.mode},
         {"variables", o.variables},
         {"variable_y", o.variable_y},
         {"pairs", o.pairs},
         {"grouping", o.grouping},
         {"raw_regression", o.raw_regression},
         {"cut", o.cut},
         {"growth", {{"a", o.growth_a}, {"k", o.growth_k}, {"y", o.growth_y}, {"per", o.growth_per}}}};
  j["bootstrap"] = o.bootstrap ? json(*o.bootstrap) : json(nullptr);
  j["year"] = o.year ? json(*o.year) : json(nullptr);
  j["pls_year"] = o.pls_year ? json(*o.pls_year) : json(nullptr);
  j["omission_distance"] = o.omission_distance ? json(*o.omission_distance) : json(nullptr);
  j["estimator"] = o.estimator;
  return j;
}

// One output directory with its manifest. Thread count and the output path
// are left out of the manifest so reruns compare byte for byte.
class Stage {
 public:
  Stage(std::string name, fs::path dir, const Options& opt)
      : name_(std::move(name)), dir_(std::move(dir)), opt_(opt) {
    fs::create_directories(dir_);
  }

  const std::string& name() const noexcept { return name_; }
  const Options& options() const noexcept { return opt_; }
  std::uint64_t seed(std::string_view purpose) const { return derive_seed(opt_.seed, purpose); }

  std::string input(const std::string& path) {
    auto bytes = read_file(path, name_);
    inputs_.push_back({{"path", path}, {"sha256", sha256_hex(bytes)}});
    return bytes;
  }

  void write(const std::string& file, const std::string& bytes) {
    std::ofstream out(dir_ / file, std::ios::binary | std::ios::trunc);
    if (!out) throw cli_error(ErrorKind::Io, name_, "cannot write " + (dir_ / file).string());
    out << bytes;
    out.close();
    outputs_.push_back({{"path", file}, {"sha256", sha256_hex(bytes)}});
  }

  void write_json(const std::string& file, const json& j) { write(file, j.dump(2) + "\n"); }

  void note(const std::string& key, json value) { notes_[key] = std::move(value); }

  std::string finish() {
    json m{{"tool", "spatialecon"},
           {"version", SPATIALECON_VERSION},
           {"command", name_},
           {"seed", opt_.seed},
           {"config", options_json(opt_)},
           {"inputs", inputs_},
           {"outputs", outputs_}};
    for (auto& [k, v] : notes_.items()) m[k] = v;
    const std::string bytes = m.dump(2) + "\n";
    std::ofstream out(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
    out << bytes;
    return sha256_hex(bytes);
  }

 private:
  std::string name_;
  fs::path dir_;
  const Options& opt_;
  json inputs_ = json::array();
  json outputs_ = json::array();
  json notes_ = json::object();
};

// ------------------------------------------------------------ input helpers

PanelDataset load_panel_input(Stage& st) {
  std::istringstream in(st.input(st.options().input));
  PanelSchema schema;
  schema.delimiter = st.options().delimiter;
  return load_panel(in, schema);
}

std::vector<std::string> selected_indicators(const Options& o, const PanelDataset& p) {
  if (o.variables.empty()) return p.indicators();
  for (const auto& v : o.variables) p.indicator_index(v);
  return o.variables;
}

struct LoadedWeights {
  SpatialWeights weights;
  std::optional<json> geojson;
  std::string source;
};

LoadedWeights load_weights_input(Stage& st) {
  const auto& o = st.options();
  LoadedWeights lw;
  if (!o.gal.empty()) {
    std::istringstream in(st.input(o.gal));
    lw.weights = load_gal(in);
    lw.source = "gal";
    if (!o.geometry.empty()) lw.geojson = json::parse(st.input(o.geometry));
    return lw;
  }
  if (o.geometry.empty())
    throw cli_error(ErrorKind::Io, st.name(), "spatial stages need --geometry or --gal");
  json fc;
  try {
    fc = json::parse(st.input(o.geometry));
  } catch (const json::parse_error& e) {
    throw cli_error(ErrorKind::Format, st.name(), o.geometry + ": " + e.what());
  }
  const auto regions = read_geojson_regions(fc, o.id_property);
  for (const auto& r : regions) validate_region(r);
  if (o.contiguity == "queen") lw.weights = queen_contiguity(regions);
  else if (o.contiguity == "rook") lw.weights = rook_contiguity(regions);
  else throw cli_error(ErrorKind::Parameter, st.name(), "contiguity must be queen or rook");
  lw.weights.layer = fs::path(o.geometry).stem().string();
  lw.weights.id_variable = o.id_property;
  lw.geojson = std::move(fc);
  lw.source = o.contiguity;
  return lw;
}

int resolve_year(const Options& o, const PanelDataset& p) {
  if (o.year) {
    p.year_index(*o.year);
    return *o.year;
  }
  if (p.years().empty()) throw cli_error(ErrorKind::InsufficientData, "year", "panel has no years");
  return p.years().back();
}

// Values in weights order; NaN where the panel cell is missing.
Eigen::VectorXd aligned_values(const PanelDataset& p, const SpatialWeights& w,
                               const std::string& indicator, int year, const std::string& op) {
  const auto col = p.column(indicator, year);
  Eigen::VectorXd v(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const auto r = p.find_region(w.ids()[std::size_t(i)]);
    if (!r)
      throw cli_error(ErrorKind::Alignment, op,
                      "region " + w.ids()[std::size_t(i)] + " has weights but no panel rows");
    v(i) = col(*r);
  }
  return v;
}

// ------------------------------------------------------------ stages

void stage_describe(Stage& st) {
  const auto& o = st.options();
  const auto panel = load_panel_input(st);
  std::ostringstream csv, classes;
  csv << "indicator,year,n,mean,sd,variance,coef_var,min,median,max,range\n";
  classes << "indicator,year,region_code,value,class\n";
  json rows = json::array(), skipped = json::array(), above = json::array();
  for (const auto& ind : selected_indicators(o, panel)) {
    const auto ii = panel.indicator_index(ind);
    for (std::size_t y = 0; y < panel.years().size(); ++y) {
      const int year = panel.years()[y];
      const auto cs = panel.cross_section(ii, Eigen::Index(y));
      if (cs.values.size() < 2) {
        skipped.push_back({{"indicator", ind}, {"year", year}, {"reason", "fewer than 2 values"}});
        continue;
      }
      const auto d = describe(panel, ind, year);
      csv << ind << ',' << year << ',' << d.n << ',' << csv_number(d.mean) << ','
          << csv_number(d.sd) << ',' << csv_number(d.variance) << ',' << csv_number(d.coef_var)
          << ',' << csv_number(d.min) << ',' << csv_number(d.median) << ','
          << csv_number(d.max) << ',' << csv_number(d.range) << '\n';
      rows.push_back({{"indicator", ind}, {"year", year}, {"n", d.n},
                      {"mean", d.mean}, {"sd", d.sd}, {"variance", d.variance},
                      {"coef_var", number_or_null(d.coef_var)}, {"min", d.min},
                      {"median", d.median}, {"max", d.max}, {"range", d.range}});
      if (cs.values.size() < 4) continue;
      const auto cls = classify_percentile(panel, ind, year, o.cut);
      for (std::size_t r = 0; r < cls.labels.size(); ++r) {
        if (cls.labels[r] == PercentileClass::Missing) continue;
        classes << ind << ',' << year << ',' << csv_field(panel.regions()[r].code) << ','
                << csv_number(*panel.value(Eigen::Index(r), ii, Eigen::Index(y))) << ','
                << (cls.labels[r] == PercentileClass::Above ? "above" : "below") << '\n';
      }
      above.push_back({{"indicator", ind}, {"year", year}, {"threshold", cls.threshold},
                       {"above", cls.above}});
    }
  }
  st.write("describe.csv", csv.str());
  st.write_json("describe.json", {{"panel", panel_manifest(panel)},
                                  {"statistics", rows},
                                  {"skipped", skipped}});
  st.write("percentile_classes.csv", classes.str());
  st.write_json("percentile_classes.json", {{"cut", o.cut}, {"classes", above}});
}

void stage_standardize(Stage& st) {
  const auto panel = load_panel_input(st);
  const auto z = standardize(panel);
  std::ostringstream data;
  PanelSchema schema;
  schema.delimiter = st.options().delimiter;
  save_panel(data, z, schema);
  st.write("standardized.csv", data.str());

  std::ostringstream rows;
  rows << "microregion,indicator,year,capital_z,mean_z\n";
  for (const auto& ind : z.indicators())
    for (int year : z.years()) {
      const auto cap = microregion_rows(z, ind, year, RegionRowMode::Capital);
      const auto mean = microregion_rows(z, ind, year, RegionRowMode::Mean);
      for (std::size_t m = 0; m < cap.size(); ++m)
        rows << csv_field(cap[m].microregion) << ',' << ind << ',' << year << ','
             << (cap[m].value ? format_double(*cap[m].value) : std::string()) << ','
             << (mean[m].value ? format_double(*mean[m].value) : std::string()) << '\n';
    }
  st.write("microregion_rows.csv", rows.str());
  st.write_json("standardized.json", panel_manifest(z));
}

void stage_normality(Stage& st) {
  const auto& o = st.options();
  const auto panel = load_panel_input(st);
  const double alpha = o.alpha.empty() ? 0.05 : o.alpha.front();
  std::ostringstream csv;
  csv << "indicator,year,test,n,statistic,p_value,p_kind,decision\n";
  json results = json::array(), skipped = json::array();
  for (const auto& ind : selected_indicators(o, panel)) {
    const auto ii = panel.indicator_index(ind);
    for (std::size_t y = 0; y < panel.years().size(); ++y) {
      const int year = panel.years()[y];
      const auto cs = panel.cross_section(ii, Eigen::Index(y));
      for (const auto* test : {"shapiro_wilk", "ryan_joiner"}) {
        try {
          const auto r = std::string(test) == "shapiro_wilk" ? shapiro_wilk(cs.values, alpha)
                                                             : ryan_joiner(cs.values, alpha);
          auto j = to_json(r);
          csv << ind << ',' << year << ',' << r.test << ',' << r.n << ','
              << csv_number(r.statistic) << ',' << csv_number(r.p_value) << ','
              << j["p_kind"].get<std::string>() << ',' << j["decision"].get<std::string>()
              << '\n';
          j["indicator"] = ind;
          j["year"] = year;
          results.push_back(j);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::UnsupportedSize && e.kind() != ErrorKind::Degenerate)
            throw;
          skipped.push_back({{"indicator", ind}, {"year", year}, {"test", test},
                             {"reason", e.what()}});
        }
      }
    }
  }
  st.write("normality.csv", csv.str());
  st.write_json("normality.json", {{"alpha", alpha}, {"results", results}, {"skipped", skipped}});
}

void stage_weights(Stage& st) {
  const auto lw = load_weights_input(st);
  std::ostringstream gal;
  save_gal(gal, lw.weights);
  st.write("weights.gal", gal.str());
  const auto summary = connectivity_summary(lw.weights);
  auto j = to_json(summary);
  j["source"] = lw.source;
  j["symmetric"] = lw.weights.is_symmetric();
  st.write_json("connectivity.json", j);
}

void stage_moran(Stage& st, const PanelDataset& panel, const LoadedWeights& lw) {
  const auto& o = st.options();
  const int year = resolve_year(o, panel);
  PermutationConfig pc{o.permutations, st.seed("moran"), o.threads};
  std::ostringstream csv;
  csv << "variable,year,I,expected,n_used,pseudo_p,n_permutations\n";
  json results = json::array(), skipped = json::array();
  for (const auto& ind : selected_indicators(o, panel)) {
    const auto v = aligned_values(panel, lw.weights, ind, year, "moran");
    if (!v.allFinite()) {
      skipped.push_back({{"variable", ind}, {"reason", "missing values in the cross-section"}});
      continue;
    }
    const auto m = moran_permutation(v, lw.weights, pc);
    auto j = to_json(m);
    j["variable"] = ind;
    results.push_back(j);
    csv << ind << ',' << year << ',' << format_double(m.statistic) << ','
        << format_double(m.expected) << ',' << m.n_used << ',' << csv_number(m.pseudo_p) << ','
        << m.n_permutations << '\n';
  }
  st.write("moran.csv", csv.str());
  st.write_json("moran.json", {{"year", year},
                               {"weights", lw.source},
                               {"seed", pc.seed},
                               {"results", results},
                               {"skipped", skipped}});
}

void stage_lisa(Stage& st, const PanelDataset& panel, const LoadedWeights& lw) {
  const auto& o = st.options();
  const int year = resolve_year(o, panel);
  const std::string x = o.variables.empty() ? panel.indicators().front() : o.variables.front();
  PermutationConfig pc{o.permutations, st.seed("lisa"), o.threads};
  auto thresholds = o.alpha;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  const auto xv = aligned_values(panel, lw.weights, x, year, "lisa");
  LisaResult r;
  if (o.variable_y.empty()) {
    r = lisa_classify(xv, lw.weights, pc, thresholds);
  } else {
    const auto yv = aligned_values(panel, lw.weights, o.variable_y, year, "lisa");
    r = bivariate_local_moran(xv, yv, lw.weights, pc, thresholds);
  }
  std::ostringstream csv;
  csv << "id,local_I,z,lag,quadrant,pseudo_p,class\n";
  for (std::size_t i = 0; i < r.ids.size(); ++i) {
    const auto k = Eigen::Index(i);
    csv << csv_field(r.ids[i]) << ',' << csv_number(r.local(k)) << ',' << csv_number(r.z(k))
        << ',' << csv_number(r.lag(k)) << ',' << to_string(r.quadrant[i]) << ','
        << csv_number(r.pseudo_p(k)) << ',' << r.significance[i] << '\n';
  }
  auto j = to_json(r);
  j["variable"] = x;
  j["variable_y"] = o.variable_y.empty() ? json(nullptr) : json(o.variable_y);
  j["year"] = year;
  j["thresholds"] = thresholds;
  st.write("lisa.csv", csv.str());
  st.write_json("lisa.json", j);
  if (lw.geojson) st.write_json("lisa.geojson", merge_lisa_geojson(*lw.geojson, o.id_property, r));
}

void stage_spatial(Stage& st, bool moran, bool lisa) {
  const auto panel = load_panel_input(st);
  const auto lw = load_weights_input(st);
  if (moran) stage_moran(st, panel, lw);
  if (lisa) stage_lisa(st, panel, lw);
}

void stage_plssem(Stage& st) {
  const auto& o = st.options();
  const auto panel = load_panel_input(st);
  json spec;
  try {
    spec = json::parse(st.input(o.model));
  } catch (const json::parse_error& e) {
    throw cli_error(ErrorKind::Format, "plssem", o.model + ": " + e.what());
  }
  const auto model = pls::PathModel::from_json(spec);
  const json cfg = spec.value("config", json::object());
  pls::PlsConfig pc;
  pc.tolerance = cfg.value("tolerance", pc.tolerance);
  pc.max_iterations = cfg.value("max_iterations", pc.max_iterations);
  pc.bootstrap = o.bootstrap.value_or(cfg.value("bootstrap", pc.bootstrap));
  pc.omission_distance = o.omission_distance.value_or(cfg.value("omission_distance", pc.omission_distance));
  const std::string estimator =
      !o.estimator.empty() ? o.estimator : cfg.value("estimator", std::string("classic"));
  if (estimator != "classic" && estimator != "consistent")
    throw cli_error(ErrorKind::Parameter, "plssem", "estimator must be classic or consistent");
  pc.consistent = estimator == "consistent";
  pc.seed = st.seed("plssem");
  pc.threads = o.threads;
  std::optional<int> year = o.pls_year;
  if (!year && cfg.contains("year") && cfg["year"].is_number_integer()) year = cfg["year"].get<int>();

  const auto pooled = pls::pool_panel(model, panel, year);
  const auto report = pls::run_pls(model, pooled.matrix, pc);
  auto j = pls::to_json(model, report);
  j["pooling"] = {{"rows", pooled.matrix.rows()},
                  {"dropped", pooled.dropped},
                  {"year", year ? json(*year) : json("pooled")}};
  j["config"] = {{"tolerance", pc.tolerance},
                 {"max_iterations", pc.max_iterations},
                 {"bootstrap", pc.bootstrap},
                 {"omission_distance", pc.omission_distance},
                 {"seed", pc.seed}};
  st.write_json("plssem.json", j);

  std::ostringstream paths;
  paths << "relation,beta,t,p_value,r_squared,ci_2_5,ci_97_5,beta_display,t_display,p_display,"
           "supported\n";
  for (const auto& e : report.bootstrap.edges)
    paths << e.relation << ',' << format_double(e.beta) << ',' << csv_number(e.t) << ','
          << format_double(e.p_value) << ',' << format_double(e.r_squared) << ','
          << format_double(e.ci_low) << ',' << format_double(e.ci_high) << ','
          << display_round(e.beta) << ',' << display_round(e.t) << ',' << display_p(e.p_value)
          << ',' << (e.p_value < 0.05 ? "yes" : "no") << '\n';
  st.write("paths.csv", paths.str());

  std::ostringstream quality;
  quality << "construct,indicators,cronbach_alpha,composite_reliability,ave,rho_a\n";
  for (std::size_t k = 0; k < report.quality.size(); ++k) {
    const auto& q = report.quality[k];
    quality << q.construct << ',' << q.indicators << ',' << format_double(q.cronbach_alpha)
            << ',' << format_double(q.composite_reliability) << ',' << format_double(q.ave)
            << ',' << format_double(report.estimates.rho_a(Eigen::Index(k))) << '\n';
  }
  st.write("quality.csv", quality.str());
}

void stage_regress(Stage& st) {
  const auto& o = st.options();
  const auto panel = load_panel_input(st);
  const auto data = o.raw_regression ? panel : standardize(panel);
  Grouping g;
  if (o.grouping == "microregion") g = Grouping::Microregion;
  else if (o.grouping == "whole") g = Grouping::Whole;
  else if (o.grouping == "both") g = Grouping::Both;
  else throw cli_error(ErrorKind::Parameter, "regress", "grouping must be microregion, whole or both");
  const auto rows = group_ols(data, g, parse_pairs(o.pairs), data.years(), o.threads);
  std::ostringstream csv;
  write_regression_csv(csv, rows);
  st.write("regression.csv", csv.str());
  json arr = json::array();
  for (const auto& r : rows) arr.push_back(to_json(r));
  st.write_json("regression.json", {{"values", o.raw_regression ? "raw" : "standardized"},
                                    {"whole_group", std::string(kWholeGroup)},
                                    {"rows", arr}});
}

void stage_growth(Stage& st) {
  const auto& o = st.options();
  auto panel = load_panel_input(st);
  const auto mode = parse_cobb_douglas_mode(o.mode);
  std::string ycode = o.growth_y;
  if (!o.growth_per.empty()) {
    ycode = o.growth_y + "_per_" + o.growth_per;
    panel = derive_ratio(panel, o.growth_y, o.growth_per, ycode);
  }
  const auto ai = panel.indicator_index(o.growth_a);
  const auto ki = panel.indicator_index(o.growth_k);
  const auto yi = panel.indicator_index(ycode);
  std::vector<double> ys, as, ks;
  std::vector<std::pair<std::string, int>> keys;
  std::size_t dropped = 0;
  for (Eigen::Index r = 0; r < panel.region_count(); ++r)
    for (std::size_t t = 0; t < panel.years().size(); ++t) {
      const auto a = panel.value(r, ai, Eigen::Index(t));
      const auto k = panel.value(r, ki, Eigen::Index(t));
      const auto y = panel.value(r, yi, Eigen::Index(t));
      if (!a || !k || !y || *a <= 0.0 || *k <= 0.0 || *y <= 0.0) {
        ++dropped;
        continue;
      }
      as.push_back(*a);
      ks.push_back(*k);
      ys.push_back(*y);
      keys.emplace_back(panel.regions()[std::size_t(r)].code, panel.years()[t]);
    }
  const auto n = Eigen::Index(ys.size());
  const Eigen::Map<const Eigen::ArrayXd> A(as.data(), n), K(ks.data(), n), Y(ys.data(), n);
  const auto fit = cobb_douglas_fit(Y, A, K);
  const double alpha = std::clamp(fit.alpha, 0.0, 1.0);
  const Eigen::ArrayXd yhat = cobb_douglas_eval(A, K, alpha, mode);

  std::ostringstream csv;
  csv << "region_code,year,A,K,Y,Y_hat\n";
  for (Eigen::Index i = 0; i < n; ++i)
    csv << csv_field(keys[std::size_t(i)].first) << ',' << keys[std::size_t(i)].second << ','
        << format_double(A(i)) << ',' << format_double(K(i)) << ',' << format_double(Y(i)) << ','
        << format_double(yhat(i)) << '\n';
  st.write("growth.csv", csv.str());
  st.write_json("growth.json",
                {{"mode", std::string(to_string(mode))},
                 {"alpha_used", alpha},
                 {"fit", to_json(fit)},
                 {"rows", n},
                 {"dropped", dropped},
                 {"provenance",
                  {{"A", o.growth_a},
                   {"K", o.growth_k},
                   {"Y", o.growth_per.empty() ? o.growth_y : o.growth_y + " / " + o.growth_per}}}});
}

struct StageDef {
  const char* name;
  std::function<void(Stage&)> run;
};

const std::vector<StageDef>& pipeline_stages() {
  static const std::vector<StageDef> stages{
      {"describe", stage_describe},
      {"standardize", stage_standardize},
      {"normality", stage_normality},
      {"weights", stage_weights},
      {"moran", [](Stage& s) { stage_spatial(s, true, true); }},
      {"plssem", stage_plssem},
      {"regress", stage_regress},
      {"growth", stage_growth}};
  return stages;
}

json error_record(const std::string& command, const Error& e) {
  return {{"command", command},
          {"exit_code", kExitInput},
          {"error",
           {{"module", e.module()},
            {"operation", e.operation()},
            {"kind", std::string(to_string(e.kind()))},
            {"message", e.what()}}}};
}

void write_error_file(const fs::path& dir, const json& record) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return;
  std::ofstream out(dir / "error.json", std::ios::binary | std::ios::trunc);
  out << record.dump(2) << '\n';
}

void run_pipeline(const Options& o, std::ostream& out) {
  const fs::path root(o.out);
  fs::create_directories(root);
  json stages = json::array();
  auto write_bundle = [&](const std::string& status) {
    json m{{"tool", "spatialecon"},
           {"version", SPATIALECON_VERSION},
           {"command", "pipeline"},
           {"seed", o.seed},
           {"status", status},
           {"stages", stages}};
    std::ofstream f(root / "manifest.json", std::ios::binary | std::ios::trunc);
    f << m.dump(2) << '\n';
  };
  for (const auto& def : pipeline_stages()) {
    Stage st(def.name, root / def.name, o);
    try {
      def.run(st);
    } catch (...) {
      write_bundle(std::string("failed at ") + def.name);
      throw;
    }
    stages.push_back({{"name", def.name},
                      {"manifest", std::string(def.name) + "/manifest.json"},
                      {"sha256", st.finish()}});
    out << "stage " << def.name << " ok\n";
  }
  write_bundle("complete");
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--input", o.input, "Long-format panel file")->envname("SPATIALECON_INPUT");
  sub->add_option("--geometry", o.geometry, "GeoJSON FeatureCollection of regions")
      ->envname("SPATIALECON_GEOMETRY");
  sub->add_option("--gal", o.gal, "GAL weights file")->envname("SPATIALECON_GAL");
  sub->add_option("--model", o.model, "PLS model specification (JSON)")->envname("SPATIALECON_MODEL");
  sub->add_option("--out", o.out, "Output directory")->envname("SPATIALECON_OUT");
  sub->add_option("--seed", o.seed, "Master seed")->envname("SPATIALECON_SEED");
  sub->add_option("--permutations", o.permutations, "Permutations for pseudo p-values")
      ->check(CLI::Range(99, 100000000))
      ->envname("SPATIALECON_PERMUTATIONS");
  sub->add_option("--bootstrap", o.bootstrap, "Bootstrap resamples")
      ->check(CLI::Range(500, 100000000))
      ->envname("SPATIALECON_BOOTSTRAP");
  sub->add_option("--alpha", o.alpha, "Significance levels, comma separated")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0))
      ->envname("SPATIALECON_ALPHA");
  sub->add_option("--mode", o.mode, "Cobb-Douglas mode: canonical, product, as_published")
      ->envname("SPATIALECON_MODE");
  sub->add_option("--variable", o.variables, "Indicator(s), comma separated")->delimiter(',');
  sub->add_option("--variable-y", o.variable_y, "Second indicator for bivariate LISA");
  sub->add_option("--year", o.year, "Cross-section year for spatial stages");
  sub->add_option("--pls-year", o.pls_year, "Restrict PLS pooling to one year");
  sub->add_option("--omission-distance", o.omission_distance, "Blindfolding omission distance")
      ->check(CLI::Range(2, 1000000));
  sub->add_option("--estimator", o.estimator, "PLS estimator: classic or consistent");
  sub->add_option("--pairs", o.pairs, "Regression pairs predictor:response, comma separated");
  sub->add_option("--grouping", o.grouping, "microregion, whole or both");
  sub->add_flag("--raw", o.raw_regression, "Regress raw instead of standardized values");
  sub->add_option("--cut", o.cut, "Percentile cut for the class map")->check(CLI::Range(0.0, 99.999));
  sub->add_option("--id-property", o.id_property, "GeoJSON property holding region codes");
  sub->add_option("--contiguity", o.contiguity, "queen or rook");
  sub->add_option("--growth-a", o.growth_a, "Indicator for A");
  sub->add_option("--growth-k", o.growth_k, "Indicator for K");
  sub->add_option("--growth-y", o.growth_y, "Indicator for Y");
  sub->add_option("--growth-per", o.growth_per, "Per-capita denominator for Y (empty: none)");
  sub->add_option("--threads", o.threads, "Worker threads (0: all cores)")
      ->envname("SPATIALECON_THREADS");
  sub->add_option_function<std::string>(
         "--delimiter",
         [&o](const std::string& d) {
           if (d == "tab" || d == "\\t") o.delimiter = '\t';
           else if (d.size() == 1) o.delimiter = d[0];
           else throw CLI::ValidationError("--delimiter", "expects one character or 'tab'");
         },
         "Panel field delimiter")
      ->envname("SPATIALECON_DELIMITER");
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw cli_error(ErrorKind::Io, "sha256", "digest failed");
  std::string hex;
  hex.reserve(len * 2);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path.string(), "sha256")); }

std::vector<std::string> validate_bundle(const fs::path& dir) {
  std::vector<std::string> bad;
  const auto text = read_file((dir / "manifest.json").string(), "validate");
  json m;
  try {
    m = json::parse(text);
  } catch (const json::parse_error& e) {
    throw cli_error(ErrorKind::Format, "validate", e.what());
  }
  auto check = [&](const fs::path& file, const std::string& digest) {
    std::error_code ec;
    if (!fs::exists(file, ec) || sha256_file(file) != digest) bad.push_back(file.string());
  };
  if (m.contains("stages")) {
    for (const auto& s : m["stages"]) {
      check(dir / s.at("manifest").get<std::string>(), s.at("sha256").get<std::string>());
      for (auto& b : validate_bundle(dir / s.at("name").get<std::string>())) bad.push_back(b);
    }
  }
  for (const auto& o : m.value("outputs", json::array()))
    check(dir / o.at("path").get<std::string>(), o.at("sha256").get<std::string>());
  return bad;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Spatial econometrics pipeline: panels, contiguity weights, Moran/LISA, PLS-SEM, "
               "regional regressions and Cobb-Douglas growth."};
  app.require_subcommand(1);
  struct Cmd {
    const char* name;
    const char* help;
    std::function<void(Stage&)> run;
  };
  const std::vector<Cmd> cmds{
      {"describe", "Descriptive statistics and percentile classes", stage_describe},
      {"standardize", "Standard scores per (indicator, year)", stage_standardize},
      {"normality", "Shapiro-Wilk and Ryan-Joiner tests", stage_normality},
      {"weights", "Contiguity weights and connectivity summary", stage_weights},
      {"moran", "Global Moran's I with permutation inference",
       [](Stage& s) { stage_spatial(s, true, false); }},
      {"lisa", "Local Moran / bivariate local Moran",
       [](Stage& s) { stage_spatial(s, false, true); }},
      {"plssem", "PLS path model with quality battery and bootstrap", stage_plssem},
      {"regress", "Group-wise OLS per pair and year", stage_regress},
      {"growth", "Cobb-Douglas fit and evaluation", stage_growth}};
  std::vector<CLI::App*> subs;
  for (const auto& c : cmds) {
    subs.push_back(app.add_subcommand(c.name, c.help));
    add_common(subs.back(), o);
  }
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage into one bundle");
  add_common(pipeline, o);
  auto* validate = app.add_subcommand("validate", "Re-check a bundle against its manifest");
  validate->add_option("--out", o.out, "Bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Error& e) {
    std::ostringstream help, msg;
    const int code = app.exit(e, help, msg);
    out << help.str();
    err << msg.str();
    return code == 0 ? kExitOk : kExitInput;
  }

  std::string command = "pipeline";
  for (std::size_t i = 0; i < subs.size(); ++i)
    if (*subs[i]) command = cmds[i].name;
  if (*validate) command = "validate";

  try {
    if (command == "validate") {
      const auto bad = validate_bundle(o.out);
      for (const auto& b : bad) err << "digest mismatch: " << b << '\n';
      if (!bad.empty()) return kExitInput;
      out << "bundle ok\n";
      return kExitOk;
    }
    if (command == "pipeline") {
      run_pipeline(o, out);
      return kExitOk;
    }
    for (const auto& c : cmds) {
      if (command != c.name) continue;
      Stage st(c.name, o.out, o);
      c.run(st);
      st.finish();
    }
    return kExitOk;
  } catch (const Error& e) {
    const auto record = error_record(command, e);
    err << record.dump() << '\n';
    write_error_file(o.out, record);
    return kExitInput;
  } catch (const std::exception& e) {
    json record{{"command", command},
                {"exit_code", kExitInternal},
                {"error", {{"module", "internal"}, {"operation", command}, {"kind", "internal"},
                           {"message", e.what()}}}};
    err << record.dump() << '\n';
    write_error_file(o.out, record);
    return kExitInternal;
  }
}

}  // namespace spatialecon::cli
