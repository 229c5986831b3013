#include "spatialecon/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <tuple>
#include <unordered_map>

#include "spatialecon/error.hpp"

namespace spatialecon {
namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

Error panel_error(ErrorKind kind, std::string op, const std::string& msg) {
  return Error(kind, "panel_core", std::move(op), msg);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

bool is_missing_token(std::string_view s) {
  return s.empty() || s == "NA" || s == "na" || s == "." || s == "-";
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::string> split_delimited(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

PanelDataset::PanelDataset(std::vector<RegionId> regions,
                           std::vector<std::string> indicators, std::vector<int> years)
    : regions_(std::move(regions)),
      indicators_(std::move(indicators)),
      years_(std::move(years)) {
  for (std::size_t i = 1; i < years_.size(); ++i) {
    if (years_[i] <= years_[i - 1])
      throw panel_error(ErrorKind::Value, "construct", "years must be strictly increasing");
  }
  std::set<std::string_view> seen;
  for (const auto& ind : indicators_) {
    if (!seen.insert(ind).second)
      throw panel_error(ErrorKind::Conflict, "construct", "duplicate indicator " + ind);
  }
  std::set<std::string_view> codes;
  for (const auto& r : regions_) {
    if (!codes.insert(r.code).second)
      throw panel_error(ErrorKind::Conflict, "construct", "duplicate region code " + r.code);
    if (r.microregion.empty())
      throw panel_error(ErrorKind::Value, "construct",
                        "region " + r.code + " has an empty microregion");
  }
  values_.assign(indicators_.size(),
                 Eigen::MatrixXd::Constant(Eigen::Index(regions_.size()),
                                           Eigen::Index(years_.size()), kMissing));
}

std::optional<Eigen::Index> PanelDataset::find_region(std::string_view code) const {
  for (std::size_t i = 0; i < regions_.size(); ++i)
    if (regions_[i].code == code) return Eigen::Index(i);
  return std::nullopt;
}

std::optional<Eigen::Index> PanelDataset::find_indicator(std::string_view code) const {
  for (std::size_t i = 0; i < indicators_.size(); ++i)
    if (indicators_[i] == code) return Eigen::Index(i);
  return std::nullopt;
}

std::optional<Eigen::Index> PanelDataset::find_year(int year) const {
  auto it = std::lower_bound(years_.begin(), years_.end(), year);
  if (it == years_.end() || *it != year) return std::nullopt;
  return Eigen::Index(it - years_.begin());
}

Eigen::Index PanelDataset::indicator_index(std::string_view code) const {
  if (auto i = find_indicator(code)) return *i;
  throw panel_error(ErrorKind::Value, "lookup", "unknown indicator " + std::string(code));
}

Eigen::Index PanelDataset::year_index(int year) const {
  if (auto i = find_year(year)) return *i;
  throw panel_error(ErrorKind::Value, "lookup", "unknown year " + std::to_string(year));
}

std::optional<double> PanelDataset::value(Eigen::Index region, Eigen::Index indicator,
                                          Eigen::Index year) const {
  const double v = values_[indicator](region, year);
  if (std::isnan(v)) return std::nullopt;
  return v;
}

void PanelDataset::set(Eigen::Index region, Eigen::Index indicator, Eigen::Index year,
                       double v) {
  if (!std::isfinite(v))
    throw panel_error(ErrorKind::Value, "set",
                      "non-finite value for region " + regions_[region].code);
  values_[indicator](region, year) = v;
}

void PanelDataset::clear(Eigen::Index region, Eigen::Index indicator, Eigen::Index year) {
  values_[indicator](region, year) = kMissing;
}

Eigen::VectorXd PanelDataset::column(std::string_view indicator, int year) const {
  return values_[indicator_index(indicator)].col(year_index(year));
}

PanelDataset::CrossSection PanelDataset::cross_section(Eigen::Index indicator,
                                                       Eigen::Index year) const {
  const auto col = values_[indicator].col(year);
  CrossSection cs;
  for (Eigen::Index r = 0; r < col.size(); ++r)
    if (!std::isnan(col(r))) cs.regions.push_back(r);
  cs.values.resize(Eigen::Index(cs.regions.size()));
  for (std::size_t k = 0; k < cs.regions.size(); ++k) cs.values(Eigen::Index(k)) = col(cs.regions[k]);
  return cs;
}

std::size_t PanelDataset::cell_count() const noexcept {
  return regions_.size() * indicators_.size() * years_.size();
}

std::size_t PanelDataset::observed_count() const noexcept {
  std::size_t n = 0;
  for (const auto& m : values_) n += std::size_t((m.array() == m.array()).count());
  return n;
}

bool PanelDataset::operator==(const PanelDataset& other) const {
  if (regions_ != other.regions_ || indicators_ != other.indicators_ ||
      years_ != other.years_)
    return false;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const auto& a = values_[i].array();
    const auto& b = other.values_[i].array();
    if (!((a == b) || (a.isNaN() && b.isNaN())).all()) return false;
  }
  return true;
}

PanelDataset load_panel(std::istream& in, const PanelSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_delimited(line, schema.delimiter);
      break;
    }
  }
  if (header.empty())
    throw panel_error(ErrorKind::Parse, "load_panel", "missing header row");
  if (header.front().rfind("\xEF\xBB\xBF", 0) == 0) header.front().erase(0, 3);

  auto column_of = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return i;
    if (required)
      throw panel_error(ErrorKind::Parse, "load_panel",
                        "line " + std::to_string(line_no) + ": header lacks column '" +
                            name + "'");
    return std::nullopt;
  };
  const std::size_t c_code = *column_of(schema.region_code, true);
  const std::size_t c_name = *column_of(schema.region_name, true);
  const std::size_t c_micro = *column_of(schema.microregion, true);
  const std::size_t c_ind = *column_of(schema.indicator, true);
  const std::size_t c_year = *column_of(schema.year, true);
  const std::size_t c_value = *column_of(schema.value, true);
  const auto c_capital = column_of(schema.capital, false);

  struct Row {
    std::size_t region, indicator;
    int year;
    double value;
    std::size_t line;
  };
  std::vector<RegionId> regions;
  std::unordered_map<std::string, std::size_t> region_pos;
  std::vector<std::string> indicators;
  std::unordered_map<std::string, std::size_t> indicator_pos;
  std::set<int> years;
  std::vector<Row> rows;
  std::set<std::tuple<std::size_t, std::size_t, int>> keys;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_delimited(line, schema.delimiter);
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (f.size() != header.size())
      throw panel_error(ErrorKind::Parse, "load_panel",
                        where + "expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(f.size()));
    RegionId rid{trim(f[c_code]), trim(f[c_name]), trim(f[c_micro]), false};
    if (rid.code.empty())
      throw panel_error(ErrorKind::Parse, "load_panel", where + "empty region code");
    if (rid.microregion.empty())
      throw panel_error(ErrorKind::Parse, "load_panel", where + "empty microregion");
    if (c_capital) {
      const auto cap = trim(f[*c_capital]);
      rid.capital = cap == "1" || cap == "true" || cap == "TRUE" || cap == "yes";
    }
    const auto ind = trim(f[c_ind]);
    if (ind.empty())
      throw panel_error(ErrorKind::Parse, "load_panel", where + "empty indicator");

    int year = 0;
    const auto ytxt = trim(f[c_year]);
    auto [yp, yec] = std::from_chars(ytxt.data(), ytxt.data() + ytxt.size(), year);
    if (yec != std::errc{} || yp != ytxt.data() + ytxt.size())
      throw panel_error(ErrorKind::Parse, "load_panel", where + "bad year '" + ytxt + "'");

    double value = kMissing;
    const auto vtxt = trim(f[c_value]);
    if (!is_missing_token(vtxt)) {
      auto [vp, vec] = std::from_chars(vtxt.data(), vtxt.data() + vtxt.size(), value);
      if (vec != std::errc{} || vp != vtxt.data() + vtxt.size())
        throw panel_error(ErrorKind::Parse, "load_panel", where + "bad value '" + vtxt + "'");
      if (!std::isfinite(value))
        throw panel_error(ErrorKind::Value, "load_panel", where + "non-finite value '" + vtxt + "'");
    }

    auto [rit, rnew] = region_pos.try_emplace(rid.code, regions.size());
    if (rnew) {
      regions.push_back(rid);
    } else {
      auto& known = regions[rit->second];
      if (known.name != rid.name || known.microregion != rid.microregion)
        throw panel_error(ErrorKind::Conflict, "load_panel",
                          where + "region " + rid.code + " metadata disagrees with earlier rows");
      known.capital = known.capital || rid.capital;
    }
    auto [iit, inew] = indicator_pos.try_emplace(ind, indicators.size());
    if (inew) indicators.push_back(ind);
    years.insert(year);

    if (!keys.emplace(rit->second, iit->second, year).second)
      throw panel_error(ErrorKind::Conflict, "load_panel",
                        where + "duplicate cell (" + rid.code + ", " + ind + ", " +
                            std::to_string(year) + ")");
    rows.push_back({rit->second, iit->second, year, value, line_no});
  }

  PanelDataset data(std::move(regions), std::move(indicators),
                    std::vector<int>(years.begin(), years.end()));
  for (const auto& r : rows) {
    if (std::isnan(r.value)) continue;
    data.set(Eigen::Index(r.region), Eigen::Index(r.indicator), *data.find_year(r.year),
             r.value);
  }
  return data;
}

void save_panel(std::ostream& out, const PanelDataset& data, const PanelSchema& schema) {
  const char d = schema.delimiter;
  auto quote = [d](const std::string& s) {
    if (s.find(d) == std::string::npos && s.find('"') == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q.push_back('"');
      q.push_back(c);
    }
    return q + "\"";
  };
  out << schema.region_code << d << schema.region_name << d << schema.microregion << d
      << schema.capital << d << schema.indicator << d << schema.year << d << schema.value
      << '\n';
  for (Eigen::Index r = 0; r < data.region_count(); ++r) {
    const auto& reg = data.regions()[std::size_t(r)];
    for (std::size_t i = 0; i < data.indicators().size(); ++i) {
      for (std::size_t y = 0; y < data.years().size(); ++y) {
        const auto v = data.value(r, Eigen::Index(i), Eigen::Index(y));
        out << quote(reg.code) << d << quote(reg.name) << d << quote(reg.microregion) << d
            << (reg.capital ? 1 : 0) << d << quote(data.indicators()[i]) << d
            << data.years()[y] << d << (v ? format_double(*v) : std::string("NA")) << '\n';
      }
    }
  }
}

nlohmann::json panel_manifest(const PanelDataset& data) {
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& r : data.regions())
    regions.push_back({{"code", r.code},
                       {"name", r.name},
                       {"microregion", r.microregion},
                       {"capital", r.capital}});
  return {{"regions", regions},
          {"indicators", data.indicators()},
          {"years", data.years()},
          {"cells", data.cell_count()},
          {"observed", data.observed_count()}};
}

DescriptiveStats<double> describe(const PanelDataset& data, std::string_view indicator,
                                  int year) {
  const auto cs =
      data.cross_section(data.indicator_index(indicator), data.year_index(year));
  if (cs.values.size() < 2)
    throw panel_error(ErrorKind::InsufficientData, "describe",
                      "fewer than 2 observed values for " + std::string(indicator) + " " +
                          std::to_string(year));
  return describe_values(cs.values);
}

PanelDataset standardize(const PanelDataset& data) {
  PanelDataset out = data;
  for (std::size_t i = 0; i < data.indicators().size(); ++i) {
    for (std::size_t y = 0; y < data.years().size(); ++y) {
      const auto cs = data.cross_section(Eigen::Index(i), Eigen::Index(y));
      if (cs.values.size() == 0) continue;
      const double mu = cs.values.mean();
      const double sd = sample_sd(cs.values);
      if (!(sd > 0.0))
        throw panel_error(ErrorKind::Degenerate, "standardize",
                          "zero standard deviation for " + data.indicators()[i] + " " +
                              std::to_string(data.years()[y]));
      for (std::size_t k = 0; k < cs.regions.size(); ++k)
        out.set(cs.regions[k], Eigen::Index(i), Eigen::Index(y),
                (cs.values(Eigen::Index(k)) - mu) / sd);
    }
  }
  return out;
}

PercentileClassification classify_percentile(const PanelDataset& data,
                                             std::string_view indicator, int year,
                                             double cut) {
  if (!(cut >= 0.0 && cut < 100.0))
    throw panel_error(ErrorKind::Parameter, "classify_percentile",
                      "cut must lie in [0, 100)");
  const auto cs =
      data.cross_section(data.indicator_index(indicator), data.year_index(year));
  if (cs.values.size() < 4)
    throw panel_error(ErrorKind::InsufficientData, "classify_percentile",
                      "fewer than 4 observed values for " + std::string(indicator) + " " +
                          std::to_string(year));
  PercentileClassification out;
  out.cut = cut;
  out.threshold = quantile(cs.values, cut / 100.0);
  out.labels.assign(std::size_t(data.region_count()), PercentileClass::Missing);
  std::vector<std::pair<double, Eigen::Index>> above;
  for (std::size_t k = 0; k < cs.regions.size(); ++k) {
    const double v = cs.values(Eigen::Index(k));
    const bool is_above = v > out.threshold;
    out.labels[std::size_t(cs.regions[k])] =
        is_above ? PercentileClass::Above : PercentileClass::Below;
    if (is_above) above.emplace_back(v, cs.regions[k]);
  }
  std::stable_sort(above.begin(), above.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [v, r] : above) out.above.push_back(data.regions()[std::size_t(r)].code);
  return out;
}

PanelDataset derive_ratio(const PanelDataset& data, std::string_view numerator,
                          std::string_view denominator, std::string code) {
  if (data.find_indicator(code))
    throw panel_error(ErrorKind::Conflict, "derive_ratio", "indicator " + code + " exists");
  const auto num = data.indicator_index(numerator);
  const auto den = data.indicator_index(denominator);
  auto indicators = data.indicators();
  indicators.push_back(code);
  PanelDataset out(data.regions(), indicators, data.years());
  const auto added = Eigen::Index(indicators.size() - 1);
  for (Eigen::Index r = 0; r < data.region_count(); ++r) {
    for (Eigen::Index y = 0; y < Eigen::Index(data.years().size()); ++y) {
      for (Eigen::Index i = 0; i < added; ++i)
        if (auto v = data.value(r, i, y)) out.set(r, i, y, *v);
      const auto a = data.value(r, num, y);
      const auto b = data.value(r, den, y);
      if (a && b && *b != 0.0) out.set(r, added, y, *a / *b);
    }
  }
  return out;
}

std::vector<std::string> microregions(const PanelDataset& data) {
  std::vector<std::string> out;
  for (const auto& r : data.regions())
    if (std::find(out.begin(), out.end(), r.microregion) == out.end())
      out.push_back(r.microregion);
  return out;
}

std::vector<MicroregionRow> microregion_rows(const PanelDataset& data,
                                             std::string_view indicator, int year,
                                             RegionRowMode mode) {
  const auto i = data.indicator_index(indicator);
  const auto y = data.year_index(year);
  std::vector<MicroregionRow> out;
  for (const auto& micro : microregions(data)) {
    MicroregionRow row{micro, std::nullopt};
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index r = 0; r < data.region_count(); ++r) {
      const auto& reg = data.regions()[std::size_t(r)];
      if (reg.microregion != micro) continue;
      const auto v = data.value(r, i, y);
      if (mode == RegionRowMode::Capital) {
        if (reg.capital) row.value = v;
      } else if (v) {
        sum += *v;
        ++count;
      }
    }
    if (mode == RegionRowMode::Mean && count > 0) row.value = sum / count;
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace spatialecon
