#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spatialecon/descriptive.hpp"

namespace spatialecon {

struct RegionId {
  std::string code;
  std::string name;
  std::string microregion;
  bool capital = false;  // seat of its microregion

  bool operator==(const RegionId&) const = default;
};

/// Region x indicator x year grid. Missing cells are stored as NaN; loaders
/// reject non-finite input so NaN is never ambiguous.
class PanelDataset {
 public:
  PanelDataset() = default;
  PanelDataset(std::vector<RegionId> regions, std::vector<std::string> indicators,
               std::vector<int> years);

  const std::vector<RegionId>& regions() const noexcept { return regions_; }
  const std::vector<std::string>& indicators() const noexcept { return indicators_; }
  const std::vector<int>& years() const noexcept { return years_; }

  Eigen::Index region_count() const noexcept { return Eigen::Index(regions_.size()); }

  std::optional<Eigen::Index> find_region(std::string_view code) const;
  std::optional<Eigen::Index> find_indicator(std::string_view code) const;
  std::optional<Eigen::Index> find_year(int year) const;

  Eigen::Index indicator_index(std::string_view code) const;  // throws Value
  Eigen::Index year_index(int year) const;                    // throws Value

  std::optional<double> value(Eigen::Index region, Eigen::Index indicator,
                              Eigen::Index year) const;
  void set(Eigen::Index region, Eigen::Index indicator, Eigen::Index year, double v);
  void clear(Eigen::Index region, Eigen::Index indicator, Eigen::Index year);

  /// regions x years for one indicator, NaN where missing.
  const Eigen::MatrixXd& grid(Eigen::Index indicator) const { return values_[indicator]; }

  /// Full column of one (indicator, year), NaN where missing, in region order.
  Eigen::VectorXd column(std::string_view indicator, int year) const;

  /// Observed values of one cross-section plus the region index of each.
  struct CrossSection {
    Eigen::VectorXd values;
    std::vector<Eigen::Index> regions;
  };
  CrossSection cross_section(Eigen::Index indicator, Eigen::Index year) const;

  std::size_t cell_count() const noexcept;
  std::size_t observed_count() const noexcept;

  bool operator==(const PanelDataset& other) const;

 private:
  std::vector<RegionId> regions_;
  std::vector<std::string> indicators_;
  std::vector<int> years_;
  std::vector<Eigen::MatrixXd> values_;
};

struct PanelSchema {
  char delimiter = ',';
  std::string region_code = "region_code";
  std::string region_name = "region_name";
  std::string microregion = "microregion";
  std::string indicator = "indicator";
  std::string year = "year";
  std::string value = "value";
  std::string capital = "capital";  // optional column
};

PanelDataset load_panel(std::istream& in, const PanelSchema& schema = {});
void save_panel(std::ostream& out, const PanelDataset& data,
                const PanelSchema& schema = {});
nlohmann::json panel_manifest(const PanelDataset& data);

DescriptiveStats<double> describe(const PanelDataset& data, std::string_view indicator,
                                  int year);

/// Standard scores per (indicator, year) cross-section over observed regions.
PanelDataset standardize(const PanelDataset& data);

enum class PercentileClass { Below, Above, Missing };

struct PercentileClassification {
  double cut = 0.0;        // percent
  double threshold = 0.0;  // value of the cut percentile
  std::vector<PercentileClass> labels;  // per region
  std::vector<std::string> above;       // region codes, descending by value
};

PercentileClassification classify_percentile(const PanelDataset& data,
                                             std::string_view indicator, int year,
                                             double cut);

/// Adds indicator `code` = numerator / denominator cellwise (e.g. GDP per capita).
PanelDataset derive_ratio(const PanelDataset& data, std::string_view numerator,
                          std::string_view denominator, std::string code);

enum class RegionRowMode { Capital, Mean };

struct MicroregionRow {
  std::string microregion;
  std::optional<double> value;
};

/// One value per microregion, in first-appearance order: either the capital
/// municipality's cell or the mean over observed member municipalities.
std::vector<MicroregionRow> microregion_rows(const PanelDataset& data,
                                             std::string_view indicator, int year,
                                             RegionRowMode mode = RegionRowMode::Capital);

std::vector<std::string> microregions(const PanelDataset& data);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// Splits one delimited line, honouring double-quoted fields.
std::vector<std::string> split_delimited(std::string_view line, char delimiter);

}  // namespace spatialecon
