#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spatialecon::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitInternal = 2;

struct Options {
  std::string input;
  std::string geometry;
  std::string gal;
  std::string model;
  std::string out = "out";
  std::string id_property = "code";
  std::string contiguity = "queen";
  char delimiter = ',';
  std::uint64_t seed = 1;
  int permutations = 9999;
  std::optional<int> bootstrap;  // unset: model config, then 5000
  std::vector<double> alpha{0.05, 0.01, 0.001};
  std::string mode = "canonical";
  std::vector<std::string> variables;  // empty: every indicator
  std::string variable_y;              // bivariate LISA partner
  std::optional<int> year;             // cross-section for spatial stages
  std::optional<int> pls_year;         // restrict PLS pooling to one year
  std::optional<int> omission_distance;
  std::string estimator;  // "classic" or "consistent"; empty: model config
  std::string pairs = "TIC:POB,CBO:POB";
  std::string grouping = "both";
  bool raw_regression = false;  // regress raw rather than standardized values
  double cut = 75.0;
  std::string growth_a = "TIC";
  std::string growth_k = "IUPP";
  std::string growth_y = "PIB";
  std::string growth_per = "POB";  // denominator for per-capita Y; empty disables
  unsigned threads = 0;
};

/// Runs one subcommand; returns 0 on success, 1 for input or data errors, 2
/// for internal failures. Failures write an error record to `err` and, when
/// the output directory exists, to error.json inside it.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Re-hashes every output listed in dir/manifest.json (recursing into stage
/// manifests of a pipeline bundle). Returns the mismatching paths.
std::vector<std::string> validate_bundle(const std::filesystem::path& dir);

}  // namespace spatialecon::cli
