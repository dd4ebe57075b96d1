#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hierport/allocators.hpp"
#include "hierport/backtest.hpp"
#include "hierport/hierclust.hpp"
#include "hierport/market_data.hpp"

namespace hierport {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kConfigEnvVar = "HIERPORT_CONFIG";

struct Sector {
  std::string name;
  std::vector<std::string> tickers;
};

struct RunConfig {
  std::vector<Sector> sectors;
  std::filesystem::path data_dir = "data";
  std::optional<std::filesystem::path> prices_csv;  // wide CSV instead of per-ticker files
  Date train_start;
  Date train_end;
  Date test_end;
  std::vector<Method> methods{Method::mvp, Method::hrp, Method::herc};
  std::filesystem::path output_dir = "out";

  std::string date_column = "Date";
  std::string close_column = "Close";
  AlignPolicy align = AlignPolicy::intersect;
  int max_start_gap_days = 7;

  double annualization_days = kDefaultAnnualizationDays;
  double risk_free_rate = 0.0;
  std::size_t workers = 1;

  std::size_t mvp_samples = 10000;
  std::uint64_t mvp_seed = 42;
  SimplexSampling mvp_sampling = SimplexSampling::normalized_uniform;

  LinkageRule hrp_linkage = LinkageRule::ward;

  LinkageRule herc_linkage = LinkageRule::ward;
  std::optional<std::size_t> herc_k;  // empty: auto
  RiskMeasure herc_risk_measure = RiskMeasure::std_dev;
  ClusterWeighting herc_weighting = ClusterWeighting::inverse;
  std::size_t herc_gap_k_max = 0;
  std::size_t herc_gap_refs = 100;
  std::uint64_t herc_seed = 7;

  bool has_method(Method m) const;
  /// Throws Error(config) naming the offending field.
  void validate() const;
  /// Overrides every per-method seed.
  void set_seed(std::uint64_t seed);
};

/// Flat `key = value` file; `#` starts a comment. Relative paths resolve
/// against the config file's directory.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& cfg);

/// Training and test price tables for one sector.
struct SectorData {
  PriceTable train;
  PriceTable test;
};

SectorData load_sector(const RunConfig& cfg, const Sector& sector);

/// Fitted state for one sector on its training window.
struct SectorFit {
  ReturnMatrix train_returns;
  CovMatrix cov;
  ExpectedReturns mu;
  std::optional<LinkageTree> hrp_tree;
  std::optional<LinkageTree> herc_tree;
  std::optional<std::size_t> herc_k;
  std::optional<MvpResult> mvp;
  std::map<Method, WeightVector> weights;
};

SectorFit fit_sector(const RunConfig& cfg, const PriceTable& train, bool keep_mvp_samples = true);

struct SectorOutcome {
  std::string sector;
  bool ok = false;
  std::string error;
  std::map<std::string, std::string> weights;      // method -> path
  std::map<std::string, std::string> dendrograms;  // method -> path
  std::map<std::string, std::string> frontiers;    // method -> path
  std::map<std::string, std::string> reports;      // "<method>_<period>" -> path
  std::optional<std::size_t> herc_k;
};

struct RunManifest {
  std::string tool_version = kVersion;
  std::string config_json;
  std::map<std::string, std::uint64_t> seeds;
  std::vector<SectorOutcome> sectors;
  std::string summary;  // path, empty if no sector succeeded

  bool all_ok() const;
  std::string to_json() const;
};

/// Whole study: per sector load, split, fit every enabled allocator, evaluate
/// on both periods and write outputs under cfg.output_dir. A failing sector is
/// recorded in the manifest and does not stop the others. Paths in the
/// manifest are relative to the output directory.
RunManifest run_pipeline(const RunConfig& cfg);

/// Write via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// Filesystem-safe form of a sector name.
std::string slug(const std::string& name);

}  // namespace hierport
