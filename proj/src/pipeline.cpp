#include "hierport/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "hierport/error.hpp"
#include "hierport/format.hpp"

namespace hierport {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& msg) {
  fail(ErrorKind::config, "config field '" + field + "': " + msg);
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  for (const auto& item : detail::split_csv_line(value)) {
    const auto t = detail::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

template <typename T>
T parse_unsigned(const std::string& key, std::string_view v) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) config_error(key, "expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

double parse_real(const std::string& key, std::string_view v) {
  double out = 0.0;
  if (!detail::parse_double(v, out) || !std::isfinite(out)) config_error(key, "expected a number, got '" + std::string(v) + "'");
  return out;
}

Date parse_config_date(const std::string& key, std::string_view v) {
  auto d = Date::parse(v);
  if (!d) config_error(key, "expected YYYY-MM-DD, got '" + std::string(v) + "'");
  return *d;
}

template <typename Fn>
auto parse_enum(const std::string& key, const std::string& v, Fn fn) {
  try {
    return fn(v);
  } catch (const Error& e) {
    config_error(key, e.what());
  }
}

fs::path resolve(const fs::path& base, std::string_view v) {
  fs::path p{std::string(v)};
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

}  // namespace

bool RunConfig::has_method(Method m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }

void RunConfig::set_seed(std::uint64_t seed) {
  mvp_seed = seed;
  herc_seed = seed;
}

void RunConfig::validate() const {
  if (!(train_start < train_end)) config_error("train_end", "must be after train_start");
  if (!(train_end < test_end)) config_error("test_end", "must be after train_end");
  if (sectors.empty()) config_error("sector", "at least one sector is required");
  std::set<std::string> names;
  std::set<std::string> slugs;
  for (const auto& s : sectors) {
    if (s.tickers.size() < 2) config_error("sector." + s.name, "needs at least 2 tickers");
    if (!names.insert(s.name).second) config_error("sector." + s.name, "duplicate sector");
    if (!slugs.insert(slug(s.name)).second) config_error("sector." + s.name, "file name collides with another sector");
    std::set<std::string> seen;
    for (const auto& t : s.tickers) {
      if (!seen.insert(t).second) config_error("sector." + s.name, "duplicate ticker '" + t + "'");
    }
  }
  if (methods.empty()) config_error("methods", "at least one method must be enabled");
  if (!(annualization_days > 0.0)) config_error("annualization_days", "must be positive");
  if (workers < 1) config_error("workers", "must be at least 1");
  if (mvp_samples < 1) config_error("mvp.n_samples", "must be at least 1");
  if (herc_k && *herc_k < 1) config_error("herc.k", "must be at least 1 or 'auto'");
  if (herc_gap_refs < 1) config_error("herc.gap_refs", "must be at least 1");
  if (max_start_gap_days < 0) config_error("max_start_gap_days", "must be non-negative");
}

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
  RunConfig cfg;
  std::set<std::string> required{"train_start", "train_end", "test_end"};
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (const auto& raw : detail::split_lines(text)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::config, "config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key{detail::trim(line.substr(0, eq))};
    const std::string value{detail::trim(line.substr(eq + 1))};
    if (key.empty()) fail(ErrorKind::config, "config line " + std::to_string(line_no) + ": empty key");
    if (!seen.insert(key).second) config_error(key, "given more than once");
    required.erase(key);

    if (key.rfind("sector.", 0) == 0) {
      Sector s;
      s.name = key.substr(7);
      if (s.name.empty()) config_error(key, "sector name is empty");
      s.tickers = split_list(value);
      cfg.sectors.push_back(std::move(s));
    } else if (key == "data_dir") {
      cfg.data_dir = resolve(base_dir, value);
    } else if (key == "prices_csv") {
      cfg.prices_csv = resolve(base_dir, value);
    } else if (key == "output_dir") {
      cfg.output_dir = resolve(base_dir, value);
    } else if (key == "train_start") {
      cfg.train_start = parse_config_date(key, value);
    } else if (key == "train_end") {
      cfg.train_end = parse_config_date(key, value);
    } else if (key == "test_end") {
      cfg.test_end = parse_config_date(key, value);
    } else if (key == "methods") {
      cfg.methods.clear();
      for (const auto& m : split_list(value)) {
        const Method parsed = parse_enum(key, m, parse_method);
        if (cfg.has_method(parsed)) config_error(key, "method '" + m + "' listed twice");
        cfg.methods.push_back(parsed);
      }
    } else if (key == "date_column") {
      cfg.date_column = value;
    } else if (key == "close_column") {
      cfg.close_column = value;
    } else if (key == "align") {
      if (value == "intersect") {
        cfg.align = AlignPolicy::intersect;
      } else if (value == "forward_fill") {
        cfg.align = AlignPolicy::forward_fill;
      } else {
        config_error(key, "expected intersect or forward_fill");
      }
    } else if (key == "max_start_gap_days") {
      cfg.max_start_gap_days = static_cast<int>(parse_unsigned<unsigned>(key, value));
    } else if (key == "annualization_days") {
      cfg.annualization_days = parse_real(key, value);
    } else if (key == "risk_free_rate") {
      cfg.risk_free_rate = parse_real(key, value);
    } else if (key == "workers") {
      cfg.workers = parse_unsigned<std::size_t>(key, value);
    } else if (key == "mvp.n_samples") {
      cfg.mvp_samples = parse_unsigned<std::size_t>(key, value);
    } else if (key == "mvp.seed") {
      cfg.mvp_seed = parse_unsigned<std::uint64_t>(key, value);
    } else if (key == "mvp.sampling") {
      if (value == "normalized_uniform") {
        cfg.mvp_sampling = SimplexSampling::normalized_uniform;
      } else if (value == "flat_dirichlet") {
        cfg.mvp_sampling = SimplexSampling::flat_dirichlet;
      } else {
        config_error(key, "expected normalized_uniform or flat_dirichlet");
      }
    } else if (key == "hrp.linkage") {
      cfg.hrp_linkage = parse_enum(key, value, parse_linkage_rule);
    } else if (key == "herc.linkage") {
      cfg.herc_linkage = parse_enum(key, value, parse_linkage_rule);
    } else if (key == "herc.k") {
      if (value == "auto") {
        cfg.herc_k.reset();
      } else {
        cfg.herc_k = parse_unsigned<std::size_t>(key, value);
      }
    } else if (key == "herc.risk_measure") {
      cfg.herc_risk_measure = parse_enum(key, value, parse_risk_measure);
    } else if (key == "herc.cluster_weighting") {
      cfg.herc_weighting = parse_enum(key, value, parse_cluster_weighting);
    } else if (key == "herc.gap_k_max") {
      cfg.herc_gap_k_max = parse_unsigned<std::size_t>(key, value);
    } else if (key == "herc.gap_refs") {
      cfg.herc_gap_refs = parse_unsigned<std::size_t>(key, value);
    } else if (key == "herc.seed") {
      cfg.herc_seed = parse_unsigned<std::uint64_t>(key, value);
    } else {
      config_error(key, "unknown key");
    }
  }
  if (!required.empty()) config_error(*required.begin(), "is required");
  cfg.validate();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json sectors = nlohmann::ordered_json::array();
  for (const auto& s : cfg.sectors) sectors.push_back({{"name", s.name}, {"tickers", s.tickers}});
  j["sectors"] = std::move(sectors);
  j["data_dir"] = cfg.data_dir.generic_string();
  j["prices_csv"] = cfg.prices_csv ? nlohmann::ordered_json(cfg.prices_csv->generic_string()) : nlohmann::ordered_json();
  j["train_start"] = cfg.train_start.to_string();
  j["train_end"] = cfg.train_end.to_string();
  j["test_end"] = cfg.test_end.to_string();
  std::vector<std::string> methods;
  for (Method m : cfg.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  j["date_column"] = cfg.date_column;
  j["close_column"] = cfg.close_column;
  j["align"] = cfg.align == AlignPolicy::intersect ? "intersect" : "forward_fill";
  j["max_start_gap_days"] = cfg.max_start_gap_days;
  j["annualization_days"] = cfg.annualization_days;
  j["risk_free_rate"] = cfg.risk_free_rate;
  j["workers"] = cfg.workers;
  j["mvp"] = {{"n_samples", cfg.mvp_samples},
              {"seed", cfg.mvp_seed},
              {"sampling", cfg.mvp_sampling == SimplexSampling::normalized_uniform ? "normalized_uniform" : "flat_dirichlet"}};
  j["hrp"] = {{"linkage", to_string(cfg.hrp_linkage)}};
  j["herc"] = {{"linkage", to_string(cfg.herc_linkage)},
               {"k", cfg.herc_k ? nlohmann::ordered_json(*cfg.herc_k) : nlohmann::ordered_json("auto")},
               {"risk_measure", to_string(cfg.herc_risk_measure)},
               {"cluster_weighting", to_string(cfg.herc_weighting)},
               {"gap_k_max", cfg.herc_gap_k_max},
               {"gap_refs", cfg.herc_gap_refs},
               {"seed", cfg.herc_seed}};
  return j.dump(2);
}

SectorData load_sector(const RunConfig& cfg, const Sector& sector) {
  LoadOptions opt;
  opt.date_column = cfg.date_column;
  opt.close_column = cfg.close_column;
  opt.policy = cfg.align;
  opt.required_start = cfg.train_start;
  opt.max_start_gap_days = cfg.max_start_gap_days;

  PriceTable all;
  if (cfg.prices_csv) {
    opt.columns = sector.tickers;
    all = load_wide_csv(*cfg.prices_csv, opt);
  } else {
    std::vector<CsvSource> sources;
    for (const auto& t : sector.tickers) sources.push_back({t, cfg.data_dir / (t + ".csv")});
    all = load_price_table(sources, opt);
  }
  const PriceTable window = slice_dates(all, cfg.train_start, cfg.test_end);
  if (window.dates.size() < 2) {
    fail(ErrorKind::data, "sector '" + sector.name + "' has fewer than 2 dates between " + cfg.train_start.to_string() +
                              " and " + cfg.test_end.to_string());
  }
  try {
    auto [train, test] = split_train_test(window, cfg.train_end);
    if (train.dates.size() < 3 || test.dates.size() < 3) {
      fail(ErrorKind::data, "sector '" + sector.name + "' needs at least 3 prices in each period");
    }
    return {std::move(train), std::move(test)};
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::data) throw;
    fail(ErrorKind::data, "sector '" + sector.name + "': " + e.what());
  }
}

SectorFit fit_sector(const RunConfig& cfg, const PriceTable& train, bool keep_mvp_samples) {
  SectorFit fit;
  fit.train_returns = daily_returns(train);
  fit.cov = covariance(fit.train_returns);
  fit.mu = expected_returns(fit.train_returns, cfg.annualization_days);

  std::optional<DistanceMatrix> dist;
  auto distances = [&]() -> const DistanceMatrix& {
    if (!dist) dist = corr_to_distance(correlation(fit.train_returns));
    return *dist;
  };

  for (Method m : cfg.methods) {
    switch (m) {
      case Method::mvp: {
        MvpOptions opt;
        opt.n_samples = cfg.mvp_samples;
        opt.risk_free_rate = cfg.risk_free_rate;
        opt.seed = cfg.mvp_seed;
        opt.annualization_days = cfg.annualization_days;
        opt.sampling = cfg.mvp_sampling;
        MvpResult res = mvp_optimize(fit.mu, fit.cov, opt);
        fit.weights[m] = res.max_sharpe().weights;
        if (keep_mvp_samples) fit.mvp = std::move(res);
        break;
      }
      case Method::hrp: {
        fit.hrp_tree = agglomerate(distances(), cfg.hrp_linkage);
        fit.weights[m] = hrp_allocate(fit.cov, *fit.hrp_tree);
        break;
      }
      case Method::herc: {
        fit.herc_tree = agglomerate(distances(), cfg.herc_linkage);
        HercParams p;
        p.k = cfg.herc_k;
        p.risk_measure = cfg.herc_risk_measure;
        p.cluster_weighting = cfg.herc_weighting;
        p.gap.k_max = cfg.herc_gap_k_max;
        p.gap.b_refs = cfg.herc_gap_refs;
        p.gap.seed = cfg.herc_seed;
        p.gap.rule = cfg.herc_linkage;
        p.k = resolve_cluster_count(p, fit.train_returns);
        fit.herc_k = p.k;
        fit.weights[m] = herc_allocate(fit.cov, *fit.herc_tree, p);
        break;
      }
    }
    fit.weights[m].validate();
  }
  return fit;
}

bool RunManifest::all_ok() const {
  return std::all_of(sectors.begin(), sectors.end(), [](const SectorOutcome& s) { return s.ok; });
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = "hierport.manifest";
  j["version"] = 1;
  j["tool_version"] = tool_version;
  j["config"] = nlohmann::ordered_json::parse(config_json.empty() ? "null" : config_json);
  j["seeds"] = seeds;
  nlohmann::ordered_json secs = nlohmann::ordered_json::array();
  for (const auto& s : sectors) {
    nlohmann::ordered_json e;
    e["name"] = s.sector;
    e["ok"] = s.ok;
    e["error"] = s.ok ? nlohmann::ordered_json() : nlohmann::ordered_json(s.error);
    e["herc_k"] = s.herc_k ? nlohmann::ordered_json(*s.herc_k) : nlohmann::ordered_json();
    e["weights"] = s.weights;
    e["dendrograms"] = s.dendrograms;
    e["frontiers"] = s.frontiers;
    e["reports"] = s.reports;
    secs.push_back(std::move(e));
  }
  j["sectors"] = std::move(secs);
  j["summary"] = summary.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(summary);
  return j.dump(2) + "\n";
}

std::string slug(const std::string& name) {
  std::string out;
  for (unsigned char ch : name) {
    if (std::isalnum(ch) || ch == '-' || ch == '_') {
      out += static_cast<char>(ch);
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "sector" : out;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::data, "cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) fail(ErrorKind::data, "failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

struct SectorRun {
  SectorOutcome outcome;
  std::vector<BacktestReport> train_reports;
  std::vector<BacktestReport> test_reports;
};

SectorRun run_sector(const RunConfig& cfg, const Sector& sector) {
  SectorRun run;
  run.outcome.sector = sector.name;
  try {
    const SectorData data = load_sector(cfg, sector);
    const SectorFit fit = fit_sector(cfg, data.train);
    const ReturnMatrix test_returns = daily_returns(data.test);
    const std::string base = slug(sector.name);
    const fs::path& out = cfg.output_dir;

    for (Method m : cfg.methods) {
      const std::string name = to_string(m);
      const WeightVector& w = fit.weights.at(m);
      const std::string wpath = "weights/" + base + "_" + name + ".csv";
      write_file_atomic(out / wpath, weights_to_csv(w));
      run.outcome.weights[name] = wpath;

      const LinkageTree* tree = m == Method::hrp ? &*fit.hrp_tree : m == Method::herc ? &*fit.herc_tree : nullptr;
      if (tree) {
        const std::string dpath = "dendrograms/" + base + "_" + name + ".json";
        write_file_atomic(out / dpath, dendrogram_json(*tree, data.train.tickers));
        run.outcome.dendrograms[name] = dpath;
      }
      if (m == Method::mvp) {
        const std::string fpath = "frontiers/" + base + "_" + name + ".csv";
        write_file_atomic(out / fpath, frontier_to_csv(*fit.mvp));
        run.outcome.frontiers[name] = fpath;
      }

      for (const char* period : {"train", "test"}) {
        const bool is_train = std::string_view(period) == "train";
        BacktestReport rep = evaluate(w, is_train ? fit.train_returns : test_returns, cfg.risk_free_rate, sector.name,
                                      name, period, cfg.annualization_days);
        const std::string rpath = "reports/" + base + "_" + name + "_" + period + ".json";
        write_file_atomic(out / rpath, report_to_json(rep));
        run.outcome.reports[name + "_" + period] = rpath;
        (is_train ? run.train_reports : run.test_reports).push_back(std::move(rep));
      }
    }
    run.outcome.herc_k = fit.herc_k;
    run.outcome.ok = true;
  } catch (const std::exception& e) {
    run.outcome.ok = false;
    run.outcome.error = e.what();
    run.train_reports.clear();
    run.test_reports.clear();
  }
  return run;
}

}  // namespace

RunManifest run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);

  std::vector<SectorRun> runs(cfg.sectors.size());
  const std::size_t workers = std::min(cfg.workers, cfg.sectors.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < cfg.sectors.size(); ++i) runs[i] = run_sector(cfg, cfg.sectors[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cfg.sectors.size(); i = next++) runs[i] = run_sector(cfg, cfg.sectors[i]);
      });
    }
  }

  RunManifest manifest;
  manifest.config_json = config_to_json(cfg);
  if (cfg.has_method(Method::mvp)) manifest.seeds["mvp"] = cfg.mvp_seed;
  if (cfg.has_method(Method::herc) && !cfg.herc_k) manifest.seeds["herc"] = cfg.herc_seed;

  std::vector<BacktestReport> train;
  std::vector<BacktestReport> test;
  for (auto& run : runs) {
    for (auto& r : run.train_reports) train.push_back(std::move(r));
    for (auto& r : run.test_reports) test.push_back(std::move(r));
    manifest.sectors.push_back(std::move(run.outcome));
  }

  const bool all_methods = std::all_of(kMethods.begin(), kMethods.end(), [&](Method m) { return cfg.has_method(m); });
  if (all_methods && !train.empty()) {
    std::string content = summary_to_csv(summarize(std::span<const BacktestReport>(train)), "train");
    const std::string test_table = summary_to_csv(summarize(std::span<const BacktestReport>(test)), "test");
    content += test_table.substr(test_table.find('\n') + 1);  // one header for both periods
    manifest.summary = "summary.csv";
    write_file_atomic(cfg.output_dir / manifest.summary, content);
  }
  write_file_atomic(cfg.output_dir / "manifest.json", manifest.to_json());
  return manifest;
}

}  // namespace hierport
