#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hierport/error.hpp"
#include "hierport/pipeline.hpp"

namespace fs = std::filesystem;
using namespace hierport;

namespace {

enum Exit { kOk = 0, kValidation = 1, kData = 2, kPartial = 3 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sectors;
};

void add_common(CLI::App* cmd, Common& c, bool with_sector = true) {
  cmd->add_option("--config", c.config, "Run configuration file (default: $HIERPORT_CONFIG)");
  cmd->add_option("--seed", c.seed, "Seed for every randomized method");
  cmd->add_option("--out", c.out, "Output directory (default: output_dir from the config)");
  if (with_sector) cmd->add_option("--sector", c.sectors, "Restrict to these sectors (repeatable)");
}

RunConfig load(const Common& c) {
  std::string path = c.config;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar)) path = env;
  }
  if (path.empty()) fail(ErrorKind::config, std::string("no config given; pass --config or set ") + kConfigEnvVar);
  RunConfig cfg = load_config(path);
  if (c.seed) cfg.set_seed(*c.seed);
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (!c.sectors.empty()) {
    std::vector<Sector> keep;
    for (const auto& name : c.sectors) {
      auto it = std::find_if(cfg.sectors.begin(), cfg.sectors.end(), [&](const Sector& s) { return s.name == name; });
      if (it == cfg.sectors.end()) fail(ErrorKind::config, "--sector: no sector named '" + name + "' in the config");
      keep.push_back(*it);
    }
    cfg.sectors = std::move(keep);
  }
  return cfg;
}

void emit(const fs::path& root, const std::string& rel, const std::string& content) {
  write_file_atomic(root / rel, content);
  std::cout << (root / rel).string() << "\n";
}

// Runs `body` per sector; a failing sector is reported and skipped.
int for_each_sector(const RunConfig& cfg, const std::function<void(const Sector&)>& body) {
  std::size_t failed = 0;
  int worst = kOk;
  for (const auto& s : cfg.sectors) {
    try {
      body(s);
    } catch (const Error& e) {
      ++failed;
      worst = std::max(worst, e.kind() == ErrorKind::data ? int{kData} : int{kValidation});
      std::cerr << "error: sector '" << s.name << "': " << e.what() << "\n";
    }
  }
  if (failed == 0) return kOk;
  return failed < cfg.sectors.size() ? kPartial : worst;
}

int cmd_ingest(const Common& c) {
  const RunConfig cfg = load(c);
  return for_each_sector(cfg, [&](const Sector& s) {
    const SectorData d = load_sector(cfg, s);
    const std::string base = slug(s.name);
    emit(cfg.output_dir, "prices/" + base + "_train.csv", to_wide_csv(d.train));
    emit(cfg.output_dir, "prices/" + base + "_test.csv", to_wide_csv(d.test));
    std::cerr << s.name << ": " << d.train.tickers.size() << " tickers, " << d.train.dates.size() << " training and "
              << d.test.dates.size() << " test dates\n";
  });
}

int cmd_optimize(const Common& c, const std::vector<std::string>& methods) {
  RunConfig cfg = load(c);
  if (!methods.empty()) {
    cfg.methods.clear();
    for (const auto& m : methods) cfg.methods.push_back(parse_method(m));
  }
  return for_each_sector(cfg, [&](const Sector& s) {
    const SectorFit fit = fit_sector(cfg, load_sector(cfg, s).train, false);
    for (Method m : cfg.methods) {
      emit(cfg.output_dir, "weights/" + slug(s.name) + "_" + to_string(m) + ".csv", weights_to_csv(fit.weights.at(m)));
    }
  });
}

int cmd_frontier(const Common& c, std::optional<std::size_t> samples) {
  RunConfig cfg = load(c);
  cfg.methods = {Method::mvp};
  if (samples) cfg.mvp_samples = *samples;
  cfg.validate();
  return for_each_sector(cfg, [&](const Sector& s) {
    const SectorFit fit = fit_sector(cfg, load_sector(cfg, s).train);
    emit(cfg.output_dir, "frontiers/" + slug(s.name) + "_mvp.csv", frontier_to_csv(*fit.mvp));
  });
}

int cmd_dendrogram(const Common& c, const std::vector<std::string>& methods) {
  RunConfig cfg = load(c);
  cfg.methods.clear();
  for (const auto& m : methods.empty() ? std::vector<std::string>{"hrp", "herc"} : methods) {
    const Method parsed = parse_method(m);
    if (parsed == Method::mvp) invalid("--method: mvp has no dendrogram");
    cfg.methods.push_back(parsed);
  }
  // the tree does not depend on k, so skip the gap search
  if (!cfg.herc_k) cfg.herc_k = 1;
  return for_each_sector(cfg, [&](const Sector& s) {
    const SectorData d = load_sector(cfg, s);
    const SectorFit fit = fit_sector(cfg, d.train);
    for (Method m : cfg.methods) {
      const LinkageTree& t = m == Method::hrp ? *fit.hrp_tree : *fit.herc_tree;
      emit(cfg.output_dir, "dendrograms/" + slug(s.name) + "_" + to_string(m) + ".json",
           dendrogram_json(t, d.train.tickers));
    }
  });
}

WeightVector align_to(const WeightVector& w, const std::vector<std::string>& tickers, const std::string& origin) {
  if (w.tickers.size() != tickers.size()) invalid(origin + ": weights cover " + std::to_string(w.tickers.size()) +
                                                  " tickers, the sector has " + std::to_string(tickers.size()));
  WeightVector out;
  out.tickers = tickers;
  out.weights.resize(static_cast<Eigen::Index>(tickers.size()));
  for (std::size_t i = 0; i < tickers.size(); ++i) {
    const auto it = std::find(w.tickers.begin(), w.tickers.end(), tickers[i]);
    if (it == w.tickers.end()) invalid(origin + ": no weight for ticker '" + tickers[i] + "'");
    out.weights(static_cast<Eigen::Index>(i)) = w.weights(it - w.tickers.begin());
  }
  return out;
}

int cmd_backtest(const Common& c, const std::string& weights_path, const std::string& period, std::string label) {
  const RunConfig cfg = load(c);
  const WeightVector raw = weights_from_csv(read_file(weights_path), weights_path);

  const Sector* sector = nullptr;
  if (cfg.sectors.size() == 1) {
    sector = &cfg.sectors.front();
  } else {
    std::vector<std::string> want = raw.tickers;
    std::sort(want.begin(), want.end());
    for (const auto& s : cfg.sectors) {
      std::vector<std::string> have = s.tickers;
      std::sort(have.begin(), have.end());
      if (have == want) {
        sector = &s;
        break;
      }
    }
    if (!sector) invalid("--weights: tickers match no sector in the config; pass --sector");
  }

  if (label.empty()) {
    // weights/<sector>_<method>.csv from `optimize` or `run` backtests as <method>
    label = fs::path(weights_path).stem().string();
    const std::string prefix = slug(sector->name) + "_";
    if (label.rfind(prefix, 0) == 0 && label.size() > prefix.size()) label = label.substr(prefix.size());
  }
  const SectorData d = load_sector(cfg, *sector);
  const WeightVector w = align_to(raw, d.train.tickers, weights_path);
  for (const char* p : {"train", "test"}) {
    if (period != "both" && period != p) continue;
    const ReturnMatrix r = daily_returns(std::string_view(p) == "train" ? d.train : d.test);
    const BacktestReport rep = evaluate(w, r, cfg.risk_free_rate, sector->name, label, p, cfg.annualization_days);
    emit(cfg.output_dir, "reports/" + slug(sector->name) + "_" + slug(label) + "_" + p + ".json", report_to_json(rep));
  }
  return kOk;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
      }
    } else if (fs::is_regular_file(p)) {
      files.push_back(p);
    } else {
      fail(ErrorKind::data, "report file not found: " + p.string());
    }
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, std::vector<BacktestReport>> by_period;
  for (const auto& f : files) {
    BacktestReport r = report_from_json(read_file(f), f.string());
    by_period[r.period].push_back(std::move(r));
  }
  if (by_period.empty()) fail(ErrorKind::data, "no report files found");

  std::string csv;
  // training first, then test, then anything else alphabetically
  std::vector<std::string> order;
  for (const char* p : {"train", "test"}) {
    if (by_period.count(p)) order.emplace_back(p);
  }
  for (const auto& [p, reports] : by_period) {
    if (p != "train" && p != "test") order.push_back(p);
  }
  for (const auto& p : order) {
    const std::string table = summary_to_csv(summarize(std::span<const BacktestReport>(by_period[p])), p);
    csv += csv.empty() ? table : table.substr(table.find('\n') + 1);
  }
  if (out.empty()) {
    std::cout << csv;
  } else {
    emit(out, "summary.csv", csv);
  }
  return kOk;
}

int cmd_run(const Common& c, std::optional<std::size_t> workers) {
  RunConfig cfg = load(c);
  if (workers) cfg.workers = *workers;
  const RunManifest m = run_pipeline(cfg);
  std::size_t failed = 0;
  for (const auto& s : m.sectors) {
    if (!s.ok) {
      ++failed;
      std::cerr << "error: sector '" << s.sector << "': " << s.error << "\n";
    }
  }
  std::cout << (cfg.output_dir / "manifest.json").string() << "\n";
  if (failed == 0) return kOk;
  return failed < m.sectors.size() ? kPartial : kData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical portfolio construction and backtesting"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  std::vector<std::string> methods;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> workers;
  std::string weights_path;
  std::string period = "both";
  std::string label;
  std::vector<std::string> report_inputs;

  auto* ingest = app.add_subcommand("ingest", "Load, align and split prices; write cleaned tables");
  add_common(ingest, common);

  auto* optimize = app.add_subcommand("optimize", "Fit allocators on the training window; write weights");
  add_common(optimize, common);
  optimize->add_option("--method", methods, "mvp, hrp or herc (repeatable; default: config methods)");

  auto* backtest = app.add_subcommand("backtest", "Evaluate a weights file on the training and/or test window");
  add_common(backtest, common);
  backtest->add_option("--weights", weights_path, "Weights CSV (ticker,weight)")->required();
  backtest->add_option("--period", period, "train, test or both")->check(CLI::IsMember({"train", "test", "both"}));
  backtest->add_option("--label", label, "Portfolio label (default: weights file stem)");

  auto* frontier = app.add_subcommand("frontier", "Monte-Carlo mean-variance samples");
  add_common(frontier, common);
  frontier->add_option("--samples", samples, "Number of samples (default: mvp.n_samples)");

  auto* dendrogram = app.add_subcommand("dendrogram", "Export linkage trees as JSON");
  add_common(dendrogram, common);
  dendrogram->add_option("--method", methods, "hrp or herc (repeatable; default both)");

  auto* report = app.add_subcommand("report", "Assemble the summary table from report JSON files");
  report->add_option("reports", report_inputs, "Report files or directories")->required();
  report->add_option("--config", common.config, "Accepted for symmetry; unused");
  report->add_option("--seed", common.seed, "Accepted for symmetry; unused");
  report->add_option("--out", common.out, "Write summary.csv here instead of stdout");

  auto* run = app.add_subcommand("run", "Full study: every sector, method and period");
  add_common(run, common);
  run->add_option("--workers", workers, "Sectors processed concurrently");

  if (argc > 1 && argv[1][0] != '-') {
    const auto subs = app.get_subcommands([](CLI::App*) { return true; });
    const bool known = std::any_of(subs.begin(), subs.end(), [&](CLI::App* s) { return s->get_name() == argv[1]; });
    if (!known) {
      std::cerr << "error: unknown command '" << argv[1] << "'\n\n" << app.help();
      return kValidation;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kValidation;
  }

  try {
    if (*ingest) return cmd_ingest(common);
    if (*optimize) return cmd_optimize(common, methods);
    if (*backtest) return cmd_backtest(common, weights_path, period, label);
    if (*frontier) return cmd_frontier(common, samples);
    if (*dendrogram) return cmd_dendrogram(common, methods);
    if (*report) return cmd_report(report_inputs, common.out);
    if (*run) return cmd_run(common, workers);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::data ? kData : kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kValidation;
}
