#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hierport/allocators.hpp"
#include "hierport/backtest.hpp"
#include "hierport/error.hpp"
#include "hierport/pipeline.hpp"

namespace py = pybind11;
using namespace hierport;

namespace {

std::vector<std::string> names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("A" + std::to_string(i));
  return out;
}

ReturnMatrix returns_of(const Eigen::MatrixXd& r) {
  ReturnMatrix m;
  m.tickers = names(static_cast<std::size_t>(r.cols()));
  Date d = Date::from_string("2000-01-03");
  for (Eigen::Index t = 0; t < r.rows(); ++t, d = d.plus_days(1)) m.dates.push_back(d);
  m.returns = r;
  m.validate();
  return m;
}

CovMatrix cov_of(const Eigen::MatrixXd& c) {
  if (c.rows() != c.cols()) invalid("covariance must be square");
  return {names(static_cast<std::size_t>(c.rows())), c};
}

// Rows of (left, right, height, size), node ids as in the library.
Eigen::MatrixXd to_array(const LinkageTree& t) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(t.merges.size()), 4);
  for (std::size_t k = 0; k < t.merges.size(); ++k) {
    const Merge& m = t.merges[k];
    out.row(static_cast<Eigen::Index>(k)) << static_cast<double>(m.left), static_cast<double>(m.right), m.height,
        static_cast<double>(m.size);
  }
  return out;
}

LinkageTree from_array(const Eigen::MatrixXd& a) {
  if (a.cols() != 4) invalid("linkage must have 4 columns (left, right, height, size)");
  LinkageTree t;
  t.n_leaves = static_cast<std::size_t>(a.rows()) + 1;
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    t.merges.push_back({static_cast<std::size_t>(a(k, 0)), static_cast<std::size_t>(a(k, 1)), a(k, 2),
                        static_cast<std::size_t>(a(k, 3))});
  }
  t.validate();
  return t;
}

SimplexSampling parse_sampling(const std::string& s) {
  if (s == "normalized_uniform") return SimplexSampling::normalized_uniform;
  if (s == "flat_dirichlet") return SimplexSampling::flat_dirichlet;
  invalid("unknown sampling '" + s + "'");
}

py::dict metrics_dict(const PerfMetrics& m) {
  py::dict d;
  d["annual_return"] = m.annual_return;
  d["annual_volatility"] = m.annual_volatility;
  d["sharpe"] = m.sharpe ? py::cast(*m.sharpe) : py::none();
  d["risk_free_rate"] = m.risk_free_rate;
  return d;
}

}  // namespace

PYBIND11_MODULE(_hierport, m) {
  m.doc() = "Hierarchical portfolio construction core";
  m.attr("__version__") = kVersion;

  static py::exception<Error> error(m, "HierportError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("covariance", [](const Eigen::MatrixXd& r) { return covariance(returns_of(r)).values; }, py::arg("returns"),
        "Sample covariance (divisor T-1) of a T x n return array.");
  m.def("correlation", [](const Eigen::MatrixXd& r) { return correlation(returns_of(r)).values; }, py::arg("returns"));
  m.def("correlation_distance",
        [](const Eigen::MatrixXd& r) { return corr_to_distance(correlation(returns_of(r))).values; },
        py::arg("returns"), "sqrt((1 - corr) / 2) for a T x n return array.");

  m.def("linkage",
        [](const Eigen::MatrixXd& d, const std::string& rule) { return to_array(agglomerate(d, parse_linkage_rule(rule))); },
        py::arg("distances"), py::arg("rule") = "ward",
        "Agglomerative linkage; rows are (left, right, height, size) with merged node n + row.");
  m.def("quasi_diagonalize", [](const Eigen::MatrixXd& z) { return quasi_diagonalize(from_array(z)); },
        py::arg("linkage"));
  m.def("cut_k", [](const Eigen::MatrixXd& z, std::size_t k) { return cut_k(from_array(z), k).labels; },
        py::arg("linkage"), py::arg("k"));
  m.def(
      "gap_optimal_k",
      [](const Eigen::MatrixXd& r, std::size_t k_max, std::size_t b_refs, std::uint64_t seed, const std::string& rule) {
        GapOptions o;
        o.k_max = k_max;
        o.b_refs = b_refs;
        o.seed = seed;
        o.rule = parse_linkage_rule(rule);
        return gap_optimal_k(returns_of(r), o);
      },
      py::arg("returns"), py::arg("k_max") = 0, py::arg("b_refs") = 100, py::arg("seed") = 0, py::arg("rule") = "ward");

  m.def("ivp_weights", [](const Eigen::MatrixXd& c) { return ivp_weights(cov_of(c)).weights; }, py::arg("cov"));
  m.def("hrp_weights", [](const Eigen::MatrixXd& c, const Eigen::MatrixXd& z) {
    return hrp_allocate(cov_of(c), from_array(z)).weights;
  }, py::arg("cov"), py::arg("linkage"));
  m.def(
      "herc_weights",
      [](const Eigen::MatrixXd& c, const Eigen::MatrixXd& z, std::size_t k, const std::string& risk_measure,
         const std::string& cluster_weighting) {
        HercParams p;
        p.k = k;
        p.risk_measure = parse_risk_measure(risk_measure);
        p.cluster_weighting = parse_cluster_weighting(cluster_weighting);
        return herc_allocate(cov_of(c), from_array(z), p).weights;
      },
      py::arg("cov"), py::arg("linkage"), py::arg("k"), py::arg("risk_measure") = "std_dev",
      py::arg("cluster_weighting") = "inverse");
  m.def(
      "mvp",
      [](const Eigen::VectorXd& mu_daily, const Eigen::MatrixXd& c, std::size_t n_samples, std::uint64_t seed,
         double risk_free_rate, double annualization_days, const std::string& sampling, std::size_t workers) {
        ExpectedReturns mu{names(static_cast<std::size_t>(mu_daily.size())), mu_daily, mu_daily * annualization_days};
        MvpOptions o;
        o.n_samples = n_samples;
        o.seed = seed;
        o.risk_free_rate = risk_free_rate;
        o.annualization_days = annualization_days;
        o.sampling = parse_sampling(sampling);
        o.workers = workers;
        MvpResult r;
        {
          py::gil_scoped_release release;
          r = mvp_optimize(mu, cov_of(c), o);
        }
        const auto n = static_cast<Eigen::Index>(r.samples.size());
        Eigen::MatrixXd w(n, mu_daily.size());
        Eigen::VectorXd ret(n), vol(n), sr(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          const auto& s = r.samples[static_cast<std::size_t>(i)];
          w.row(i) = s.weights.weights.transpose();
          ret(i) = s.annual_return;
          vol(i) = s.annual_volatility;
          sr(i) = s.sharpe;
        }
        py::dict d;
        d["weights"] = w;
        d["annual_return"] = ret;
        d["annual_volatility"] = vol;
        d["sharpe"] = sr;
        d["max_sharpe_index"] = r.max_sharpe_index;
        d["min_vol_index"] = r.min_vol_index;
        d["frontier"] = r.frontier;
        return d;
      },
      py::arg("mu_daily"), py::arg("cov"), py::arg("n_samples") = 10000, py::arg("seed") = 0,
      py::arg("risk_free_rate") = 0.0, py::arg("annualization_days") = kDefaultAnnualizationDays,
      py::arg("sampling") = "normalized_uniform", py::arg("workers") = 1,
      "Monte-Carlo mean-variance search over the long-only simplex.");

  m.def(
      "portfolio_metrics",
      [](const Eigen::VectorXd& w, const Eigen::MatrixXd& r, double rf, double days) {
        const ReturnMatrix rm = returns_of(r);
        return metrics_dict(portfolio_metrics(WeightVector{rm.tickers, w}, rm, rf, days));
      },
      py::arg("weights"), py::arg("returns"), py::arg("risk_free_rate") = 0.0,
      py::arg("annualization_days") = kDefaultAnnualizationDays);
  m.def("cumulative_series", [](const std::vector<double>& daily) { return cumulative_series(daily); },
        py::arg("daily"));

  m.def(
      "load_wide_csv",
      [](const std::string& path) {
        const PriceTable t = load_wide_csv(path, {});
        std::vector<std::string> dates;
        for (const auto& d : t.dates) dates.push_back(d.to_string());
        return py::make_tuple(dates, t.tickers, t.closes);
      },
      py::arg("path"), "(dates, tickers, closes) from a Date,<ticker>... CSV.");
  m.def(
      "run_pipeline",
      [](const std::filesystem::path& config, std::optional<std::filesystem::path> output_dir,
         std::optional<std::uint64_t> seed) {
        RunConfig cfg = load_config(config);
        if (output_dir) cfg.output_dir = *output_dir;
        if (seed) cfg.set_seed(*seed);
        py::gil_scoped_release release;
        return run_pipeline(cfg).to_json();
      },
      py::arg("config"), py::arg("output_dir") = py::none(), py::arg("seed") = py::none(),
      "Run the full study; returns the manifest as a JSON string.");
}
