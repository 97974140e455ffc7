#include <algorithm>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "marbayes/evidence.hpp"
#include "marbayes/forecast.hpp"
#include "marbayes/harness.hpp"
#include "marbayes/relabel.hpp"
#include "marbayes/stability.hpp"
#include "marbayes/summary.hpp"

namespace py = pybind11;
using namespace marbayes;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

TimeSeries series_of(const std::vector<double>& y) { return TimeSeries(y); }

// Keyword overrides on top of the data-driven defaults.
Hyperparams hyper_for(const std::vector<double>& y, std::size_t n_iter, std::size_t burn_in, bool fixed_shift,
                      std::size_t p_max) {
  auto h = default_hyperparams(series_of(y));
  h.n_iter = n_iter;
  h.burn_in = burn_in;
  h.fixed_shift = fixed_shift;
  h.p_max = p_max;
  return h;
}

struct Chain {
  ChainOutput output;
  bool fixed_shift = false;
};

py::dict traces_of(const Chain& c) {
  py::dict d;
  for (const auto& t : parameter_traces(c.output, c.fixed_shift)) d[py::str(t.name)] = to_array(t.values);
  return d;
}

py::dict evidence_dict(const EvidenceResult& r) {
  py::dict d;
  d["g"] = r.g;
  d["orders"] = r.orders;
  d["log_marginal"] = r.log_marginal;
  d["preference"] = r.preference;
  d["ordinate_std_errors"] = r.ordinate_std_errors;
  d["warnings"] = r.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_marbayes, m) {
  m.doc() = "Bayesian mixture autoregressive models";

  py::class_<MARSpec>(m, "MARSpec")
      .def(py::init(&MARSpec::make), py::arg("weights"), py::arg("shifts"), py::arg("ar"), py::arg("scales"))
      .def_readonly("weights", &MARSpec::weights)
      .def_readonly("shifts", &MARSpec::shifts)
      .def_readonly("ar", &MARSpec::ar)
      .def_readonly("scales", &MARSpec::scales)
      .def_property_readonly("orders", &MARSpec::orders)
      .def("mean", &MARSpec::mean, py::arg("k"))
      .def("__repr__", [](const MARSpec& s) {
        return "MARSpec(g=" + std::to_string(s.components()) + ", p=" + std::to_string(s.max_order()) + ")";
      });

  m.def("spectral_radius", [](const MARSpec& s) { return is_stable(s).spectral_radius; });
  m.def("is_stable", [](const MARSpec& s) { return is_stable(s).stable; });
  m.def("log_likelihood", [](const MARSpec& s, const std::vector<double>& y) {
    return log_likelihood(s, series_of(y));
  });
  m.def("theoretical_acf", &theoretical_acf, py::arg("spec"), py::arg("h_max"));
  m.def(
      "simulate",
      [](const MARSpec& s, std::size_t n, std::uint64_t seed, std::size_t burn) {
        return to_array(simulate_path(s, n, seed, burn).values);
      },
      py::arg("spec"), py::arg("n"), py::arg("seed") = 1, py::arg("burn") = 500);

  py::class_<Chain>(m, "Chain")
      .def("__len__", [](const Chain& c) { return c.output.draws.size(); })
      .def_property_readonly("acceptance", [](const Chain& c) { return c.output.acceptance; })
      .def_property_readonly("stability_rejections", [](const Chain& c) { return c.output.stability_rejections; })
      .def("traces", &traces_of);

  m.def(
      "fit",
      [](const std::vector<double>& y, std::vector<std::size_t> orders, std::size_t n_iter, std::size_t burn_in,
         bool fixed_shift, bool relabel, std::uint64_t seed) {
        const auto h = hyper_for(y, n_iter, burn_in, fixed_shift, 5);
        Chain c;
        c.fixed_shift = fixed_shift;
        {
          py::gil_scoped_release release;
          c.output = run_chain(series_of(y), orders.size(), orders, h, seed);
          if (relabel && c.output.draws.size() >= RelabelConfig{}.m) c.output = relabel_chain(c.output, {});
        }
        return c;
      },
      py::arg("y"), py::arg("orders"), py::arg("n_iter") = 20000, py::arg("burn_in") = 10000,
      py::arg("fixed_shift") = false, py::arg("relabel") = true, py::arg("seed") = 1);

  m.def(
      "marginal_log_likelihood",
      [](const std::vector<double>& y, std::size_t g, std::size_t n_iter, std::size_t burn_in, bool fixed_shift,
         std::size_t p_max, std::size_t reduced_iters, std::uint64_t seed) {
        const auto h = hyper_for(y, n_iter, burn_in, fixed_shift, p_max);
        EvidenceConfig c;
        c.orders.p_max = p_max;
        c.n_j = c.n_i = reduced_iters;
        py::gil_scoped_release release;
        auto r = marginal_log_likelihood(series_of(y), g, h, c, seed);
        py::gil_scoped_acquire acquire;
        return evidence_dict(r);
      },
      py::arg("y"), py::arg("g"), py::arg("n_iter") = 20000, py::arg("burn_in") = 10000,
      py::arg("fixed_shift") = false, py::arg("p_max") = 5, py::arg("reduced_iters") = 10000, py::arg("seed") = 1);

  m.def(
      "forecast",
      [](const Chain& c, const std::vector<double>& y, std::size_t horizon, std::size_t thin,
         std::vector<double> grid, std::uint64_t seed) {
        ForecastRequest req;
        req.horizon = horizon;
        req.origin = y.size() - 1;
        req.thin = thin;
        req.grid = std::move(grid);
        req.seed = seed;
        const auto r = posterior_averaged_forecast(c.output, series_of(y), req);
        py::dict d;
        d["x"] = to_array(r.mean_density.abscissae);
        d["density"] = to_array(r.mean_density.ordinates);
        d["lower_90"] = to_array(r.lower_90.ordinates);
        d["upper_90"] = to_array(r.upper_90.ordinates);
        d["draws_used"] = r.draws_used;
        return d;
      },
      py::arg("chain"), py::arg("y"), py::arg("horizon") = 1, py::arg("thin") = 10,
      py::arg("grid") = std::vector<double>{}, py::arg("seed") = 1);

  m.def(
      "predictive_mixture",
      [](const MARSpec& s, const std::vector<double>& y, std::size_t horizon) {
        std::vector<std::tuple<double, double, double>> out;
        for (const auto& t : predictive_mixture(s, series_of(y), y.size() - 1, horizon))
          out.emplace_back(t.weight, t.mean, t.variance);
        return out;
      },
      py::arg("spec"), py::arg("y"), py::arg("horizon"));

  m.def(
      "hpd_interval", [](const std::vector<double>& x, double mass) { return hpd_interval(x, mass); },
      py::arg("draws"), py::arg("mass") = 0.9);
  m.def(
      "density_grid",
      [](const std::vector<double>& x, double l, double u, std::size_t points) {
        const auto g = density_grid(x, l, u, points);
        return py::make_tuple(to_array(g.abscissae), to_array(g.ordinates));
      },
      py::arg("draws"), py::arg("lower"), py::arg("upper"), py::arg("points") = kGridPoints);

  // Harness entry point: same commands and keys as the command-line tool.
  m.def(
      "run",
      [](const std::string& command, const std::map<std::string, std::string>& settings) {
        harness::KeyValues kv(settings.begin(), settings.end());
        const auto cfg = harness::parse_config(kv);
        std::string out;
        {
          py::gil_scoped_release release;
          out = harness::run_command(harness::parse_command(command), cfg).dump();
        }
        return out;
      },
      py::arg("command"), py::arg("settings"));
}
