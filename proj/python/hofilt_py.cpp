#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hofilt/bench.hpp"
#include "hofilt/error.hpp"
#include "hofilt/filter.hpp"
#include "hofilt/kalman.hpp"
#include "hofilt/likelihood.hpp"
#include "hofilt/model.hpp"
#include "hofilt/multiindex.hpp"
#include "hofilt/rng.hpp"
#include "hofilt/simulate.hpp"

namespace py = pybind11;
using namespace hofilt;

namespace {

std::shared_ptr<const FineGrid> uniform_grid(const PosysModel& m, std::size_t n, std::size_t refine) {
  return std::make_shared<const FineGrid>(Partition::uniform(n, m.horizon()), refine);
}

Measure measure_from(const std::string& s) {
  if (s == "P") return Measure::P;
  if (s == "PTilde") return Measure::PTilde;
  throw ConfigError("measure must be \"P\" or \"PTilde\"");
}

}  // namespace

PYBIND11_MODULE(_hofilt, mod) {
  mod.doc() = "High-order likelihood discretizations for nonlinear filtering";

  auto base = py::register_exception<Error>(mod, "Error");
  py::register_exception<SyntaxError>(mod, "SyntaxError", base.ptr());
  py::register_exception<UnknownVariable>(mod, "UnknownVariable", base.ptr());
  py::register_exception<DomainError>(mod, "DomainError", base.ptr());
  py::register_exception<ConfigError>(mod, "ConfigError", base.ptr());
  py::register_exception<InadmissibleMesh>(mod, "InadmissibleMesh", base.ptr());
  py::register_exception<NumericalError>(mod, "NumericalError", base.ptr());
  py::register_exception<NotLinear>(mod, "NotLinear", base.ptr());

  py::class_<Expr>(mod, "Expr")
      .def("eval", [](const Expr& e, std::vector<double> x) { return e.eval(x); }, py::arg("x"))
      .def("diff", [](const Expr& e, int k) { return diff(e, k); }, py::arg("k"))
      .def("__str__", [](const Expr& e) { return print(e); })
      .def("__repr__", [](const Expr& e) { return "Expr(" + print(e) + ")"; });
  mod.def("parse", [](const std::string& text, int dim) { return parse(text, dim); }, py::arg("text"),
          py::arg("dim"));

  py::class_<MultiIndex>(mod, "MultiIndex")
      .def(py::init([](std::vector<std::uint8_t> v) { return MultiIndex(std::move(v)); }))
      .def_property_readonly("labels", &MultiIndex::labels)
      .def("__len__", &MultiIndex::length)
      .def("__str__", &MultiIndex::to_string)
      .def("__eq__", [](const MultiIndex& a, const MultiIndex& b) { return a == b; });
  mod.def("enumerate_m", &enumerate_m, py::arg("m"), py::arg("noise_dim"), py::arg("include_zero") = true);
  mod.def("remainder_set", &remainder_set, py::arg("m"), py::arg("noise_dim"));

  py::class_<PosysModel>(mod, "Model")
      .def_property_readonly("state_dim", &PosysModel::state_dim)
      .def_property_readonly("noise_dim", &PosysModel::noise_dim)
      .def_property_readonly("obs_dim", &PosysModel::obs_dim)
      .def_property_readonly("horizon", &PosysModel::horizon)
      .def_property_readonly("lh_bound", &PosysModel::lh_bound)
      .def_property_readonly("warnings", &PosysModel::warnings)
      .def("sensor", &PosysModel::sensor, py::arg("i"), py::return_value_policy::copy)
      .def("delta0", [](const PosysModel& m) { return delta0(m); });
  mod.def("load_model", [](const std::filesystem::path& p) { return load_model(p); }, py::arg("path"));
  mod.def("model_from_json", &model_from_json_text, py::arg("text"));
  mod.def("apply_l0", &apply_l0, py::arg("g"), py::arg("model"));
  mod.def("apply_lr", &apply_lr, py::arg("g"), py::arg("r"), py::arg("model"));
  mod.def("apply_lalpha", &apply_lalpha, py::arg("alpha"), py::arg("g"), py::arg("model"));
  mod.def("coefficient_table", [](const PosysModel& m, int order) { return build_table(m, order).dump(); },
          py::arg("model"), py::arg("order"));

  mod.def("truncate", [](double q, double delta, double z) { return hofilt::truncate(q, delta, z); }, py::arg("q"), py::arg("delta"), py::arg("z"));
  mod.def("truncation_error", &truncation_error, py::arg("q"), py::arg("delta"), py::arg("z"));

  py::class_<PathBundle>(mod, "PathBundle")
      .def_property_readonly("times", [](const PathBundle& b) { return b.grid().times(); })
      .def_property_readonly("coarse_times", [](const PathBundle& b) { return b.grid().coarse().times(); })
      .def_property_readonly("x", [](const PathBundle& b) { return b.signal()->x; })
      .def_property_readonly("y", [](const PathBundle& b) { return b.observations()->y; })
      .def("save", [](const PathBundle& b, const std::filesystem::path& p) { write_bundle(p, b); });
  mod.def(
      "simulate",
      [](const PosysModel& m, std::size_t n, std::size_t refine, std::uint64_t seed, std::uint64_t path,
         const std::string& measure) { return generate(m, uniform_grid(m, n, refine), seed, path, measure_from(measure)); },
      py::arg("model"), py::arg("n"), py::arg("refine") = 16, py::arg("seed") = 1, py::arg("path") = 0,
      py::arg("measure") = "P");
  mod.def("load_paths", [](const std::filesystem::path& p) { return read_bundle(p); }, py::arg("path"));

  py::class_<LikelihoodResult>(mod, "LikelihoodResult")
      .def_readonly("order", &LikelihoodResult::order)
      .def_readonly("xi_bar", &LikelihoodResult::xi_bar)
      .def_readonly("xi_bar_j", &LikelihoodResult::xi_bar_j)
      .def_readonly("xi_untamed", &LikelihoodResult::xi_untamed)
      .def_readonly("weight", &LikelihoodResult::weight)
      .def_readonly("raw_mu", &LikelihoodResult::raw_mu)
      .def_readonly("tamed_mu", &LikelihoodResult::tamed_mu);
  mod.def(
      "xi_bar",
      [](const PosysModel& m, const PathBundle& b, int order, bool override_mesh) {
        XiOptions o;
        o.override_mesh = override_mesh;
        o.keep_terms = false;
        return xi_bar(m, build_table(m, order), b, order, o);
      },
      py::arg("model"), py::arg("paths"), py::arg("order"), py::arg("override_mesh") = false);
  mod.def("xi_reference", &xi_reference, py::arg("model"), py::arg("paths"));

  py::class_<FilterEstimate>(mod, "FilterEstimate")
      .def_readonly("rho_phi", &FilterEstimate::rho_phi)
      .def_readonly("rho_one", &FilterEstimate::rho_one)
      .def_readonly("pi_phi", &FilterEstimate::pi_phi)
      .def_readonly("se_pi", &FilterEstimate::se_pi)
      .def_readonly("paths", &FilterEstimate::paths)
      .def_readonly("mesh", &FilterEstimate::mesh);
  mod.def(
      "estimate",
      [](const PosysModel& m, const std::string& phi, const PathBundle& observed, std::optional<int> order,
         std::size_t paths, std::uint64_t seed, unsigned threads) {
        EnsembleOptions o;
        o.paths = paths;
        o.seed = seed;
        o.threads = threads;
        const Scheme s = order ? Scheme::order(*order) : Scheme::reference();
        py::gil_scoped_release release;
        return estimate(m, parse(phi, m.state_dim()), observed, s, o);
      },
      py::arg("model"), py::arg("phi"), py::arg("observed"), py::arg("order") = py::none(),
      py::arg("paths") = 1000, py::arg("seed") = 1, py::arg("threads") = 1);

  mod.def(
      "kalman",
      [](const PosysModel& m, const PathBundle& observed) {
        const KalmanState s = kalman_bucy(m, observed);
        py::dict d;
        d["mean"] = std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size());
        std::vector<double> cov(s.covariance.data(), s.covariance.data() + s.covariance.size());
        d["covariance"] = cov;
        d["log_evidence"] = s.log_evidence;
        return d;
      },
      py::arg("model"), py::arg("observed"));

  mod.def(
      "converge",
      [](const std::filesystem::path& config, std::optional<std::size_t> paths, std::optional<std::size_t> y_draws,
         unsigned threads) {
        ConvergenceConfig c = load_config(config);
        if (paths) c.paths = *paths;
        if (y_draws) c.y_draws = *y_draws;
        c.threads = threads;
        py::gil_scoped_release release;
        return to_csv(run_convergence(c));
      },
      py::arg("config"), py::arg("paths") = py::none(), py::arg("y_draws") = py::none(), py::arg("threads") = 1);
}
