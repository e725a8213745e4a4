#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hofilt/bench.hpp"
#include "hofilt/error.hpp"
#include "hofilt/filter.hpp"
#include "hofilt/kalman.hpp"
#include "hofilt/likelihood.hpp"
#include "hofilt/rng.hpp"
#include "json.hpp"

using namespace hofilt;
using nlohmann::json;

namespace {

Measure parse_measure(const std::string& s) {
  if (s == "P") return Measure::P;
  if (s == "PTilde") return Measure::PTilde;
  throw ConfigError("measure must be P or PTilde");
}

std::shared_ptr<const FineGrid> make_grid(const PosysModel& model, std::size_t n, std::size_t r) {
  return std::make_shared<const FineGrid>(Partition::uniform(n, model.horizon()), r);
}

void print_warnings(const PosysModel& model) {
  for (const auto& w : model.warnings()) std::cerr << "warning: " << w << "\n";
}

json estimate_json(const FilterEstimate& e, std::uint64_t y_seed, const std::string& order) {
  return {{"order", order},         {"rho_phi", e.rho_phi},       {"rho_one", e.rho_one},
          {"pi_phi", e.pi_phi},     {"se_rho_phi", e.se_rho_phi}, {"se_rho_one", e.se_rho_one},
          {"se_pi", e.se_pi},       {"N", e.paths},               {"n", e.intervals},
          {"mesh", e.mesh},         {"x_seed", e.seed},           {"y_seed", y_seed}};
}

// Per-interval breakdown for ensemble member 0, written to stderr so stdout
// stays a single JSON record.
void print_interval_table(const PosysModel& model, const PathBundle& obs, int m, const EnsembleOptions& opt) {
  const PathBundle b = generate_signal(model, obs, opt.seed, 0);
  XiOptions xo;
  xo.override_mesh = opt.override_mesh;
  xo.keep_terms = false;
  const LikelihoodResult r = xi_bar(model, build_table(model, m), b, m, xo);
  std::fprintf(stderr, "%4s %22s %22s %22s %22s\n", "j", m == 1 ? "xi1(j)" : "xi2(j)", "mu(j)", "Gamma(mu(j))",
               "xi_bar(j)");
  for (std::size_t j = 0; j < r.xi_bar_j.size(); ++j) {
    const double mu = r.raw_mu.empty() ? 0.0 : r.raw_mu[j];
    const double tamed = r.tamed_mu.empty() ? 0.0 : r.tamed_mu[j];
    std::fprintf(stderr, "%4zu %22.15e %22.15e %22.15e %22.15e\n", j, r.second_order_part[j], mu, tamed,
                 r.xi_bar_j[j]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-order discretizations of filtering likelihood weights"};
  app.require_subcommand(1);

  auto* converge = app.add_subcommand("converge", "Run a convergence-order experiment");
  std::string config_path, out_path, format = "csv";
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;
  converge->add_option("--config", config_path, "Run description (JSON)")->required()->check(CLI::ExistingFile);
  converge->add_option("--out", out_path, "Report file; stdout when omitted");
  converge->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  converge->add_option("--threads", threads, "Worker threads (0 = all cores)");
  converge->add_option("--seed", seed, "Overrides the configured seeds");

  auto* coeffs = app.add_subcommand("coeffs", "Print the L^alpha h_i table");
  std::string model_path;
  int order = 2;
  coeffs->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  coeffs->add_option("--order", order)->required();

  auto* est = app.add_subcommand("estimate", "Monte Carlo filter estimate on one simulated Y path");
  std::string order_s = "2", phi = "x1", measure = "PTilde";
  std::size_t n = 16, paths = 10000, refine = 16;
  std::uint64_t est_seed = 1;
  bool override_mesh = false;
  est->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  est->add_option("--order", order_s, "1..6 or ref");
  est->add_option("--n", n, "Uniform partition intervals");
  est->add_option("--paths", paths, "Ensemble size N");
  est->add_option("--seed", est_seed);
  est->add_option("--phi", phi, "Test function");
  est->add_option("--refine", refine, "Fine steps per interval");
  est->add_option("--measure", measure, "Measure generating Y: P or PTilde");
  est->add_option("--threads", threads);
  est->add_flag("--override-mesh", override_mesh, "Evaluate even when the mesh is not admissible");

  auto* kal = app.add_subcommand("kalman", "Kalman-Bucy filter on one simulated Y path");
  std::uint64_t kal_seed = 1;
  kal->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  kal->add_option("--seed", kal_seed);
  kal->add_option("--n", n);
  kal->add_option("--refine", refine);
  kal->add_option("--measure", measure);

  auto* sim = app.add_subcommand("simulate", "Simulate one path and write a binary dump");
  std::string dump_path;
  std::uint64_t sim_seed = 1;
  sim->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  sim->add_option("--dump", dump_path)->required();
  sim->add_option("--seed", sim_seed);
  sim->add_option("--n", n);
  sim->add_option("--refine", refine);
  sim->add_option("--measure", measure);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*converge) {
      ConvergenceConfig cfg = load_config(config_path);
      cfg.threads = threads;
      if (seed) {
        cfg.x_seed = *seed;
        cfg.y_seed = mix_seed(*seed, 1);
      }
      const PosysModel model = load_model(cfg.model_path);
      print_warnings(model);
      const ConvergenceReport report = run_convergence(cfg, model, sha256_file(cfg.model_path));
      if (out_path.empty()) std::cout << (format == "csv" ? to_csv(report) : to_json(report));
      else emit(report, format, out_path);
      for (const auto& s : report.slopes) {
        std::cerr << "m=" << s.m << " " << s.status;
        if (s.fit) std::cerr << " slope " << s.fit->slope << " +- " << s.fit->se;
        std::cerr << "\n";
      }
    } else if (*coeffs) {
      const PosysModel model = load_model(model_path);
      std::cout << build_table(model, order).dump();
    } else if (*est) {
      const PosysModel model = load_model(model_path);
      print_warnings(model);
      const Scheme scheme = order_s == "ref" ? Scheme::reference() : Scheme::order(std::stoi(order_s));
      const PathBundle obs = generate(model, make_grid(model, n, refine), est_seed, 0, parse_measure(measure));
      EnsembleOptions opt;
      opt.paths = paths;
      opt.seed = mix_seed(est_seed, 1);
      opt.threads = threads;
      opt.override_mesh = override_mesh;
      const FilterEstimate e = estimate(model, parse(phi, model.state_dim()), obs, scheme, opt);
      if (!scheme.is_reference()) print_interval_table(model, obs, scheme.m(), opt);
      std::cout << estimate_json(e, est_seed, scheme.label()).dump() << "\n";
    } else if (*kal) {
      const PosysModel model = load_model(model_path);
      const PathBundle obs = generate(model, make_grid(model, n, refine), kal_seed, 0, parse_measure(measure));
      const KalmanState s = kalman_bucy(model, obs);
      json cov = json::array();
      for (Eigen::Index r = 0; r < s.covariance.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < s.covariance.cols(); ++c) row.push_back(s.covariance(r, c));
        cov.push_back(row);
      }
      std::cout << json{{"mean", std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size())},
                        {"covariance", cov},
                        {"log_evidence", s.log_evidence},
                        {"y_seed", kal_seed}}
                       .dump()
                << "\n";
    } else if (*sim) {
      const PosysModel model = load_model(model_path);
      const PathBundle b = generate(model, make_grid(model, n, refine), sim_seed, 0, parse_measure(measure));
      write_bundle(dump_path, b);
    }
  } catch (const InadmissibleMesh& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
