#include "hofilt/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "hofilt/error.hpp"
#include "hofilt/likelihood.hpp"
#include "hofilt/parallel.hpp"

namespace hofilt {

Scheme Scheme::order(int m) {
  if (m < 1 || m > kMaxOrder) throw DomainError("scheme order must be in 1.." + std::to_string(kMaxOrder));
  return Scheme(m);
}

std::string Scheme::label() const { return is_reference() ? "ref" : std::to_string(m_); }

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe r;
  const auto n = static_cast<double>(v.size());
  if (v.empty()) return r;
  double s = 0.0;
  for (double x : v) s += x;
  r.mean = s / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return r;
}

void check_ensemble(const PosysModel& model, const Expr& phi, const PathBundle& observed,
                    const EnsembleOptions& options) {
  if (options.paths == 0) throw DomainError("ensemble size must be positive");
  if (phi.max_var() > model.state_dim()) throw UnknownVariable("x" + std::to_string(phi.max_var()), model.state_dim());
  if (observed.obs_dim() != model.obs_dim()) throw LengthMismatch("observation dimension differs from the model");
}

void check_mesh(const PosysModel& model, const PathBundle& observed, int m, bool override_mesh) {
  if (m < 2 || override_mesh) return;
  const Admissibility adm = admissible(observed.grid().coarse(), model, m);
  if (!adm.ok) throw InadmissibleMesh(adm.mesh, adm.delta0);
}

}  // namespace

FilterEstimate estimate(const PosysModel& model, const Expr& phi, const PathBundle& observed,
                        const Scheme& scheme, const EnsembleOptions& options) {
  check_ensemble(model, phi, observed, options);
  const int m = scheme.m();
  check_mesh(model, observed, m, options.override_mesh);
  std::optional<CoefficientTable> table;
  if (!scheme.is_reference()) table.emplace(build_table(model, m));
  const CompiledExpr phic(phi);
  const std::size_t n = options.paths;
  const std::size_t last = observed.grid().steps();
  XiOptions xo;
  xo.override_mesh = true;  // checked above
  xo.keep_terms = false;

  std::vector<double> f(n), z(n);
  parallel_for(n, options.threads, [&](std::size_t k) {
    const PathBundle b = generate_signal(model, observed, options.seed, k);
    f[k] = phic.eval(b.state(last));
    const double xi = scheme.is_reference() ? xi_reference(model, b) : xi_bar(model, *table, b, m, xo).xi_bar;
    z[k] = std::exp(xi);
  });

  std::vector<double> fz(n);
  for (std::size_t k = 0; k < n; ++k) fz[k] = f[k] * z[k];
  const MeanSe a = mean_se(fz);
  const MeanSe b = mean_se(z);
  const double zmax = *std::max_element(z.begin(), z.end());
  if (!(b.mean >= 10.0 * std::numeric_limits<double>::epsilon() * zmax)) {
    throw DegenerateWeights("ensemble weights collapsed: mean " + std::to_string(b.mean) + ", max " +
                            std::to_string(zmax));
  }

  FilterEstimate e;
  e.rho_phi = a.mean;
  e.rho_one = b.mean;
  e.se_rho_phi = a.se;
  e.se_rho_one = b.se;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    num += fz[k];
    den += z[k];
  }
  e.pi_phi = num / den;
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) ss += z[k] * z[k] * (f[k] - e.pi_phi) * (f[k] - e.pi_phi);
  e.se_pi = std::sqrt(ss) / den;
  e.paths = n;
  e.order = m;
  e.intervals = observed.grid().coarse().intervals();
  e.mesh = observed.grid().coarse().mesh();
  e.seed = options.seed;
  return e;
}

PairedError paired_error(const PosysModel& model, const Expr& phi, const PathBundle& observed, int order,
                         const EnsembleOptions& options) {
  check_ensemble(model, phi, observed, options);
  if (order < 1) throw DomainError("order must be >= 1");
  check_mesh(model, observed, order, options.override_mesh);
  const CoefficientTable table = build_table(model, order);
  const CompiledExpr phic(phi);
  const std::size_t n = options.paths;
  const std::size_t last = observed.grid().steps();
  XiOptions xo;
  xo.override_mesh = true;
  xo.keep_terms = false;

  std::vector<double> d(n);
  parallel_for(n, options.threads, [&](std::size_t k) {
    const PathBundle b = generate_signal(model, observed, options.seed, k);
    const double ref = xi_reference(model, b);
    const double approx = xi_bar(model, table, b, order, xo).xi_bar;
    d[k] = phic.eval(b.state(last)) * (std::exp(ref) - std::exp(approx));
  });
  const MeanSe r = mean_se(d);
  return {r.mean, r.se, n};
}

}  // namespace hofilt
