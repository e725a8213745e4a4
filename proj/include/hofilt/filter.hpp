#pragma once

#include <cstdint>

#include "hofilt/expr.hpp"
#include "hofilt/model.hpp"
#include "hofilt/simulate.hpp"

namespace hofilt {

/// Weight used for each ensemble member: the fine-grid reference or the
/// tamed order-m scheme on the observation bundle's coarse grid.
class Scheme {
 public:
  static Scheme reference() { return Scheme(0); }
  static Scheme order(int m);
  bool is_reference() const noexcept { return m_ == 0; }
  int m() const noexcept { return m_; }
  std::string label() const;

 private:
  explicit Scheme(int m) : m_(m) {}
  int m_;
};

struct EnsembleOptions {
  std::size_t paths = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool override_mesh = false;
};

struct FilterEstimate {
  double rho_phi = 0.0;
  double rho_one = 0.0;
  double pi_phi = 0.0;
  double se_rho_phi = 0.0;
  double se_rho_one = 0.0;
  /// Delta-method standard error of the ratio.
  double se_pi = 0.0;
  std::size_t paths = 0;
  int order = 0;  // 0 for the reference
  std::size_t intervals = 0;
  double mesh = 0.0;
  std::uint64_t seed = 0;
};

/// Monte Carlo estimate of the unnormalized and normalized filter at the
/// horizon of `observed`, conditioning on its Y path. The partition is the
/// coarse grid of `observed`; regroup the bundle to change it.
FilterEstimate estimate(const PosysModel& model, const Expr& phi, const PathBundle& observed,
                        const Scheme& scheme, const EnsembleOptions& options);

struct PairedError {
  double value = 0.0;
  double se = 0.0;
  std::size_t paths = 0;
};

/// N^{-1} sum_k phi(X^k_t) (exp(xi_ref^k) - exp(xi_bar^k)) with both
/// exponents taken from the same realization.
PairedError paired_error(const PosysModel& model, const Expr& phi, const PathBundle& observed,
                         int order, const EnsembleOptions& options);

}  // namespace hofilt
