#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hofilt/expr.hpp"
#include "hofilt/multiindex.hpp"

namespace hofilt {

/// Law of the initial signal state.
struct InitialLaw {
  enum class Kind { Point, Gaussian };
  Kind kind = Kind::Point;
  std::vector<double> mean;
  /// Row-major covariance, empty for a point mass.
  std::vector<double> cov;
  /// Lower Cholesky factor of `cov`, row-major.
  std::vector<double> chol;

  static InitialLaw point(std::vector<double> mean);
  static InitialLaw gaussian(std::vector<double> mean, std::vector<double> cov);
};

/// Partially observed system
///   dX = f(X) ds + sigma(X) dV,   dY = h(X) ds + dW,
/// together with the augmented sensor h0 = -1/2 sum_i h_i^2.
class PosysModel {
 public:
  struct Spec {
    int state_dim = 1;
    int noise_dim = 1;
    int obs_dim = 1;
    std::vector<Expr> drift;      // state_dim
    std::vector<Expr> diffusion;  // state_dim x noise_dim, row-major
    std::vector<Expr> sensor;     // obs_dim, h_1..h_{d_Y}
    std::optional<double> lh_bound;
    int smoothness_order = kMaxOrder;
    InitialLaw initial = InitialLaw::point({0.0});
    double horizon = 1.0;
  };

  explicit PosysModel(Spec spec);

  int state_dim() const noexcept { return spec_.state_dim; }
  int noise_dim() const noexcept { return spec_.noise_dim; }
  int obs_dim() const noexcept { return spec_.obs_dim; }
  int smoothness_order() const noexcept { return spec_.smoothness_order; }
  double horizon() const noexcept { return spec_.horizon; }
  const std::optional<double>& lh_bound() const noexcept { return spec_.lh_bound; }
  const InitialLaw& initial() const noexcept { return spec_.initial; }

  /// 1-based k.
  const Expr& drift(int k) const { return spec_.drift.at(static_cast<std::size_t>(k - 1)); }
  /// 1-based k and r.
  const Expr& diffusion(int k, int r) const;
  /// Index 0 is h0; 1..d_Y are the sensor components.
  const Expr& sensor(int i) const { return sensors_.at(static_cast<std::size_t>(i)); }

  const std::vector<CompiledExpr>& compiled_drift() const noexcept { return drift_c_; }
  const std::vector<CompiledExpr>& compiled_diffusion() const noexcept { return diffusion_c_; }
  /// Indexed like sensor(): 0 is h0.
  const std::vector<CompiledExpr>& compiled_sensor() const noexcept { return sensor_c_; }

  /// Notes about assumptions the library cannot check (unbounded
  /// coefficients and similar).
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  Spec spec_;
  std::vector<Expr> sensors_;
  std::vector<CompiledExpr> drift_c_;
  std::vector<CompiledExpr> diffusion_c_;
  std::vector<CompiledExpr> sensor_c_;
  std::vector<std::string> warnings_;
};

/// Reads a model definition document (JSON). Formula strings are parsed
/// against the declared state dimension.
PosysModel load_model(const std::filesystem::path& path);
PosysModel model_from_json_text(const std::string& text);

/// Generator: sum_k f^k dg/dx^k + 1/2 sum_{k,l,r} sigma_{k,r} sigma_{l,r} d2g/dx^k dx^l.
Expr apply_l0(const Expr& g, const PosysModel& model);
/// sum_k sigma_{k,r} dg/dx^k, r in 1..d_V.
Expr apply_lr(const Expr& g, int r, const PosysModel& model);
/// L^{a_1} o ... o L^{a_k} g, applying the last label first. Empty index
/// returns g.
Expr apply_lalpha(const MultiIndex& alpha, const Expr& g, const PosysModel& model);

/// L^alpha h_i for i in 0..d_Y and alpha in M_{m-1}(S0).
class CoefficientTable {
 public:
  int order() const noexcept { return order_; }
  int obs_dim() const noexcept { return obs_dim_; }
  const std::vector<MultiIndex>& indices() const noexcept { return indices_; }
  /// Position of alpha in indices(), or throws DomainError.
  std::size_t position(const MultiIndex& alpha) const;
  const Expr& at(int sensor, const MultiIndex& alpha) const;
  const Expr& entry(int sensor, std::size_t pos) const;
  const CompiledExpr& compiled(int sensor, std::size_t pos) const;
  std::size_t size() const noexcept { return entries_.size(); }

  /// Entries over the remainder set R(M_{m-1}), present when requested at build time.
  const std::vector<MultiIndex>& remainder_indices() const noexcept { return remainder_; }
  const Expr& remainder_entry(int sensor, std::size_t pos) const;

  /// One line per entry: "h<i> <alpha> : <expr>".
  std::string dump() const;

 private:
  friend CoefficientTable build_table(const PosysModel&, int, bool);
  int order_ = 0;
  int obs_dim_ = 0;
  std::vector<MultiIndex> indices_;
  std::map<MultiIndex, std::size_t> lookup_;
  std::vector<Expr> entries_;  // sensor-major
  std::vector<CompiledExpr> compiled_;
  std::vector<MultiIndex> remainder_;
  std::vector<Expr> remainder_entries_;
};

CoefficientTable build_table(const PosysModel& model, int order, bool with_remainder = false);

/// Largest mesh admissible for orders >= 2: 1 / (2 ||Lh|| sqrt(d_Y d_V)).
/// +infinity when every L^r h_i vanishes identically.
double delta0(const PosysModel& model);

/// Largest |L^r h_i| seen on a uniform sample of the box [lo_k, hi_k].
double sample_lh_sup(const PosysModel& model, const std::vector<double>& lo,
                     const std::vector<double>& hi, std::size_t samples, std::uint64_t seed);

}  // namespace hofilt
