#pragma once

#include <span>
#include <vector>

#include "hofilt/model.hpp"
#include "hofilt/simulate.hpp"

namespace hofilt {

/// Bounded odd truncation z / (1 + |z/delta|^{2q}); |result| <= delta.
/// The absolute value keeps the map odd and pole-free for half-integer q.
double truncate(double q, double delta, double z);

/// truncate(q, delta, z) - z, evaluated as -z u / (1 + u) with u = |z/delta|^{2q}
/// so it stays accurate when the truncation is inactive.
double truncation_error(double q, double delta, double z);

/// Log-weights beyond this magnitude are reported as a numerical error.
inline constexpr double kMaxLogWeight = 700.0;

/// Fine-grid left-point value of sum_{i=0}^{d_Y} int_0^t h_i(X_s) dY^i_s.
double xi_reference(const PosysModel& model, const PathBundle& bundle);

/// Per-(sensor, index) contributions L^alpha h_i(X_{t_j}) * int I_alpha dY^i
/// over one coarse interval.
struct IntervalTerms {
  double value = 0.0;
  std::size_t index_count = 0;  // |M_{m-1}(S0)|
  /// Sensor-major: terms[i * index_count + a].
  std::vector<double> terms;
  double term(int sensor, std::size_t pos) const {
    return terms[static_cast<std::size_t>(sensor) * index_count + pos];
  }
};

/// Order-m contribution of coarse interval j of the bundle's grid.
IntervalTerms xi_tau_m_interval(const PosysModel& model, const CoefficientTable& table,
                                const PathBundle& bundle, std::size_t j, int order);

/// The part of the order-m contribution carried by indices of length
/// 2..m-1. Requires m >= 3.
double mu_interval(const PosysModel& model, const CoefficientTable& table, const PathBundle& bundle,
                   std::size_t j, int order);

struct LikelihoodResult {
  int order = 0;
  /// Tamed per-interval contributions.
  std::vector<double> xi_bar_j;
  /// Running sum over all fine steps and taming corrections.
  double xi_bar = 0.0;
  double weight = 1.0;
  /// Untamed order-m functional (equal to xi_bar for m <= 2).
  double xi_untamed = 0.0;
  std::vector<double> untamed_j;
  /// Contribution of indices of length <= 1 (the whole scheme for m = 1).
  std::vector<double> second_order_part;
  /// Empty for m <= 2.
  std::vector<double> raw_mu;
  std::vector<double> tamed_mu;
  /// Per interval, IntervalTerms::terms layout; empty in lean mode.
  std::vector<std::vector<double>> terms;
};

struct XiOptions {
  /// Evaluate even when the mesh is not below delta0 (order >= 2).
  bool override_mesh = false;
  /// Keep the per-(sensor, index) breakdown.
  bool keep_terms = true;
};

/// Tamed order-m log-likelihood over the bundle's coarse grid and its weight.
LikelihoodResult xi_bar(const PosysModel& model, const CoefficientTable& table,
                        const PathBundle& bundle, int order, const XiOptions& options = {});

/// Several orders in one pass over the path.
std::vector<LikelihoodResult> xi_bar_orders(const PosysModel& model, const CoefficientTable& table,
                                            const PathBundle& bundle, std::span<const int> orders,
                                            const XiOptions& options = {});

/// Running weight built one interval at a time:
/// Z_{t_{j+1}} = Z_{t_j} * exp(xi_bar(j)).
class WeightAccumulator {
 public:
  void push(double xi_bar_j);
  double log_weight() const noexcept { return log_weight_; }
  double weight() const noexcept { return weight_; }
  std::size_t intervals() const noexcept { return count_; }

 private:
  double log_weight_ = 0.0;
  double weight_ = 1.0;
  std::size_t count_ = 0;
};

}  // namespace hofilt
