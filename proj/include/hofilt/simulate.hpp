#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "hofilt/multiindex.hpp"
#include "hofilt/partition.hpp"

namespace hofilt {

class PosysModel;

/// Coarse partition refined into `per_interval` equal sub-steps per
/// interval. Every coarse point is a fine point.
class FineGrid {
 public:
  FineGrid(Partition coarse, std::size_t per_interval);
  /// Grid over explicit fine times, with coarse points every `per_interval`.
  static FineGrid from_fine_times(std::vector<double> times, std::size_t per_interval,
                                  double uniformity = kDefaultUniformity);

  const Partition& coarse() const noexcept { return coarse_; }
  std::size_t per_interval() const noexcept { return per_interval_; }
  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t steps() const noexcept { return times_.size() - 1; }
  double step(std::size_t l) const noexcept { return times_[l + 1] - times_[l]; }
  /// Fine index of coarse point t_j.
  std::size_t coarse_index(std::size_t j) const noexcept { return j * per_interval_; }

  /// Same fine points, coarse points every `per_interval` fine steps. The
  /// coarse times are taken from the fine grid so they coincide exactly.
  FineGrid regrouped(std::size_t per_interval) const;
  /// First `intervals` coarse intervals only.
  FineGrid prefix(std::size_t intervals) const;

 private:
  FineGrid(std::vector<double> times, std::size_t per_interval, double uniformity);
  Partition coarse_;
  std::size_t per_interval_;
  std::vector<double> times_;
};

enum class Measure { P, PTilde };

/// Signal half of a realization: V increments and X states on the fine grid.
struct SignalPath {
  std::vector<double> dv;  // steps x d_V
  std::vector<double> x;   // (steps + 1) x d_X
};

/// Observation half: Y increments and values, plus W increments when known.
struct ObservationPath {
  Measure measure = Measure::PTilde;
  std::vector<double> dy;  // steps x d_Y
  std::vector<double> y;   // (steps + 1) x d_Y, Y_0 = 0
  std::vector<double> dw;  // steps x d_Y, or empty
};

/// One realization on a fine grid. The augmented components V^0 and Y^0
/// are time itself and are not stored.
class PathBundle {
 public:
  PathBundle(std::shared_ptr<const FineGrid> grid, std::shared_ptr<const SignalPath> signal,
             std::shared_ptr<const ObservationPath> obs, int state_dim, int noise_dim, int obs_dim);

  const FineGrid& grid() const noexcept { return *grid_; }
  const std::shared_ptr<const FineGrid>& grid_ptr() const noexcept { return grid_; }
  const std::shared_ptr<const SignalPath>& signal() const noexcept { return signal_; }
  const std::shared_ptr<const ObservationPath>& observations() const noexcept { return obs_; }
  Measure measure() const noexcept { return obs_->measure; }

  int state_dim() const noexcept { return dx_; }
  int noise_dim() const noexcept { return dv_; }
  int obs_dim() const noexcept { return dy_; }

  std::span<const double> state(std::size_t l) const noexcept {
    return {signal_->x.data() + l * static_cast<std::size_t>(dx_), static_cast<std::size_t>(dx_)};
  }
  /// Increment of V^label over fine step l; label 0 is time.
  double dv(std::size_t l, int label) const noexcept {
    return label == 0 ? grid_->step(l)
                      : signal_->dv[l * static_cast<std::size_t>(dv_) + static_cast<std::size_t>(label - 1)];
  }
  /// Increment of Y^i over fine step l; i = 0 is time.
  double dy(std::size_t l, int i) const noexcept {
    return i == 0 ? grid_->step(l)
                  : obs_->dy[l * static_cast<std::size_t>(dy_) + static_cast<std::size_t>(i - 1)];
  }
  /// Y^i at fine point l; i = 0 is time.
  double y(std::size_t l, int i) const noexcept {
    return i == 0 ? grid_->times()[l]
                  : obs_->y[l * static_cast<std::size_t>(dy_) + static_cast<std::size_t>(i - 1)];
  }

  /// Same data viewed with a different coarse grouping of the fine steps.
  PathBundle regrouped(std::size_t per_interval) const;
  /// Restriction to the first `intervals` coarse intervals.
  PathBundle prefix(std::size_t intervals) const;

 private:
  std::shared_ptr<const FineGrid> grid_;
  std::shared_ptr<const SignalPath> signal_;
  std::shared_ptr<const ObservationPath> obs_;
  int dx_, dv_, dy_;
};

/// Euler-Maruyama signal plus observations. Randomness is drawn from
/// Philox substreams keyed by (seed, path_index, component), so the same
/// arguments give bit-identical paths in any execution order.
PathBundle generate(const PosysModel& model, std::shared_ptr<const FineGrid> grid,
                    std::uint64_t seed, std::uint64_t path_index, Measure measure);

/// A fresh signal path paired with the observation path of `observed`.
/// W increments are not tracked for such bundles.
PathBundle generate_signal(const PosysModel& model, const PathBundle& observed, std::uint64_t seed,
                           std::uint64_t path_index);

/// Euler path driven by given V increments (steps x d_V) starting at x0.
std::vector<double> euler_path(const PosysModel& model, const FineGrid& grid,
                               std::span<const double> x0, std::span<const double> dv);

/// Aggregates `factor` consecutive fine steps into one and re-runs Euler on
/// the summed increments. The coarse partition is kept.
PathBundle coarsen_fine(const PosysModel& model, const PathBundle& bundle, std::size_t factor);

/// I_alpha(1)_{t_j, s_l} at every fine point s_l of coarse interval j
/// (per_interval + 1 values), by the left-point recursion.
std::vector<double> iterated_integral(const MultiIndex& alpha, const PathBundle& bundle,
                                      std::size_t j);

/// sum_l values[l] * dY^i_l over the fine steps of interval j. `values` has
/// per_interval or per_interval + 1 entries; a trailing endpoint is unused.
double integrate_against_dy(std::span<const double> values, int i, const PathBundle& bundle,
                            std::size_t j);

/// Little-endian binary dump; layout documented in docs/path_dump.md.
void write_bundle(const std::filesystem::path& path, const PathBundle& bundle);
PathBundle read_bundle(const std::filesystem::path& path);

}  // namespace hofilt
