#pragma once

#include <string>
#include <vector>

namespace hofilt {

class PosysModel;

inline constexpr double kDefaultUniformity = 10.0;

/// Partition 0 = t_0 < t_1 < ... < t_n = t of a time horizon, with the
/// uniformity condition max step <= C * min step.
class Partition {
 public:
  explicit Partition(std::vector<double> times, double uniformity = kDefaultUniformity);

  /// t_i = i * t / n.
  static Partition uniform(std::size_t n, double t, double uniformity = kDefaultUniformity);

  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t intervals() const noexcept { return times_.size() - 1; }
  double horizon() const noexcept { return times_.back(); }
  /// t_{j+1} - t_j for 0-based j.
  double step(std::size_t j) const { return times_.at(j + 1) - times_.at(j); }
  double mesh() const noexcept { return mesh_; }
  double min_step() const noexcept { return min_step_; }
  double uniformity() const noexcept { return uniformity_; }

  struct Location {
    std::size_t interval;
    double left;   // tau(s)
    double right;  // eta(s)
  };
  /// Half-open intervals [t_j, t_{j+1}); s = t belongs to the last one.
  Location locate(double s) const;

 private:
  std::vector<double> times_;
  double uniformity_;
  double mesh_ = 0.0;
  double min_step_ = 0.0;
};

struct Admissibility {
  bool ok = false;
  double mesh = 0.0;
  double delta0 = 0.0;
  /// C * t / delta - n; non-negative for every valid partition.
  double headroom = 0.0;
  std::string reason;
};

/// Order 1 accepts every partition; higher orders need mesh < delta0.
Admissibility admissible(const Partition& p, const PosysModel& model, int order);

}  // namespace hofilt
