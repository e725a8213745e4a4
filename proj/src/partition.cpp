#include "hofilt/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hofilt/error.hpp"
#include "hofilt/model.hpp"

namespace hofilt {

Partition::Partition(std::vector<double> times, double uniformity)
    : times_(std::move(times)), uniformity_(uniformity) {
  if (!(uniformity_ >= 1.0)) throw DomainError("uniformity constant must be >= 1");
  if (times_.size() < 2) throw DomainError("partition needs at least two points");
  if (times_.front() != 0.0) throw DomainError("partition must start at 0");
  mesh_ = 0.0;
  min_step_ = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < times_.size(); ++i) {
    double d = times_[i] - times_[i - 1];
    if (!(d > 0.0) || !std::isfinite(times_[i])) {
      throw DomainError("partition times must be finite and strictly increasing");
    }
    mesh_ = std::max(mesh_, d);
    min_step_ = std::min(min_step_, d);
  }
  // Uniform partitions built from i*t/n differ from exact equality by
  // rounding; allow a few ulps.
  if (mesh_ > uniformity_ * min_step_ * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "partition violates uniformity: max step " << mesh_ << " > " << uniformity_
       << " * min step " << min_step_;
    throw DomainError(os.str());
  }
}

Partition Partition::uniform(std::size_t n, double t, double uniformity) {
  if (n < 1) throw DomainError("uniform partition needs n >= 1");
  if (!(t > 0.0)) throw DomainError("horizon must be positive");
  std::vector<double> times(n + 1);
  for (std::size_t i = 0; i <= n; ++i) times[i] = static_cast<double>(i) * t / static_cast<double>(n);
  times[n] = t;
  return Partition(std::move(times), uniformity);
}

Partition::Location Partition::locate(double s) const {
  if (!(s >= 0.0) || s > horizon()) {
    throw OutOfRange("time " + std::to_string(s) + " outside [0, " + std::to_string(horizon()) + "]");
  }
  auto it = std::upper_bound(times_.begin(), times_.end(), s);
  std::size_t j = static_cast<std::size_t>(it - times_.begin()) - 1;
  if (j >= intervals()) j = intervals() - 1;
  return {j, times_[j], times_[j + 1]};
}

Admissibility admissible(const Partition& p, const PosysModel& model, int order) {
  Admissibility a;
  a.mesh = p.mesh();
  a.headroom = p.uniformity() * p.horizon() / p.mesh() - static_cast<double>(p.intervals());
  try {
    a.delta0 = delta0(model);
  } catch (const MissingBound& e) {
    a.delta0 = std::nan("");
    if (order >= 2) {
      a.reason = e.what();
      return a;
    }
  }
  if (order <= 1) {
    a.ok = true;
    a.reason = "order 1 accepts any partition";
    return a;
  }
  a.ok = a.mesh < a.delta0;
  std::ostringstream os;
  os << "mesh " << a.mesh << (a.ok ? " < " : " >= ") << "delta0 " << a.delta0;
  a.reason = os.str();
  return a;
}

}  // namespace hofilt
