#include "hofilt/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hofilt/error.hpp"

namespace hofilt {

double truncate(double q, double delta, double z) {
  if (!(delta > 0.0)) throw DomainError("truncation width must be positive");
  const double u = std::pow(std::abs(z / delta), 2.0 * q);
  return z / (1.0 + u);
}

double truncation_error(double q, double delta, double z) {
  if (!(delta > 0.0)) throw DomainError("truncation width must be positive");
  const double u = std::pow(std::abs(z / delta), 2.0 * q);
  if (std::isinf(u)) return -z;
  return -(z * u) / (1.0 + u);
}

namespace {

void check_log_weight(double v, const char* what) {
  if (!std::isfinite(v) || std::abs(v) > kMaxLogWeight) {
    throw NumericalError(std::string(what) + " log-weight " + std::to_string(v) +
                         " out of range; mesh or model bounds are likely violated");
  }
}

// Recursion data for I_alpha over the table's index list: I_alpha is driven
// by I_{alpha-} and the increments of its last label.
struct IndexPlan {
  std::size_t count = 0;                 // indices with length <= max_len
  std::vector<std::size_t> parent;       // position of alpha-
  std::vector<int> last;                 // last label
  std::vector<std::size_t> level_start;  // level_start[len], size max_len + 2
};

IndexPlan make_plan(const CoefficientTable& table, int max_len) {
  IndexPlan p;
  const auto& idx = table.indices();
  p.level_start.assign(static_cast<std::size_t>(max_len) + 2, 0);
  for (const auto& a : idx) {
    if (static_cast<int>(a.length()) > max_len) break;
    ++p.count;
  }
  p.parent.resize(p.count);
  p.last.resize(p.count);
  for (std::size_t a = 0; a < p.count; ++a) {
    if (a > 0) {
      p.parent[a] = table.position(idx[a].drop_last());
      p.last[a] = idx[a].last();
    }
  }
  std::size_t a = 0;
  for (int len = 0; len <= max_len + 1; ++len) {
    while (a < p.count && static_cast<int>(idx[a].length()) < len) ++a;
    p.level_start[static_cast<std::size_t>(len)] = a;
  }
  return p;
}

void advance_integrals(const IndexPlan& plan, std::vector<double>& iv, const PathBundle& b,
                       std::size_t l) {
  // Descending so each parent still holds its left-point value.
  for (std::size_t a = plan.count; a-- > 1;) iv[a] += iv[plan.parent[a]] * b.dv(l, plan.last[a]);
}

void check_order(const CoefficientTable& table, int order) {
  if (order < 1) throw DomainError("order must be >= 1");
  if (order > table.order()) {
    throw OrderTooHigh("order " + std::to_string(order) + " exceeds coefficient table order " +
                       std::to_string(table.order()));
  }
}

// sum_q I_a(s_q) dY^i_q over interval j for every (i, a) in the plan.
std::vector<double> interval_integrals(const IndexPlan& plan, const PathBundle& b, std::size_t j) {
  const FineGrid& g = b.grid();
  if (j >= g.coarse().intervals()) throw OutOfRange("interval index");
  const auto dy = static_cast<std::size_t>(b.obs_dim());
  std::vector<double> J((dy + 1) * plan.count, 0.0);
  std::vector<double> iv(plan.count, 0.0);
  iv[0] = 1.0;
  const std::size_t l0 = g.coarse_index(j);
  for (std::size_t q = 0; q < g.per_interval(); ++q) {
    const std::size_t l = l0 + q;
    for (std::size_t i = 0; i <= dy; ++i) {
      const double d = b.dy(l, static_cast<int>(i));
      for (std::size_t a = 0; a < plan.count; ++a) J[i * plan.count + a] += iv[a] * d;
    }
    advance_integrals(plan, iv, b, l);
  }
  return J;
}

}  // namespace

double xi_reference(const PosysModel& model, const PathBundle& bundle) {
  const auto& h = model.compiled_sensor();
  const FineGrid& g = bundle.grid();
  const int dy = model.obs_dim();
  double s = 0.0;
  for (std::size_t l = 0; l < g.steps(); ++l) {
    const auto x = bundle.state(l);
    for (int i = 0; i <= dy; ++i) s += h[static_cast<std::size_t>(i)].eval(x) * bundle.dy(l, i);
  }
  check_log_weight(s, "reference");
  return s;
}

IntervalTerms xi_tau_m_interval(const PosysModel& model, const CoefficientTable& table,
                                const PathBundle& bundle, std::size_t j, int order) {
  check_order(table, order);
  const IndexPlan plan = make_plan(table, order - 1);
  const auto J = interval_integrals(plan, bundle, j);
  const auto x = bundle.state(bundle.grid().coarse_index(j));
  IntervalTerms out;
  out.index_count = plan.count;
  out.terms.resize(J.size());
  for (int i = 0; i <= model.obs_dim(); ++i) {
    for (std::size_t a = 0; a < plan.count; ++a) {
      const std::size_t k = static_cast<std::size_t>(i) * plan.count + a;
      out.terms[k] = table.compiled(i, a).eval(x) * J[k];
      out.value += out.terms[k];
    }
  }
  return out;
}

double mu_interval(const PosysModel& model, const CoefficientTable& table, const PathBundle& bundle,
                   std::size_t j, int order) {
  if (order < 3) throw DomainError("correction term is defined for orders >= 3");
  const IntervalTerms t = xi_tau_m_interval(model, table, bundle, j, order);
  const std::size_t first = table.position(MultiIndex{0, 0});
  double mu = 0.0;
  for (int i = 0; i <= model.obs_dim(); ++i) {
    for (std::size_t a = first; a < t.index_count; ++a) mu += t.term(i, a);
  }
  return mu;
}

std::vector<LikelihoodResult> xi_bar_orders(const PosysModel& model, const CoefficientTable& table,
                                            const PathBundle& bundle, std::span<const int> orders,
                                            const XiOptions& options) {
  if (orders.empty()) return {};
  const int max_order = *std::max_element(orders.begin(), orders.end());
  for (int m : orders) check_order(table, m);
  const FineGrid& g = bundle.grid();
  const Partition& part = g.coarse();
  if (!options.override_mesh) {
    for (int m : orders) {
      if (m < 2) continue;
      const Admissibility adm = admissible(part, model, m);
      if (!adm.ok) throw InadmissibleMesh(adm.mesh, adm.delta0);
    }
  }

  const IndexPlan plan = make_plan(table, max_order - 1);
  const auto dy = static_cast<std::size_t>(model.obs_dim());
  const std::size_t nint = part.intervals();
  const std::size_t levels = static_cast<std::size_t>(max_order);  // lengths 0..max_order-1

  std::vector<LikelihoodResult> out(orders.size());
  for (std::size_t o = 0; o < orders.size(); ++o) {
    auto& r = out[o];
    r.order = orders[o];
    r.xi_bar_j.resize(nint);
    r.untamed_j.resize(nint);
    r.second_order_part.resize(nint);
    if (r.order >= 3) {
      r.raw_mu.resize(nint);
      r.tamed_mu.resize(nint);
    }
    if (options.keep_terms) r.terms.resize(nint);
  }

  const std::size_t no = orders.size();
  std::vector<int> ord(orders.begin(), orders.end());
  std::vector<double> coef((dy + 1) * plan.count);
  std::vector<double> iv(plan.count);
  std::vector<double> level_sum(levels, 0.0);
  // band[len] = sum of level sums for lengths 2..len-1, i.e. the correction
  // integrand of order len.
  std::vector<double> band(levels + 1, 0.0);
  std::vector<double> total(no, 0.0), local(no), local_mu(no);
  std::vector<double> J;
  const std::size_t* ls = plan.level_start.data();
  const SignalPath& sig = *bundle.signal();
  const ObservationPath& obs = *bundle.observations();
  const std::size_t nv = static_cast<std::size_t>(model.noise_dim());

  for (std::size_t j = 0; j < nint; ++j) {
    const std::size_t l0 = g.coarse_index(j);
    const auto x = bundle.state(l0);
    for (std::size_t i = 0; i <= dy; ++i) {
      for (std::size_t a = 0; a < plan.count; ++a) {
        coef[i * plan.count + a] = table.compiled(static_cast<int>(i), a).eval(x);
      }
    }
    std::fill(iv.begin(), iv.end(), 0.0);
    iv[0] = 1.0;
    std::fill(local.begin(), local.end(), 0.0);
    std::fill(local_mu.begin(), local_mu.end(), 0.0);
    if (options.keep_terms) J.assign((dy + 1) * plan.count, 0.0);

    for (std::size_t q = 0; q < g.per_interval(); ++q) {
      const std::size_t l = l0 + q;
      const double ds = g.step(l);
      const double* dyl = obs.dy.data() + l * dy;
      for (std::size_t i = 0; i <= dy; ++i) {
        const double* c = coef.data() + i * plan.count;
        const double* w = iv.data();
        for (std::size_t len = 0; len < levels; ++len) {
          double s = 0.0;
          for (std::size_t a = ls[len]; a < ls[len + 1]; ++a) s += c[a] * w[a];
          level_sum[len] = s;
        }
        const double g1 = level_sum[0];
        const double g2 = levels > 1 ? g1 + level_sum[1] : g1;
        double acc = 0.0;
        for (std::size_t len = 2; len < levels; ++len) {
          acc += level_sum[len];
          band[len + 1] = acc;
        }
        const double d = i == 0 ? ds : dyl[i - 1];
        for (std::size_t o = 0; o < no; ++o) {
          const int m = ord[o];
          const double inc = (m == 1 ? g1 : g2) * d;
          total[o] += inc;
          local[o] += inc;
          if (m >= 3) local_mu[o] += band[static_cast<std::size_t>(m)] * d;
        }
        if (options.keep_terms) {
          for (std::size_t a = 0; a < plan.count; ++a) J[i * plan.count + a] += iv[a] * d;
        }
      }
      // Descending so each parent still holds its left-point value.
      const double* dvl = sig.dv.data() + l * nv;
      for (std::size_t a = plan.count; a-- > 1;) {
        const int lab = plan.last[a];
        iv[a] += iv[plan.parent[a]] * (lab == 0 ? ds : dvl[lab - 1]);
      }
    }

    const double delta_j = part.step(j);
    for (std::size_t o = 0; o < orders.size(); ++o) {
      auto& r = out[o];
      r.second_order_part[j] = local[o];
      if (r.order >= 3) {
        const double mu = local_mu[o];
        const double tamed = truncate(static_cast<double>(r.order) - 0.5, delta_j, mu);
        r.raw_mu[j] = mu;
        r.tamed_mu[j] = tamed;
        total[o] += tamed;
        r.xi_bar_j[j] = local[o] + tamed;
        r.untamed_j[j] = local[o] + mu;
      } else {
        r.xi_bar_j[j] = local[o];
        r.untamed_j[j] = local[o];
      }
      r.xi_untamed += r.untamed_j[j];
      if (options.keep_terms) {
        const auto& idx = table.indices();
        std::size_t count = 0;
        while (count < plan.count && static_cast<int>(idx[count].length()) <= r.order - 1) ++count;
        std::vector<double> terms((dy + 1) * count);
        for (std::size_t i = 0; i <= dy; ++i) {
          for (std::size_t a = 0; a < count; ++a) {
            terms[i * count + a] = coef[i * plan.count + a] * J[i * plan.count + a];
          }
        }
        r.terms[j] = std::move(terms);
      }
    }
  }

  for (std::size_t o = 0; o < no; ++o) {
    auto& r = out[o];
    r.xi_bar = total[o];
    if (r.order <= 2) r.xi_untamed = r.xi_bar;
    check_log_weight(r.xi_bar, "discretized");
    r.weight = std::exp(r.xi_bar);
  }
  return out;
}

LikelihoodResult xi_bar(const PosysModel& model, const CoefficientTable& table,
                        const PathBundle& bundle, int order, const XiOptions& options) {
  const int orders[1] = {order};
  return std::move(xi_bar_orders(model, table, bundle, orders, options).front());
}

void WeightAccumulator::push(double xi_bar_j) {
  log_weight_ += xi_bar_j;
  weight_ *= std::exp(xi_bar_j);
  ++count_;
}

}  // namespace hofilt
