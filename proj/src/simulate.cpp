#include "hofilt/simulate.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "hofilt/error.hpp"
#include "hofilt/model.hpp"
#include "hofilt/rng.hpp"

namespace hofilt {

namespace {

std::vector<double> refine_times(const Partition& coarse, std::size_t per_interval) {
  if (per_interval < 1 || !std::has_single_bit(per_interval)) {
    throw DomainError("refinement factor must be a power of two");
  }
  const auto& t = coarse.times();
  std::vector<double> out;
  out.reserve(coarse.intervals() * per_interval + 1);
  const double r = static_cast<double>(per_interval);
  for (std::size_t j = 0; j < coarse.intervals(); ++j) {
    const double d = t[j + 1] - t[j];
    for (std::size_t k = 0; k < per_interval; ++k) out.push_back(t[j] + d * (static_cast<double>(k) / r));
  }
  out.push_back(t.back());
  return out;
}

std::vector<double> every(const std::vector<double>& times, std::size_t stride) {
  std::vector<double> out;
  for (std::size_t l = 0; l < times.size(); l += stride) out.push_back(times[l]);
  return out;
}

}  // namespace

FineGrid::FineGrid(Partition coarse, std::size_t per_interval)
    : coarse_(std::move(coarse)), per_interval_(per_interval), times_(refine_times(coarse_, per_interval)) {}

FineGrid::FineGrid(std::vector<double> times, std::size_t per_interval, double uniformity)
    : coarse_(every(times, per_interval), uniformity), per_interval_(per_interval), times_(std::move(times)) {}

FineGrid FineGrid::from_fine_times(std::vector<double> times, std::size_t per_interval,
                                   double uniformity) {
  if (times.size() < 2 || per_interval < 1 || (times.size() - 1) % per_interval != 0) {
    throw DomainError("fine times must split evenly into coarse intervals");
  }
  for (std::size_t l = 1; l < times.size(); ++l) {
    if (!(times[l] > times[l - 1])) throw DomainError("fine times must be strictly increasing");
  }
  return FineGrid(std::move(times), per_interval, uniformity);
}

FineGrid FineGrid::regrouped(std::size_t per_interval) const {
  if (per_interval < 1 || steps() % per_interval != 0) {
    throw DomainError("regrouping must divide the number of fine steps");
  }
  return FineGrid(times_, per_interval, coarse_.uniformity());
}

FineGrid FineGrid::prefix(std::size_t intervals) const {
  if (intervals < 1 || intervals > coarse_.intervals()) throw OutOfRange("prefix length");
  std::vector<double> t(times_.begin(),
                        times_.begin() + static_cast<std::ptrdiff_t>(intervals * per_interval_ + 1));
  return FineGrid(std::move(t), per_interval_, coarse_.uniformity());
}

PathBundle::PathBundle(std::shared_ptr<const FineGrid> grid, std::shared_ptr<const SignalPath> signal,
                       std::shared_ptr<const ObservationPath> obs, int state_dim, int noise_dim,
                       int obs_dim)
    : grid_(std::move(grid)),
      signal_(std::move(signal)),
      obs_(std::move(obs)),
      dx_(state_dim),
      dv_(noise_dim),
      dy_(obs_dim) {
  const std::size_t k = grid_->steps();
  const auto ux = static_cast<std::size_t>(dx_);
  const auto uv = static_cast<std::size_t>(dv_);
  const auto uy = static_cast<std::size_t>(dy_);
  if (signal_->x.size() < (k + 1) * ux || signal_->dv.size() < k * uv || obs_->dy.size() < k * uy ||
      obs_->y.size() < (k + 1) * uy || (!obs_->dw.empty() && obs_->dw.size() < k * uy)) {
    throw LengthMismatch("path arrays do not match the fine grid");
  }
}

PathBundle PathBundle::regrouped(std::size_t per_interval) const {
  return PathBundle(std::make_shared<const FineGrid>(grid_->regrouped(per_interval)), signal_, obs_, dx_,
                    dv_, dy_);
}

PathBundle PathBundle::prefix(std::size_t intervals) const {
  // Arrays are longer than needed; accessors only read within the grid.
  return PathBundle(std::make_shared<const FineGrid>(grid_->prefix(intervals)), signal_, obs_, dx_, dv_,
                    dy_);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> draw_initial(const PosysModel& model, std::uint64_t seed, std::uint64_t path) {
  const InitialLaw& law = model.initial();
  std::vector<double> x0 = law.mean;
  if (law.kind == InitialLaw::Kind::Gaussian) {
    const auto d = x0.size();
    std::vector<double> z(d);
    for (std::size_t k = 0; k < d; ++k) {
      z[k] = NormalStream(seed, path, stream::kInitial + static_cast<std::uint32_t>(k)).at(0);
    }
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b <= a; ++b) x0[a] += law.chol[a * d + b] * z[b];
    }
  }
  return x0;
}

std::vector<double> draw_increments(const FineGrid& grid, int components, std::uint64_t seed,
                                    std::uint64_t path, std::uint32_t base) {
  const std::size_t k = grid.steps();
  const auto c = static_cast<std::size_t>(components);
  std::vector<double> out(k * c);
  for (std::size_t r = 0; r < c; ++r) {
    NormalStream s(seed, path, base + static_cast<std::uint32_t>(r));
    for (std::size_t l = 0; l < k; ++l) out[l * c + r] = std::sqrt(grid.step(l)) * s.next();
  }
  return out;
}

}  // namespace

std::vector<double> euler_path(const PosysModel& model, const FineGrid& grid,
                               std::span<const double> x0, std::span<const double> dv) {
  const auto dx = static_cast<std::size_t>(model.state_dim());
  const auto nv = static_cast<std::size_t>(model.noise_dim());
  const std::size_t k = grid.steps();
  if (x0.size() != dx || dv.size() < k * nv) throw LengthMismatch("euler_path inputs");
  const auto& f = model.compiled_drift();
  const auto& sig = model.compiled_diffusion();
  std::vector<double> x((k + 1) * dx);
  std::copy(x0.begin(), x0.end(), x.begin());
  std::vector<double> fx(dx), sx(dx * nv);
  for (std::size_t l = 0; l < k; ++l) {
    std::span<const double> cur(x.data() + l * dx, dx);
    for (std::size_t a = 0; a < dx; ++a) fx[a] = f[a].eval(cur);
    for (std::size_t a = 0; a < dx * nv; ++a) sx[a] = sig[a].eval(cur);
    const double ds = grid.step(l);
    for (std::size_t a = 0; a < dx; ++a) {
      double v = cur[a] + fx[a] * ds;
      for (std::size_t r = 0; r < nv; ++r) v += sx[a * nv + r] * dv[l * nv + r];
      x[(l + 1) * dx + a] = v;
    }
  }
  return x;
}

PathBundle generate(const PosysModel& model, std::shared_ptr<const FineGrid> grid, std::uint64_t seed,
                    std::uint64_t path_index, Measure measure) {
  const std::size_t k = grid->steps();
  const auto dy = static_cast<std::size_t>(model.obs_dim());
  auto signal = std::make_shared<SignalPath>();
  signal->dv = draw_increments(*grid, model.noise_dim(), seed, path_index, stream::kSignal);
  const auto x0 = draw_initial(model, seed, path_index);
  signal->x = euler_path(model, *grid, x0, signal->dv);

  auto obs = std::make_shared<ObservationPath>();
  obs->measure = measure;
  const auto& h = model.compiled_sensor();
  const auto dx = static_cast<std::size_t>(model.state_dim());
  if (measure == Measure::P) {
    obs->dw = draw_increments(*grid, model.obs_dim(), seed, path_index, stream::kObsNoise);
    obs->dy.resize(k * dy);
    for (std::size_t l = 0; l < k; ++l) {
      std::span<const double> xl(signal->x.data() + l * dx, dx);
      for (std::size_t i = 0; i < dy; ++i) {
        obs->dy[l * dy + i] = h[i + 1].eval(xl) * grid->step(l) + obs->dw[l * dy + i];
      }
    }
  } else {
    obs->dy = draw_increments(*grid, model.obs_dim(), seed, path_index, stream::kObs);
    obs->dw.resize(k * dy);
    for (std::size_t l = 0; l < k; ++l) {
      std::span<const double> xl(signal->x.data() + l * dx, dx);
      for (std::size_t i = 0; i < dy; ++i) {
        obs->dw[l * dy + i] = obs->dy[l * dy + i] - h[i + 1].eval(xl) * grid->step(l);
      }
    }
  }
  obs->y.assign((k + 1) * dy, 0.0);
  for (std::size_t l = 0; l < k; ++l) {
    for (std::size_t i = 0; i < dy; ++i) obs->y[(l + 1) * dy + i] = obs->y[l * dy + i] + obs->dy[l * dy + i];
  }
  return PathBundle(std::move(grid), std::move(signal), std::move(obs), model.state_dim(),
                    model.noise_dim(), model.obs_dim());
}

PathBundle generate_signal(const PosysModel& model, const PathBundle& observed, std::uint64_t seed,
                           std::uint64_t path_index) {
  if (observed.obs_dim() != model.obs_dim()) throw LengthMismatch("observation dimension");
  auto signal = std::make_shared<SignalPath>();
  signal->dv = draw_increments(observed.grid(), model.noise_dim(), seed, path_index, stream::kSignal);
  const auto x0 = draw_initial(model, seed, path_index);
  signal->x = euler_path(model, observed.grid(), x0, signal->dv);
  auto obs = observed.observations();
  if (!obs->dw.empty()) {
    auto stripped = std::make_shared<ObservationPath>();
    stripped->measure = obs->measure;
    stripped->dy = obs->dy;
    stripped->y = obs->y;
    obs = std::move(stripped);
  }
  return PathBundle(observed.grid_ptr(), std::move(signal), std::move(obs), model.state_dim(),
                    model.noise_dim(), model.obs_dim());
}

PathBundle coarsen_fine(const PosysModel& model, const PathBundle& bundle, std::size_t factor) {
  const FineGrid& g = bundle.grid();
  if (factor < 1 || g.per_interval() % factor != 0) {
    throw DomainError("coarsening factor must divide the refinement");
  }
  auto grid = std::make_shared<const FineGrid>(g.coarse(), g.per_interval() / factor);
  const std::size_t k = grid->steps();
  const auto dv = static_cast<std::size_t>(bundle.noise_dim());
  const auto dy = static_cast<std::size_t>(bundle.obs_dim());

  auto signal = std::make_shared<SignalPath>();
  signal->dv.assign(k * dv, 0.0);
  auto obs = std::make_shared<ObservationPath>();
  obs->measure = bundle.measure();
  obs->dy.assign(k * dy, 0.0);
  const bool has_dw = !bundle.observations()->dw.empty();
  if (has_dw) obs->dw.assign(k * dy, 0.0);
  for (std::size_t l = 0; l < k; ++l) {
    for (std::size_t q = 0; q < factor; ++q) {
      const std::size_t src = l * factor + q;
      for (std::size_t r = 0; r < dv; ++r) signal->dv[l * dv + r] += bundle.signal()->dv[src * dv + r];
      for (std::size_t i = 0; i < dy; ++i) {
        obs->dy[l * dy + i] += bundle.observations()->dy[src * dy + i];
        if (has_dw) obs->dw[l * dy + i] += bundle.observations()->dw[src * dy + i];
      }
    }
  }
  obs->y.resize((k + 1) * dy);
  for (std::size_t l = 0; l <= k; ++l) {
    for (std::size_t i = 0; i < dy; ++i) obs->y[l * dy + i] = bundle.observations()->y[l * factor * dy + i];
  }
  signal->x = euler_path(model, *grid, bundle.state(0), signal->dv);
  return PathBundle(std::move(grid), std::move(signal), std::move(obs), bundle.state_dim(),
                    bundle.noise_dim(), bundle.obs_dim());
}

// ---------------------------------------------------------------------------

std::vector<double> iterated_integral(const MultiIndex& alpha, const PathBundle& bundle, std::size_t j) {
  const FineGrid& g = bundle.grid();
  if (j >= g.coarse().intervals()) throw OutOfRange("interval index");
  for (std::size_t p = 0; p < alpha.length(); ++p) {
    if (alpha[p] > bundle.noise_dim()) throw DomainError("label exceeds d_V");
  }
  const std::size_t r = g.per_interval();
  const std::size_t l0 = g.coarse_index(j);
  // prev holds I_{alpha_1..alpha_{p-1}} along the interval.
  std::vector<double> prev(r + 1, 1.0);
  for (std::size_t p = 0; p < alpha.length(); ++p) {
    std::vector<double> cur(r + 1, 0.0);
    for (std::size_t q = 0; q < r; ++q) cur[q + 1] = cur[q] + prev[q] * bundle.dv(l0 + q, alpha[p]);
    prev = std::move(cur);
  }
  return prev;
}

double integrate_against_dy(std::span<const double> values, int i, const PathBundle& bundle,
                            std::size_t j) {
  const FineGrid& g = bundle.grid();
  if (j >= g.coarse().intervals()) throw OutOfRange("interval index");
  if (i < 0 || i > bundle.obs_dim()) throw OutOfRange("observation component");
  const std::size_t r = g.per_interval();
  if (values.size() != r && values.size() != r + 1) {
    throw LengthMismatch("expected " + std::to_string(r) + " or " + std::to_string(r + 1) +
                         " values, got " + std::to_string(values.size()));
  }
  const std::size_t l0 = g.coarse_index(j);
  double s = 0.0;
  for (std::size_t q = 0; q < r; ++q) s += values[q] * bundle.dy(l0 + q, i);
  return s;
}

// ---------------------------------------------------------------------------
// Binary dump

namespace {

constexpr char kMagic[8] = {'H', 'O', 'F', 'P', 'A', 'T', 'H', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), sizeof(T));
  } else {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
}

template <typename T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes{};
  in.read(bytes.data(), sizeof(T));
  if (!in) throw ConfigError("truncated path dump");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

void put_array(std::ostream& out, const std::vector<double>& v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) put(out, v[i]);
}

std::vector<double> get_array(std::istream& in, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = get<double>(in);
  return v;
}

}  // namespace

void write_bundle(const std::filesystem::path& path, const PathBundle& bundle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  const FineGrid& g = bundle.grid();
  const std::size_t k = g.steps();
  const auto dx = static_cast<std::size_t>(bundle.state_dim());
  const auto dv = static_cast<std::size_t>(bundle.noise_dim());
  const auto dy = static_cast<std::size_t>(bundle.obs_dim());
  const bool has_dw = !bundle.observations()->dw.empty();
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dx));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dv));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dy));
  put<std::uint32_t>(out, bundle.measure() == Measure::P ? 0u : 1u);
  put<std::uint32_t>(out, has_dw ? 1u : 0u);
  put<std::uint64_t>(out, k);
  put<std::uint64_t>(out, g.per_interval());
  put<double>(out, g.coarse().uniformity());
  put_array(out, g.times(), k + 1);
  put_array(out, bundle.signal()->dv, k * dv);
  put_array(out, bundle.signal()->x, (k + 1) * dx);
  put_array(out, bundle.observations()->dy, k * dy);
  put_array(out, bundle.observations()->y, (k + 1) * dy);
  if (has_dw) put_array(out, bundle.observations()->dw, k * dy);
  if (!out) throw ConfigError("write failed for " + path.string());
}

PathBundle read_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ConfigError(path.string() + " is not a path dump");
  }
  if (get<std::uint32_t>(in) != kVersion) throw ConfigError("unsupported path dump version");
  const auto dx = get<std::uint32_t>(in);
  const auto dv = get<std::uint32_t>(in);
  const auto dy = get<std::uint32_t>(in);
  const auto measure = get<std::uint32_t>(in) == 0 ? Measure::P : Measure::PTilde;
  const bool has_dw = get<std::uint32_t>(in) != 0;
  const auto k = static_cast<std::size_t>(get<std::uint64_t>(in));
  const auto per = static_cast<std::size_t>(get<std::uint64_t>(in));
  const double uniformity = get<double>(in);
  auto times = get_array(in, k + 1);
  if (per == 0 || k % per != 0) throw ConfigError("inconsistent grid in path dump");
  auto regrid = std::make_shared<const FineGrid>(FineGrid::from_fine_times(std::move(times), per, uniformity));
  auto signal = std::make_shared<SignalPath>();
  signal->dv = get_array(in, k * dv);
  signal->x = get_array(in, (k + 1) * dx);
  auto obs = std::make_shared<ObservationPath>();
  obs->measure = measure;
  obs->dy = get_array(in, k * dy);
  obs->y = get_array(in, (k + 1) * dy);
  if (has_dw) obs->dw = get_array(in, k * dy);
  return PathBundle(std::move(regrid), std::move(signal), std::move(obs), static_cast<int>(dx),
                    static_cast<int>(dv), static_cast<int>(dy));
}

}  // namespace hofilt
