#include "hofilt/model.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "hofilt/error.hpp"
#include "json.hpp"

namespace hofilt {

InitialLaw InitialLaw::point(std::vector<double> mean) {
  InitialLaw law;
  law.kind = Kind::Point;
  law.mean = std::move(mean);
  return law;
}

InitialLaw InitialLaw::gaussian(std::vector<double> mean, std::vector<double> cov) {
  const auto d = static_cast<Eigen::Index>(mean.size());
  if (cov.size() != mean.size() * mean.size()) {
    throw ConfigError("initial covariance must be d_X x d_X");
  }
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> c(
      cov.data(), d, d);
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) throw ConfigError("initial covariance is not positive definite");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> l = llt.matrixL();
  InitialLaw law;
  law.kind = Kind::Gaussian;
  law.mean = std::move(mean);
  law.cov = std::move(cov);
  law.chol.assign(l.data(), l.data() + l.size());
  return law;
}

PosysModel::PosysModel(Spec spec) : spec_(std::move(spec)) {
  const int dx = spec_.state_dim;
  const int dv = spec_.noise_dim;
  const int dy = spec_.obs_dim;
  if (dx < 1 || dv < 1 || dy < 1) throw ConfigError("dimensions must be positive");
  if (dv > kMaxNoiseDim) throw ConfigError("d_V exceeds limit " + std::to_string(kMaxNoiseDim));
  if (spec_.drift.size() != static_cast<std::size_t>(dx)) throw ConfigError("f must have d_X entries");
  if (spec_.diffusion.size() != static_cast<std::size_t>(dx * dv)) {
    throw ConfigError("sigma must be d_X x d_V");
  }
  if (spec_.sensor.size() != static_cast<std::size_t>(dy)) throw ConfigError("h must have d_Y entries");
  if (spec_.smoothness_order < 1 || spec_.smoothness_order > kMaxOrder) {
    throw ConfigError("smoothness_order must lie in [1, " + std::to_string(kMaxOrder) + "]");
  }
  if (!(spec_.horizon > 0.0) || !std::isfinite(spec_.horizon)) throw ConfigError("t must be positive");
  if (spec_.initial.mean.size() != static_cast<std::size_t>(dx)) {
    throw ConfigError("initial mean must have d_X entries");
  }
  auto check_vars = [dx](const Expr& e, const char* what) {
    if (e.max_var() > dx) {
      throw ConfigError(std::string(what) + " references x" + std::to_string(e.max_var()) +
                        " beyond d_X = " + std::to_string(dx));
    }
  };
  for (const auto& e : spec_.drift) check_vars(e, "f");
  for (const auto& e : spec_.diffusion) check_vars(e, "sigma");
  for (const auto& e : spec_.sensor) check_vars(e, "h");

  std::vector<Expr> squares;
  for (const auto& h : spec_.sensor) squares.push_back(Expr::pow(h, 2));
  sensors_.push_back(Expr::mul({Expr::constant(-0.5), Expr::add(std::move(squares))}));
  for (const auto& h : spec_.sensor) sensors_.push_back(h);

  for (const auto& e : spec_.drift) drift_c_.emplace_back(e);
  for (const auto& e : spec_.diffusion) diffusion_c_.emplace_back(e);
  for (const auto& e : sensors_) sensor_c_.emplace_back(e);

  if (spec_.lh_bound) {
    if (!(*spec_.lh_bound >= 0.0) || !std::isfinite(*spec_.lh_bound)) {
      throw ConfigError("lh_bound must be a finite non-negative number");
    }
    if (*spec_.lh_bound == 0.0) {
      for (int i = 1; i <= dy; ++i) {
        for (int r = 1; r <= dv; ++r) {
          if (!apply_lr(sensor(i), r, *this).is_constant(0.0)) {
            throw ConfigError("lh_bound = 0 but L^r h_i does not vanish identically");
          }
        }
      }
    }
  }

  bool bounded = true;
  for (const auto& e : spec_.drift) bounded = bounded && is_bounded(e);
  for (const auto& e : spec_.diffusion) bounded = bounded && is_bounded(e);
  for (const auto& e : spec_.sensor) bounded = bounded && is_bounded(e);
  if (!bounded) {
    warnings_.emplace_back(
        "model has unbounded (polynomial) coefficients; the boundedness part of the smoothness "
        "assumption is not satisfied and rates are not guaranteed");
  }
}

const Expr& PosysModel::diffusion(int k, int r) const {
  if (k < 1 || k > state_dim() || r < 1 || r > noise_dim()) throw OutOfRange("sigma index");
  return spec_.diffusion[static_cast<std::size_t>((k - 1) * noise_dim() + (r - 1))];
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

Expr formula(const json& j, int dx, const std::string& what) {
  if (j.is_number()) return Expr::constant(j.get<double>());
  if (!j.is_string()) throw ConfigError(what + " must be a formula string");
  return parse(j.get<std::string>(), dx);
}

PosysModel from_json(const json& doc) {
  try {
    PosysModel::Spec s;
    s.state_dim = doc.at("d_X").get<int>();
    s.noise_dim = doc.at("d_V").get<int>();
    s.obs_dim = doc.at("d_Y").get<int>();
    const int dx = s.state_dim;
    for (const auto& f : doc.at("f")) s.drift.push_back(formula(f, dx, "f"));
    const auto& sig = doc.at("sigma");
    if (!sig.is_array() || sig.size() != static_cast<std::size_t>(dx)) {
      throw ConfigError("sigma must be an array of d_X rows");
    }
    for (const auto& row : sig) {
      if (!row.is_array() || row.size() != static_cast<std::size_t>(s.noise_dim)) {
        throw ConfigError("each sigma row must have d_V entries");
      }
      for (const auto& e : row) s.diffusion.push_back(formula(e, dx, "sigma"));
    }
    for (const auto& h : doc.at("h")) s.sensor.push_back(formula(h, dx, "h"));
    if (doc.contains("lh_bound") && !doc.at("lh_bound").is_null()) {
      s.lh_bound = doc.at("lh_bound").get<double>();
    }
    s.smoothness_order = doc.value("smoothness_order", kMaxOrder);
    s.horizon = doc.value("t", 1.0);
    if (doc.contains("x0")) {
      const auto& x0 = doc.at("x0");
      const std::string type = x0.value("type", "point");
      auto mean = x0.at("mean").get<std::vector<double>>();
      if (type == "point") {
        s.initial = InitialLaw::point(std::move(mean));
      } else if (type == "gaussian") {
        std::vector<double> cov;
        for (const auto& row : x0.at("cov")) {
          for (const auto& v : row) cov.push_back(v.get<double>());
        }
        s.initial = InitialLaw::gaussian(std::move(mean), std::move(cov));
      } else {
        throw ConfigError("x0.type must be 'point' or 'gaussian'");
      }
    } else {
      s.initial = InitialLaw::point(std::vector<double>(static_cast<std::size_t>(dx), 0.0));
    }
    return PosysModel(std::move(s));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model document: ") + e.what());
  }
}

}  // namespace

PosysModel model_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model document is not valid JSON: ") + e.what());
  }
  return from_json(doc);
}

PosysModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return model_from_json_text(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

Expr apply_l0(const Expr& g, const PosysModel& model) {
  const int dx = model.state_dim();
  const int dv = model.noise_dim();
  std::vector<Expr> terms;
  std::vector<Expr> grad;
  for (int k = 1; k <= dx; ++k) {
    grad.push_back(diff(g, k));
    if (!grad.back().is_constant(0.0)) terms.push_back(model.drift(k) * grad.back());
  }
  for (int k = 1; k <= dx; ++k) {
    if (grad[static_cast<std::size_t>(k - 1)].is_constant(0.0)) continue;
    for (int l = 1; l <= dx; ++l) {
      Expr second = diff(grad[static_cast<std::size_t>(k - 1)], l);
      if (second.is_constant(0.0)) continue;
      for (int r = 1; r <= dv; ++r) {
        terms.push_back(Expr::mul(
            {Expr::constant(0.5), model.diffusion(k, r), model.diffusion(l, r), second}));
      }
    }
  }
  return Expr::add(std::move(terms));
}

Expr apply_lr(const Expr& g, int r, const PosysModel& model) {
  if (r < 1 || r > model.noise_dim()) throw OutOfRange("noise label " + std::to_string(r));
  std::vector<Expr> terms;
  for (int k = 1; k <= model.state_dim(); ++k) {
    Expr d = diff(g, k);
    if (!d.is_constant(0.0)) terms.push_back(model.diffusion(k, r) * d);
  }
  return Expr::add(std::move(terms));
}

namespace {

Expr apply_label(int label, const Expr& g, const PosysModel& model) {
  return label == 0 ? apply_l0(g, model) : apply_lr(g, label, model);
}

}  // namespace

Expr apply_lalpha(const MultiIndex& alpha, const Expr& g, const PosysModel& model) {
  Expr out = g;
  for (std::size_t i = alpha.length(); i > 0; --i) out = apply_label(alpha[i - 1], out, model);
  return out;
}

// ---------------------------------------------------------------------------

std::size_t CoefficientTable::position(const MultiIndex& alpha) const {
  auto it = lookup_.find(alpha);
  if (it == lookup_.end()) throw DomainError("index " + alpha.to_string() + " not in table");
  return it->second;
}

const Expr& CoefficientTable::at(int sensor, const MultiIndex& alpha) const {
  return entry(sensor, position(alpha));
}

const Expr& CoefficientTable::entry(int sensor, std::size_t pos) const {
  if (sensor < 0 || sensor > obs_dim_ || pos >= indices_.size()) throw OutOfRange("table entry");
  return entries_[static_cast<std::size_t>(sensor) * indices_.size() + pos];
}

const CompiledExpr& CoefficientTable::compiled(int sensor, std::size_t pos) const {
  if (sensor < 0 || sensor > obs_dim_ || pos >= indices_.size()) throw OutOfRange("table entry");
  return compiled_[static_cast<std::size_t>(sensor) * indices_.size() + pos];
}

const Expr& CoefficientTable::remainder_entry(int sensor, std::size_t pos) const {
  if (sensor < 0 || sensor > obs_dim_ || pos >= remainder_.size()) throw OutOfRange("remainder entry");
  return remainder_entries_[static_cast<std::size_t>(sensor) * remainder_.size() + pos];
}

std::string CoefficientTable::dump() const {
  std::string out;
  for (int i = 0; i <= obs_dim_; ++i) {
    for (std::size_t a = 0; a < indices_.size(); ++a) {
      out += "h" + std::to_string(i) + " " + indices_[a].to_string() + " : " +
             print(entry(i, a)) + "\n";
    }
  }
  return out;
}

CoefficientTable build_table(const PosysModel& model, int order, bool with_remainder) {
  if (order < 1) throw DomainError("order must be >= 1");
  if (order > model.smoothness_order()) {
    throw OrderTooHigh("order " + std::to_string(order) + " exceeds the model smoothness order " +
                       std::to_string(model.smoothness_order()));
  }
  CoefficientTable t;
  t.order_ = order;
  t.obs_dim_ = model.obs_dim();
  t.indices_ = enumerate_m(order - 1, model.noise_dim());
  for (std::size_t a = 0; a < t.indices_.size(); ++a) t.lookup_.emplace(t.indices_[a], a);

  const std::size_t na = t.indices_.size();
  t.entries_.resize(static_cast<std::size_t>(model.obs_dim() + 1) * na);
  for (int i = 0; i <= model.obs_dim(); ++i) {
    Expr* row = &t.entries_[static_cast<std::size_t>(i) * na];
    row[0] = model.sensor(i);
    // Length-first order guarantees -alpha is already filled.
    for (std::size_t a = 1; a < na; ++a) {
      const MultiIndex& alpha = t.indices_[a];
      row[a] = apply_label(alpha[0], row[t.lookup_.at(alpha.drop_first())], model);
    }
  }
  t.compiled_.reserve(t.entries_.size());
  for (const auto& e : t.entries_) t.compiled_.emplace_back(e);

  if (with_remainder) {
    t.remainder_ = remainder_set(order - 1, model.noise_dim());
    const std::size_t nr = t.remainder_.size();
    t.remainder_entries_.resize(static_cast<std::size_t>(model.obs_dim() + 1) * nr);
    for (int i = 0; i <= model.obs_dim(); ++i) {
      for (std::size_t a = 0; a < nr; ++a) {
        const MultiIndex& alpha = t.remainder_[a];
        t.remainder_entries_[static_cast<std::size_t>(i) * nr + a] =
            apply_label(alpha[0], t.at(i, alpha.drop_first()), model);
      }
    }
  }
  return t;
}

double delta0(const PosysModel& model) {
  const double dims = std::sqrt(static_cast<double>(model.obs_dim() * model.noise_dim()));
  double bound = 0.0;
  if (model.lh_bound()) {
    bound = *model.lh_bound();
  } else {
    for (int i = 1; i <= model.obs_dim(); ++i) {
      for (int r = 1; r <= model.noise_dim(); ++r) {
        Expr lh = apply_lr(model.sensor(i), r, model);
        if (!lh.is_constant()) {
          throw MissingBound("lh_bound is not set and L^" + std::to_string(r) + " h_" +
                             std::to_string(i) + " is not constant");
        }
        bound = std::max(bound, std::abs(lh.value()));
      }
    }
  }
  if (bound == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (2.0 * bound * dims);
}

double sample_lh_sup(const PosysModel& model, const std::vector<double>& lo,
                     const std::vector<double>& hi, std::size_t samples, std::uint64_t seed) {
  const auto dx = static_cast<std::size_t>(model.state_dim());
  if (lo.size() != dx || hi.size() != dx) throw LengthMismatch("box must have d_X bounds");
  std::vector<CompiledExpr> lh;
  for (int i = 1; i <= model.obs_dim(); ++i) {
    for (int r = 1; r <= model.noise_dim(); ++r) lh.emplace_back(apply_lr(model.sensor(i), r, model));
  }
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(dx);
  double sup = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t k = 0; k < dx; ++k) x[k] = lo[k] + (hi[k] - lo[k]) * u(gen);
    for (const auto& c : lh) sup = std::max(sup, std::abs(c.eval(x)));
  }
  return sup;
}

}  // namespace hofilt
