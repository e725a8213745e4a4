#include "hofilt/bench.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hofilt/error.hpp"
#include "hofilt/likelihood.hpp"
#include "hofilt/parallel.hpp"
#include "hofilt/rng.hpp"
#include "json.hpp"

namespace hofilt {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

bool is_pow2(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

std::string measure_name(Measure m) { return m == Measure::P ? "P" : "PTilde"; }

std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

ConvergenceConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  ConvergenceConfig c;
  try {
    const json doc = json::parse(in);
    std::filesystem::path model = doc.at("model").get<std::string>();
    if (model.is_relative()) model = path.parent_path() / model;
    c.model_path = model;
    if (doc.contains("phi")) c.phi = doc["phi"].get<std::string>();
    if (doc.contains("orders")) c.orders = doc["orders"].get<std::vector<int>>();
    if (doc.contains("n_list")) c.n_list = doc["n_list"].get<std::vector<std::size_t>>();
    if (doc.contains("N")) c.paths = doc["N"].get<std::size_t>();
    if (doc.contains("M_Y")) c.y_draws = doc["M_Y"].get<std::size_t>();
    if (doc.contains("R")) c.refinement = doc["R"].get<std::size_t>();
    if (doc.contains("C")) c.uniformity = doc["C"].get<double>();
    if (doc.contains("seeds")) {
      c.x_seed = doc["seeds"].at("x_seed").get<std::uint64_t>();
      c.y_seed = doc["seeds"].at("y_seed").get<std::uint64_t>();
    }
    if (doc.contains("measure")) {
      const auto m = doc["measure"].get<std::string>();
      if (m == "P") c.measure = Measure::P;
      else if (m == "PTilde") c.measure = Measure::PTilde;
      else throw ConfigError("measure must be \"P\" or \"PTilde\"");
    }
    if (doc.contains("override_mesh")) c.override_mesh = doc["override_mesh"].get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return c;
}

SlopeFit fit_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw TooFewPoints("slope fit needs at least 3 points, got " + std::to_string(points.size()));
  std::vector<double> lx, ly;
  for (const auto& [d, e] : points) {
    if (!(d > 0.0) || !(e > 0.0)) throw NonPositiveError("slope fit needs positive mesh and error values");
    lx.push_back(std::log(d));
    ly.push_back(std::log(e));
  }
  const auto n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw DomainError("slope fit needs distinct mesh values");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - f.intercept - f.slope * lx[i];
    rss += r * r;
  }
  f.se = lx.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
  f.points = lx.size();
  return f;
}

std::vector<OrderSlope> fit_orders(std::vector<ConvergenceRow>& rows, std::span<const int> orders) {
  std::vector<OrderSlope> out;
  for (int m : orders) {
    OrderSlope s;
    s.m = m;
    std::vector<std::pair<double, double>> pts;
    std::size_t computed = 0, exact = 0;
    for (auto& r : rows) {
      if (r.m != m || r.skipped) continue;
      ++computed;
      if (r.rms_error == 0.0 && r.mc_se == 0.0) {
        ++exact;
        r.reason = "exact";
      } else if (r.passes_noise_gate()) {
        pts.emplace_back(r.delta, r.rms_error);
      } else {
        r.reason = "mc noise gate";
      }
    }
    if (computed > 0 && exact == computed) {
      s.status = "exact";
    } else if (pts.size() >= 3) {
      s.status = "fit";
      s.fit = fit_slope(pts);
    } else {
      s.status = "insufficient";
    }
    out.push_back(std::move(s));
  }
  return out;
}

ConvergenceReport run_convergence(const ConvergenceConfig& config, const PosysModel& model,
                                  std::string model_sha256) {
  if (config.orders.empty() || config.n_list.empty()) throw ConfigError("orders and n_list must be non-empty");
  if (config.paths < 2) throw ConfigError("N must be at least 2");
  if (config.y_draws < 1) throw ConfigError("M_Y must be at least 1");
  for (int m : config.orders) {
    if (m < 1 || m > kMaxOrder) throw ConfigError("orders must lie in 1.." + std::to_string(kMaxOrder));
  }
  std::vector<int> orders = config.orders;
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  std::vector<std::size_t> ns = config.n_list;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  const std::size_t n_min = ns.front();
  if (n_min == 0) throw ConfigError("n_list entries must be positive");
  if (!is_pow2(config.refinement)) throw ConfigError("R must be a power of two");
  std::vector<std::size_t> per;
  for (std::size_t n : ns) {
    if (n % n_min != 0 || !is_pow2(n / n_min) || n / n_min > config.refinement) {
      throw ConfigError("every n must be a power-of-two multiple of the smallest n, at most R times it");
    }
    per.push_back(config.refinement / (n / n_min));
  }

  const auto base = std::make_shared<const FineGrid>(
      Partition::uniform(n_min, model.horizon(), config.uniformity), config.refinement);
  std::vector<std::shared_ptr<const FineGrid>> grids;
  for (std::size_t p : per) grids.push_back(std::make_shared<const FineGrid>(base->regrouped(p)));

  // Active cells, in (n, m) order for evaluation.
  const int table_order = std::min(orders.back(), model.smoothness_order());
  const CoefficientTable table = build_table(model, table_order);
  struct Cell {
    int m;
    std::size_t ni;
    bool skipped;
    std::string reason;
  };
  std::vector<Cell> cells;
  std::vector<std::vector<int>> active(ns.size());
  for (std::size_t ni = 0; ni < ns.size(); ++ni) {
    for (int m : orders) {
      Cell c{m, ni, false, {}};
      if (m > model.smoothness_order()) {
        c.skipped = true;
        c.reason = "order exceeds model smoothness " + std::to_string(model.smoothness_order());
      } else if (m >= 2) {
        const Admissibility adm = admissible(grids[ni]->coarse(), model, m);
        if (!adm.ok && !config.override_mesh) {
          c.skipped = true;
          c.reason = "inadmissible mesh: " + adm.reason;
        }
      }
      if (!c.skipped) active[ni].push_back(m);
      cells.push_back(std::move(c));
    }
  }
  // Slot of each active (ni, m) in the per-path difference vector.
  std::vector<std::vector<std::size_t>> slot(ns.size());
  std::size_t nslots = 0;
  for (std::size_t ni = 0; ni < ns.size(); ++ni) {
    for (std::size_t a = 0; a < active[ni].size(); ++a) slot[ni].push_back(nslots++);
  }

  const Expr phi = parse(config.phi, model.state_dim());
  const CompiledExpr phic(phi);
  XiOptions xo;
  xo.override_mesh = true;
  xo.keep_terms = false;
  const std::size_t n_paths = config.paths;
  const std::size_t last = base->steps();

  std::vector<double> sum_d2(nslots, 0.0), sum_se2(nslots, 0.0);
  std::vector<double> d(n_paths * nslots);
  for (std::size_t y = 0; y < config.y_draws; ++y) {
    const PathBundle obs = generate(model, base, config.y_seed, y, config.measure);
    const std::uint64_t xs = mix_seed(config.x_seed, y);
    parallel_for(n_paths, config.threads, [&](std::size_t k) {
      const PathBundle b = generate_signal(model, obs, xs, k);
      const double f = phic.eval(b.state(last));
      const double ez = std::exp(xi_reference(model, b));
      for (std::size_t ni = 0; ni < ns.size(); ++ni) {
        if (active[ni].empty()) continue;
        const PathBundle view(grids[ni], b.signal(), b.observations(), model.state_dim(), model.noise_dim(),
                              model.obs_dim());
        const auto res = xi_bar_orders(model, table, view, active[ni], xo);
        for (std::size_t a = 0; a < res.size(); ++a) d[k * nslots + slot[ni][a]] = f * (ez - res[a].weight);
      }
    });
    for (std::size_t s = 0; s < nslots; ++s) {
      double mean = 0.0;
      for (std::size_t k = 0; k < n_paths; ++k) mean += d[k * nslots + s];
      mean /= static_cast<double>(n_paths);
      double ss = 0.0;
      for (std::size_t k = 0; k < n_paths; ++k) {
        const double e = d[k * nslots + s] - mean;
        ss += e * e;
      }
      const double var_mean = ss / static_cast<double>(n_paths - 1) / static_cast<double>(n_paths);
      sum_d2[s] += mean * mean;
      sum_se2[s] += var_mean;
    }
  }

  ConvergenceReport report;
  report.config = config;
  report.config.orders = orders;
  report.config.n_list = ns;
  report.model_sha256 = std::move(model_sha256);
  report.delta0 = delta0(model);
  for (int m : orders) {
    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
      const Cell& c = *std::find_if(cells.begin(), cells.end(), [&](const Cell& x) { return x.m == m && x.ni == ni; });
      ConvergenceRow r;
      r.m = m;
      r.n = ns[ni];
      r.delta = grids[ni]->coarse().mesh();
      r.paths = n_paths;
      r.y_draws = config.y_draws;
      r.skipped = c.skipped;
      r.reason = c.reason;
      if (!c.skipped) {
        const auto pos = std::find(active[ni].begin(), active[ni].end(), m) - active[ni].begin();
        const std::size_t s = slot[ni][static_cast<std::size_t>(pos)];
        const auto my = static_cast<double>(config.y_draws);
        r.rms_error = std::sqrt(sum_d2[s] / my);
        r.mc_se = std::sqrt(sum_se2[s] / my);
      }
      report.rows.push_back(std::move(r));
    }
  }
  report.slopes = fit_orders(report.rows, orders);
  return report;
}

ConvergenceReport run_convergence(const ConvergenceConfig& config) {
  const PosysModel model = load_model(config.model_path);
  return run_convergence(config, model, sha256_file(config.model_path));
}

std::string to_csv(const ConvergenceReport& report) {
  std::string out = "m,n,delta,rms_error,mc_se,N,M_Y,skipped,reason\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.m) + ',' + std::to_string(r.n) + ',' + fmt(r.delta) + ',' + fmt(r.rms_error) + ',' +
           fmt(r.mc_se) + ',' + std::to_string(r.paths) + ',' + std::to_string(r.y_draws) + ',' +
           (r.skipped ? "1" : "0") + ',' + csv_safe(r.reason) + '\n';
  }
  return out;
}

std::string to_json(const ConvergenceReport& report) {
  json doc;
  const auto& c = report.config;
  doc["config"] = {{"model", c.model_path.string()},
                   {"model_sha256", report.model_sha256},
                   {"phi", c.phi},
                   {"orders", c.orders},
                   {"n_list", c.n_list},
                   {"N", c.paths},
                   {"M_Y", c.y_draws},
                   {"R", c.refinement},
                   {"C", c.uniformity},
                   {"seeds", {{"x_seed", c.x_seed}, {"y_seed", c.y_seed}}},
                   {"measure", measure_name(c.measure)},
                   {"override_mesh", c.override_mesh}};
  doc["delta0"] = std::isinf(report.delta0) ? json("inf") : json(report.delta0);
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"m", r.m},
                    {"n", r.n},
                    {"delta", r.delta},
                    {"rms_error", r.rms_error},
                    {"mc_se", r.mc_se},
                    {"N", r.paths},
                    {"M_Y", r.y_draws},
                    {"skipped", r.skipped},
                    {"reason", r.reason}});
  }
  doc["rows"] = std::move(rows);
  json slopes = json::array();
  for (const auto& s : report.slopes) {
    json e = {{"m", s.m}, {"status", s.status}};
    if (s.fit) {
      e["slope"] = s.fit->slope;
      e["intercept"] = s.fit->intercept;
      e["se"] = s.fit->se;
      e["points"] = s.fit->points;
    }
    slopes.push_back(std::move(e));
  }
  doc["slopes"] = std::move(slopes);
  return doc.dump(2) + "\n";
}

void emit(const ConvergenceReport& report, const std::string& format, const std::filesystem::path& path) {
  std::string text;
  if (format == "csv") text = to_csv(report);
  else if (format == "json") text = to_json(report);
  else throw ConfigError("unknown report format '" + format + "'");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out.flush()) throw Error("write failed for " + path.string());
}

std::vector<ConvergenceRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "m,n,delta,rms_error,mc_se,N,M_Y,skipped,reason") {
    throw ConfigError("unexpected report header");
  }
  std::vector<ConvergenceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (int k = 0; k < 8; ++k) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) throw ConfigError("short report row: " + line);
      f.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    f.push_back(line.substr(start));
    auto num = [&](const std::string& s, auto& v) {
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("bad number '" + s + "' in report");
    };
    ConvergenceRow r;
    num(f[0], r.m);
    num(f[1], r.n);
    num(f[2], r.delta);
    num(f[3], r.rms_error);
    num(f[4], r.mc_se);
    num(f[5], r.paths);
    num(f[6], r.y_draws);
    r.skipped = f[7] == "1";
    r.reason = f[8];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[8192];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

}  // namespace hofilt
