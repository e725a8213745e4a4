#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hofilt/model.hpp"
#include "hofilt/simulate.hpp"

namespace hofilt {

struct ConvergenceConfig {
  std::filesystem::path model_path;
  std::string phi = "tanh(x1)";
  std::vector<int> orders{1, 2, 3};
  std::vector<std::size_t> n_list{4, 8, 16, 32};
  std::size_t paths = 20000;         // N
  std::size_t y_draws = 20;          // M_Y
  std::size_t refinement = 256;      // fine steps per interval at the coarsest n
  double uniformity = kDefaultUniformity;
  std::uint64_t x_seed = 1;
  std::uint64_t y_seed = 2;
  Measure measure = Measure::PTilde;
  bool override_mesh = false;
  unsigned threads = 1;
};

/// Reads a JSON run description. A relative model path is resolved against
/// the directory of the config file.
ConvergenceConfig load_config(const std::filesystem::path& path);

struct ConvergenceRow {
  int m = 0;
  std::size_t n = 0;
  double delta = 0.0;
  double rms_error = 0.0;
  double mc_se = 0.0;
  std::size_t paths = 0;
  std::size_t y_draws = 0;
  bool skipped = false;
  /// Why a cell was skipped or left out of the slope fit; empty otherwise.
  std::string reason;

  /// Retained for the slope fit: computed and mc_se < rms_error / 3.
  bool passes_noise_gate() const noexcept { return !skipped && mc_se < rms_error / 3.0; }
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double se = 0.0;
  std::size_t points = 0;
};

struct OrderSlope {
  int m = 0;
  /// "fit", "exact" (all errors zero) or "insufficient" (fewer than 3 gated rows).
  std::string status;
  std::optional<SlopeFit> fit;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::vector<OrderSlope> slopes;
  ConvergenceConfig config;
  std::string model_sha256;
  double delta0 = 0.0;
};

/// Least squares of log(err) on log(delta).
SlopeFit fit_slope(std::span<const std::pair<double, double>> points);

/// Every (m, n) cell via common random numbers on one fine grid shared by
/// all n. Cells that are inadmissible or beyond the model's smoothness are
/// reported as skipped.
ConvergenceReport run_convergence(const ConvergenceConfig& config, const PosysModel& model,
                                  std::string model_sha256 = {});
/// Loads the model named by the config and hashes its file.
ConvergenceReport run_convergence(const ConvergenceConfig& config);

/// Fits per order from the gated rows; also marks gated-out rows in `reason`.
std::vector<OrderSlope> fit_orders(std::vector<ConvergenceRow>& rows, std::span<const int> orders);

std::string to_csv(const ConvergenceReport& report);
std::string to_json(const ConvergenceReport& report);
void emit(const ConvergenceReport& report, const std::string& format, const std::filesystem::path& path);
std::vector<ConvergenceRow> parse_csv(const std::string& text);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace hofilt
