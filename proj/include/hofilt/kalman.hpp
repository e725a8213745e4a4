#pragma once

#include <Eigen/Dense>

#include "hofilt/model.hpp"
#include "hofilt/simulate.hpp"

namespace hofilt {

/// dX = a X ds + sigma dV, dY = c X ds + dW, X_0 ~ N(m0, p0).
struct LinearGaussianModel {
  Eigen::MatrixXd a;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd c;
  Eigen::VectorXd m0;
  Eigen::MatrixXd p0;
};

/// Extracts (a, sigma, c) after checking f(0) = 0, f and h linear and sigma
/// constant at a fixed set of probe points. Throws NotLinear otherwise.
LinearGaussianModel certify_linear(const PosysModel& model);

struct KalmanState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double log_evidence = 0.0;
  /// Smallest covariance eigenvalue seen along the path.
  double min_eigenvalue = 0.0;
};

/// Left-point Kalman-Bucy recursion over the fine grid of `observed`.
KalmanState kalman_bucy(const LinearGaussianModel& lg, const PathBundle& observed);
KalmanState kalman_bucy(const PosysModel& model, const PathBundle& observed);

}  // namespace hofilt
