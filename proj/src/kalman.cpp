#include "hofilt/kalman.hpp"

#include <cmath>
#include <random>
#include <string>

#include "hofilt/error.hpp"

namespace hofilt {

namespace {

constexpr double kLinearTol = 1e-9;

bool close(double a, double b) { return std::abs(a - b) <= kLinearTol * (1.0 + std::abs(a) + std::abs(b)); }

std::vector<std::vector<double>> probe_points(int dim) {
  std::mt19937_64 gen(0x6b616c6d616eULL);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<std::vector<double>> pts;
  for (int p = 0; p < 8; ++p) {
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (auto& v : x) v = u(gen);
    pts.push_back(std::move(x));
  }
  return pts;
}

// Rows are the Jacobian at 0 of each expression; checks e(x) = J x at the probes.
Eigen::MatrixXd linear_part(const std::vector<const Expr*>& exprs, int dim, const char* what) {
  const std::vector<double> zero(static_cast<std::size_t>(dim), 0.0);
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(exprs.size()), dim);
  for (std::size_t r = 0; r < exprs.size(); ++r) {
    if (!close(exprs[r]->eval(zero), 0.0)) throw NotLinear(std::string(what) + " has a nonzero offset");
    for (int k = 1; k <= dim; ++k) jac(static_cast<Eigen::Index>(r), k - 1) = diff(*exprs[r], k).eval(zero);
  }
  for (const auto& x : probe_points(dim)) {
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), dim);
    const Eigen::VectorXd lin = jac * xv;
    for (std::size_t r = 0; r < exprs.size(); ++r) {
      if (!close(exprs[r]->eval(x), lin(static_cast<Eigen::Index>(r)))) {
        throw NotLinear(std::string(what) + " is not linear in the state");
      }
    }
  }
  return jac;
}

}  // namespace

LinearGaussianModel certify_linear(const PosysModel& model) {
  const int dx = model.state_dim(), dv = model.noise_dim(), dy = model.obs_dim();
  LinearGaussianModel lg;
  std::vector<const Expr*> f, h;
  for (int k = 1; k <= dx; ++k) f.push_back(&model.drift(k));
  for (int i = 1; i <= dy; ++i) h.push_back(&model.sensor(i));
  lg.a = linear_part(f, dx, "drift");
  lg.c = linear_part(h, dx, "sensor");
  lg.sigma.resize(dx, dv);
  const std::vector<double> zero(static_cast<std::size_t>(dx), 0.0);
  const auto probes = probe_points(dx);
  for (int k = 1; k <= dx; ++k) {
    for (int r = 1; r <= dv; ++r) {
      const Expr& s = model.diffusion(k, r);
      const double v = s.eval(zero);
      for (const auto& x : probes) {
        if (!close(s.eval(x), v)) throw NotLinear("diffusion is not constant");
      }
      lg.sigma(k - 1, r - 1) = v;
    }
  }
  const InitialLaw& init = model.initial();
  lg.m0 = Eigen::Map<const Eigen::VectorXd>(init.mean.data(), dx);
  if (init.kind == InitialLaw::Kind::Gaussian) {
    lg.p0 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        init.cov.data(), dx, dx);
  } else {
    lg.p0 = Eigen::MatrixXd::Zero(dx, dx);
  }
  return lg;
}

KalmanState kalman_bucy(const LinearGaussianModel& lg, const PathBundle& observed) {
  const Eigen::Index dx = lg.a.rows();
  const int dy = observed.obs_dim();
  if (lg.c.rows() != dy || lg.c.cols() != dx || lg.m0.size() != dx) {
    throw LengthMismatch("linear model dimensions do not match the observation path");
  }
  const Eigen::MatrixXd q = lg.sigma * lg.sigma.transpose();
  const Eigen::MatrixXd ctc = lg.c.transpose() * lg.c;
  KalmanState s;
  s.mean = lg.m0;
  s.covariance = lg.p0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.covariance, Eigen::EigenvaluesOnly);
  s.min_eigenvalue = eig.eigenvalues().minCoeff();
  Eigen::VectorXd d_y(dy);
  const FineGrid& g = observed.grid();
  for (std::size_t l = 0; l < g.steps(); ++l) {
    const double ds = g.step(l);
    for (int i = 0; i < dy; ++i) d_y(i) = observed.dy(l, i + 1);
    const Eigen::VectorXd cm = lg.c * s.mean;
    s.log_evidence += cm.dot(d_y) - 0.5 * cm.squaredNorm() * ds;
    const Eigen::MatrixXd& p = s.covariance;
    const Eigen::VectorXd mean = s.mean + lg.a * s.mean * ds + p * lg.c.transpose() * (d_y - cm * ds);
    Eigen::MatrixXd cov = p + (lg.a * p + p * lg.a.transpose() + q - p * ctc * p) * ds;
    s.mean = mean;
    s.covariance = 0.5 * (cov + cov.transpose());
    eig.compute(s.covariance, Eigen::EigenvaluesOnly);
    s.min_eigenvalue = std::min(s.min_eigenvalue, eig.eigenvalues().minCoeff());
  }
  return s;
}

KalmanState kalman_bucy(const PosysModel& model, const PathBundle& observed) {
  return kalman_bucy(certify_linear(model), observed);
}

}  // namespace hofilt
