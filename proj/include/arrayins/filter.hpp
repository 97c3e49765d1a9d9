// Discrete Lie-group extended Kalman filter on SO(3) x R^m. The predict and
// update cores are generic over the matrix types so the same algebra runs with
// compile-time dimensions in the hot loop and with dynamic matrices in the
// spec-level API and tests.
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "arrayins/composite.hpp"
#include "arrayins/models.hpp"

namespace arrayins {

struct FilterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Concentrated-Gaussian estimate: group-valued mean plus covariance on the
// Lie algebra.
struct FilterState {
  CompositeElement mean;
  Eigen::MatrixXd cov;
  double time = 0.0;
};

/// mean <- mean * exp(e) for an algebra vector of matching dimension.
template <class VecT>
void apply_right_increment(CompositeElement& mean, const VecT& e) {
  mean.rotation = mean.rotation * so3::exp(e.template head<3>());
  mean.euclidean += e.tail(e.size() - 3);
}

/// Propagation: mean <- mean exp(Omega), P <- F P F^T + G Q G^T with
/// F = Ad(exp(-Omega)) + Phi(Omega) J_x and G = Phi(Omega) J_w. The adjoint and
/// right Jacobian of the composite group act only on the rotation block.
template <class CovT, class OmegaT, class JxT, class JwT, class QT>
void predict_core(CompositeElement& mean, CovT& cov, const OmegaT& omega_hat, const JxT& jx,
                  const JwT& jw, const QT& q) {
  const Eigen::Vector3d theta = omega_hat.template head<3>();
  const Eigen::Matrix3d phi3 = so3::right_jacobian(theta);

  JxT f = jx;
  f.template topRows<3>() = phi3 * jx.template topRows<3>();
  f.template topLeftCorner<3, 3>() += so3::exp(-theta);
  for (Eigen::Index i = 3; i < f.rows(); ++i) f(i, i) += 1.0;

  JwT g = jw;
  g.template topRows<3>() = phi3 * jw.template topRows<3>();

  cov = f * cov * f.transpose() + g * q * g.transpose();
  cov = ((cov + cov.transpose()) * 0.5).eval();
  apply_right_increment(mean, omega_hat);
}

/// Measurement update for a 3-dimensional Euclidean measurement group (the
/// group logarithm of the innovation is the plain difference y - predicted).
/// Applies the attitude-reset covariance transport Phi(e) (I - K H) P Phi(e)^T.
template <class CovT, class HT>
void update_core(CompositeElement& mean, CovT& cov, const Eigen::Vector3d& innovation,
                 const HT& h, const Eigen::Matrix3d& q_m) {
  const auto p_ht = (cov * h.transpose()).eval();  // d x 3
  const Eigen::Matrix3d s = h * p_ht + q_m;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(s);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (lmin <= 0.0 || lmax / lmin > 1e12)
    throw FilterError("innovation covariance not invertible");

  const auto k = (s.ldlt().solve(p_ht.transpose())).transpose().eval();  // d x 3
  const auto e = (k * innovation).eval();

  cov -= k * (h * cov).eval();
  // Attitude reset: transport the covariance to the algebra at the new mean.
  const Eigen::Matrix3d phi3 = so3::right_jacobian(e.template head<3>());
  cov.template topRows<3>() = (phi3 * cov.template topRows<3>()).eval();
  cov.template leftCols<3>() = (cov.template leftCols<3>() * phi3.transpose()).eval();
  cov = ((cov + cov.transpose()) * 0.5).eval();
  apply_right_increment(mean, e);
}

struct RunOptions {
  NoiseConfig noise;
  double sigma_pos = 0.10;          // m, std of position updates
  bool enable_gyro_updates = true;  // array variants only
  Vec3 gravity = Vec3(0, 0, -9.81);
};

/// Runs the filter over a time-ordered measurement stream. Per frame: predict
/// (using the previous frame's accelerometer/gyro inputs), gyro update for
/// array variants, position update when the frame carries one, then the
/// observer sees the posterior: observer(index, time, mean, cov).
template <ModelVariant V, class Observer>
void run_filter_t(const ArrayGeometry& geom, const RunOptions& opt, const FilterState& init,
                  const std::vector<MeasurementFrame>& frames, Observer&& observer) {
  constexpr int kD = ModelTraits<V>::kDim;
  using CovT = Eigen::Matrix<double, kD, kD>;
  using HT = Eigen::Matrix<double, 3, kD>;

  if (init.cov.rows() != kD || init.cov.cols() != kD)
    throw DimensionError("run_filter: covariance does not match variant dimension");
  if (init.mean.algebra_dim() != kD)
    throw DimensionError("run_filter: state does not match variant dimension");

  CompositeElement mean = init.mean;
  CovT cov = init.cov;

  const NoiseCovT<V> q = model_process_noise<V>(geom, opt.noise);
  const Eigen::Matrix3d q_gyro =
      opt.noise.sigma_gyro * opt.noise.sigma_gyro * Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d q_pos = opt.sigma_pos * opt.sigma_pos * Eigen::Matrix3d::Identity();

  const StateLayout layout = state_layout(V);
  HT h_pos = HT::Zero();
  h_pos.template block<3, 3>(0, layout.p) = Eigen::Matrix3d::Identity();
  HT h_gyro = HT::Zero();
  if constexpr (ModelTraits<V>::kArray) {
    h_gyro.template block<3, 3>(0, layout.omega) = Eigen::Matrix3d::Identity();
    h_gyro.template block<3, 3>(0, layout.b_g) = Eigen::Matrix3d::Identity();
  }

  ModelInputs in;
  in.gravity = opt.gravity;
  double t_prev = init.time;

  for (std::size_t n = 0; n < frames.size(); ++n) {
    const MeasurementFrame& frame = frames[n];
    if (n > 0) {
      const double dt = frame.t - t_prev;
      if (dt <= 0.0) throw FilterError("non-monotonic timestamps in measurement stream");
      in.accel_stack = frames[n - 1].accel_stack;
      in.gyro = frames[n - 1].gyro;
      const AlgVecT<V> omega_hat = model_increment<V>(mean, in, geom, dt);
      const AlgMatT<V> jx = model_jacobian_state<V>(mean, in, geom, dt);
      const NoiseJacT<V> jw = model_jacobian_noise<V>(mean, in, geom, dt);
      predict_core(mean, cov, omega_hat, jx, jw, q);
    }

    if constexpr (ModelTraits<V>::kArray) {
      if (opt.enable_gyro_updates) {
        const Vec3 predicted = mean.euclidean.segment<3>(layout.omega - 3) +
                               mean.euclidean.segment<3>(layout.b_g - 3);
        update_core(mean, cov, Vec3(frame.gyro - predicted), h_gyro, q_gyro);
      }
    }
    if (frame.position) {
      const Vec3 predicted = mean.euclidean.segment<3>(layout.p - 3);
      update_core(mean, cov, Vec3(*frame.position - predicted), h_pos, q_pos);
    }
    observer(n, frame.t, mean, cov);
    t_prev = frame.t;
  }
}

// ---- dynamic spec-level API --------------------------------------------------

/// One D-LG-EKF prediction step; Q_p must match the variant's noise layout.
FilterState predict(const FilterState& fs, ModelVariant v, const ModelInputs& in,
                    const ArrayGeometry& geom, const Eigen::MatrixXd& q_p, double dt);

/// One measurement update with measurement y, model prediction and Jacobian H.
FilterState update(const FilterState& fs, const Vec3& y, const Vec3& predicted,
                   const Eigen::MatrixXd& h, const Mat3& q_m);

struct PosteriorSample {
  double t = 0.0;
  CompositeElement mean;
  Eigen::VectorXd cov_diag;
};

/// Convenience wrapper that records the full posterior trajectory.
std::vector<PosteriorSample> run_filter(ModelVariant v, const FilterState& init,
                                        const std::vector<MeasurementFrame>& frames,
                                        const ArrayGeometry& geom, const RunOptions& opt);

}  // namespace arrayins
