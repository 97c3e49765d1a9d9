#include "arrayins/geometry.hpp"

#include <cmath>

#include "arrayins/so3.hpp"

namespace arrayins {

namespace {
constexpr double kCenteredTol = 1e-9;    // m, on ||sum r_k||
constexpr double kMaxCondition = 1e12;   // on H^T H
}  // namespace

ArrayGeometry build_geometry(const std::vector<Vec3>& positions, bool center) {
  const int k = static_cast<int>(positions.size());
  if (k < 3) throw RankDeficientError("at least 3 accelerometer triads are required");
  for (const auto& r : positions) {
    if (!r.allFinite()) throw RankDeficientError("non-finite accelerometer position");
  }

  ArrayGeometry geom;
  geom.positions = positions;
  if (center) {
    Vec3 mean = Vec3::Zero();
    for (const auto& r : positions) mean += r;
    mean /= static_cast<double>(k);
    for (auto& r : geom.positions) r -= mean;
    geom.centroid_offset = mean;
  }

  Vec3 sum = Vec3::Zero();
  for (const auto& r : geom.positions) sum += r;
  geom.centered = sum.norm() < kCenteredTol;

  geom.H.resize(3 * k, 6);
  for (int i = 0; i < k; ++i) {
    geom.H.block<3, 3>(3 * i, 0) = -so3::skew(geom.positions[i]);
    geom.H.block<3, 3>(3 * i, 3) = Mat3::Identity();
  }

  const Mat6 hth = geom.H.transpose() * geom.H;
  Eigen::SelfAdjointEigenSolver<Mat6> es(hth);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (lmin <= 0.0 || lmax / lmin > kMaxCondition) {
    throw RankDeficientError("accelerometer positions are rank deficient "
                             "(collinear or coincident triads)");
  }

  for (const auto& r : geom.positions) {
    const Mat3 s = so3::skew(r);
    geom.second_moment += s.transpose() * s;
  }

  geom.A.resize(6, 3 * k);
  if (geom.centered) {
    // Decoupled closed form: A_wdot = [A_1 ... A_K], A_s = (1/K)[I ... I].
    const Mat3 m_inv = geom.second_moment.inverse();
    for (int i = 0; i < k; ++i) {
      const Mat3 a_i = m_inv * so3::skew(geom.positions[i]);
      geom.A_k.push_back(a_i);
      geom.A.block<3, 3>(0, 3 * i) = a_i;
      geom.A.block<3, 3>(3, 3 * i) = Mat3::Identity() / static_cast<double>(k);
    }
  } else {
    geom.A = hth.ldlt().solve(geom.H.transpose());
    for (int i = 0; i < k; ++i) geom.A_k.push_back(geom.A.block<3, 3>(0, 3 * i));
  }
  return geom;
}

Eigen::VectorXd centrifugal_stack(const Vec3& omega, const ArrayGeometry& geom) {
  const Mat3 w2 = so3::skew(omega) * so3::skew(omega);
  Eigen::VectorXd h(3 * geom.K());
  for (int i = 0; i < geom.K(); ++i) h.segment<3>(3 * i) = w2 * geom.positions[i];
  return h;
}

std::pair<Vec3, Vec3> solve_omega_dot_s(const Eigen::VectorXd& f_stack, const Vec3& omega,
                                        const ArrayGeometry& geom) {
  if (f_stack.size() != 3 * geom.K())
    throw DimensionError("solve_omega_dot_s: stacked vector does not match K");
  const Mat3 w2 = so3::skew(omega) * so3::skew(omega);
  Vec3 omega_dot = Vec3::Zero();
  Vec3 s = Vec3::Zero();
  if (geom.centered) {
    for (int i = 0; i < geom.K(); ++i) {
      const Vec3 f_i = f_stack.segment<3>(3 * i);
      omega_dot += geom.A_k[i] * (f_i - w2 * geom.positions[i]);
      s += f_i;
    }
    s /= static_cast<double>(geom.K());
  } else {
    const Vec6 x = geom.A * (f_stack - centrifugal_stack(omega, geom));
    omega_dot = x.head<3>();
    s = x.tail<3>();
  }
  return {omega_dot, s};
}

Vec6 reduce_bias(const Eigen::VectorXd& b_full, const ArrayGeometry& geom) {
  if (b_full.size() != 3 * geom.K())
    throw DimensionError("reduce_bias: stacked vector does not match K");
  return -geom.A * b_full;
}

Mat6 reduce_noise_covariance(const Eigen::MatrixXd& q_accel, const ArrayGeometry& geom) {
  if (q_accel.rows() != 3 * geom.K() || q_accel.cols() != 3 * geom.K())
    throw DimensionError("reduce_noise_covariance: covariance does not match K");
  return geom.A * q_accel * geom.A.transpose();
}

ReducedNoiseModel reduce_noise_model(const ArrayGeometry& geom, double sigma_accel,
                                     double sigma_accel_bias_walk) {
  ReducedNoiseModel model;
  const int k3 = 3 * geom.K();
  model.cov_wdot_s = reduce_noise_covariance(
      sigma_accel * sigma_accel * Eigen::MatrixXd::Identity(k3, k3), geom);
  if (sigma_accel_bias_walk > 0.0) {
    model.cov_bias_walk = reduce_noise_covariance(
        sigma_accel_bias_walk * sigma_accel_bias_walk * Eigen::MatrixXd::Identity(k3, k3),
        geom);
  }
  return model;
}

Mat3 omega_dot_jacobian(const ArrayGeometry& geom, const Vec3& omega) {
  const Mat3 w = so3::skew(omega);
  Mat3 d = Mat3::Zero();
  for (int i = 0; i < geom.K(); ++i) {
    const Mat3 r = so3::skew(geom.positions[i]);
    d += geom.A_k[i] * (so3::skew(w * geom.positions[i]) + w * r);
  }
  return d;
}

Eigen::Vector3cd stability_eigenvalues(const ArrayGeometry& geom, const Vec3& omega0,
                                       const Mat3& feedback_gain) {
  const Mat3 jac = omega_dot_jacobian(geom, omega0) - feedback_gain;
  Eigen::EigenSolver<Mat3> es(jac);
  return es.eigenvalues();
}

ArrayGeometry paper_array32() {
  // Two 4x4 grids of IMU packages, 6.3 mm between adjacent package centers
  // (18.9 mm across the grid), planes 2.0 mm apart. Package centers are taken
  // as the triad positions.
  const double half_sep = 1.0e-3;
  const double coords[4] = {-9.45e-3, -3.15e-3, 3.15e-3, 9.45e-3};
  std::vector<Vec3> positions;
  for (double z : {half_sep, -half_sep}) {
    for (double x : coords) {
      for (double y : coords) {
        positions.emplace_back(x, y, z);
      }
    }
  }
  return build_geometry(positions, false);
}

ArrayGeometry square_array4(double side) {
  const double h = 0.5 * side;
  return build_geometry({Vec3(h, h, 0), Vec3(h, -h, 0), Vec3(-h, h, 0), Vec3(-h, -h, 0)},
                        false);
}

}  // namespace arrayins
