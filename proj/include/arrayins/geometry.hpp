// Accelerometer-array geometry: the stacked measurement matrix H, its
// pseudoinverse A = (H^T H)^-1 H^T that projects stacked specific forces onto
// angular acceleration and specific force, and the 6-dimensional reduction of
// per-triad bias and noise.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

#include "arrayins/errors.hpp"

namespace arrayins {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

struct RankDeficientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Immutable after construction; all member matrices are consistent with the
// (possibly re-centered) positions.
struct ArrayGeometry {
  std::vector<Vec3> positions;   // triad positions r_k [m], body frame
  Vec3 centroid_offset = Vec3::Zero();  // translation applied when center=true
  bool centered = false;         // ||sum_k r_k|| < 1e-9 m
  Eigen::MatrixXd H;             // 3K x 6 stacked [-[r_k x]  I3]
  Eigen::MatrixXd A;             // 6 x 3K, A H = I6
  std::vector<Mat3> A_k;         // 3x3 blocks of the angular-acceleration rows
  Mat3 second_moment = Mat3::Zero();  // sum_k [r_k x]^T [r_k x]

  int K() const { return static_cast<int>(positions.size()); }
};

// Joint covariances of the reduced accelerometer noise terms.
struct ReducedNoiseModel {
  Mat6 cov_wdot_s = Mat6::Zero();      // cov of (w_wdot, w_s)
  Mat6 cov_bias_walk = Mat6::Zero();   // cov of (w_b_wdot, w_b_s)
};

/// Builds the projection matrices for K >= 3 triads spanning a 2D plane.
/// With center=true the positions are first translated so their sum is zero
/// (the offset is recorded). Throws RankDeficientError when H^T H is singular
/// or has condition number above 1e12.
ArrayGeometry build_geometry(const std::vector<Vec3>& positions, bool center);

/// Stacked centrifugal terms: block k equals [omega x]^2 r_k.
Eigen::VectorXd centrifugal_stack(const Vec3& omega, const ArrayGeometry& geom);

/// Projects a stacked specific-force vector onto (omega_dot, s). Uses the
/// decoupled fast path (s = plain mean of the blocks) when the geometry is
/// centered, so s is then independent of omega exactly.
std::pair<Vec3, Vec3> solve_omega_dot_s(const Eigen::VectorXd& f_stack, const Vec3& omega,
                                        const ArrayGeometry& geom);

/// Reduced bias (b_wdot, b_s) = -A b_full.
Vec6 reduce_bias(const Eigen::VectorXd& b_full, const ArrayGeometry& geom);

/// 6x6 covariance [A Q A^T] of the reduced noise terms, cross blocks included.
Mat6 reduce_noise_covariance(const Eigen::MatrixXd& q_accel, const ArrayGeometry& geom);

/// Reduced covariances for isotropic per-axis accelerometer noise and bias
/// walk standard deviations.
ReducedNoiseModel reduce_noise_model(const ArrayGeometry& geom, double sigma_accel,
                                     double sigma_accel_bias_walk);

/// d(omega_dot)/d(omega) of the array differential equation at omega.
Mat3 omega_dot_jacobian(const ArrayGeometry& geom, const Vec3& omega);

/// Eigenvalues of the Jacobian of omega_dot = sum_k A_k (f_k - [w x]^2 r_k) - L w
/// with respect to omega, evaluated at omega0.
Eigen::Vector3cd stability_eigenvalues(const ArrayGeometry& geom, const Vec3& omega0,
                                       const Mat3& feedback_gain);

/// The 32-triad array used in the experiments: two 4x4 grids with 6.3 mm
/// in-plane spacing and 2.0 mm plane separation, centered at the origin.
ArrayGeometry paper_array32();

/// Centered square of 4 triads with side length `side` in the z=0 plane.
ArrayGeometry square_array4(double side);

}  // namespace arrayins
