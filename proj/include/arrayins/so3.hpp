// Exact SO(3) primitives: Rodrigues exponential, logarithm, the rotation-vector
// rate matrix (Bortz equation) and the right Jacobian. All functions switch to
// Taylor series below a small-angle threshold so that no 0/0 is ever evaluated.
#pragma once

#include <Eigen/Dense>

namespace arrayins::so3 {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Branch switch for exp/log/gamma/right_jacobian. A 4th-order Taylor fallback
// below this norm keeps relative error under 1e-14 while avoiding 0/0.
inline constexpr double kSmallAngle = 1e-4;

/// Skew-symmetric matrix of v, so that skew(v) * w == v.cross(w).
Mat3 skew(const Vec3& v);

/// Inverse of skew: extracts v from an antisymmetric matrix.
Vec3 vee(const Mat3& m);

/// Rodrigues rotation matrix for the rotation vector theta.
Mat3 exp(const Vec3& theta);

/// Rotation vector of r with norm <= pi. At exactly pi the axis sign is fixed
/// by making the first nonzero component positive.
Vec3 log(const Mat3& r);

/// Gamma(theta) = I + 1/2 [theta x] + (1 - (t/2) cot(t/2)) [theta x]^2 / t^2,
/// the rotation-vector rate matrix (inverse right Jacobian). Requires |theta| < 2 pi.
Mat3 bortz_gamma(const Vec3& theta);

/// Right Jacobian Phi(theta): exp(theta + d) == exp(theta) * exp(Phi(theta) d)
/// to first order in d. Inverse of bortz_gamma. Requires |theta| < 2 pi.
Mat3 right_jacobian(const Vec3& theta);

/// True when m is orthogonal with determinant +1 within tol (Frobenius norm).
bool is_rotation(const Mat3& m, double tol = 1e-12);

}  // namespace arrayins::so3
