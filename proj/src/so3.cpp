#include "arrayins/so3.hpp"

#include <cmath>

namespace arrayins::so3 {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) {
  return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

Mat3 exp(const Vec3& theta) {
  const double t2 = theta.squaredNorm();
  const double t = std::sqrt(t2);
  double a;  // sin(t)/t
  double b;  // (1 - cos(t))/t^2
  if (t < kSmallAngle) {
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    a = std::sin(t) / t;
    b = (1.0 - std::cos(t)) / t2;
  }
  const Mat3 s = skew(theta);
  return Mat3::Identity() + a * s + b * s * s;
}

Vec3 log(const Mat3& r) {
  // sin(angle) * axis from the antisymmetric part, cos(angle) from the trace.
  const Vec3 w = 0.5 * vee(r - r.transpose());
  const double c = 0.5 * (r.trace() - 1.0);
  const double s = w.norm();
  const double angle = std::atan2(s, c);

  if (angle < kSmallAngle) {
    // theta = w * (1 + t^2/6 + ...) with t ~ angle
    return w * (1.0 + angle * angle / 6.0 + 7.0 * std::pow(angle, 4) / 360.0);
  }
  if (angle < M_PI - 1e-4) {
    return w * (angle / s);
  }

  // Near pi the antisymmetric part degrades; recover the axis from the
  // symmetric part via [u x]^2 = (R - I)/2 + O(pi - angle).
  const Mat3 b = 0.5 * (r + r.transpose()) - Mat3::Identity();  // = (1-cos)[u x]^2 / ...
  // u u^T = I + B / (1 - cos(angle))
  const double one_minus_cos = 1.0 - c;
  Vec3 u;
  int imax = 0;
  Vec3 diag;
  for (int i = 0; i < 3; ++i) {
    diag(i) = 1.0 + b(i, i) / one_minus_cos;
    if (diag(i) > diag(imax)) imax = i;
  }
  u(imax) = std::sqrt(std::max(0.0, diag(imax)));
  for (int i = 0; i < 3; ++i) {
    if (i != imax) u(i) = (b(imax, i) / one_minus_cos) / u(imax);
  }
  u.normalize();
  // Align with the antisymmetric part while it still carries sign information,
  // otherwise apply the canonical convention: first nonzero component positive.
  if (s > 1e-10) {
    if (u.dot(w) < 0.0) u = -u;
  } else {
    for (int i = 0; i < 3; ++i) {
      if (std::abs(u(i)) > 1e-12) {
        if (u(i) < 0.0) u = -u;
        break;
      }
    }
  }
  return angle * u;
}

Mat3 bortz_gamma(const Vec3& theta) {
  const double t2 = theta.squaredNorm();
  const double t = std::sqrt(t2);
  double c;  // (1 - (t/2) cot(t/2)) / t^2
  if (t < kSmallAngle) {
    c = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    const double half = 0.5 * t;
    c = (1.0 - half * std::cos(half) / std::sin(half)) / t2;
  }
  const Mat3 s = skew(theta);
  return Mat3::Identity() + 0.5 * s + c * s * s;
}

Mat3 right_jacobian(const Vec3& theta) {
  const double t2 = theta.squaredNorm();
  const double t = std::sqrt(t2);
  double b;  // (1 - cos(t))/t^2
  double c;  // (t - sin(t))/t^3
  if (t < kSmallAngle) {
    b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    c = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  } else {
    b = (1.0 - std::cos(t)) / t2;
    c = (t - std::sin(t)) / (t2 * t);
  }
  const Mat3 s = skew(theta);
  return Mat3::Identity() - b * s + c * s * s;
}

bool is_rotation(const Mat3& m, double tol) {
  const double ortho = (m.transpose() * m - Mat3::Identity()).norm();
  return ortho <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

}  // namespace arrayins::so3
