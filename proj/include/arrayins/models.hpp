// The four state-space model variants: state layout, propagation increment,
// measurement functions, and the analytical Jacobians of the increment in the
// state and in the process noise. Compile-time variants carry fixed matrix
// dimensions for the filter hot path; dynamic wrappers mirror them for tests
// and the validation command.
//
// State blocks (Lie algebra order):
//   accelerometer-array variants: (e_R, omega, p, v, b_wdot, b_s, b_g), dim 21
//   gyroscope variants:           (e_R, p, v, b_s, b_g), dim 15
// Process noise:
//   array variants: (w_wdot, w_s, w_b_wdot, w_b_s, w_b_g), dim 15
//   2nd order gyro: (w_wdot, w_s, w_g, w_b_s, w_b_g), dim 15
//   1st order gyro: (w_s, w_g, w_b_s, w_b_g), dim 12
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "arrayins/composite.hpp"
#include "arrayins/geometry.hpp"
#include "arrayins/sensor_sim.hpp"

namespace arrayins {

enum class ModelVariant { AccelArray2nd, AccelArray1st, Gyro2nd, Gyro1st };

inline constexpr ModelVariant kAllVariants[] = {
    ModelVariant::AccelArray2nd, ModelVariant::AccelArray1st,
    ModelVariant::Gyro2nd, ModelVariant::Gyro1st};

const char* variant_name(ModelVariant v);
ModelVariant parse_variant(const std::string& name);

struct ModelInputs {
  Eigen::VectorXd accel_stack;            // 3K stacked accelerometer readings
  Vec3 gyro = Vec3::Zero();               // consumed in propagation by gyro variants
  Vec3 gravity = Vec3(0, 0, -9.81);
};

template <ModelVariant V>
struct ModelTraits;

template <>
struct ModelTraits<ModelVariant::AccelArray2nd> {
  static constexpr int kDim = 21, kNoise = 15;
  static constexpr bool kArray = true, kSecondOrder = true;
};
template <>
struct ModelTraits<ModelVariant::AccelArray1st> {
  static constexpr int kDim = 21, kNoise = 15;
  static constexpr bool kArray = true, kSecondOrder = false;
};
template <>
struct ModelTraits<ModelVariant::Gyro2nd> {
  static constexpr int kDim = 15, kNoise = 15;
  static constexpr bool kArray = false, kSecondOrder = true;
};
template <>
struct ModelTraits<ModelVariant::Gyro1st> {
  static constexpr int kDim = 15, kNoise = 12;
  static constexpr bool kArray = false, kSecondOrder = false;
};

// Euclidean-block offsets (into CompositeElement::euclidean); algebra offsets
// are these plus 3 for the rotation block.
template <ModelVariant V>
struct StateOffsets {
  static constexpr bool A = ModelTraits<V>::kArray;
  static constexpr int omega = A ? 0 : -1;
  static constexpr int p = A ? 3 : 0;
  static constexpr int v = A ? 6 : 3;
  static constexpr int b_wdot = A ? 9 : -1;
  static constexpr int b_s = A ? 12 : 6;
  static constexpr int b_g = A ? 15 : 9;
  static constexpr int zdim = ModelTraits<V>::kDim - 3;
};

template <ModelVariant V>
struct NoiseOffsets {
  static constexpr bool A = ModelTraits<V>::kArray;
  static constexpr bool G2 = (V == ModelVariant::Gyro2nd);
  static constexpr int w_wdot = (A || G2) ? 0 : -1;
  static constexpr int w_s = (A || G2) ? 3 : 0;
  static constexpr int w_g = G2 ? 6 : (A ? -1 : 3);
  static constexpr int w_b_wdot = A ? 6 : -1;
  static constexpr int w_b_s = A ? 9 : (G2 ? 9 : 6);
  static constexpr int w_b_g = A ? 12 : (G2 ? 12 : 9);
};

template <ModelVariant V>
using AlgVecT = Eigen::Matrix<double, ModelTraits<V>::kDim, 1>;
template <ModelVariant V>
using AlgMatT = Eigen::Matrix<double, ModelTraits<V>::kDim, ModelTraits<V>::kDim>;
template <ModelVariant V>
using NoiseVecT = Eigen::Matrix<double, ModelTraits<V>::kNoise, 1>;
template <ModelVariant V>
using NoiseJacT = Eigen::Matrix<double, ModelTraits<V>::kDim, ModelTraits<V>::kNoise>;
template <ModelVariant V>
using NoiseCovT = Eigen::Matrix<double, ModelTraits<V>::kNoise, ModelTraits<V>::kNoise>;

namespace detail {

// Angular velocity used inside the increment: the state's omega for array
// variants, the bias- and noise-corrected gyro reading for gyro variants.
template <ModelVariant V>
inline Vec3 increment_omega(const CompositeElement& x, const ModelInputs& in,
                            const NoiseVecT<V>* w) {
  using S = StateOffsets<V>;
  using N = NoiseOffsets<V>;
  if constexpr (ModelTraits<V>::kArray) {
    (void)in;
    (void)w;
    return x.euclidean.template segment<3>(S::omega);
  } else {
    Vec3 om = in.gyro - x.euclidean.template segment<3>(S::b_g);
    if (w) om -= w->template segment<3>(N::w_g);
    return om;
  }
}

inline Vec3 accel_mean(const Eigen::VectorXd& stack, int k) {
  Vec3 m = Vec3::Zero();
  for (int i = 0; i < k; ++i) m += stack.segment<3>(3 * i);
  return m / static_cast<double>(k);
}

inline Vec3 array_omega_dot(const Eigen::VectorXd& stack, const Vec3& omega,
                            const ArrayGeometry& geom) {
  const Mat3 w2 = so3::skew(omega) * so3::skew(omega);
  Vec3 wd = Vec3::Zero();
  for (int i = 0; i < geom.K(); ++i)
    wd += geom.A_k[i] * (stack.segment<3>(3 * i) - w2 * geom.positions[i]);
  return wd;
}

}  // namespace detail

/// Lie-algebra increment Omega of the variant's propagation equations at the
/// given state, inputs and (optional) process-noise realization.
template <ModelVariant V>
AlgVecT<V> model_increment(const CompositeElement& x, const ModelInputs& in,
                           const ArrayGeometry& geom, double dt,
                           const NoiseVecT<V>* w = nullptr) {
  using T = ModelTraits<V>;
  using S = StateOffsets<V>;
  using N = NoiseOffsets<V>;
  if (x.euclidean_dim() != S::zdim)
    throw DimensionError("model_increment: state dimension does not match variant");
  if (in.accel_stack.size() != 3 * geom.K())
    throw DimensionError("model_increment: accelerometer stack does not match K");

  const auto& z = x.euclidean;
  const Vec3 omega = detail::increment_omega<V>(x, in, w);

  Vec3 s = detail::accel_mean(in.accel_stack, geom.K()) + z.template segment<3>(S::b_s);
  if (w) s += w->template segment<3>(N::w_s);

  Vec3 wdot = Vec3::Zero();
  if constexpr (T::kArray || T::kSecondOrder) {
    wdot = detail::array_omega_dot(in.accel_stack, omega, geom);
    if constexpr (T::kArray) wdot += z.template segment<3>(S::b_wdot);
    if (w) wdot += w->template segment<3>(N::w_wdot);
  }

  const Vec3 vdot = in.gravity + x.rotation * s;

  AlgVecT<V> out = AlgVecT<V>::Zero();
  out.template segment<3>(0) = omega * dt;
  if constexpr (T::kSecondOrder) out.template segment<3>(0) += wdot * (0.5 * dt * dt);
  if constexpr (T::kArray) out.template segment<3>(3 + S::omega) = wdot * dt;
  out.template segment<3>(3 + S::p) =
      z.template segment<3>(S::v) * dt + vdot * (0.5 * dt * dt);
  out.template segment<3>(3 + S::v) = vdot * dt;
  if (w) {
    if constexpr (T::kArray)
      out.template segment<3>(3 + S::b_wdot) = w->template segment<3>(N::w_b_wdot);
    out.template segment<3>(3 + S::b_s) = w->template segment<3>(N::w_b_s);
    out.template segment<3>(3 + S::b_g) = w->template segment<3>(N::w_b_g);
  }
  return out;
}

/// Jacobian of the increment in the state (right perturbation on the group).
template <ModelVariant V>
AlgMatT<V> model_jacobian_state(const CompositeElement& x, const ModelInputs& in,
                                const ArrayGeometry& geom, double dt) {
  using T = ModelTraits<V>;
  using S = StateOffsets<V>;
  const auto& z = x.euclidean;
  const Vec3 omega = detail::increment_omega<V>(x, in, nullptr);
  const Vec3 s = detail::accel_mean(in.accel_stack, geom.K()) + z.template segment<3>(S::b_s);

  const Mat3 dvdot_deR = -x.rotation * so3::skew(s);
  const Mat3 dvdot_dbs = x.rotation;  // s enters v_dot through R s
  const double h = 0.5 * dt * dt;

  AlgMatT<V> jac = AlgMatT<V>::Zero();
  if constexpr (T::kArray) {
    const Mat3 dwdot_dom = omega_dot_jacobian(geom, omega);
    jac.template block<3, 3>(0, 3 + S::omega) = Mat3::Identity() * dt;
    if constexpr (T::kSecondOrder) {
      jac.template block<3, 3>(0, 3 + S::omega) += dwdot_dom * h;
      jac.template block<3, 3>(0, 3 + S::b_wdot) = Mat3::Identity() * h;
    }
    jac.template block<3, 3>(3 + S::omega, 3 + S::omega) = dwdot_dom * dt;
    jac.template block<3, 3>(3 + S::omega, 3 + S::b_wdot) = Mat3::Identity() * dt;
  } else {
    // omega = y_g - b_g, so all omega dependence routes through b_g.
    if constexpr (T::kSecondOrder) {
      const Mat3 dwdot_dom = omega_dot_jacobian(geom, omega);
      jac.template block<3, 3>(0, 3 + S::b_g) = -(Mat3::Identity() * dt + dwdot_dom * h);
    } else {
      jac.template block<3, 3>(0, 3 + S::b_g) = -Mat3::Identity() * dt;
    }
  }
  jac.template block<3, 3>(3 + S::p, 0) = dvdot_deR * h;
  jac.template block<3, 3>(3 + S::p, 3 + S::v) = Mat3::Identity() * dt;
  jac.template block<3, 3>(3 + S::p, 3 + S::b_s) = dvdot_dbs * h;
  jac.template block<3, 3>(3 + S::v, 0) = dvdot_deR * dt;
  jac.template block<3, 3>(3 + S::v, 3 + S::b_s) = dvdot_dbs * dt;
  return jac;
}

/// Jacobian of the increment in the process noise, evaluated at zero noise.
template <ModelVariant V>
NoiseJacT<V> model_jacobian_noise(const CompositeElement& x, const ModelInputs& in,
                                  const ArrayGeometry& geom, double dt) {
  using T = ModelTraits<V>;
  using S = StateOffsets<V>;
  using N = NoiseOffsets<V>;
  const double h = 0.5 * dt * dt;
  const Mat3 r = x.rotation;

  NoiseJacT<V> jac = NoiseJacT<V>::Zero();
  if constexpr (T::kArray) {
    if constexpr (T::kSecondOrder)
      jac.template block<3, 3>(0, N::w_wdot) = Mat3::Identity() * h;
    jac.template block<3, 3>(3 + S::omega, N::w_wdot) = Mat3::Identity() * dt;
    jac.template block<3, 3>(3 + S::b_wdot, N::w_b_wdot) = Mat3::Identity();
  } else {
    const Vec3 omega = detail::increment_omega<V>(x, in, nullptr);
    if constexpr (T::kSecondOrder) {
      const Mat3 dwdot_dom = omega_dot_jacobian(geom, omega);
      jac.template block<3, 3>(0, N::w_wdot) = Mat3::Identity() * h;
      jac.template block<3, 3>(0, N::w_g) = -(Mat3::Identity() * dt + dwdot_dom * h);
    } else {
      jac.template block<3, 3>(0, N::w_g) = -Mat3::Identity() * dt;
    }
  }
  jac.template block<3, 3>(3 + S::p, N::w_s) = r * h;
  jac.template block<3, 3>(3 + S::v, N::w_s) = r * dt;
  jac.template block<3, 3>(3 + S::b_s, N::w_b_s) = Mat3::Identity();
  jac.template block<3, 3>(3 + S::b_g, N::w_b_g) = Mat3::Identity();
  return jac;
}

/// Process-noise covariance in the variant's noise layout. The (w_wdot, w_s)
/// block is the reduced 6x6 covariance A Q_a A^T including cross terms.
template <ModelVariant V>
NoiseCovT<V> model_process_noise(const ArrayGeometry& geom, const NoiseConfig& noise) {
  using T = ModelTraits<V>;
  using N = NoiseOffsets<V>;
  const ReducedNoiseModel reduced =
      reduce_noise_model(geom, noise.sigma_accel, noise.sigma_accel_bias_walk);

  NoiseCovT<V> q = NoiseCovT<V>::Zero();
  if constexpr (T::kArray || V == ModelVariant::Gyro2nd) {
    q.template block<6, 6>(N::w_wdot, N::w_wdot) = reduced.cov_wdot_s;
  } else {
    q.template block<3, 3>(N::w_s, N::w_s) = reduced.cov_wdot_s.block<3, 3>(3, 3);
  }
  if constexpr (!T::kArray) {
    q.template block<3, 3>(N::w_g, N::w_g) =
        noise.sigma_gyro * noise.sigma_gyro * Mat3::Identity();
  }
  if constexpr (T::kArray) {
    q.template block<6, 6>(N::w_b_wdot, N::w_b_wdot) = reduced.cov_bias_walk;
  } else {
    q.template block<3, 3>(N::w_b_s, N::w_b_s) = reduced.cov_bias_walk.block<3, 3>(3, 3);
  }
  const double wg2 = noise.sigma_gyro_bias_walk * noise.sigma_gyro_bias_walk;
  q.template block<3, 3>(N::w_b_g, N::w_b_g) = wg2 * Mat3::Identity();
  return q;
}

// ---- runtime-dispatch layer ------------------------------------------------

/// Calls f with an integral_constant carrying the variant, so callers can
/// reach the compile-time model paths from a runtime tag.
template <class F>
decltype(auto) dispatch_variant(ModelVariant v, F&& f) {
  switch (v) {
    case ModelVariant::AccelArray2nd:
      return f(std::integral_constant<ModelVariant, ModelVariant::AccelArray2nd>{});
    case ModelVariant::AccelArray1st:
      return f(std::integral_constant<ModelVariant, ModelVariant::AccelArray1st>{});
    case ModelVariant::Gyro2nd:
      return f(std::integral_constant<ModelVariant, ModelVariant::Gyro2nd>{});
    default:
      return f(std::integral_constant<ModelVariant, ModelVariant::Gyro1st>{});
  }
}

int algebra_dim(ModelVariant v);
int noise_dim(ModelVariant v);
bool is_array_variant(ModelVariant v);
bool is_second_order(ModelVariant v);
/// Array variants fuse the gyro through Kalman updates; gyro variants consume
/// it in propagation.
bool uses_gyro_update(ModelVariant v);

/// Algebra offset of a named state block (-1 when absent from the variant).
struct StateLayout {
  int e_r = 0;
  int omega = -1;
  int p = -1;
  int v = -1;
  int b_wdot = -1;
  int b_s = -1;
  int b_g = -1;
  int bias_offset = -1;  // first bias row
  int bias_dim = 0;
};
StateLayout state_layout(ModelVariant v);

// Human-readable description of every state/noise block, used by the
// validation report and the layout completeness test.
struct BlockDesc {
  std::string name;
  int offset;
  int dim;
};
std::vector<BlockDesc> state_blocks(ModelVariant v);
std::vector<BlockDesc> noise_blocks(ModelVariant v);

Eigen::VectorXd propagate_increment(ModelVariant v, const CompositeElement& x,
                                    const ModelInputs& in, const ArrayGeometry& geom,
                                    double dt, const Eigen::VectorXd* noise = nullptr);
Eigen::MatrixXd jacobian_state(ModelVariant v, const CompositeElement& x,
                               const ModelInputs& in, const ArrayGeometry& geom, double dt);
Eigen::MatrixXd jacobian_noise(ModelVariant v, const CompositeElement& x,
                               const ModelInputs& in, const ArrayGeometry& geom, double dt);
Eigen::MatrixXd process_noise(ModelVariant v, const ArrayGeometry& geom,
                              const NoiseConfig& noise);

/// Predicted gyro reading (omega + b_g) and its measurement Jacobian. Only
/// valid for accelerometer-array variants.
std::pair<Vec3, Eigen::MatrixXd> gyro_measurement_model(ModelVariant v,
                                                        const CompositeElement& x);

/// Predicted position and its measurement Jacobian.
std::pair<Vec3, Eigen::MatrixXd> position_measurement_model(ModelVariant v,
                                                            const CompositeElement& x);

/// Builds a state element; omega and b_wdot are ignored by gyro variants.
CompositeElement make_state(ModelVariant v, const Mat3& rotation, const Vec3& omega,
                            const Vec3& position, const Vec3& velocity,
                            const Vec3& b_wdot = Vec3::Zero(), const Vec3& b_s = Vec3::Zero(),
                            const Vec3& b_g = Vec3::Zero());

Vec3 state_position(ModelVariant v, const CompositeElement& x);
Vec3 state_velocity(ModelVariant v, const CompositeElement& x);
Vec3 state_omega(ModelVariant v, const CompositeElement& x);  // array variants only
Vec3 state_bias_g(ModelVariant v, const CompositeElement& x);

// ---- finite-difference validation -------------------------------------------

// Test fixture hook: injects a known defect so the validator's failure path
// can be exercised.
enum class JacobianMutation { None, FlipDvDeR };

struct JacobianValidationReport {
  bool passed = false;
  double max_rel_error = 0.0;
  std::string worst_block;  // "variant d(row)/d(col)"
  std::string text;         // full per-variant report
};

/// Compares the analytical Jacobians of all four variants against central
/// finite differences at `states_per_variant` random states. Relative error
/// is per 3x3 block with a 1e-3 floor on the block norm.
JacobianValidationReport validate_jacobians(std::uint64_t seed, int states_per_variant = 10,
                                            double tolerance = 1e-5,
                                            JacobianMutation mutation = JacobianMutation::None);

}  // namespace arrayins
