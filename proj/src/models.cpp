#include "arrayins/models.hpp"

#include <random>
#include <sstream>

namespace arrayins {

const char* variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::AccelArray2nd: return "accel-array-2nd";
    case ModelVariant::AccelArray1st: return "accel-array-1st";
    case ModelVariant::Gyro2nd: return "gyro-2nd";
    case ModelVariant::Gyro1st: return "gyro-1st";
  }
  return "?";
}

ModelVariant parse_variant(const std::string& name) {
  for (ModelVariant v : kAllVariants) {
    if (name == variant_name(v)) return v;
  }
  throw std::invalid_argument("unknown model variant: " + name);
}

int algebra_dim(ModelVariant v) {
  return dispatch_variant(v, [](auto tag) { return ModelTraits<decltype(tag)::value>::kDim; });
}

int noise_dim(ModelVariant v) {
  return dispatch_variant(v,
                          [](auto tag) { return ModelTraits<decltype(tag)::value>::kNoise; });
}

bool is_array_variant(ModelVariant v) {
  return dispatch_variant(v,
                          [](auto tag) { return ModelTraits<decltype(tag)::value>::kArray; });
}

bool is_second_order(ModelVariant v) {
  return dispatch_variant(
      v, [](auto tag) { return ModelTraits<decltype(tag)::value>::kSecondOrder; });
}

bool uses_gyro_update(ModelVariant v) { return is_array_variant(v); }

StateLayout state_layout(ModelVariant v) {
  return dispatch_variant(v, [](auto tag) {
    using S = StateOffsets<decltype(tag)::value>;
    StateLayout l;
    l.omega = S::omega < 0 ? -1 : 3 + S::omega;
    l.p = 3 + S::p;
    l.v = 3 + S::v;
    l.b_wdot = S::b_wdot < 0 ? -1 : 3 + S::b_wdot;
    l.b_s = 3 + S::b_s;
    l.b_g = 3 + S::b_g;
    l.bias_offset = l.b_wdot >= 0 ? l.b_wdot : l.b_s;
    l.bias_dim = ModelTraits<decltype(tag)::value>::kDim - l.bias_offset;
    return l;
  });
}

std::vector<BlockDesc> state_blocks(ModelVariant v) {
  const StateLayout l = state_layout(v);
  std::vector<BlockDesc> blocks{{"e_R", l.e_r, 3}};
  if (l.omega >= 0) blocks.push_back({"omega", l.omega, 3});
  blocks.push_back({"p", l.p, 3});
  blocks.push_back({"v", l.v, 3});
  if (l.b_wdot >= 0) blocks.push_back({"b_wdot", l.b_wdot, 3});
  blocks.push_back({"b_s", l.b_s, 3});
  blocks.push_back({"b_g", l.b_g, 3});
  return blocks;
}

std::vector<BlockDesc> noise_blocks(ModelVariant v) {
  return dispatch_variant(v, [](auto tag) {
    using N = NoiseOffsets<decltype(tag)::value>;
    std::vector<BlockDesc> blocks;
    if (N::w_wdot >= 0) blocks.push_back({"w_wdot", N::w_wdot, 3});
    blocks.push_back({"w_s", N::w_s, 3});
    if (N::w_g >= 0) blocks.push_back({"w_g", N::w_g, 3});
    if (N::w_b_wdot >= 0) blocks.push_back({"w_b_wdot", N::w_b_wdot, 3});
    blocks.push_back({"w_b_s", N::w_b_s, 3});
    blocks.push_back({"w_b_g", N::w_b_g, 3});
    return blocks;
  });
}

Eigen::VectorXd propagate_increment(ModelVariant v, const CompositeElement& x,
                                    const ModelInputs& in, const ArrayGeometry& geom,
                                    double dt, const Eigen::VectorXd* noise) {
  return dispatch_variant(v, [&](auto tag) -> Eigen::VectorXd {
    constexpr ModelVariant kV = decltype(tag)::value;
    if (noise) {
      if (noise->size() != ModelTraits<kV>::kNoise)
        throw DimensionError("propagate_increment: noise dimension does not match variant");
      const NoiseVecT<kV> w = *noise;
      return model_increment<kV>(x, in, geom, dt, &w);
    }
    return model_increment<kV>(x, in, geom, dt);
  });
}

Eigen::MatrixXd jacobian_state(ModelVariant v, const CompositeElement& x,
                               const ModelInputs& in, const ArrayGeometry& geom, double dt) {
  return dispatch_variant(v, [&](auto tag) -> Eigen::MatrixXd {
    return model_jacobian_state<decltype(tag)::value>(x, in, geom, dt);
  });
}

Eigen::MatrixXd jacobian_noise(ModelVariant v, const CompositeElement& x,
                               const ModelInputs& in, const ArrayGeometry& geom, double dt) {
  return dispatch_variant(v, [&](auto tag) -> Eigen::MatrixXd {
    return model_jacobian_noise<decltype(tag)::value>(x, in, geom, dt);
  });
}

Eigen::MatrixXd process_noise(ModelVariant v, const ArrayGeometry& geom,
                              const NoiseConfig& noise) {
  return dispatch_variant(v, [&](auto tag) -> Eigen::MatrixXd {
    return model_process_noise<decltype(tag)::value>(geom, noise);
  });
}

std::pair<Vec3, Eigen::MatrixXd> gyro_measurement_model(ModelVariant v,
                                                        const CompositeElement& x) {
  if (!is_array_variant(v))
    throw std::logic_error("gyro_measurement_model: gyro variants consume the gyro "
                           "reading in propagation");
  const StateLayout l = state_layout(v);
  const Vec3 predicted =
      x.euclidean.segment<3>(l.omega - 3) + x.euclidean.segment<3>(l.b_g - 3);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, algebra_dim(v));
  h.block<3, 3>(0, l.omega) = Mat3::Identity();
  h.block<3, 3>(0, l.b_g) = Mat3::Identity();
  return {predicted, h};
}

std::pair<Vec3, Eigen::MatrixXd> position_measurement_model(ModelVariant v,
                                                            const CompositeElement& x) {
  const StateLayout l = state_layout(v);
  const Vec3 predicted = x.euclidean.segment<3>(l.p - 3);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, algebra_dim(v));
  h.block<3, 3>(0, l.p) = Mat3::Identity();
  return {predicted, h};
}

CompositeElement make_state(ModelVariant v, const Mat3& rotation, const Vec3& omega,
                            const Vec3& position, const Vec3& velocity, const Vec3& b_wdot,
                            const Vec3& b_s, const Vec3& b_g) {
  const StateLayout l = state_layout(v);
  CompositeElement x;
  x.rotation = rotation;
  x.euclidean = Eigen::VectorXd::Zero(algebra_dim(v) - 3);
  if (l.omega >= 0) x.euclidean.segment<3>(l.omega - 3) = omega;
  x.euclidean.segment<3>(l.p - 3) = position;
  x.euclidean.segment<3>(l.v - 3) = velocity;
  if (l.b_wdot >= 0) x.euclidean.segment<3>(l.b_wdot - 3) = b_wdot;
  x.euclidean.segment<3>(l.b_s - 3) = b_s;
  x.euclidean.segment<3>(l.b_g - 3) = b_g;
  return x;
}

Vec3 state_position(ModelVariant v, const CompositeElement& x) {
  return x.euclidean.segment<3>(state_layout(v).p - 3);
}

Vec3 state_velocity(ModelVariant v, const CompositeElement& x) {
  return x.euclidean.segment<3>(state_layout(v).v - 3);
}

Vec3 state_omega(ModelVariant v, const CompositeElement& x) {
  const StateLayout l = state_layout(v);
  if (l.omega < 0)
    throw std::logic_error("state_omega: gyro variants do not carry omega in the state");
  return x.euclidean.segment<3>(l.omega - 3);
}

Vec3 state_bias_g(ModelVariant v, const CompositeElement& x) {
  return x.euclidean.segment<3>(state_layout(v).b_g - 3);
}

namespace {

std::string block_name_at(const std::vector<BlockDesc>& blocks, int offset) {
  for (const auto& b : blocks) {
    if (offset >= b.offset && offset < b.offset + b.dim) return b.name;
  }
  return "?";
}

// Increment row names follow the state blocks (the increment lives in the
// same algebra), with e_R meaning the rotation-vector row.
double block_rel_error(const Eigen::Matrix3d& analytic, const Eigen::Matrix3d& fd) {
  const double scale = std::max({analytic.norm(), fd.norm(), 1e-3});
  return (analytic - fd).norm() / scale;
}

}  // namespace

JacobianValidationReport validate_jacobians(std::uint64_t seed, int states_per_variant,
                                            double tolerance, JacobianMutation mutation) {
  const ArrayGeometry geom = paper_array32();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw3 = [&] { return Vec3(normal(rng), normal(rng), normal(rng)); };

  const double dt = 0.005;
  const double fd_step = 1e-6;
  JacobianValidationReport report;
  report.passed = true;
  std::ostringstream text;

  for (ModelVariant v : kAllVariants) {
    const int d = algebra_dim(v);
    const int nw = noise_dim(v);
    const auto srows = state_blocks(v);
    const auto wcols = noise_blocks(v);
    double variant_worst = 0.0;
    std::string variant_block;

    for (int trial = 0; trial < states_per_variant; ++trial) {
      const CompositeElement x =
          make_state(v, so3::exp(draw3()), draw3(), draw3(), draw3(), 0.3 * draw3(),
                     0.3 * draw3(), 0.05 * draw3());
      ModelInputs in;
      in.accel_stack.resize(3 * geom.K());
      for (int i = 0; i < 3 * geom.K(); ++i) in.accel_stack(i) = 3.0 * normal(rng);
      in.gyro = draw3();

      Eigen::MatrixXd jx = jacobian_state(v, x, in, geom, dt);
      const Eigen::MatrixXd jw = jacobian_noise(v, x, in, geom, dt);
      if (mutation == JacobianMutation::FlipDvDeR) {
        const StateLayout l = state_layout(v);
        jx.block<3, 3>(l.v, 0) *= -1.0;
      }

      Eigen::MatrixXd jx_fd(d, d);
      for (int j = 0; j < d; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
        e(j) = fd_step;
        const CompositeElement xp = composite_compose(x, composite_exp(e));
        e(j) = -fd_step;
        const CompositeElement xm = composite_compose(x, composite_exp(e));
        jx_fd.col(j) = (propagate_increment(v, xp, in, geom, dt) -
                        propagate_increment(v, xm, in, geom, dt)) /
                       (2.0 * fd_step);
      }
      Eigen::MatrixXd jw_fd(d, nw);
      for (int j = 0; j < nw; ++j) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(nw);
        w(j) = fd_step;
        const Eigen::VectorXd fp = propagate_increment(v, x, in, geom, dt, &w);
        w(j) = -fd_step;
        const Eigen::VectorXd fm = propagate_increment(v, x, in, geom, dt, &w);
        jw_fd.col(j) = (fp - fm) / (2.0 * fd_step);
      }

      for (int bi = 0; bi < d; bi += 3) {
        for (int bj = 0; bj < d; bj += 3) {
          const double err =
              block_rel_error(jx.block<3, 3>(bi, bj), jx_fd.block<3, 3>(bi, bj));
          if (err > variant_worst) {
            variant_worst = err;
            variant_block = std::string("d(") + block_name_at(srows, bi) + ")/d(" +
                            block_name_at(srows, bj) + ")";
          }
        }
        for (int bj = 0; bj < nw; bj += 3) {
          const double err =
              block_rel_error(jw.block<3, 3>(bi, bj), jw_fd.block<3, 3>(bi, bj));
          if (err > variant_worst) {
            variant_worst = err;
            variant_block = std::string("d(") + block_name_at(srows, bi) + ")/d(" +
                            block_name_at(wcols, bj) + ")";
          }
        }
      }
    }

    text << variant_name(v) << ": max rel error " << variant_worst << " at "
         << variant_block << "\n";
    if (variant_worst > report.max_rel_error) {
      report.max_rel_error = variant_worst;
      report.worst_block = std::string(variant_name(v)) + " " + variant_block;
    }
    if (variant_worst > tolerance) report.passed = false;
  }

  text << "worst: " << report.worst_block << " rel error " << report.max_rel_error
       << (report.passed ? " (pass)" : " (FAIL)") << "\n";
  report.text = text.str();
  return report;
}

}  // namespace arrayins
