#include <doctest.h>

#include <cmath>
#include <random>

#include "arrayins/filter.hpp"
#include "arrayins/harness.hpp"
#include "arrayins/sensor_sim.hpp"

using namespace arrayins;

namespace {

Eigen::VectorXd random_vec(int n, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * normal(rng);
  return v;
}

// Constant angular rate, zero translation: the discretized equations are exact
// for this motion, so any residual error is filter machinery, not truncation.
MotionProfile constant_rate_profile(const Vec3& omega) {
  MotionProfile p{};
  for (int i = 0; i < 3; ++i) p.omega[i] = {omega(i), 0.0, M_PI / 2.0};
  return p;
}

}  // namespace

TEST_CASE("predict with zero increment leaves the mean and applies F = I + Jx") {
  const ArrayGeometry geom = paper_array32();
  const ModelVariant v = ModelVariant::AccelArray2nd;
  const Mat3 r = so3::exp(Vec3(0.2, -0.1, 0.4));
  const Vec3 gravity(0, 0, -9.81);

  // Stationary equilibrium: increment is exactly zero.
  ModelInputs in;
  in.gravity = gravity;
  in.accel_stack.resize(3 * geom.K());
  const Vec3 s0 = -r.transpose() * gravity;
  const Mat3 w2 = Mat3::Zero();
  for (int k = 0; k < geom.K(); ++k)
    in.accel_stack.segment<3>(3 * k) = s0 + w2 * geom.positions[k];

  FilterState fs;
  fs.mean = make_state(v, r, Vec3::Zero(), Vec3::Zero(), Vec3::Zero());
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(
      21, 21, [&](Eigen::Index, Eigen::Index) { return random_vec(1, rng, 0.1)(0); });
  fs.cov = a * a.transpose();

  const Eigen::MatrixXd q0 = Eigen::MatrixXd::Zero(15, 15);
  const FilterState out = predict(fs, v, in, geom, q0, 0.01);

  CHECK((out.mean.rotation - r).norm() < 1e-14);
  CHECK(out.mean.euclidean.norm() < 1e-14);

  const Eigen::MatrixXd jx = jacobian_state(v, fs.mean, in, geom, 0.01);
  const Eigen::MatrixXd f = Eigen::MatrixXd::Identity(21, 21) + jx;
  CHECK((out.cov - f * fs.cov * f.transpose()).norm() < 1e-12);
}

TEST_CASE("single-step covariance matches a Monte-Carlo propagation") {
  const ArrayGeometry geom = paper_array32();
  const ModelVariant v = ModelVariant::AccelArray2nd;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 1.0);

  FilterState fs;
  fs.mean = make_state(v, so3::exp(Vec3(0.5, 0.2, -0.3)), Vec3(0.4, -0.2, 0.8),
                       Vec3(1, 2, 3), Vec3(0.1, 0.2, -0.1));
  const double p_scale = 1e-3;
  fs.cov = p_scale * p_scale * Eigen::MatrixXd::Identity(21, 21);
  const double q_scale = 1e-3;
  const Eigen::MatrixXd q = q_scale * q_scale * Eigen::MatrixXd::Identity(15, 15);

  ModelInputs in;
  in.gravity = Vec3(0, 0, -9.81);
  in.accel_stack = random_vec(3 * geom.K(), rng, 3.0);

  const double dt = 0.01;
  const FilterState predicted = predict(fs, v, in, geom, q, dt);

  const int n_samples = 20000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(21, 21);
  const CompositeElement mean_inv = composite_inverse(predicted.mean);
  for (int i = 0; i < n_samples; ++i) {
    const Eigen::VectorXd e = random_vec(21, rng, p_scale);
    const Eigen::VectorXd w = random_vec(15, rng, q_scale);
    const CompositeElement x = composite_compose(fs.mean, composite_exp(e));
    const Eigen::VectorXd inc = propagate_increment(v, x, in, geom, dt, &w);
    const CompositeElement moved = composite_compose(x, composite_exp(inc));
    const Eigen::VectorXd err = composite_log(composite_compose(mean_inv, moved));
    sum += err * err.transpose();
  }
  const Eigen::MatrixXd mc_cov = sum / n_samples;
  CHECK((mc_cov - predicted.cov).norm() / predicted.cov.norm() < 0.05);
}

TEST_CASE("update with zero innovation and the vanishing-gain limit") {
  const ModelVariant v = ModelVariant::Gyro1st;
  FilterState fs;
  fs.mean = make_state(v, so3::exp(Vec3(0.1, 0, 0)), Vec3::Zero(), Vec3(1, 2, 3),
                       Vec3(0.5, 0, 0));
  fs.cov = 0.01 * Eigen::MatrixXd::Identity(15, 15);

  const auto [predicted, h] = position_measurement_model(v, fs.mean);
  const Mat3 qm = 0.01 * Mat3::Identity();

  // Zero innovation: mean unchanged, covariance (I - K H) P (Phi(0) = I).
  const FilterState same = update(fs, predicted, predicted, h, qm);
  CHECK((same.mean.rotation - fs.mean.rotation).norm() == 0.0);
  CHECK((same.mean.euclidean - fs.mean.euclidean).norm() == 0.0);
  const Eigen::MatrixXd pht = fs.cov * h.transpose();
  const Eigen::MatrixXd k = pht * (h * pht + qm).inverse();
  const Eigen::MatrixXd expected = fs.cov - k * h * fs.cov;
  CHECK((same.cov - 0.5 * (expected + expected.transpose())).norm() < 1e-14);

  // Huge measurement covariance: the gain and the mean change vanish.
  const Vec3 y = predicted + Vec3(1, 1, 1);
  const FilterState frozen = update(fs, y, predicted, h, 1e12 * Mat3::Identity());
  CHECK((frozen.mean.euclidean - fs.mean.euclidean).norm() < 1e-6);
}

TEST_CASE("block-diagonal case reduces to the scalar Kalman update") {
  const ModelVariant v = ModelVariant::Gyro1st;
  FilterState fs;
  fs.mean = make_state(v, Mat3::Identity(), Vec3::Zero(), Vec3(1, -1, 2), Vec3::Zero());
  Eigen::VectorXd diag(15);
  for (int i = 0; i < 15; ++i) diag(i) = 0.1 + 0.01 * i;
  fs.cov = diag.asDiagonal();

  const auto [predicted, h] = position_measurement_model(v, fs.mean);
  const double qm = 0.05;
  const Vec3 y = predicted + Vec3(0.3, -0.2, 0.1);
  const FilterState out = update(fs, y, predicted, h, qm * Mat3::Identity());

  const StateLayout l = state_layout(v);
  for (int i = 0; i < 3; ++i) {
    const double p = diag(l.p + i);
    const double gain = p / (p + qm);  // closed-form one-dimensional Kalman gain
    CHECK(out.mean.euclidean(l.p - 3 + i) ==
          doctest::Approx(fs.mean.euclidean(l.p - 3 + i) + gain * (y(i) - predicted(i)))
              .epsilon(1e-12));
    CHECK(out.cov(l.p + i, l.p + i) == doctest::Approx((1.0 - gain) * p).epsilon(1e-12));
  }
}

TEST_CASE("attitude reset transports perturbations to first order") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd e = random_vec(15, rng, 0.3);
    const Eigen::MatrixXd phi = composite_right_jacobian(e);
    double worst = 0.0;
    for (int j = 0; j < 10; ++j) {
      const double eps = 1e-5;
      const Eigen::VectorXd delta = random_vec(15, rng, eps);
      // Re-express a perturbation around the updated mean exp(e).
      const Eigen::VectorXd transported = composite_log(composite_compose(
          composite_inverse(composite_exp(e)), composite_exp(e + delta)));
      worst = std::max(worst, (transported - phi * delta).norm() / eps);
    }
    // O(|delta|^2) residual: relative to eps it shrinks linearly with eps.
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("predict/update reduce to the standard EKF on a linear system") {
  // Euclidean-only dynamics z' = (I + A dt) z + w, measurement y = H z + v.
  // The composite rotation block stays at identity with zero increment.
  std::mt19937_64 rng(33);
  const int m = 6;
  const double dt = 0.1;
  Eigen::MatrixXd a_lin = Eigen::MatrixXd::Zero(m, m);
  a_lin.topRightCorner(3, 3).setIdentity();  // constant-velocity model

  CompositeElement mean = composite_identity(m);
  mean.euclidean = random_vec(m, rng, 1.0);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(3 + m, 3 + m);
  cov.topLeftCorner(3, 3).setZero();  // rotation block unused

  Eigen::VectorXd z = mean.euclidean;
  Eigen::MatrixXd p = cov.bottomRightCorner(m, m);

  const Eigen::MatrixXd q = 0.01 * Eigen::MatrixXd::Identity(m, m);
  const Mat3 qm = 0.04 * Mat3::Identity();
  Eigen::MatrixXd h_lin = Eigen::MatrixXd::Zero(3, m);
  h_lin.leftCols(3).setIdentity();

  for (int step = 0; step < 25; ++step) {
    // Composite-group filter.
    Eigen::VectorXd omega = Eigen::VectorXd::Zero(3 + m);
    omega.tail(m) = a_lin * mean.euclidean * dt;
    Eigen::MatrixXd jx = Eigen::MatrixXd::Zero(3 + m, 3 + m);
    jx.bottomRightCorner(m, m) = a_lin * dt;
    Eigen::MatrixXd jw = Eigen::MatrixXd::Zero(3 + m, m);
    jw.bottomRows(m).setIdentity();
    predict_core(mean, cov, omega, jx, jw, q);

    // Plain EKF.
    const Eigen::MatrixXd f = Eigen::MatrixXd::Identity(m, m) + a_lin * dt;
    z = z + a_lin * z * dt;
    p = f * p * f.transpose() + q;

    const Vec3 y = Vec3(z.head<3>()) + Vec3(0.1, -0.2, 0.05);
    // Composite-group update.
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 3 + m);
    h.rightCols(m) = h_lin;
    update_core(mean, cov, Vec3(y - Vec3(mean.euclidean.head<3>())), h, qm);

    // Plain EKF update.
    const Eigen::MatrixXd k =
        p * h_lin.transpose() * (h_lin * p * h_lin.transpose() + qm).inverse();
    z = z + k * (y - h_lin * z);
    p = p - k * h_lin * p;
    p = 0.5 * (p + p.transpose());

    CHECK((mean.euclidean - z).norm() < 1e-12);
    CHECK((cov.bottomRightCorner(m, m) - p).norm() < 1e-12);
    CHECK((mean.rotation - Mat3::Identity()).norm() == 0.0);
  }
}

TEST_CASE("noise-free stream with exact init tracks the truth") {
  // Constant angular rate and zero translation: the mechanization is exact, so
  // after 1 s at 500 Hz the position error is numerical noise only.
  const ArrayGeometry geom = paper_array32();
  const MotionProfile profile = constant_rate_profile(Vec3(0.4, -0.7, 1.1));
  const Trajectory traj = generate_sinusoid_trajectory(profile, 1.0, 1e-4, 500.0);
  NoiseConfig noise;
  noise.sigma_accel = 0.0;
  noise.sigma_gyro = 0.0;
  SensorBiases biases;
  biases.accel.assign(geom.K(), Vec3::Zero());
  const auto frames = synthesize_measurements(traj, geom, biases, noise, 500.0, 1);

  RunOptions opt;
  opt.noise.sigma_accel = 0.5;  // filter tuning, data itself is noise free
  opt.noise.sigma_gyro = M_PI / 180.0;

  for (ModelVariant v : kAllVariants) {
    FilterState init;
    init.time = 0.0;
    init.mean = make_state(v, traj.samples[0].rotation, traj.samples[0].omega,
                           traj.samples[0].position, traj.samples[0].velocity);
    init.cov = Eigen::MatrixXd::Zero(algebra_dim(v), algebra_dim(v));

    const auto posterior = run_filter(v, init, frames, geom, opt);
    const Vec3 p_end = state_position(v, posterior.back().mean);
    CHECK((p_end - traj.samples.back().position).norm() < 1e-6);
    const Vec3 rot_err =
        so3::log(traj.samples.back().rotation.transpose() * posterior.back().mean.rotation);
    CHECK(rot_err.norm() < 1e-8);
  }
}

TEST_CASE("gyro updates keep the angular velocity estimate bounded at both rates") {
  // 10 s ablation: with gyro updates the omega error stays at the noise level,
  // without them the integrated angular acceleration noise random-walks away.
  const ArrayGeometry geom = paper_array32();
  NoiseConfig noise;  // defaults
  const ModelVariant v = ModelVariant::AccelArray2nd;
  for (double fs : {500.0, 100.0}) {
    const Trajectory traj =
        generate_sinusoid_trajectory(low_dynamics_profile(), 10.0, 1e-4, fs);
    SensorBiases biases;
    biases.accel.assign(geom.K(), Vec3::Zero());
    const auto frames = synthesize_measurements(traj, geom, biases, noise, fs, 99);

    double max_err_with = 0.0, end_err_without = 0.0;
    for (bool enable : {true, false}) {
      RunOptions opt;
      opt.noise = noise;
      opt.enable_gyro_updates = enable;
      FilterState init =
          make_initial_state(v, geom, traj.samples[0], InitStdConfig{}, noise);
      double max_err = 0.0, last = 0.0;
      auto observer = [&](std::size_t n, double, const CompositeElement& mean,
                          const auto&) {
        const double err = (state_omega(v, mean) - traj.samples[n].omega).norm();
        max_err = std::max(max_err, err);
        last = err;
      };
      run_filter_t<ModelVariant::AccelArray2nd>(geom, opt, init, frames, observer);
      if (enable)
        max_err_with = max_err;
      else
        end_err_without = last;
    }
    INFO("fs = ", fs);
    CHECK(max_err_with < 5.0 * noise.sigma_gyro);
    CHECK(end_err_without > 5.0 * noise.sigma_gyro);
  }
}

TEST_CASE("covariance stays symmetric and positive semidefinite over 1e5 steps") {
  const ArrayGeometry geom = paper_array32();
  const Trajectory traj =
      generate_sinusoid_trajectory(low_dynamics_profile(), 200.0, 1e-4, 500.0);
  NoiseConfig noise;
  std::mt19937_64 rng(5);
  const SensorBiases biases = draw_biases(geom.K(), noise.sigma_accel, noise.sigma_gyro, rng);
  const auto frames = synthesize_measurements(traj, geom, biases, noise, 500.0, 5);

  RunOptions opt;
  opt.noise = noise;
  FilterState init = make_initial_state(ModelVariant::AccelArray2nd, geom, traj.samples[0],
                                        InitStdConfig{}, noise);
  double min_eig = 0.0, max_asym = 0.0;
  auto observer = [&](std::size_t n, double, const CompositeElement&, const auto& cov) {
    if (n % 2000 != 0) return;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 21, 21>> es(cov);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    max_asym = std::max(max_asym, (cov - cov.transpose()).norm());
  };
  run_filter_t<ModelVariant::AccelArray2nd>(geom, opt, init, frames, observer);
  CHECK(min_eig >= -1e-10);
  CHECK(max_asym < 1e-12);
}

TEST_CASE("filter error paths") {
  const ArrayGeometry geom = square_array4(0.1);
  const ModelVariant v = ModelVariant::Gyro1st;
  FilterState fs;
  fs.mean = make_state(v, Mat3::Identity(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero());
  fs.cov = Eigen::MatrixXd::Identity(15, 15);

  // Singular innovation covariance.
  const Eigen::MatrixXd h0 = Eigen::MatrixXd::Zero(3, 15);
  CHECK_THROWS_AS(update(fs, Vec3::Zero(), Vec3::Zero(), h0, Mat3::Zero()), FilterError);

  // Non-monotonic timestamps.
  std::vector<MeasurementFrame> frames(3);
  for (auto& f : frames) f.accel_stack = Eigen::VectorXd::Zero(12);
  frames[0].t = 0.0;
  frames[1].t = 0.01;
  frames[2].t = 0.005;
  RunOptions opt;
  CHECK_THROWS_AS(run_filter(v, fs, frames, geom, opt), FilterError);
}
