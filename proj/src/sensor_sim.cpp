#include "arrayins/sensor_sim.hpp"

#include <cmath>
#include <stdexcept>

#include "arrayins/so3.hpp"

namespace arrayins {

namespace {

Vec3 eval_sinusoid(const std::array<SinusoidAxis, 3>& axes, double t, int derivative) {
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    const double w = 2.0 * M_PI * axes[i].freq_hz;
    const double arg = w * t + axes[i].phase;
    switch (derivative) {
      case 0: out(i) = axes[i].amplitude * std::sin(arg); break;
      case 1: out(i) = axes[i].amplitude * w * std::cos(arg); break;
      default: out(i) = -axes[i].amplitude * w * w * std::sin(arg); break;
    }
  }
  return out;
}

}  // namespace

MotionProfile low_dynamics_profile() {
  MotionProfile p;
  const double phases[3] = {0.0, 2.0 * M_PI / 3.0, 4.0 * M_PI / 3.0};
  const double freqs[3] = {0.6, 0.85, 1.1};  // incommensurate tones, below the high profile
  for (int i = 0; i < 3; ++i) {
    p.omega[i] = {3.0, freqs[i], phases[i]};
    p.position[i] = {0.5, 0.5, phases[i] + M_PI / 4.0};
  }
  return p;
}

MotionProfile high_dynamics_profile() {
  MotionProfile p;
  const double phases[3] = {0.0, 2.0 * M_PI / 3.0, 4.0 * M_PI / 3.0};
  for (int i = 0; i < 3; ++i) {
    p.omega[i] = {4.0, 1.5, phases[i]};
    p.position[i] = {0.5, 1.0, phases[i] + M_PI / 4.0};
  }
  return p;
}

Trajectory generate_sinusoid_trajectory(const MotionProfile& profile, double duration_s,
                                        double fine_step, double output_rate_hz,
                                        const Vec3& gravity) {
  if (fine_step > 1e-4 + 1e-15)
    throw std::invalid_argument("fine_step must be <= 1e-4 s for ground truth");
  const double out_dt = 1.0 / output_rate_hz;
  const double ratio = out_dt / fine_step;
  const auto substeps = static_cast<long>(std::llround(ratio));
  if (substeps < 1 || std::abs(ratio - static_cast<double>(substeps)) > 1e-9)
    throw std::invalid_argument("output rate must be an integer multiple of the fine grid");

  Trajectory traj;
  traj.gravity = gravity;
  traj.dt = out_dt;
  const auto n_out = static_cast<long>(std::floor(duration_s / out_dt + 1e-9)) + 1;
  traj.samples.reserve(n_out);

  Mat3 rot = Mat3::Identity();
  const double h = fine_step;
  for (long n = 0; n < n_out; ++n) {
    const double t = static_cast<double>(n) * out_dt;
    TrajectorySample s;
    s.t = t;
    s.rotation = rot;
    s.omega = eval_sinusoid(profile.omega, t, 0);
    s.omega_dot = eval_sinusoid(profile.omega, t, 1);
    s.position = eval_sinusoid(profile.position, t, 0);
    s.velocity = eval_sinusoid(profile.position, t, 1);
    s.accel = eval_sinusoid(profile.position, t, 2);
    traj.samples.push_back(std::move(s));

    if (n + 1 == n_out) break;
    for (long i = 0; i < substeps; ++i) {
      const double ti = t + static_cast<double>(i) * h;
      const Vec3 w0 = eval_sinusoid(profile.omega, ti, 0);
      const Vec3 wm = eval_sinusoid(profile.omega, ti + 0.5 * h, 0);
      const Vec3 w1 = eval_sinusoid(profile.omega, ti + h, 0);
      const Vec3 wd0 = eval_sinusoid(profile.omega, ti, 1);
      // Simpson quadrature of omega plus the leading non-commutativity term.
      const Vec3 theta = (h / 6.0) * (w0 + 4.0 * wm + w1) + (h * h * h / 12.0) * w0.cross(wd0);
      rot = rot * so3::exp(theta);
    }
  }
  return traj;
}

Vec3 specific_force_at(const TrajectorySample& sample, const Vec3& gravity, const Vec3& r_k) {
  const Mat3 w2 = so3::skew(sample.omega) * so3::skew(sample.omega);
  const Vec3 s_origin = sample.rotation.transpose() * (sample.accel - gravity);
  return s_origin + w2 * r_k + sample.omega_dot.cross(r_k);
}

SensorBiases draw_biases(int num_triads, double sigma_accel, double sigma_gyro,
                         std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  SensorBiases b;
  b.accel.resize(num_triads);
  for (auto& bk : b.accel) {
    for (int i = 0; i < 3; ++i) bk(i) = sigma_accel * normal(rng);
  }
  for (int i = 0; i < 3; ++i) b.gyro(i) = sigma_gyro * normal(rng);
  return b;
}

std::vector<MeasurementFrame> synthesize_measurements(const Trajectory& traj,
                                                      const ArrayGeometry& geom,
                                                      const SensorBiases& biases,
                                                      const NoiseConfig& noise, double fs_hz,
                                                      std::uint64_t seed) {
  if (std::abs(traj.dt * fs_hz - 1.0) > 1e-9)
    throw std::invalid_argument("trajectory sample rate does not match fs");
  if (static_cast<int>(biases.accel.size()) != geom.K())
    throw DimensionError("synthesize_measurements: bias count does not match K");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Vec3> b_accel = biases.accel;
  Vec3 b_gyro = biases.gyro;

  std::vector<MeasurementFrame> frames;
  frames.reserve(traj.samples.size());
  for (const auto& sample : traj.samples) {
    MeasurementFrame frame;
    frame.t = sample.t;
    frame.accel_stack.resize(3 * geom.K());
    for (int k = 0; k < geom.K(); ++k) {
      const Vec3 f = specific_force_at(sample, traj.gravity, geom.positions[k]);
      for (int i = 0; i < 3; ++i)
        frame.accel_stack(3 * k + i) = f(i) + b_accel[k](i) + noise.sigma_accel * normal(rng);
    }
    for (int i = 0; i < 3; ++i)
      frame.gyro(i) = sample.omega(i) + b_gyro(i) + noise.sigma_gyro * normal(rng);

    if (noise.sigma_accel_bias_walk > 0.0) {
      for (auto& bk : b_accel)
        for (int i = 0; i < 3; ++i) bk(i) += noise.sigma_accel_bias_walk * normal(rng);
    }
    if (noise.sigma_gyro_bias_walk > 0.0) {
      for (int i = 0; i < 3; ++i) b_gyro(i) += noise.sigma_gyro_bias_walk * normal(rng);
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

Vec3 fuse_virtual_gyro(const std::vector<Vec3>& readings) {
  if (readings.empty())
    throw std::invalid_argument("fuse_virtual_gyro: empty reading list");
  Vec3 mean = Vec3::Zero();
  for (const auto& r : readings) mean += r;
  return mean / static_cast<double>(readings.size());
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace arrayins
