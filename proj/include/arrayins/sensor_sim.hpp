// Ground-truth trajectory generation and synthesis of noisy, biased sensor
// measurements. The rotation matrix is integrated on a fine internal grid
// (Simpson quadrature of omega plus the h^3/12 omega x omega_dot commutator
// term), everything else is analytic.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "arrayins/geometry.hpp"

namespace arrayins {

struct TrajectorySample {
  double t = 0.0;
  Mat3 rotation = Mat3::Identity();  // body to navigation
  Vec3 omega = Vec3::Zero();         // rad/s, body frame
  Vec3 omega_dot = Vec3::Zero();     // rad/s^2
  Vec3 position = Vec3::Zero();      // m, navigation frame
  Vec3 velocity = Vec3::Zero();      // m/s
  Vec3 accel = Vec3::Zero();         // dv/dt, m/s^2, navigation frame
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  Vec3 gravity = Vec3(0, 0, -9.81);
  double dt = 0.0;  // sample spacing
};

struct SinusoidAxis {
  double amplitude = 0.0;
  double freq_hz = 0.0;
  double phase = 0.0;
};

struct MotionProfile {
  std::array<SinusoidAxis, 3> omega;     // rad/s
  std::array<SinusoidAxis, 3> position;  // m
};

MotionProfile low_dynamics_profile();
MotionProfile high_dynamics_profile();

/// Integrates the sinusoidal motion at fine_step (<= 1e-4 s) and emits samples
/// at output_rate_hz. 1/output_rate_hz must be an integer multiple of fine_step.
Trajectory generate_sinusoid_trajectory(const MotionProfile& profile, double duration_s,
                                        double fine_step, double output_rate_hz,
                                        const Vec3& gravity = Vec3(0, 0, -9.81));

/// Specific force sensed at body-frame position r_k:
/// R^T (dv/dt - g) + [omega x]^2 r_k + [omega_dot x] r_k.
Vec3 specific_force_at(const TrajectorySample& sample, const Vec3& gravity, const Vec3& r_k);

struct SensorBiases {
  std::vector<Vec3> accel;  // one per triad, m/s^2
  Vec3 gyro = Vec3::Zero();  // rad/s
};

struct NoiseConfig {
  double sigma_accel = 0.5;              // m/s^2, per axis
  double sigma_gyro = M_PI / 180.0;      // rad/s (1 deg/s)
  double sigma_accel_bias_walk = 0.0;    // m/s^2 per sqrt(sample)
  double sigma_gyro_bias_walk = 0.0;     // rad/s per sqrt(sample)
};

struct MeasurementFrame {
  double t = 0.0;
  Eigen::VectorXd accel_stack;       // 3K
  Vec3 gyro = Vec3::Zero();          // virtual triad
  std::optional<Vec3> position;      // filled by the harness during aiding
};

/// Draws constant biases: each axis ~ N(0, sigma^2) with the configured
/// accelerometer/gyro standard deviations.
SensorBiases draw_biases(int num_triads, double sigma_accel, double sigma_gyro,
                         std::mt19937_64& rng);

/// Synthesizes one frame per trajectory sample. Deterministic given the seed;
/// biases evolve as random walks (constant when the walk sigma is zero).
std::vector<MeasurementFrame> synthesize_measurements(const Trajectory& traj,
                                                      const ArrayGeometry& geom,
                                                      const SensorBiases& biases,
                                                      const NoiseConfig& noise, double fs_hz,
                                                      std::uint64_t seed);

/// Arithmetic mean of per-triad gyro readings (angular velocity is uniform on
/// a rigid body). Throws on an empty list.
Vec3 fuse_virtual_gyro(const std::vector<Vec3>& readings);

/// Deterministic stream split: maps (seed, index) to an independent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace arrayins
