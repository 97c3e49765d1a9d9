// Monte-Carlo simulation campaigns and dataset replay. Runs are independent
// and execute as an OpenMP-parallel kernel; a serial driver over the same
// per-run worker is kept as the reference implementation (threads = 1) and the
// two produce bit-identical results for any thread count.
#pragma once

#include <Eigen/Geometry>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arrayins/filter.hpp"

namespace arrayins {

struct CampaignError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Standard deviations for truth-referenced filter initialization.
struct InitStdConfig {
  double rot = 1e-3;    // rad
  double pos = 1e-3;    // m
  double vel = 1e-3;    // m/s
  double omega = 1e-3;  // rad/s (array variants)
};

struct CampaignConfig {
  std::vector<ModelVariant> variants{ModelVariant::AccelArray2nd, ModelVariant::AccelArray1st,
                                     ModelVariant::Gyro2nd, ModelVariant::Gyro1st};
  std::string dynamics = "low";  // selects the motion profile unless `profile` is set
  std::optional<MotionProfile> profile;
  double fs_hz = 500.0;
  int runs = 100;
  double aiding_duration_s = 30.0;
  double ins_horizon_s = 5.0;
  double sigma_pos = 0.10;       // filter measurement std for position updates [m]
  double pos_noise_std = 0.10;   // noise added to the synthetic position measurements [m]
  double pos_update_hz = 100.0;
  std::uint64_t seed = 1;
  int threads = 1;               // 1 = serial reference driver, 0 = all cores
  double fine_step = 1e-4;
  bool require_bias_convergence = true;
  NoiseConfig noise;                        // measurement synthesis
  std::optional<NoiseConfig> filter_noise;  // filter tuning override (defaults to `noise`)
  InitStdConfig init_std;
  ArrayGeometry geometry;
  Vec3 gravity = Vec3(0, 0, -9.81);
};

struct RmseCurve {
  std::vector<double> t_offset;  // s since aiding ceased
  std::vector<double> rmse_x, rmse_y, rmse_z, rmse_combined;  // m
  int n_runs = 0;
};

using CampaignResult = std::vector<std::pair<ModelVariant, RmseCurve>>;

/// Per-run: synthesize measurements with fresh bias/noise draws, run every
/// variant over the byte-identical stream with position aiding, then pure
/// inertial navigation; aggregates RMSE over runs per time offset.
CampaignResult run_simulation_campaign(const CampaignConfig& config);

/// Truth-referenced initial filter state (paper bias initialization: zero bias
/// estimates, stds 3 sigma through the reduced covariance).
FilterState make_initial_state(ModelVariant v, const ArrayGeometry& geom,
                               const TrajectorySample& truth, const InitStdConfig& init_std,
                               const NoiseConfig& noise);

// ---- dataset replay ----------------------------------------------------------

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ReferenceSample {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

struct Dataset {
  std::vector<MeasurementFrame> frames;      // gyro column already fused
  std::vector<ReferenceSample> reference;
  int accel_triads = 0;
  int gyro_triads = 0;
  double fs_hz = 0.0;
};

/// Loads and validates the measurement/reference CSV pair (see csv_io.hpp for
/// the schema). Throws SchemaError naming the offending file/column/row.
Dataset load_dataset(const std::string& measurement_path, const std::string& reference_path);

struct ReplayConfig {
  std::vector<ModelVariant> variants{ModelVariant::AccelArray2nd, ModelVariant::AccelArray1st,
                                     ModelVariant::Gyro2nd, ModelVariant::Gyro1st};
  ArrayGeometry geometry;
  int restart_count = 20;
  std::optional<std::pair<double, double>> restart_window;  // defaults to the usable range
  std::vector<double> restart_times;                        // explicit schedule override
  double ins_horizon_s = 5.0;
  double sigma_pos = 0.10;
  NoiseConfig noise;
  InitStdConfig init_std{0.05, 0.10, 0.5, 0.05};
  std::uint64_t seed = 1;  // provenance only; replay itself is deterministic
  int threads = 1;
  Vec3 gravity = Vec3(0, 0, -9.81);
};

/// One aided pass checkpoints the filters at each scheduled instant, then a
/// pure-INS excursion of ins_horizon_s runs from every checkpoint. RMSE is
/// aggregated over the restarts at the reference sample rate.
CampaignResult run_replay_campaign(const Dataset& data, const ReplayConfig& config);

/// Synthesized stream + truth exported in the dataset schema (single fused
/// gyro triad), for replay of simulated data and round-trip tests.
Dataset make_dataset(const std::vector<MeasurementFrame>& frames, const Trajectory& truth);

}  // namespace arrayins
