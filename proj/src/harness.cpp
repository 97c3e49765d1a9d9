#include "arrayins/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>

namespace arrayins {

namespace {

MotionProfile profile_for(const CampaignConfig& cfg) {
  if (cfg.profile) return *cfg.profile;
  if (cfg.dynamics == "low") return low_dynamics_profile();
  if (cfg.dynamics == "high") return high_dynamics_profile();
  throw std::invalid_argument("unknown dynamics profile: " + cfg.dynamics);
}

int thread_count(int requested) {
  if (requested == 1) return 1;
  const int max_threads = omp_get_max_threads();
  if (requested <= 0) return max_threads;
  return std::min(requested, max_threads);
}

// Squared position errors of one run: [variant][offset*3 + axis].
struct RunErrors {
  std::vector<std::vector<double>> sq;
  bool ok = false;
};

RmseCurve curves_from_squares(const std::vector<const std::vector<double>*>& runs,
                              const std::vector<double>& offsets) {
  const std::size_t n_off = offsets.size();
  RmseCurve curve;
  curve.t_offset = offsets;
  curve.n_runs = static_cast<int>(runs.size());
  curve.rmse_x.resize(n_off);
  curve.rmse_y.resize(n_off);
  curve.rmse_z.resize(n_off);
  curve.rmse_combined.resize(n_off);
  for (std::size_t j = 0; j < n_off; ++j) {
    double mse[3] = {0, 0, 0};
    for (const auto* run : runs) {
      for (int a = 0; a < 3; ++a) mse[a] += (*run)[3 * j + a];
    }
    for (double& m : mse) m /= static_cast<double>(runs.size());
    curve.rmse_x[j] = std::sqrt(mse[0]);
    curve.rmse_y[j] = std::sqrt(mse[1]);
    curve.rmse_z[j] = std::sqrt(mse[2]);
    curve.rmse_combined[j] = std::sqrt(mse[0] + mse[1] + mse[2]);
  }
  return curve;
}

}  // namespace

FilterState make_initial_state(ModelVariant v, const ArrayGeometry& geom,
                               const TrajectorySample& truth, const InitStdConfig& init_std,
                               const NoiseConfig& noise) {
  FilterState fs;
  fs.time = truth.t;
  fs.mean = make_state(v, truth.rotation, truth.omega, truth.position, truth.velocity);

  const int d = algebra_dim(v);
  const StateLayout l = state_layout(v);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(d);
  diag.segment<3>(l.e_r).setConstant(init_std.rot * init_std.rot);
  diag.segment<3>(l.p).setConstant(init_std.pos * init_std.pos);
  diag.segment<3>(l.v).setConstant(init_std.vel * init_std.vel);
  if (l.omega >= 0) diag.segment<3>(l.omega).setConstant(init_std.omega * init_std.omega);
  fs.cov = diag.asDiagonal();

  // Bias initialization: zero estimates, stds of 3 sigma mapped through the
  // reduced accelerometer covariance.
  const double s0a = 3.0 * noise.sigma_accel;
  const int k3 = 3 * geom.K();
  const Mat6 reduced =
      reduce_noise_covariance(s0a * s0a * Eigen::MatrixXd::Identity(k3, k3), geom);
  if (l.b_wdot >= 0) {
    fs.cov.block<6, 6>(l.b_wdot, l.b_wdot) = reduced;
  } else {
    fs.cov.block<3, 3>(l.b_s, l.b_s) = reduced.block<3, 3>(3, 3);
  }
  const double s0g = 3.0 * noise.sigma_gyro;
  fs.cov.block<3, 3>(l.b_g, l.b_g) = s0g * s0g * Mat3::Identity();
  return fs;
}

CampaignResult run_simulation_campaign(const CampaignConfig& config) {
  if (config.runs < 1) throw std::invalid_argument("campaign needs at least one run");
  if (config.ins_horizon_s <= 0.0) throw std::invalid_argument("ins_horizon_s must be > 0");
  if (config.variants.empty()) throw std::invalid_argument("no variants selected");
  if (config.geometry.K() < 3) throw std::invalid_argument("campaign geometry is not set");

  ArrayGeometry geom = config.geometry;
  if (!geom.centered) geom = build_geometry(geom.positions, true);

  const double stride_f = config.fs_hz / config.pos_update_hz;
  const auto stride = static_cast<long>(std::llround(stride_f));
  if (stride < 1 || std::abs(stride_f - static_cast<double>(stride)) > 1e-9)
    throw std::invalid_argument("position update rate must divide the sampling rate");

  const MotionProfile profile = profile_for(config);
  const double duration = config.aiding_duration_s + config.ins_horizon_s;
  const Trajectory traj = generate_sinusoid_trajectory(profile, duration, config.fine_step,
                                                       config.fs_hz, config.gravity);

  const auto i_aid = static_cast<long>(std::llround(config.aiding_duration_s * config.fs_hz));
  const long n_frames = static_cast<long>(traj.samples.size());
  const long n_off = n_frames - i_aid;
  if (i_aid <= 0 || n_off <= 1) throw std::invalid_argument("aiding/horizon split is empty");

  std::vector<double> offsets(n_off);
  for (long j = 0; j < n_off; ++j) offsets[j] = static_cast<double>(j) / config.fs_hz;

  const int n_var = static_cast<int>(config.variants.size());
  std::vector<RunErrors> per_run(config.runs);
  std::vector<std::exception_ptr> failures(config.runs);

  auto worker = [&](int run) {
    try {
      std::mt19937_64 rng(derive_seed(config.seed, 2UL * run));
      std::normal_distribution<double> normal(0.0, 1.0);
      const SensorBiases biases =
          draw_biases(geom.K(), config.noise.sigma_accel, config.noise.sigma_gyro, rng);
      std::vector<MeasurementFrame> frames =
          synthesize_measurements(traj, geom, biases, config.noise, config.fs_hz,
                                  derive_seed(config.seed, 2UL * run + 1));
      for (long i = 0; i <= i_aid; i += stride) {
        Vec3 y = traj.samples[i].position;
        for (int a = 0; a < 3; ++a) y(a) += config.pos_noise_std * normal(rng);
        frames[i].position = y;
      }

      RunErrors& out = per_run[run];
      out.sq.assign(n_var, std::vector<double>(3 * n_off, 0.0));

      RunOptions opt;
      opt.noise = config.filter_noise.value_or(config.noise);
      opt.sigma_pos = config.sigma_pos;
      opt.gravity = config.gravity;

      for (int vi = 0; vi < n_var; ++vi) {
        const ModelVariant v = config.variants[vi];
        const FilterState init =
            make_initial_state(v, geom, traj.samples[0], config.init_std, opt.noise);
        const StateLayout layout = state_layout(v);
        const double bias_trace0 =
            init.cov.block(layout.bias_offset, layout.bias_offset, layout.bias_dim,
                           layout.bias_dim)
                .trace();
        double bias_trace_aid = -1.0;
        auto& sq = out.sq[vi];

        auto observer = [&](std::size_t n, double, const CompositeElement& mean,
                            const auto& cov) {
          const auto i = static_cast<long>(n);
          if (i == i_aid) {
            bias_trace_aid = cov
                                 .block(layout.bias_offset, layout.bias_offset,
                                        layout.bias_dim, layout.bias_dim)
                                 .trace();
          }
          if (i >= i_aid) {
            const Vec3 err = mean.euclidean.segment<3>(layout.p - 3) -
                             traj.samples[n].position;
            const long j = i - i_aid;
            for (int a = 0; a < 3; ++a) sq[3 * j + a] = err(a) * err(a);
          }
        };
        try {
          dispatch_variant(v, [&](auto tag) {
            run_filter_t<decltype(tag)::value>(geom, opt, init, frames, observer);
          });
        } catch (const std::exception& err) {
          std::ostringstream msg;
          msg << "run " << run << ", variant " << variant_name(v) << ": " << err.what();
          throw CampaignError(msg.str());
        }

        if (config.require_bias_convergence && bias_trace_aid > 0.1 * bias_trace0) {
          std::ostringstream msg;
          msg << "run " << run << ", variant " << variant_name(v)
              << ": bias covariance trace did not converge before the INS phase ("
              << bias_trace_aid << " vs initial " << bias_trace0 << ")";
          throw CampaignError(msg.str());
        }
      }
      out.ok = true;
    } catch (...) {
      failures[run] = std::current_exception();
    }
  };

  const int threads = thread_count(config.threads);
  if (threads == 1) {
    // Serial reference driver over the same per-run kernel.
    for (int run = 0; run < config.runs; ++run) worker(run);
  } else {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int run = 0; run < config.runs; ++run) worker(run);
  }

  for (int run = 0; run < config.runs; ++run) {
    if (failures[run]) std::rethrow_exception(failures[run]);
  }

  CampaignResult result;
  for (int vi = 0; vi < n_var; ++vi) {
    std::vector<const std::vector<double>*> runs;
    runs.reserve(config.runs);
    for (int run = 0; run < config.runs; ++run) runs.push_back(&per_run[run].sq[vi]);
    result.emplace_back(config.variants[vi], curves_from_squares(runs, offsets));
  }
  return result;
}

// ---- dataset loading ---------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_field(const std::string& field, const std::string& file, std::size_t row,
                   const std::string& column) {
  std::size_t pos = 0;
  double value = 0.0;
  try {
    value = std::stod(field, &pos);
  } catch (const std::exception&) {
    throw SchemaError(file + ": row " + std::to_string(row) + ", column '" + column +
                      "': not a number: '" + field + "'");
  }
  if (pos != field.size() || !std::isfinite(value)) {
    throw SchemaError(file + ": row " + std::to_string(row) + ", column '" + column +
                      "': invalid value '" + field + "'");
  }
  return value;
}

std::vector<std::string> triad_columns(const std::string& prefix, int index) {
  const std::string base = prefix + std::to_string(index);
  return {base + "_x", base + "_y", base + "_z"};
}

}  // namespace

Dataset load_dataset(const std::string& measurement_path, const std::string& reference_path) {
  Dataset data;

  std::ifstream meas(measurement_path);
  if (!meas) throw SchemaError(measurement_path + ": cannot open file");
  std::string line;
  if (!std::getline(meas, line)) throw SchemaError(measurement_path + ": empty file");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "t")
    throw SchemaError(measurement_path + ": first column must be 't'");

  std::size_t col = 1;
  auto count_triads = [&](const std::string& prefix) {
    int count = 0;
    while (col < header.size() && header[col] == prefix + std::to_string(count + 1) + "_x") {
      const auto expected = triad_columns(prefix, count + 1);
      for (const auto& name : expected) {
        if (col >= header.size() || header[col] != name)
          throw SchemaError(measurement_path + ": missing column '" + name + "'");
        ++col;
      }
      ++count;
    }
    return count;
  };
  data.accel_triads = count_triads("a");
  data.gyro_triads = count_triads("g");
  if (col != header.size())
    throw SchemaError(measurement_path + ": unexpected column '" + header[col] + "'");
  if (data.accel_triads < 3)
    throw SchemaError(measurement_path + ": needs at least 3 accelerometer triads");
  if (data.gyro_triads < 1)
    throw SchemaError(measurement_path + ": needs at least 1 gyroscope triad");

  std::size_t row = 1;
  while (std::getline(meas, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw SchemaError(measurement_path + ": row " + std::to_string(row) + ": expected " +
                        std::to_string(header.size()) + " columns, got " +
                        std::to_string(fields.size()));
    MeasurementFrame frame;
    frame.t = parse_field(fields[0], measurement_path, row, "t");
    if (!data.frames.empty() && frame.t <= data.frames.back().t)
      throw SchemaError(measurement_path + ": row " + std::to_string(row) +
                        ": non-monotonic time");
    frame.accel_stack.resize(3 * data.accel_triads);
    for (int i = 0; i < 3 * data.accel_triads; ++i)
      frame.accel_stack(i) = parse_field(fields[1 + i], measurement_path, row, header[1 + i]);
    std::vector<Vec3> gyros(data.gyro_triads);
    const std::size_t gyro_base = 1 + 3 * data.accel_triads;
    for (int k = 0; k < data.gyro_triads; ++k) {
      for (int i = 0; i < 3; ++i) {
        gyros[k](i) = parse_field(fields[gyro_base + 3 * k + i], measurement_path, row,
                                  header[gyro_base + 3 * k + i]);
      }
    }
    frame.gyro = fuse_virtual_gyro(gyros);
    data.frames.push_back(std::move(frame));
  }
  if (data.frames.size() < 2) throw SchemaError(measurement_path + ": too few rows");
  data.fs_hz = 1.0 / (data.frames[1].t - data.frames[0].t);

  std::ifstream ref(reference_path);
  if (!ref) throw SchemaError(reference_path + ": cannot open file");
  if (!std::getline(ref, line)) throw SchemaError(reference_path + ": empty file");
  const auto ref_header = split_csv_line(line);
  const std::vector<std::string> expected = {"t", "px", "py", "pz", "qw", "qx", "qy", "qz"};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i >= ref_header.size() || ref_header[i] != expected[i])
      throw SchemaError(reference_path + ": missing column '" + expected[i] + "'");
  }
  if (ref_header.size() != expected.size())
    throw SchemaError(reference_path + ": unexpected column '" + ref_header[expected.size()] +
                      "'");
  row = 1;
  while (std::getline(ref, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != expected.size())
      throw SchemaError(reference_path + ": row " + std::to_string(row) + ": expected " +
                        std::to_string(expected.size()) + " columns, got " +
                        std::to_string(fields.size()));
    ReferenceSample sample;
    sample.t = parse_field(fields[0], reference_path, row, "t");
    if (!data.reference.empty() && sample.t <= data.reference.back().t)
      throw SchemaError(reference_path + ": row " + std::to_string(row) +
                        ": non-monotonic time");
    for (int i = 0; i < 3; ++i)
      sample.position(i) = parse_field(fields[1 + i], reference_path, row, expected[1 + i]);
    const double qw = parse_field(fields[4], reference_path, row, "qw");
    const double qx = parse_field(fields[5], reference_path, row, "qx");
    const double qy = parse_field(fields[6], reference_path, row, "qy");
    const double qz = parse_field(fields[7], reference_path, row, "qz");
    sample.orientation = Eigen::Quaterniond(qw, qx, qy, qz);
    data.reference.push_back(sample);
  }
  if (data.reference.empty()) throw SchemaError(reference_path + ": no reference rows");

  if (data.reference.back().t < data.frames.front().t ||
      data.reference.front().t > data.frames.back().t)
    throw SchemaError("measurement and reference streams do not overlap in time");
  return data;
}

Dataset make_dataset(const std::vector<MeasurementFrame>& frames, const Trajectory& truth) {
  Dataset data;
  data.frames = frames;
  for (auto& f : data.frames) f.position.reset();
  data.accel_triads = frames.empty() ? 0 : static_cast<int>(frames[0].accel_stack.size() / 3);
  data.gyro_triads = 1;
  data.fs_hz = truth.dt > 0 ? 1.0 / truth.dt : 0.0;
  for (const auto& s : truth.samples) {
    ReferenceSample ref;
    ref.t = s.t;
    ref.position = s.position;
    ref.orientation = Eigen::Quaterniond(s.rotation);
    data.reference.push_back(ref);
  }
  return data;
}

// ---- replay ------------------------------------------------------------------

CampaignResult run_replay_campaign(const Dataset& data, const ReplayConfig& config) {
  if (config.variants.empty()) throw std::invalid_argument("no variants selected");
  if (config.geometry.K() < 3) throw std::invalid_argument("replay geometry is not set");
  if (config.geometry.K() != data.accel_triads)
    throw std::invalid_argument("geometry triad count does not match the dataset");
  ArrayGeometry geom = config.geometry;
  if (!geom.centered) geom = build_geometry(geom.positions, true);

  // Match reference samples to measurement frames by timestamp.
  const double t_tol = 0.25 / std::max(data.fs_hz, 1.0);
  std::vector<long> frame_ref(data.frames.size(), -1);  // frame -> reference index
  std::vector<long> ref_frame(data.reference.size(), -1);
  {
    std::size_t fi = 0;
    for (std::size_t ri = 0; ri < data.reference.size(); ++ri) {
      const double t = data.reference[ri].t;
      while (fi + 1 < data.frames.size() &&
             std::abs(data.frames[fi + 1].t - t) <= std::abs(data.frames[fi].t - t))
        ++fi;
      if (std::abs(data.frames[fi].t - t) <= t_tol) {
        frame_ref[fi] = static_cast<long>(ri);
        ref_frame[ri] = static_cast<long>(fi);
      }
    }
  }

  // Restart schedule: explicit times, or equally spaced instants in the window.
  std::vector<double> schedule = config.restart_times;
  if (schedule.empty()) {
    if (config.restart_count < 1) throw std::invalid_argument("empty restart schedule");
    double w0 = data.frames.front().t + 30.0;
    double w1 = data.frames.back().t - config.ins_horizon_s;
    if (config.restart_window) {
      w0 = config.restart_window->first;
      w1 = config.restart_window->second;
    }
    if (!(w1 >= w0)) throw std::invalid_argument("empty restart schedule");
    if (config.restart_count == 1) {
      schedule.push_back(w0);
    } else {
      for (int i = 0; i < config.restart_count; ++i)
        schedule.push_back(w0 + (w1 - w0) * static_cast<double>(i) /
                                    static_cast<double>(config.restart_count - 1));
    }
  }
  if (schedule.empty()) throw std::invalid_argument("empty restart schedule");

  // Snap each instant to the nearest reference-matched frame.
  std::vector<long> matched_frames;
  for (std::size_t i = 0; i < frame_ref.size(); ++i)
    if (frame_ref[i] >= 0) matched_frames.push_back(static_cast<long>(i));
  if (matched_frames.empty())
    throw SchemaError("no reference samples align with measurement timestamps");

  const auto horizon_frames =
      static_cast<long>(std::llround(config.ins_horizon_s * data.fs_hz));
  std::set<long> restart_set;
  for (double t : schedule) {
    const long frame = *std::min_element(
        matched_frames.begin(), matched_frames.end(), [&](long a, long b) {
          return std::abs(data.frames[a].t - t) < std::abs(data.frames[b].t - t);
        });
    if (frame + horizon_frames >= static_cast<long>(data.frames.size()))
      throw CampaignError("restart instant " + std::to_string(t) +
                          " s leaves no room for the pure-INS horizon");
    restart_set.insert(frame);
  }
  const std::vector<long> restarts(restart_set.begin(), restart_set.end());

  // Aided frames: attach reference positions as measurements.
  std::vector<MeasurementFrame> aided = data.frames;
  for (std::size_t i = 0; i < aided.size(); ++i) {
    if (frame_ref[i] >= 0) aided[i].position = data.reference[frame_ref[i]].position;
  }
  // Pure-INS frames: same stream without position updates.
  std::vector<MeasurementFrame> unaided = data.frames;
  for (auto& f : unaided) f.position.reset();

  // Initial state from the first matched reference sample.
  const long f0 = matched_frames.front();
  const ReferenceSample& r0 = data.reference[frame_ref[f0]];
  Vec3 v0 = Vec3::Zero();
  if (frame_ref[f0] + 1 < static_cast<long>(data.reference.size())) {
    const ReferenceSample& r1 = data.reference[frame_ref[f0] + 1];
    v0 = (r1.position - r0.position) / (r1.t - r0.t);
  }
  TrajectorySample init_truth;
  init_truth.t = data.frames[f0].t;
  init_truth.rotation = r0.orientation.normalized().toRotationMatrix();
  init_truth.position = r0.position;
  init_truth.velocity = v0;
  init_truth.omega = data.frames[f0].gyro;

  RunOptions opt;
  opt.noise = config.noise;
  opt.sigma_pos = config.sigma_pos;
  opt.gravity = config.gravity;

  // Common offset grid from the reference rate.
  const double ref_dt = data.reference.size() > 1
                            ? (data.reference[1].t - data.reference[0].t)
                            : 1.0 / data.fs_hz;
  const auto n_off = static_cast<long>(std::llround(config.ins_horizon_s / ref_dt)) + 1;
  std::vector<double> offsets(n_off);
  for (long j = 0; j < n_off; ++j) offsets[j] = static_cast<double>(j) * ref_dt;

  CampaignResult result;
  const int threads = thread_count(config.threads);

  for (ModelVariant v : config.variants) {
    // Aided pass over the frames starting at the first matched sample,
    // checkpointing the posterior at every restart instant.
    const std::vector<MeasurementFrame> aided_span(aided.begin() + f0, aided.end());
    std::vector<FilterState> checkpoints(restarts.size());
    {
      const FilterState init =
          make_initial_state(v, geom, init_truth, config.init_std, config.noise);
      auto observer = [&](std::size_t n, double t, const CompositeElement& mean,
                          const auto& cov) {
        const long frame = f0 + static_cast<long>(n);
        const auto it = std::lower_bound(restarts.begin(), restarts.end(), frame);
        if (it != restarts.end() && *it == frame) {
          FilterState& ck = checkpoints[it - restarts.begin()];
          ck.mean = mean;
          ck.cov = cov;
          ck.time = t;
        }
      };
      dispatch_variant(v, [&](auto tag) {
        run_filter_t<decltype(tag)::value>(geom, opt, init, aided_span, observer);
      });
    }

    // Pure-INS excursions from each checkpoint.
    std::vector<std::vector<double>> sq(restarts.size(),
                                        std::vector<double>(3 * n_off, 0.0));
    std::vector<std::exception_ptr> failures(restarts.size());
    auto excursion = [&](std::size_t ri) {
      try {
        const long rf = restarts[ri];
        const long ref0 = frame_ref[rf];
        auto& out = sq[ri];
        {  // offset 0: the checkpointed posterior itself
          const Vec3 err = state_position(v, checkpoints[ri].mean) -
                           data.reference[ref0].position;
          for (int a = 0; a < 3; ++a) out[a] = err(a) * err(a);
        }
        const std::vector<MeasurementFrame> span(unaided.begin() + rf,
                                                 unaided.begin() + rf + horizon_frames + 1);
        auto observer = [&](std::size_t n, double, const CompositeElement& mean,
                            const auto&) {
          if (n == 0) return;
          const long frame = rf + static_cast<long>(n);
          const long ref = frame_ref[frame];
          if (ref < 0) return;
          const long j = ref - ref0;
          if (j < 0 || j >= n_off) return;
          const Vec3 err = mean.euclidean.segment<3>(state_layout(v).p - 3) -
                           data.reference[ref].position;
          for (int a = 0; a < 3; ++a) out[3 * j + a] = err(a) * err(a);
        };
        dispatch_variant(v, [&](auto tag) {
          run_filter_t<decltype(tag)::value>(geom, opt, checkpoints[ri], span, observer);
        });
      } catch (const CampaignError&) {
        failures[ri] = std::current_exception();
      } catch (const std::exception& err) {
        std::ostringstream msg;
        msg << "restart " << ri << " (t=" << data.frames[restarts[ri]].t << " s), variant "
            << variant_name(v) << ": " << err.what();
        failures[ri] = std::make_exception_ptr(CampaignError(msg.str()));
      }
    };

    if (threads == 1) {
      for (std::size_t ri = 0; ri < restarts.size(); ++ri) excursion(ri);
    } else {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
      for (std::size_t ri = 0; ri < restarts.size(); ++ri) excursion(ri);
    }
    for (const auto& failure : failures) {
      if (failure) std::rethrow_exception(failure);
    }

    std::vector<const std::vector<double>*> runs;
    for (const auto& s : sq) runs.push_back(&s);
    result.emplace_back(v, curves_from_squares(runs, offsets));
  }
  return result;
}

}  // namespace arrayins
