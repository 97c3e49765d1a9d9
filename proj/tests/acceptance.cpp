// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Campaign-based criteria run at desk scale (100 Monte-Carlo
// runs) with tolerances widened accordingly.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "arrayins/csv_io.hpp"
#include "arrayins/harness.hpp"
#include "support/full_bias_filter.hpp"

using namespace arrayins;
using clock_type = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int index, bool pass, const std::string& name, const std::string& detail,
            double seconds) {
  std::printf("[%d] %s  %-28s %s  (%.1f s)\n", index, pass ? "PASS" : "FAIL", name.c_str(),
              detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

struct Timer {
  clock_type::time_point t0 = clock_type::now();
  double elapsed() const {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
  }
};

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---- criterion 1: integration order ------------------------------------------

// Constant angular acceleration about a fixed axis, with an initial rate that
// is not parallel to it, so the motion does not commute and the discretization
// order shows up as the global error slope.
void criterion_integration_order() {
  Timer timer;
  const ArrayGeometry geom = paper_array32();
  const Vec3 omega0(0.8, -0.3, 0.5);
  const Vec3 alpha(-1.0, 2.0, 0.7);
  const double duration = 0.6;

  // Reference attitude from fine Magnus-corrected integration.
  Mat3 r_ref = Mat3::Identity();
  {
    const double h = 1e-5;
    const auto n = static_cast<long>(std::llround(duration / h));
    for (long i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) * h;
      const Vec3 w0 = omega0 + alpha * t;
      const Vec3 wm = omega0 + alpha * (t + 0.5 * h);
      const Vec3 w1 = omega0 + alpha * (t + h);
      r_ref = r_ref * so3::exp((h / 6.0) * (w0 + 4.0 * wm + w1) +
                               (h * h * h / 12.0) * w0.cross(alpha));
    }
  }

  const std::vector<double> steps = {1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
  bool pass = true;
  std::ostringstream detail;
  for (ModelVariant v : kAllVariants) {
    std::vector<double> log_t, log_e;
    for (double dt : steps) {
      const auto n = static_cast<long>(std::llround(duration / dt));
      CompositeElement x = make_state(v, Mat3::Identity(), omega0, Vec3::Zero(),
                                      Vec3::Zero());
      ModelInputs in;
      in.gravity = Vec3::Zero();
      for (long i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        const Vec3 w = omega0 + alpha * t;
        in.accel_stack.resize(3 * geom.K());
        const Mat3 w2 = so3::skew(w) * so3::skew(w);
        for (int k = 0; k < geom.K(); ++k)
          in.accel_stack.segment<3>(3 * k) =
              w2 * geom.positions[k] + alpha.cross(geom.positions[k]);
        in.gyro = w;
        const Eigen::VectorXd inc = propagate_increment(v, x, in, geom, dt);
        x = composite_compose(x, composite_exp(inc));
      }
      log_t.push_back(std::log(dt));
      log_e.push_back(std::log(so3::log(r_ref.transpose() * x.rotation).norm()));
    }
    const double slope = fit_slope(log_t, log_e);
    const double target = is_second_order(v) ? 2.0 : 1.0;
    const bool ok = std::abs(slope - target) <= 0.3;
    pass = pass && ok;
    detail << variant_name(v) << " slope " << std::fixed << std::setprecision(2) << slope
           << (ok ? "" : "!") << "  ";
  }
  report(1, pass, "integration order", detail.str(), timer.elapsed());
}

// ---- criterion 2: jacobian validation -----------------------------------------

void criterion_jacobians() {
  Timer timer;
  const JacobianValidationReport rep = validate_jacobians(42, 10, 1e-5);
  const std::string cmd = std::string(ARRAYINS_CLI_PATH) + " validate-jacobians --quiet";
  const int cli_exit = WEXITSTATUS(std::system(cmd.c_str()));
  std::ostringstream detail;
  detail << "max rel err " << std::scientific << std::setprecision(2) << rep.max_rel_error
         << " at " << rep.worst_block << ", cli exit " << cli_exit;
  report(2, rep.passed && cli_exit == 0, "jacobian validation", detail.str(),
         timer.elapsed());
}

// ---- criterion 3: noise-reduction algebra --------------------------------------

void criterion_noise_reduction() {
  Timer timer;
  bool pass = true;
  std::ostringstream detail;

  // General form vs the centered/isotropic closed form on the 32-triad array.
  {
    const ArrayGeometry geom = paper_array32();
    const double sigma = 0.5;
    const int k3 = 3 * geom.K();
    const Mat6 general =
        reduce_noise_covariance(sigma * sigma * Eigen::MatrixXd::Identity(k3, k3), geom);
    Mat6 closed = Mat6::Zero();
    closed.block<3, 3>(0, 0) = sigma * sigma * geom.second_moment.inverse();
    closed.block<3, 3>(3, 3) = sigma * sigma / geom.K() * Mat3::Identity();
    const double err = (general - closed).norm();
    pass = pass && err < 1e-12;
    detail << "closed-form err " << std::scientific << std::setprecision(1) << err;

    const Mat3 s_block = general.block<3, 3>(3, 3);
    const bool exact =
        (s_block - (sigma * sigma / geom.K()) * Mat3::Identity()).norm() == 0.0;
    pass = pass && exact;
    detail << (exact ? ", s-block exact" : ", s-block NOT exact");
  }

  // K = 4 square: the angular block is sigma^2 diag(1/a^2, 1/a^2, 1/(2a^2)).
  {
    const double side = 0.25, sigma = 0.5;
    const ArrayGeometry geom = square_array4(side);
    const Mat6 cov =
        reduce_noise_covariance(sigma * sigma * Eigen::MatrixXd::Identity(12, 12), geom);
    const Mat3 expected = sigma * sigma *
                          Vec3(1 / (side * side), 1 / (side * side), 1 / (2 * side * side))
                              .asDiagonal()
                              .toDenseMatrix();
    const double err = (cov.block<3, 3>(0, 0) - expected).norm();
    // Dense pseudoinverse oracle.
    const Eigen::MatrixXd a = geom.H.completeOrthogonalDecomposition().pseudoInverse();
    const double oracle_err = (cov - a * (sigma * sigma) * a.transpose()).norm();
    pass = pass && err < 1e-12 && oracle_err < 1e-12;
    detail << ", square wdot err " << std::scientific << std::setprecision(1) << err;
  }
  report(3, pass, "noise-reduction algebra", detail.str(), timer.elapsed());
}

// ---- criterion 4: reduction equivalence ----------------------------------------

void criterion_reduction_equivalence() {
  Timer timer;
  const ArrayGeometry geom = square_array4(0.3);
  const double fs = 500.0;
  const Trajectory traj = generate_sinusoid_trajectory(low_dynamics_profile(), 2.0, 1e-4, fs);
  NoiseConfig noise;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal(0.0, 1.0);
  const SensorBiases biases = draw_biases(geom.K(), noise.sigma_accel, noise.sigma_gyro, rng);
  auto frames = synthesize_measurements(traj, geom, biases, noise, fs, 77);
  for (std::size_t i = 0; i < frames.size(); i += 5) {
    Vec3 y = traj.samples[i].position;
    for (int a = 0; a < 3; ++a) y(a) += 0.1 * normal(rng);
    frames[i].position = y;
  }
  frames.resize(1000);

  RunOptions opt;
  opt.noise = noise;
  const ModelVariant v = ModelVariant::AccelArray2nd;
  const auto reduced = run_filter(
      v, make_initial_state(v, geom, traj.samples[0], InitStdConfig{}, noise), frames, geom,
      opt);

  testsupport::FullBiasOptions fopt;
  fopt.noise = noise;
  const int k3 = 3 * geom.K();
  FilterState init_full;
  init_full.mean.rotation = traj.samples[0].rotation;
  init_full.mean.euclidean = Eigen::VectorXd::Zero(12 + k3);
  init_full.mean.euclidean.segment<3>(0) = traj.samples[0].omega;
  init_full.mean.euclidean.segment<3>(3) = traj.samples[0].position;
  init_full.mean.euclidean.segment<3>(6) = traj.samples[0].velocity;
  const int d = testsupport::full_bias_dim(geom);
  const InitStdConfig istd;
  init_full.cov = Eigen::MatrixXd::Zero(d, d);
  init_full.cov.block<3, 3>(0, 0) = istd.rot * istd.rot * Mat3::Identity();
  init_full.cov.block<3, 3>(3, 3) = istd.omega * istd.omega * Mat3::Identity();
  init_full.cov.block<3, 3>(6, 6) = istd.pos * istd.pos * Mat3::Identity();
  init_full.cov.block<3, 3>(9, 9) = istd.vel * istd.vel * Mat3::Identity();
  init_full.cov.block(12, 12, k3, k3) =
      9.0 * noise.sigma_accel * noise.sigma_accel * Eigen::MatrixXd::Identity(k3, k3);
  init_full.cov.bottomRightCorner(3, 3) =
      9.0 * noise.sigma_gyro * noise.sigma_gyro * Mat3::Identity();
  const auto full = testsupport::run_full_bias_filter(geom, fopt, init_full, frames);

  double worst = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& zr = reduced[i].mean.euclidean;
    const auto& zf = full[i].mean.euclidean;
    worst = std::max(worst,
                     so3::log(reduced[i].mean.rotation.transpose() * full[i].mean.rotation)
                         .norm());
    worst = std::max(worst, (zr.segment<3>(0) - zf.segment<3>(0)).norm());
    worst = std::max(worst, (zr.segment<3>(3) - zf.segment<3>(3)).norm());
    worst = std::max(worst, (zr.segment<3>(6) - zf.segment<3>(6)).norm());
    worst = std::max(worst, (zr.tail<3>() - zf.tail<3>()).norm());
    const Vec6 mapped = -geom.A * zf.segment(9, k3);
    worst = std::max(worst, (zr.segment<6>(9) - mapped).norm());
  }
  std::ostringstream detail;
  detail << "max posterior difference " << std::scientific << std::setprecision(2) << worst
         << " over 1000 steps";
  report(4, worst < 1e-8, "reduction equivalence", detail.str(), timer.elapsed());
}

// ---- criterion 5: stability analysis -------------------------------------------

void criterion_stability() {
  Timer timer;
  const ArrayGeometry geom = paper_array32();
  const Eigen::Vector3cd open_loop = stability_eigenvalues(geom, Vec3(1, 1, 1), Mat3::Zero());
  double max_re = 0.0;
  for (int i = 0; i < 3; ++i) max_re = std::max(max_re, std::abs(open_loop(i).real()));
  const Eigen::Vector3cd damped =
      stability_eigenvalues(geom, Vec3(1, 1, 1), 10.0 * Mat3::Identity());
  bool damped_ok = true;
  for (int i = 0; i < 3; ++i) damped_ok = damped_ok && damped(i).real() < 0.0;
  std::ostringstream detail;
  detail << "max |Re| " << std::scientific << std::setprecision(1) << max_re
         << (damped_ok ? ", L=10I damped" : ", L=10I NOT damped");
  report(5, max_re < 1e-9 && damped_ok, "stability analysis", detail.str(), timer.elapsed());
}

// ---- criteria 6/7: simulation trends -------------------------------------------

double final_rmse(const CampaignResult& result, ModelVariant v) {
  for (const auto& [variant, curve] : result) {
    if (variant == v) return curve.rmse_combined.back();
  }
  return -1.0;
}

void criterion_trend_low_dynamics() {
  Timer timer;
  CampaignConfig cfg;
  cfg.geometry = paper_array32();
  cfg.dynamics = "low";
  cfg.fs_hz = 500.0;
  cfg.runs = 100;
  cfg.seed = 2024;
  cfg.threads = 0;
  const CampaignResult result = run_simulation_campaign(cfg);

  const double aa2 = final_rmse(result, ModelVariant::AccelArray2nd);
  const double aa1 = final_rmse(result, ModelVariant::AccelArray1st);
  const double g2 = final_rmse(result, ModelVariant::Gyro2nd);
  const double g1 = final_rmse(result, ModelVariant::Gyro1st);
  const bool second_order_wins = aa2 < g1 && g2 < g1;
  const bool first_orders_similar = std::abs(aa1 / g1 - 1.0) <= 0.15;
  std::ostringstream detail;
  detail << std::fixed << std::setprecision(3) << "rmse@5s [m]: aa2 " << aa2 << ", aa1 "
         << aa1 << ", g2 " << g2 << ", g1 " << g1;
  report(6, second_order_wins && first_orders_similar, "trend: low dyn, 500 Hz",
         detail.str(), timer.elapsed());
}

void criterion_trend_high_dynamics() {
  Timer timer;
  CampaignConfig cfg;
  cfg.geometry = paper_array32();
  cfg.dynamics = "high";
  cfg.fs_hz = 100.0;
  cfg.runs = 100;
  cfg.seed = 2025;
  cfg.threads = 0;
  const CampaignResult result = run_simulation_campaign(cfg);

  const double aa2 = final_rmse(result, ModelVariant::AccelArray2nd);
  const double aa1 = final_rmse(result, ModelVariant::AccelArray1st);
  const double g2 = final_rmse(result, ModelVariant::Gyro2nd);
  const double g1 = final_rmse(result, ModelVariant::Gyro1st);
  const bool advantage_gone = aa2 >= 0.85 * aa1 && g2 >= 0.85 * g1;
  std::ostringstream detail;
  detail << std::fixed << std::setprecision(3) << "rmse@5s [m]: aa2 " << aa2 << ", aa1 "
         << aa1 << ", g2 " << g2 << ", g1 " << g1;
  report(7, advantage_gone, "trend: high dyn, 100 Hz", detail.str(), timer.elapsed());
}

// ---- criterion 8: feedback stabilization ---------------------------------------

void criterion_stabilization() {
  Timer timer;
  const ArrayGeometry geom = paper_array32();
  const double fs = 500.0;
  const Trajectory traj = generate_sinusoid_trajectory(low_dynamics_profile(), 60.0, 1e-4, fs);
  NoiseConfig noise;
  SensorBiases biases;
  biases.accel.assign(geom.K(), Vec3::Zero());  // isolate the stabilization mechanism
  const auto frames = synthesize_measurements(traj, geom, biases, noise, fs, 808);
  const double bound = 5.0 * noise.sigma_gyro;

  bool pass = true;
  std::ostringstream detail;
  for (ModelVariant v : {ModelVariant::AccelArray2nd, ModelVariant::AccelArray1st}) {
    double max_with = 0.0;
    bool crossed = false, stays_above = false, second_half_larger = false;
    double end_err = 0.0;
    for (bool enable : {true, false}) {
      RunOptions opt;
      opt.noise = noise;
      opt.enable_gyro_updates = enable;
      const FilterState init =
          make_initial_state(v, geom, traj.samples[0], InitStdConfig{}, noise);
      const auto n_frames = static_cast<long>(frames.size());
      double max_err = 0.0, min_after_cross = 1e300, last = 0.0;
      double half_sq[2] = {0.0, 0.0};
      long half_n[2] = {0, 0};
      bool above = false;
      auto observer = [&](std::size_t n, double, const CompositeElement& mean,
                          const auto&) {
        const double err = (state_omega(v, mean) - traj.samples[n].omega).norm();
        max_err = std::max(max_err, err);
        if (above) min_after_cross = std::min(min_after_cross, err);
        if (err > bound) above = true;
        const int half = static_cast<long>(n) < n_frames / 2 ? 0 : 1;
        half_sq[half] += err * err;
        ++half_n[half];
        last = err;
      };
      dispatch_variant(v, [&](auto tag) {
        run_filter_t<decltype(tag)::value>(geom, opt, init, frames, observer);
      });
      if (enable) {
        max_with = max_err;
      } else {
        // Ablation: the error escapes the bound, never comes back, keeps
        // growing (second half above first half) and ends far beyond it.
        crossed = above;
        stays_above = above && min_after_cross >= bound;
        second_half_larger =
            std::sqrt(half_sq[1] / half_n[1]) > std::sqrt(half_sq[0] / half_n[0]);
        end_err = last;
      }
    }
    const bool bounded = max_with < bound;
    const bool growing = crossed && stays_above && second_half_larger && end_err > 10 * bound;
    pass = pass && bounded && growing;
    detail << variant_name(v) << ": max " << std::scientific << std::setprecision(1)
           << max_with << (bounded ? " < " : " >= ") << bound << ", ablated end "
           << end_err << (growing ? " grows past bound" : " NOT growing") << "; ";
  }
  report(8, pass, "gyro-update stabilization", detail.str(), timer.elapsed());
}

// ---- criterion 9: determinism --------------------------------------------------

void criterion_determinism() {
  Timer timer;
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "arrayins_acceptance";
  fs::create_directories(dir);
  const auto cfg_path = dir / "det.json";
  {
    std::ofstream out(cfg_path);
    out << R"({"dynamics":"low","fs_hz":100,"runs":6,"aiding_duration_s":5.0,
               "ins_horizon_s":2.0,"seed":31415,"require_bias_convergence":false,
               "geometry":"paper-32"})";
  }
  const auto out1 = dir / "det1.csv";
  const auto out2 = dir / "det2.csv";
  auto run_once = [&](const fs::path& out, int threads) {
    const std::string cmd = std::string(ARRAYINS_CLI_PATH) + " simulate --config " +
                            cfg_path.string() + " --out " + out.string() + " --threads " +
                            std::to_string(threads) + " --quiet";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };
  const int e1 = run_once(out1, 1);
  const int e2 = run_once(out2, 0);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string a = slurp(out1);
  const std::string b = slurp(out2);
  const bool pass = e1 == 0 && e2 == 0 && !a.empty() && a == b;
  std::ostringstream detail;
  detail << "two runs (serial vs parallel driver), " << a.size() << " bytes, "
         << (a == b ? "identical" : "DIFFER");
  report(9, pass, "determinism", detail.str(), timer.elapsed());
}

}  // namespace

int main() {
  std::printf("acceptance suite, desk scale (100 Monte-Carlo runs)\n");
  criterion_integration_order();
  criterion_jacobians();
  criterion_noise_reduction();
  criterion_reduction_equivalence();
  criterion_stability();
  criterion_trend_low_dynamics();
  criterion_trend_high_dynamics();
  criterion_stabilization();
  criterion_determinism();
  if (g_failures > 0) {
    std::printf("%d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
