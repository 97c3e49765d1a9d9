// Command-line entry point: simulation campaigns, dataset replay, stability
// analysis of the array ODE, and finite-difference Jacobian validation.
//
// Exit codes: 0 success, 2 config/validation error, 3 campaign failure,
// 4 dataset schema error, 5 Jacobian validation failure.
#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "arrayins/config.hpp"
#include "arrayins/csv_io.hpp"

namespace {

using namespace arrayins;

constexpr int kExitConfig = 2;
constexpr int kExitCampaign = 3;
constexpr int kExitSchema = 4;
constexpr int kExitJacobian = 5;

struct CommonFlags {
  std::string config;
  std::string out;
  bool quiet = false;
  int threads = -1;  // -1 = take from config
};

std::vector<ModelVariant> parse_variant_list(const std::string& csv) {
  std::vector<ModelVariant> variants;
  std::istringstream in(csv);
  std::string name;
  while (std::getline(in, name, ',')) {
    if (!name.empty()) variants.push_back(parse_variant(name));
  }
  if (variants.empty()) throw ConfigError("empty --variants list");
  return variants;
}

void print_summary(const CampaignResult& result, bool quiet) {
  if (quiet) return;
  for (const auto& [variant, curve] : result) {
    std::printf("%-16s final rmse %.6g m over %d runs\n", variant_name(variant),
                curve.rmse_combined.back(), curve.n_runs);
  }
}

int cmd_simulate(const CommonFlags& flags, std::uint64_t* seed, int* runs, double* fs,
                 const std::string* dynamics, const std::string* variants) {
  CampaignConfig cfg;
  try {
    cfg = flags.config.empty() ? load_campaign_config("paper-sim-low-500")
                               : load_campaign_config(flags.config);
    if (seed) cfg.seed = *seed;
    if (runs) cfg.runs = *runs;
    if (fs) cfg.fs_hz = *fs;
    if (dynamics) cfg.dynamics = *dynamics;
    if (variants) cfg.variants = parse_variant_list(*variants);
    if (flags.threads >= 0) cfg.threads = flags.threads;
    if (cfg.dynamics != "low" && cfg.dynamics != "high")
      throw ConfigError("dynamics must be 'low' or 'high'");
  } catch (const std::exception& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return kExitConfig;
  }

  try {
    const CampaignResult result = run_simulation_campaign(cfg);
    write_rmse_csv(flags.out, result,
                   {{"tool", "arrayins simulate"},
                    {"version", kToolVersion},
                    {"seed", std::to_string(cfg.seed)},
                    {"config_hash", campaign_config_hash(cfg)}});
    print_summary(result, flags.quiet);
    return 0;
  } catch (const std::invalid_argument& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return kExitConfig;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "campaign failed: %s\n", err.what());
    return kExitCampaign;
  }
}

int cmd_replay(const CommonFlags& flags, const std::string& meas_path,
               const std::string& ref_path) {
  ReplayConfig cfg;
  try {
    if (flags.config.empty()) throw ConfigError("replay requires --config");
    cfg = load_replay_config(flags.config);
    if (flags.threads >= 0) cfg.threads = flags.threads;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return kExitConfig;
  }

  Dataset data;
  try {
    data = load_dataset(meas_path, ref_path);
  } catch (const std::exception& err) {
    std::fprintf(stderr, "dataset error: %s\n", err.what());
    return kExitSchema;
  }

  try {
    const CampaignResult result = run_replay_campaign(data, cfg);
    write_rmse_csv(flags.out, result,
                   {{"tool", "arrayins replay"},
                    {"version", kToolVersion},
                    {"seed", std::to_string(cfg.seed)},
                    {"config_hash", replay_config_hash(cfg)},
                    {"measurements", meas_path},
                    {"reference", ref_path}});
    print_summary(result, flags.quiet);
    return 0;
  } catch (const std::invalid_argument& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return kExitConfig;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "replay failed: %s\n", err.what());
    return kExitCampaign;
  }
}

int cmd_analyze_stability(const std::string& geometry, const std::string& omega0_csv,
                          const std::string& l_diag_csv) {
  try {
    const ArrayGeometry geom = load_geometry(geometry);
    auto parse3 = [](const std::string& csv) {
      Vec3 v;
      if (std::sscanf(csv.c_str(), "%lf,%lf,%lf", &v.x(), &v.y(), &v.z()) != 3)
        throw ConfigError("expected three comma-separated values: " + csv);
      return v;
    };
    const Vec3 omega0 = parse3(omega0_csv);
    const Vec3 l = parse3(l_diag_csv);
    const Eigen::Vector3cd eig =
        stability_eigenvalues(geom, omega0, l.asDiagonal().toDenseMatrix());
    std::printf("# eigenvalues of d(omega_dot)/d(omega) - L at omega0=(%g,%g,%g)\n",
                omega0.x(), omega0.y(), omega0.z());
    for (int i = 0; i < 3; ++i)
      std::printf("lambda_%d: re=%.12e im=%.12e\n", i, eig(i).real(), eig(i).imag());
    return 0;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "stability analysis error: %s\n", err.what());
    return kExitConfig;
  }
}

int cmd_validate_jacobians(std::uint64_t seed, bool quiet) {
  const JacobianValidationReport report = validate_jacobians(seed);
  if (!quiet || !report.passed) std::fputs(report.text.c_str(), stdout);
  if (!report.passed) {
    std::fprintf(stderr, "jacobian validation failed at %s\n", report.worst_block.c_str());
    return kExitJacobian;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inertial navigation with an inertial sensor array"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::uint64_t seed = 0;
  int runs = 0;
  double fs = 0;
  std::string dynamics, variants, meas_path, ref_path;
  std::string geometry = "paper-32", omega0 = "1,1,1", l_diag = "0,0,0";

  auto* sim = app.add_subcommand("simulate", "Monte-Carlo simulation campaign");
  sim->add_option("--config", flags.config, "config file or preset name");
  sim->add_option("--out", flags.out, "output CSV")->required();
  auto* seed_opt = sim->add_option("--seed", seed, "seed override");
  auto* runs_opt = sim->add_option("--runs", runs, "Monte-Carlo run count override");
  auto* fs_opt = sim->add_option("--fs", fs, "sampling frequency override [Hz]");
  auto* dyn_opt = sim->add_option("--dynamics", dynamics, "low|high");
  auto* var_opt = sim->add_option("--variants", variants, "comma-separated variant list");
  sim->add_option("--threads", flags.threads, "worker threads (1 = serial reference)");
  sim->add_flag("--quiet", flags.quiet, "suppress the summary");

  auto* rep = app.add_subcommand("replay", "replay a recorded dataset");
  rep->add_option("--config", flags.config, "replay config file")->required();
  rep->add_option("--meas", meas_path, "measurement CSV")->required();
  rep->add_option("--ref", ref_path, "position/orientation reference CSV")->required();
  rep->add_option("--out", flags.out, "output CSV")->required();
  rep->add_option("--threads", flags.threads, "worker threads (1 = serial reference)");
  rep->add_flag("--quiet", flags.quiet, "suppress the summary");

  auto* stab = app.add_subcommand("analyze-stability", "poles of the array ODE Jacobian");
  stab->add_option("--geometry", geometry, "geometry file or preset");
  stab->add_option("--omega0", omega0, "linearization point, e.g. 1,1,1 [rad/s]");
  stab->add_option("--l-diag", l_diag, "diagonal feedback gain, e.g. 10,10,10");

  std::uint64_t jac_seed = 42;
  bool jac_quiet = false;
  auto* jac = app.add_subcommand("validate-jacobians",
                                 "compare analytic Jacobians against finite differences");
  jac->add_option("--seed", jac_seed, "rng seed for the random states");
  jac->add_flag("--quiet", jac_quiet, "print only failures");

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    return cmd_simulate(flags, seed_opt->count() ? &seed : nullptr,
                        runs_opt->count() ? &runs : nullptr, fs_opt->count() ? &fs : nullptr,
                        dyn_opt->count() ? &dynamics : nullptr,
                        var_opt->count() ? &variants : nullptr);
  }
  if (rep->parsed()) return cmd_replay(flags, meas_path, ref_path);
  if (stab->parsed()) return cmd_analyze_stability(geometry, omega0, l_diag);
  if (jac->parsed()) return cmd_validate_jacobians(jac_seed, jac_quiet);
  return kExitConfig;
}
