// Benchmark: the Monte-Carlo campaign kernel with the serial reference driver
// vs the OpenMP-parallel driver, verifying that both produce identical curves.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstring>

#include "arrayins/harness.hpp"

using namespace arrayins;
using clock_type = std::chrono::steady_clock;

namespace {

CampaignConfig bench_config(int runs) {
  CampaignConfig cfg;
  cfg.geometry = paper_array32();
  cfg.dynamics = "low";
  cfg.fs_hz = 100.0;
  cfg.runs = runs;
  cfg.aiding_duration_s = 10.0;
  cfg.ins_horizon_s = 2.0;
  cfg.require_bias_convergence = false;
  cfg.seed = 7;
  return cfg;
}

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

bool identical(const CampaignResult& a, const CampaignResult& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].first != b[i].first) return false;
    const RmseCurve& ca = a[i].second;
    const RmseCurve& cb = b[i].second;
    if (std::memcmp(ca.rmse_combined.data(), cb.rmse_combined.data(),
                    ca.rmse_combined.size() * sizeof(double)) != 0)
      return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int runs = 16;
  if (argc > 1) runs = std::atoi(argv[1]);

  CampaignConfig cfg = bench_config(runs);

  std::printf("campaign benchmark: %d runs, %d hardware threads\n", runs,
              omp_get_max_threads());

  cfg.threads = 1;
  auto t0 = clock_type::now();
  const CampaignResult serial = run_simulation_campaign(cfg);
  const double t_serial = seconds_since(t0);
  std::printf("serial reference: %8.3f s\n", t_serial);

  cfg.threads = 0;  // all cores
  t0 = clock_type::now();
  const CampaignResult parallel = run_simulation_campaign(cfg);
  const double t_parallel = seconds_since(t0);
  std::printf("openmp kernel:    %8.3f s  (speedup %.2fx)\n", t_parallel,
              t_serial / t_parallel);

  if (!identical(serial, parallel)) {
    std::fprintf(stderr, "FAIL: serial and parallel results differ\n");
    return 1;
  }
  std::printf("serial and parallel curves are bit-identical\n");
  return 0;
}
