// CSV schemas and atomic writers.
//
// Campaign output:  # key=value provenance lines, then
//   variant,t_offset,rmse_x,rmse_y,rmse_z,rmse_combined,n_runs
// Measurement file: t,a1_x,a1_y,a1_z,...,aK_z,g1_x,...,gM_z
// Reference file:   t,px,py,pz,qw,qx,qy,qz
// Doubles are written with %.17g so loading reproduces the exact values.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "arrayins/harness.hpp"

namespace arrayins {

/// Writes via a temporary file plus rename, so no partial output survives a failure.
void write_rmse_csv(const std::string& path, const CampaignResult& result,
                    const std::vector<std::pair<std::string, std::string>>& provenance);

void write_measurement_csv(const std::string& path, const Dataset& data);
void write_reference_csv(const std::string& path, const Dataset& data);

/// Posterior trajectory export: time, rotation vector of R, remaining state
/// blocks, and the covariance diagonal.
void write_state_trajectory_csv(const std::string& path, ModelVariant v,
                                const std::vector<PosteriorSample>& samples);

std::string format_double(double value);

}  // namespace arrayins
