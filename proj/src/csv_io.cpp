#include "arrayins/csv_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "arrayins/so3.hpp"

namespace arrayins {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

namespace {

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open output file: " + tmp);
    out << content;
    if (!out) throw std::runtime_error("failed writing output file: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void write_rmse_csv(const std::string& path, const CampaignResult& result,
                    const std::vector<std::pair<std::string, std::string>>& provenance) {
  std::ostringstream out;
  for (const auto& [key, value] : provenance) out << "# " << key << "=" << value << "\n";
  out << "variant,t_offset,rmse_x,rmse_y,rmse_z,rmse_combined,n_runs\n";
  for (const auto& [variant, curve] : result) {
    for (std::size_t i = 0; i < curve.t_offset.size(); ++i) {
      out << variant_name(variant) << ',' << format_double(curve.t_offset[i]) << ','
          << format_double(curve.rmse_x[i]) << ',' << format_double(curve.rmse_y[i]) << ','
          << format_double(curve.rmse_z[i]) << ',' << format_double(curve.rmse_combined[i])
          << ',' << curve.n_runs << "\n";
    }
  }
  atomic_write(path, out.str());
}

void write_measurement_csv(const std::string& path, const Dataset& data) {
  std::ostringstream out;
  out << "t";
  for (int k = 1; k <= data.accel_triads; ++k)
    out << ",a" << k << "_x,a" << k << "_y,a" << k << "_z";
  for (int k = 1; k <= data.gyro_triads; ++k)
    out << ",g" << k << "_x,g" << k << "_y,g" << k << "_z";
  out << "\n";
  for (const auto& frame : data.frames) {
    out << format_double(frame.t);
    for (int i = 0; i < frame.accel_stack.size(); ++i)
      out << ',' << format_double(frame.accel_stack(i));
    for (int i = 0; i < 3; ++i) out << ',' << format_double(frame.gyro(i));
    out << "\n";
  }
  atomic_write(path, out.str());
}

void write_reference_csv(const std::string& path, const Dataset& data) {
  std::ostringstream out;
  out << "t,px,py,pz,qw,qx,qy,qz\n";
  for (const auto& ref : data.reference) {
    out << format_double(ref.t);
    for (int i = 0; i < 3; ++i) out << ',' << format_double(ref.position(i));
    out << ',' << format_double(ref.orientation.w()) << ','
        << format_double(ref.orientation.x()) << ',' << format_double(ref.orientation.y())
        << ',' << format_double(ref.orientation.z()) << "\n";
  }
  atomic_write(path, out.str());
}

void write_state_trajectory_csv(const std::string& path, ModelVariant v,
                                const std::vector<PosteriorSample>& samples) {
  std::ostringstream out;
  out << "t,rx,ry,rz";
  for (const auto& block : state_blocks(v)) {
    if (block.name == "e_R") continue;
    for (const char* axis : {"_x", "_y", "_z"}) out << ',' << block.name << axis;
  }
  const int d = algebra_dim(v);
  for (int i = 0; i < d; ++i) out << ",cov_" << i;
  out << "\n";
  for (const auto& s : samples) {
    out << format_double(s.t);
    const Vec3 rotvec = so3::log(s.mean.rotation);
    for (int i = 0; i < 3; ++i) out << ',' << format_double(rotvec(i));
    for (int i = 0; i < s.mean.euclidean.size(); ++i)
      out << ',' << format_double(s.mean.euclidean(i));
    for (int i = 0; i < s.cov_diag.size(); ++i) out << ',' << format_double(s.cov_diag(i));
    out << "\n";
  }
  atomic_write(path, out.str());
}

}  // namespace arrayins
