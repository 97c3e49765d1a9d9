#include "arrayins/filter.hpp"

namespace arrayins {

FilterState predict(const FilterState& fs, ModelVariant v, const ModelInputs& in,
                    const ArrayGeometry& geom, const Eigen::MatrixXd& q_p, double dt) {
  if (q_p.rows() != noise_dim(v) || q_p.cols() != noise_dim(v))
    throw DimensionError("predict: process noise does not match variant layout");
  if (fs.cov.rows() != algebra_dim(v) || fs.cov.cols() != algebra_dim(v))
    throw DimensionError("predict: covariance does not match variant dimension");

  FilterState out = fs;
  const Eigen::VectorXd omega_hat = propagate_increment(v, fs.mean, in, geom, dt);
  const Eigen::MatrixXd jx = jacobian_state(v, fs.mean, in, geom, dt);
  const Eigen::MatrixXd jw = jacobian_noise(v, fs.mean, in, geom, dt);
  predict_core(out.mean, out.cov, omega_hat, jx, jw, q_p);
  out.time = fs.time + dt;
  return out;
}

FilterState update(const FilterState& fs, const Vec3& y, const Vec3& predicted,
                   const Eigen::MatrixXd& h, const Mat3& q_m) {
  if (h.rows() != 3 || h.cols() != fs.cov.rows())
    throw DimensionError("update: measurement Jacobian shape mismatch");
  FilterState out = fs;
  update_core(out.mean, out.cov, Vec3(y - predicted), h, q_m);
  return out;
}

std::vector<PosteriorSample> run_filter(ModelVariant v, const FilterState& init,
                                        const std::vector<MeasurementFrame>& frames,
                                        const ArrayGeometry& geom, const RunOptions& opt) {
  std::vector<PosteriorSample> out;
  out.reserve(frames.size());
  auto record = [&](std::size_t, double t, const CompositeElement& mean, const auto& cov) {
    out.push_back({t, mean, cov.diagonal()});
  };
  dispatch_variant(v, [&](auto tag) {
    run_filter_t<decltype(tag)::value>(geom, opt, init, frames, record);
  });
  return out;
}

}  // namespace arrayins
