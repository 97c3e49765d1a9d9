#include "arrayins/composite.hpp"

namespace arrayins {

CompositeElement composite_identity(int euclidean_dim) {
  CompositeElement x;
  x.euclidean = Eigen::VectorXd::Zero(euclidean_dim);
  return x;
}

CompositeElement composite_exp(const Eigen::VectorXd& e) {
  if (e.size() < 3) throw DimensionError("composite_exp: algebra vector shorter than 3");
  CompositeElement x;
  x.rotation = so3::exp(e.head<3>());
  x.euclidean = e.tail(e.size() - 3);
  return x;
}

Eigen::VectorXd composite_log(const CompositeElement& x) {
  Eigen::VectorXd e(x.algebra_dim());
  e.head<3>() = so3::log(x.rotation);
  e.tail(x.euclidean_dim()) = x.euclidean;
  return e;
}

CompositeElement composite_compose(const CompositeElement& a, const CompositeElement& b) {
  if (a.euclidean_dim() != b.euclidean_dim())
    throw DimensionError("composite_compose: Euclidean dimensions differ");
  CompositeElement x;
  x.rotation = a.rotation * b.rotation;
  x.euclidean = a.euclidean + b.euclidean;
  return x;
}

CompositeElement composite_inverse(const CompositeElement& x) {
  CompositeElement inv;
  inv.rotation = x.rotation.transpose();
  inv.euclidean = -x.euclidean;
  return inv;
}

Eigen::MatrixXd composite_adjoint(const CompositeElement& x) {
  const int d = x.algebra_dim();
  Eigen::MatrixXd ad = Eigen::MatrixXd::Identity(d, d);
  ad.topLeftCorner<3, 3>() = x.rotation;
  return ad;
}

Eigen::MatrixXd composite_right_jacobian(const Eigen::VectorXd& e) {
  if (e.size() < 3) throw DimensionError("composite_right_jacobian: algebra vector shorter than 3");
  const int d = static_cast<int>(e.size());
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(d, d);
  phi.topLeftCorner<3, 3>() = so3::right_jacobian(e.head<3>());
  return phi;
}

}  // namespace arrayins
