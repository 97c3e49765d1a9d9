// Composite matrix Lie group G = SO(3) x R^m used by all filters. Elements are
// stored blockwise (rotation matrix + Euclidean vector); the equivalent dense
// matrix embedding exists only as a test oracle.
#pragma once

#include <Eigen/Dense>

#include "arrayins/errors.hpp"
#include "arrayins/so3.hpp"

namespace arrayins {

// Element of SO(3) x R^m. The Euclidean dimension is fixed at construction.
struct CompositeElement {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::VectorXd euclidean;

  int euclidean_dim() const { return static_cast<int>(euclidean.size()); }
  int algebra_dim() const { return 3 + euclidean_dim(); }
};

CompositeElement composite_identity(int euclidean_dim);

/// Blockwise exponential: SO(3) block via so3::exp, Euclidean block identically.
CompositeElement composite_exp(const Eigen::VectorXd& e);

/// Blockwise logarithm; the rotation block is the canonical so3::log.
Eigen::VectorXd composite_log(const CompositeElement& x);

CompositeElement composite_compose(const CompositeElement& a, const CompositeElement& b);

CompositeElement composite_inverse(const CompositeElement& x);

/// Adjoint representation: block-diagonal (R on the rotation block, I_m elsewhere).
Eigen::MatrixXd composite_adjoint(const CompositeElement& x);

/// Right Jacobian of G at e: block-diagonal (so3::right_jacobian on the
/// rotation block, I_m elsewhere).
Eigen::MatrixXd composite_right_jacobian(const Eigen::VectorXd& e);

}  // namespace arrayins
