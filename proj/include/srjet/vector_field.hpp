#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "srjet/expr.hpp"

namespace srjet {

// k symbolic vector fields X_1..X_k on R^n with exact symbolic Jacobians and
// Hessians.  Immutable after construction; safe to share across threads.
class VectorFieldSet {
 public:
  VectorFieldSet() = default;

  // components[i][m] is the m-th coordinate of X_i, as an expression over the
  // coordinate names.
  static VectorFieldSet from_strings(
      const std::vector<std::string>& coordinates,
      const std::vector<std::vector<std::string>>& components);

  static VectorFieldSet from_expressions(
      const std::vector<std::string>& coordinates,
      const std::vector<std::vector<ExprPtr>>& components);

  int n() const { return n_; }
  int k() const { return k_; }
  const std::vector<std::string>& coordinates() const { return coords_; }
  const ExprPtr& component(int i, int m) const { return comp_[i][m]; }
  const ExprPtr& jacobian_entry(int i, int m, int l) const {
    return jac_[i][m][l];
  }

  // X_i(q), as a column vector.
  Eigen::VectorXd eval_field(int i, const Eigen::VectorXd& q) const;

  // (DX_i)(q): row m, column l holds d(X_i)_m / dq_l.
  Eigen::MatrixXd eval_jacobian(int i, const Eigen::VectorXd& q) const;

  // Hessians of the components of X_i: result[m](l1,l2) = d^2(X_i)_m /
  // dq_l1 dq_l2.  Each slice is exactly symmetric: the (l1,l2) entry with
  // l1<=l2 is evaluated once and mirrored.
  std::vector<Eigen::MatrixXd> eval_hessian(int i,
                                            const Eigen::VectorXd& q) const;

  // Lie bracket [X_i, X_j] = DX_j[X_i] - DX_i[X_j], componentwise symbolic.
  std::vector<ExprPtr> bracket(int i, int j) const;
  Eigen::VectorXd eval_bracket(int i, int j, const Eigen::VectorXd& q) const;

 private:
  int n_ = 0;
  int k_ = 0;
  std::vector<std::string> coords_;
  std::vector<std::vector<ExprPtr>> comp_;                          // [k][n]
  std::vector<std::vector<std::vector<ExprPtr>>> jac_;              // [k][n][n]
  std::vector<std::vector<std::vector<std::vector<ExprPtr>>>> hess_;  // [k][n][n][n], l1<=l2

  void build_derivatives();
};

}  // namespace srjet
