#include "srjet/vector_field.hpp"

namespace srjet {

VectorFieldSet VectorFieldSet::from_strings(
    const std::vector<std::string>& coordinates,
    const std::vector<std::vector<std::string>>& components) {
  std::vector<std::vector<ExprPtr>> parsed;
  parsed.reserve(components.size());
  for (const auto& field : components) {
    std::vector<ExprPtr> row;
    row.reserve(field.size());
    for (const auto& src : field)
      row.push_back(parse_expression(src, coordinates));
    parsed.push_back(std::move(row));
  }
  return from_expressions(coordinates, parsed);
}

VectorFieldSet VectorFieldSet::from_expressions(
    const std::vector<std::string>& coordinates,
    const std::vector<std::vector<ExprPtr>>& components) {
  VectorFieldSet F;
  F.n_ = static_cast<int>(coordinates.size());
  F.k_ = static_cast<int>(components.size());
  if (F.k_ <= 0 || F.n_ <= 0 || F.k_ > F.n_)
    throw std::invalid_argument("vector field set needs 0 < k <= n");
  for (const auto& field : components)
    if (static_cast<int>(field.size()) != F.n_)
      throw std::invalid_argument("field component count does not match n");
  F.coords_ = coordinates;
  F.comp_ = components;
  F.build_derivatives();
  return F;
}

void VectorFieldSet::build_derivatives() {
  jac_.assign(k_, {});
  hess_.assign(k_, {});
  for (int i = 0; i < k_; ++i) {
    jac_[i].assign(n_, std::vector<ExprPtr>(n_));
    hess_[i].assign(n_, std::vector<std::vector<ExprPtr>>(
                            n_, std::vector<ExprPtr>(n_)));
    for (int m = 0; m < n_; ++m) {
      for (int l = 0; l < n_; ++l)
        jac_[i][m][l] = differentiate(comp_[i][m], l);
      for (int l1 = 0; l1 < n_; ++l1)
        for (int l2 = l1; l2 < n_; ++l2)
          hess_[i][m][l1][l2] = differentiate(jac_[i][m][l1], l2);
    }
  }
}

Eigen::VectorXd VectorFieldSet::eval_field(int i,
                                           const Eigen::VectorXd& q) const {
  Eigen::VectorXd out(n_);
  for (int m = 0; m < n_; ++m) out(m) = eval(comp_[i][m], q.data());
  return out;
}

Eigen::MatrixXd VectorFieldSet::eval_jacobian(int i,
                                              const Eigen::VectorXd& q) const {
  Eigen::MatrixXd out(n_, n_);
  for (int m = 0; m < n_; ++m)
    for (int l = 0; l < n_; ++l) out(m, l) = eval(jac_[i][m][l], q.data());
  return out;
}

std::vector<Eigen::MatrixXd> VectorFieldSet::eval_hessian(
    int i, const Eigen::VectorXd& q) const {
  std::vector<Eigen::MatrixXd> out(n_, Eigen::MatrixXd(n_, n_));
  for (int m = 0; m < n_; ++m)
    for (int l1 = 0; l1 < n_; ++l1)
      for (int l2 = l1; l2 < n_; ++l2) {
        double v = eval(hess_[i][m][l1][l2], q.data());
        out[m](l1, l2) = v;
        out[m](l2, l1) = v;
      }
  return out;
}

std::vector<ExprPtr> VectorFieldSet::bracket(int i, int j) const {
  std::vector<ExprPtr> out(n_);
  for (int m = 0; m < n_; ++m) {
    ExprPtr acc = constant(0.0);
    for (int l = 0; l < n_; ++l) {
      acc = add(acc, mul(comp_[i][l], jac_[j][m][l]));
      acc = sub(acc, mul(comp_[j][l], jac_[i][m][l]));
    }
    out[m] = acc;
  }
  return out;
}

Eigen::VectorXd VectorFieldSet::eval_bracket(int i, int j,
                                             const Eigen::VectorXd& q) const {
  auto br = bracket(i, j);
  Eigen::VectorXd out(n_);
  for (int m = 0; m < n_; ++m) out(m) = eval(br[m], q.data());
  return out;
}

}  // namespace srjet
