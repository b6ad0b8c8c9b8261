#include "srjet/endpoint.hpp"

#include <Eigen/SVD>

namespace srjet {

namespace {

// orthonormal basis of the column space, relative singular-value cutoff
Eigen::MatrixXd column_space(const Eigen::MatrixXd& A, double eps) {
  if (A.cols() == 0) return Eigen::MatrixXd(A.rows(), 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > eps * sv(0)) ++r;
  return svd.matrixU().leftCols(r);
}

}  // namespace

ImpulseBasis::ImpulseBasis(const FlowContext& ctx) : ctx_(&ctx) {
  k_ = ctx.k();
  n_ = ctx.n();
  N_ = ctx.N();
  m_ = k_ * N_;
  bundles_.reserve(m_);
  for (int a = 0; a < m_; ++a) {
    Eigen::MatrixXd du = Eigen::MatrixXd::Zero(k_, N_);
    du(field_of(a), step_of(a)) = 1.0;
    bundles_.push_back(integrate_variations(ctx.cache, du));
  }
  q1t_.resize(N_ + 1);
  b1_.resize(N_ + 1);
  for (int j = 0; j <= N_; ++j) {
    q1t_[j].resize(n_ + 1, m_);
    b1_[j].resize(n_, m_);
    const Eigen::MatrixXd& l1 = ctx.frame.lambda1(2 * j);
    for (int a = 0; a < m_; ++a) {
      b1_[j].col(a) = bundles_[a].b1.col(j);
      q1t_[j].col(a).head(n_) = l1 * bundles_[a].b1.col(j);
      q1t_[j](n_, a) = bundles_[a].c1(j);
    }
  }
}

Eigen::MatrixXd ImpulseBasis::impulse(int a) const {
  Eigen::MatrixXd du = Eigen::MatrixXd::Zero(k_, N_);
  du(field_of(a), step_of(a)) = 1.0;
  return du;
}

ReachableBasis reachable_spaces(const ImpulseBasis& B, double eps_rank) {
  const int N = B.ctx().N();
  ReachableBasis out;
  out.dim.resize(N + 1);
  out.basis.resize(N + 1);
  for (int j = 0; j <= N; ++j) {
    out.basis[j] = column_space(B.active_q1tilde(j), eps_rank);
    out.dim[j] = static_cast<int>(out.basis[j].cols());
  }
  return out;
}

FirstOrderReport classify_first_order(const ImpulseBasis& B, double eps_rank) {
  const int n = B.ctx().n();
  const int N = B.ctx().N();
  const Eigen::MatrixXd& A = B.q1tilde(N);  // (n+1) x m terminal map

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  FirstOrderReport rep;
  rep.rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > eps_rank * sv(0)) ++rep.rank;
  rep.corank = n + 1 - rep.rank;

  const Eigen::MatrixXd range = svd.matrixU().leftCols(rep.rank);
  Eigen::VectorXd ec = Eigen::VectorXd::Zero(n + 1);
  ec(n) = 1.0;
  rep.cost_direction_reachable =
      (ec - range * (range.transpose() * ec)).norm() <= 1e-7;

  if (rep.corank == 0) {
    rep.cls = ExtremalClass::NotExtremal;
    return rep;
  }

  const Eigen::MatrixXd Z = svd.matrixU().rightCols(rep.corank);
  const Eigen::RowVectorXd w = Z.row(n);  // energy components of the null basis

  if (w.norm() > eps_rank) {
    rep.has_normal_certificate = true;
    Eigen::VectorXd psi = Z * w.transpose();  // null vector, energy comp |w|^2
    rep.normal_psi = -psi / psi(n);           // scale so a1 = -1
  }

  // abnormal candidates: null vectors with zero energy component
  Eigen::MatrixXd abn;
  if (!rep.has_normal_certificate) {
    abn = Z;
  } else {
    // kernel of the row w inside span(Z)
    Eigen::JacobiSVD<Eigen::MatrixXd> wsvd(w, Eigen::ComputeFullV);
    abn = Z * wsvd.matrixV().rightCols(rep.corank - 1);
  }
  // clean the (tiny) energy components and renormalize
  for (int c = 0; c < abn.cols(); ++c) {
    abn(n, c) = 0.0;
    abn.col(c).normalize();
  }
  rep.abnormal_psi0 = abn;

  rep.cls = abn.cols() > 0 ? ExtremalClass::Abnormal : ExtremalClass::Normal;
  rep.strictly_abnormal =
      abn.cols() > 0 && rep.cost_direction_reachable;

  for (int c = 0; c < abn.cols(); ++c) {
    Eigen::MatrixXd phi(n, N + 1);
    const Eigen::VectorXd psi0 = abn.col(c).head(n);
    for (int j = 0; j <= N; ++j)
      phi.col(j) = B.ctx().frame.lambda1(2 * j).transpose() * psi0;
    rep.phi.push_back(phi);
  }
  return rep;
}

std::vector<double> controllability_divisions(const ImpulseBasis& B,
                                              double eps_rank) {
  const int N = B.ctx().N();
  const int k = B.ctx().k();
  const Eigen::MatrixXd& T = B.q1tilde(N);  // everything expressed at t1
  std::vector<double> out;
  bool prev_fail = false;
  for (int j = 1; j < N; ++j) {
    const Eigen::MatrixXd fwd = column_space(T.leftCols(j * k), eps_rank);
    const Eigen::MatrixXd bwd =
        column_space(T.rightCols((N - j) * k), eps_rank);
    double defect = 0.0;
    for (int c = 0; c < fwd.cols(); ++c) {
      const Eigen::VectorXd v = fwd.col(c);
      defect = std::max(defect, (v - bwd * (bwd.transpose() * v)).norm());
    }
    // the last couple of nodes have fewer remaining impulse columns than
    // the forward dimension; such failures say nothing about the continuum
    // system (whose tail controls stay infinite-dimensional), so only count
    // failures the column budget cannot explain
    const bool fail =
        defect > 1e-7 && (N - j) * k >= static_cast<int>(fwd.cols());
    if (fail && !prev_fail) out.push_back(B.ctx().scen.time_at(j));
    prev_fail = fail;
  }
  return out;
}

}  // namespace srjet
