#include "srjet/minjet.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace srjet {

OCPSolver::OCPSolver(GramForm g, double eps_rank, double eps_idx)
    : g_(std::move(g)), eps_rank_(eps_rank), eps_idx_(eps_idx) {
  if (g_.m_active == 0) {
    sol0_.resize(0, 0);
    return;
  }
  csvd_.compute(g_.C, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const auto& sv = csvd_.singularValues();
  crank_ = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > eps_rank_ * sv(0)) ++crank_;

  const Eigen::MatrixXd& Z = g_.kernel;
  if (Z.cols() > 0) {
    H_ = Z.transpose() * g_.Ga * Z;
    H_ = 0.5 * (H_ + H_.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H_);
    evals_ = eig.eigenvalues();
    evecs_ = eig.eigenvectors();
    // floor the eigenvalue scale by the full form: H inherits absolute
    // rounding noise of order eps * |Ga|, so a restricted form that is
    // numerically zero must not promote its own noise to a genuine eigenvalue
    scale_ = std::max(evals_.cwiseAbs().maxCoeff(),
                      g_.Ga.cwiseAbs().maxCoeff());
    int null_count = 0;
    for (int i = 0; i < evals_.size(); ++i) {
      if (evals_(i) < -eps_idx_ * scale_) psd_ = false;
      if (std::abs(evals_(i)) <= eps_idx_ * scale_) ++null_count;
    }
    sol0_.resize(g_.m_active, null_count);
    int c = 0;
    for (int i = 0; i < evals_.size(); ++i)
      if (std::abs(evals_(i)) <= eps_idx_ * scale_)
        sol0_.col(c++) = Z * evecs_.col(i);
  } else {
    sol0_.resize(g_.m_active, 0);
  }
}

OCPSolution OCPSolver::solve(const Eigen::VectorXd& v) const {
  OCPSolution sol;
  sol.v = v;
  if (g_.m_active == 0) {
    if (v.norm() > 1e-9)
      throw std::domain_error("target not reachable at this time");
    sol.du.resize(0);
    sol.multipliers = Eigen::VectorXd::Zero(v.size());
    return sol;
  }

  // minimum-norm particular solution of C du = v
  Eigen::VectorXd du_p = Eigen::VectorXd::Zero(g_.m_active);
  {
    const auto& sv = csvd_.singularValues();
    const Eigen::VectorXd t = csvd_.matrixU().transpose() * v;
    for (int i = 0; i < crank_; ++i)
      du_p += (t(i) / sv(i)) * csvd_.matrixV().col(i);
  }
  if ((g_.C * du_p - v).norm() > 1e-6 * std::max(1.0, v.norm()))
    throw std::domain_error("target not reachable at this time");

  const Eigen::MatrixXd& Z = g_.kernel;
  Eigen::VectorXd du = du_p;
  if (Z.cols() > 0) {
    const Eigen::VectorXd gv = evecs_.transpose() * (Z.transpose() * (g_.Ga * du_p));
    const double gtol = 1e-9 * std::max(1.0, gv.norm());
    Eigen::VectorXd w = Eigen::VectorXd::Zero(evals_.size());
    for (int i = 0; i < evals_.size(); ++i) {
      if (evals_(i) < -eps_idx_ * scale_) {
        sol.bounded = false;  // negative curvature on the kernel
      } else if (std::abs(evals_(i)) <= eps_idx_ * scale_) {
        if (std::abs(gv(i)) > gtol) sol.bounded = false;  // coupled flat dir
      } else {
        w(i) = -gv(i) / evals_(i);
      }
    }
    if (!sol.bounded) {
      sol.value = -std::numeric_limits<double>::infinity();
      sol.du = du_p;
      sol.multipliers = Eigen::VectorXd::Zero(v.size());
      return sol;
    }
    du += Z * (evecs_ * w);
  }

  sol.du = du;
  sol.value = du.dot(g_.Ga * du);

  // KKT multipliers: C^T mu = -2 Ga du  (least squares through the C-SVD)
  {
    const Eigen::VectorXd rhs = -2.0 * (g_.Ga * du);
    const Eigen::VectorXd t = csvd_.matrixV().transpose() * rhs;
    const auto& sv = csvd_.singularValues();
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(v.size());
    for (int i = 0; i < crank_; ++i)
      mu += (t(i) / sv(i)) * csvd_.matrixU().col(i);
    sol.multipliers = mu;
  }
  return sol;
}

QuadraticJetForm fit_value_function(const OCPSolver& solver,
                                    const Scenario& scen) {
  const GramForm& g = solver.gram();
  const int n = static_cast<int>(g.C.rows()) - 1;
  const Eigen::MatrixXd& R = g.range;
  const int d = static_cast<int>(R.cols());

  auto qmin = [&](const Eigen::VectorXd& v) -> double {
    OCPSolution s = solver.solve(v);
    if (!s.bounded)
      throw UnboundedError("value function is -inf at the probed target");
    return s.value;
  };

  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
  for (int a = 0; a < d; ++a) S(a, a) = qmin(R.col(a));
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      const double q = qmin(R.col(a) + R.col(b));
      S(a, b) = S(b, a) = 0.5 * (q - S(a, a) - S(b, b));
    }
  Eigen::MatrixXd M = R * S * R.transpose();
  M = 0.5 * (M + M.transpose()).eval();

  QuadraticJetForm jet;
  jet.adapted_frame = true;
  jet.node = g.node;
  jet.time = scen.time_at(g.node);
  jet.Phi2 = M.topLeftCorner(n, n);
  jet.xi = 2.0 * M.block(0, n, n, 1);
  jet.a2 = M(n, n);
  Eigen::VectorXd ec = Eigen::VectorXd::Zero(n + 1);
  ec(n) = 1.0;
  jet.a2_defined =
      d > 0 && (ec - R * (R.transpose() * ec)).norm() <= 1e-7;
  return jet;
}

QuadraticJetForm to_manifold_frame(const QuadraticJetForm& adapted,
                                   const AdaptedFrame& frame,
                                   const Eigen::VectorXd& psi0) {
  const int r = 2 * adapted.node;
  const Eigen::MatrixXd& L = frame.lambda1(r);
  QuadraticJetForm out = adapted;
  out.adapted_frame = false;
  out.Phi2 = L.transpose() * adapted.Phi2 * L - frame.lambda2_pair(psi0, r);
  out.Phi2 = 0.5 * (out.Phi2 + out.Phi2.transpose()).eval();
  out.xi = L.transpose() * adapted.xi;
  return out;
}

std::vector<OCPSolver> build_node_solvers(const ImpulseBasis& B,
                                          const GramTable& T, double eps_rank,
                                          double eps_idx) {
  std::vector<OCPSolver> solvers;
  const int N = B.ctx().N();
  solvers.reserve(N);
  for (int j = 1; j <= N; ++j)
    solvers.emplace_back(build_gram(B, T, j, eps_rank), eps_rank, eps_idx);
  return solvers;
}

BellmanReport bellman_monotonicity(const std::vector<OCPSolver>& solvers,
                                   const ImpulseBasis& B,
                                   const Eigen::MatrixXd& du,
                                   double eps_mono) {
  const FlowContext& ctx = B.ctx();
  const int N = ctx.N(), n = ctx.n(), k = ctx.k();
  if (static_cast<int>(solvers.size()) != N)
    throw std::invalid_argument("need one solver per node 1..N");
  const Eigen::VectorXd& psi0 = solvers.front().gram().psi0;

  VariationBundle bundle = integrate_variations(ctx.cache, du);
  AdaptedJet jet = to_adapted(ctx.frame, bundle);

  BellmanReport rep;
  rep.f.resize(N + 1);
  rep.f(0) = 0.0;
  for (int j = 1; j <= N; ++j) {
    const double cost = pair_two_jet(ctx.frame, bundle, psi0, j);
    Eigen::VectorXd v(n + 1);
    v.head(n) = jet.q1.col(j);
    v(n) = jet.c1(j);
    OCPSolution s = solvers[j - 1].solve(v);
    if (!s.bounded)
      throw UnboundedError("Q_min unbounded below along the probe");
    rep.f(j) = cost - s.value;
  }
  rep.min_decrement = std::numeric_limits<double>::infinity();
  for (int j = 0; j < N; ++j) {
    const double d = rep.f(j + 1) - rep.f(j);
    rep.min_decrement = std::min(rep.min_decrement, d);
    if (d < -eps_mono) rep.violations.push_back(ctx.scen.time_at(j + 1));
  }
  (void)k;
  return rep;
}

BellmanReport bellman_monotonicity(const ImpulseBasis& B, const GramTable& T,
                                   const Eigen::MatrixXd& du, double eps_rank,
                                   double eps_idx, double eps_mono) {
  return bellman_monotonicity(build_node_solvers(B, T, eps_rank, eps_idx), B,
                              du, eps_mono);
}

SecondOrderReport classify_second_order(
    const std::vector<QuadraticJetForm>& jets, double eps_a) {
  SecondOrderReport rep;
  double scale = 0.0;
  for (const auto& j : jets) {
    if (!j.a2_defined)
      throw std::domain_error("a2 undefined: piece is not strictly abnormal");
    rep.a2_samples.push_back(j.a2);
    scale = std::max(scale, std::abs(j.a2));
  }
  for (const auto& j : jets)
    if (std::abs(j.a2) <= eps_a * scale) rep.zero_times.push_back(j.time);
  rep.two_normal = !jets.empty() && rep.zero_times.empty();
  return rep;
}

SolutionSpaceReport solution_space_analysis(const OCPSolver& solver,
                                            const ImpulseBasis& B,
                                            const Eigen::VectorXd& v) {
  if (!solver.form_psd())
    throw std::domain_error(
        "kernel-restricted form is indefinite: no solutions exist");
  const FlowContext& ctx = B.ctx();
  const int n = ctx.n(), k = ctx.k(), N = ctx.N();
  const GramForm& g = solver.gram();
  const int node = g.node;
  const double h = ctx.scen.h();

  SolutionSpaceReport rep;
  rep.kernel_dim = static_cast<int>(g.kernel.cols());
  rep.sol_dim = static_cast<int>(solver.solution_space_zero().cols());
  rep.codim = rep.kernel_dim - rep.sol_dim;

  OCPSolution s = solver.solve(v);
  if (!s.bounded) throw UnboundedError("no minimizer: problem unbounded");

  // Prop-style orthogonality of the minimizer against zero-target solutions
  const Eigen::MatrixXd& S0 = solver.solution_space_zero();
  for (int c = 0; c < S0.cols(); ++c)
    rep.max_bilinear_residual = std::max(
        rep.max_bilinear_residual, std::abs(S0.col(c).dot(g.Ga * s.du)));

  // unpack the minimizer as a control grid and integrate its variation
  Eigen::MatrixXd du = Eigen::MatrixXd::Zero(k, N);
  for (int a = 0; a < g.m_active; ++a) du(a % k, a / k) = s.du(a);
  VariationBundle bundle = integrate_variations(ctx.cache, du);
  AdaptedJet jet = to_adapted(ctx.frame, bundle);

  // discrete covector from the KKT multipliers, transported backward by the
  // adapted evolution law
  const Eigen::VectorXd psi_tilde = -0.5 * s.multipliers;
  const double a_mult = psi_tilde(n);
  std::vector<Eigen::VectorXd> psi(node + 1);
  psi[node] = psi_tilde.head(n);
  for (int j = node - 1; j >= 0; --j) {
    Eigen::VectorXd rate = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < k; ++i)
      if (du(i, j) != 0.0)
        rate += du(i, j) * (ctx.frame.Y2(ctx.cache, i, 2 * j).transpose() * g.psi0);
    psi[j] = psi[j + 1] - h * rate;
  }

  // stationarity residual (p0 = -1) and a forward-difference consistency
  // defect of the covector law
  rep.principle_residual = Eigen::VectorXd::Zero(k);
  for (int j = 0; j <= node; ++j) {
    const int step = std::min(j, node - 1);
    const Eigen::VectorXd u = ctx.cache.control(std::max(step, 0));
    for (int i = 0; i < k; ++i) {
      const Eigen::VectorXd Y1 = ctx.frame.Y1(ctx.cache, i, 2 * j);
      const Eigen::MatrixXd Y2 = ctx.frame.Y2(ctx.cache, i, 2 * j);
      const double res = Y1.dot(psi[j]) + a_mult * u(i) -
                         g.psi0.dot(Y2 * jet.q1.col(j));
      rep.principle_residual(i) =
          std::max(rep.principle_residual(i), std::abs(res));
      rep.max_principle_residual = std::max(rep.max_principle_residual,
                                            std::abs(res));
    }
    if (j < node) {
      Eigen::VectorXd rate_next = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < k; ++i)
        if (du(i, j) != 0.0)
          rate_next += du(i, j) *
                       (ctx.frame.Y2(ctx.cache, i, 2 * (j + 1)).transpose() *
                        g.psi0);
      const Eigen::VectorXd diff = (psi[j + 1] - psi[j]) / h - rate_next;
      rep.max_transport_defect =
          std::max(rep.max_transport_defect, diff.norm());
    }
  }
  return rep;
}

}  // namespace srjet
