#include "srjet/verify.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

namespace srjet {

namespace {

Eigen::MatrixXd column_space(const Eigen::MatrixXd& A, double eps = 1e-9) {
  if (A.cols() == 0) return Eigen::MatrixXd(A.rows(), 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > eps * sv(0)) ++r;
  return svd.matrixU().leftCols(r);
}

ConditionResidual make_item(const std::string& name, double residual,
                            double tol, int dim = -1) {
  ConditionResidual it;
  it.name = name;
  it.residual = residual;
  it.tolerance = tol;
  it.pass = residual <= tol;
  it.subspace_dim = dim;
  return it;
}

}  // namespace

ResidualReport check_first_order(const FlowContext& ctx,
                                 const Eigen::MatrixXd& phi, double a1,
                                 double tol) {
  const int N = ctx.N(), k = ctx.k();
  double res = 0.0;
  for (int j = 0; j <= N; ++j) {
    const Eigen::VectorXd& q = ctx.cache.state(4 * j);
    const Eigen::VectorXd u = ctx.cache.control(std::min(j, N - 1));
    for (int i = 0; i < k; ++i) {
      const double r =
          ctx.scen.system.fields.eval_field(i, q).dot(phi.col(j)) + a1 * u(i);
      res = std::max(res, std::abs(r));
    }
  }
  Eigen::MatrixXd re = transport_covector_backward(ctx.cache, phi.col(N));
  double defect = 0.0;
  for (int j = 0; j <= N; ++j)
    defect = std::max(defect, (phi.col(j) - re.col(j)).norm());

  ResidualReport rep;
  rep.items.push_back(make_item("u_from_phi", res, tol));
  rep.items.push_back(make_item("phi_transport", defect, tol));
  return rep;
}

ResidualReport check_goh(const FlowContext& ctx, const Eigen::MatrixXd& phi,
                         double tol) {
  const int N = ctx.N(), k = ctx.k();
  double res = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j2 = i + 1; j2 < k; ++j2) {
      auto br = ctx.scen.system.fields.bracket(i, j2);
      for (int j = 0; j <= N; ++j) {
        const Eigen::VectorXd& q = ctx.cache.state(4 * j);
        double val = 0.0;
        for (int m = 0; m < ctx.n(); ++m)
          val += eval(br[m], q.data()) * phi(m, j);
        res = std::max(res, std::abs(val));
      }
    }
  ResidualReport rep;
  rep.items.push_back(make_item("goh_bracket", res, tol));
  return rep;
}

JetTable analytic_jet_table(const std::vector<std::vector<std::string>>& Phi2,
                            const std::vector<std::string>& xi,
                            const std::string& a2, const Scenario& scen,
                            int first_node) {
  const int n = scen.n();
  const std::vector<std::string> tvar = {"t"};
  JetTable table;
  table.first_node = first_node;
  table.has_analytic_derivatives = true;

  std::vector<std::vector<ExprPtr>> p(n, std::vector<ExprPtr>(n)), dp(n);
  for (int i = 0; i < n; ++i) dp[i].resize(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      p[i][j] = parse_expression(Phi2[i][j], tvar);
      dp[i][j] = differentiate(p[i][j], 0);
    }
  std::vector<ExprPtr> x(n), dx(n);
  for (int i = 0; i < n; ++i) {
    x[i] = parse_expression(xi[i], tvar);
    dx[i] = differentiate(x[i], 0);
  }
  ExprPtr a = parse_expression(a2, tvar);
  ExprPtr da = differentiate(a, 0);

  for (int node = first_node; node <= scen.N; ++node) {
    const double t = scen.time_at(node);
    QuadraticJetForm jet;
    jet.adapted_frame = false;
    jet.node = node;
    jet.time = t;
    jet.Phi2.resize(n, n);
    jet.xi.resize(n);
    Eigen::MatrixXd dP(n, n);
    Eigen::VectorXd dX(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        jet.Phi2(i, j) = eval(p[i][j], &t);
        dP(i, j) = eval(dp[i][j], &t);
      }
      jet.xi(i) = eval(x[i], &t);
      dX(i) = eval(dx[i], &t);
    }
    jet.Phi2 = 0.5 * (jet.Phi2 + jet.Phi2.transpose()).eval();
    jet.a2 = eval(a, &t);
    jet.a2_defined = true;
    table.at.push_back(jet);
    table.dPhi2.push_back(0.5 * (dP + dP.transpose()));
    table.dxi.push_back(dX);
    table.da2.push_back(eval(da, &t));
  }
  return table;
}

JetTable fitted_jet_table(std::vector<QuadraticJetForm> jets, int first_node) {
  JetTable table;
  table.first_node = first_node;
  table.at = std::move(jets);
  return table;
}

ResidualReport check_second_order(const FlowContext& ctx,
                                  const ImpulseBasis& B,
                                  const Eigen::MatrixXd& phi,
                                  const JetTable& jet,
                                  const SecondOrderTolerances& tol) {
  const int N = ctx.N(), n = ctx.n(), k = ctx.k();
  const double h = ctx.scen.h();
  const int first = jet.first_node;
  const int count = static_cast<int>(jet.at.size());

  // time derivatives of the coefficients
  auto dcoef = [&](int node, Eigen::MatrixXd& dP, Eigen::VectorXd& dX,
                   double& dA) {
    const int p = node - first;
    if (jet.has_analytic_derivatives) {
      dP = jet.dPhi2[p];
      dX = jet.dxi[p];
      dA = jet.da2[p];
      return;
    }
    int lo = p - 1, hi = p + 1;  // central, one-sided at the table ends
    if (lo < 0) lo = 0;
    if (hi > count - 1) hi = count - 1;
    const double dt = (hi - lo) * h;
    dP = (jet.at[hi].Phi2 - jet.at[lo].Phi2) / dt;
    dX = (jet.at[hi].xi - jet.at[lo].xi) / dt;
    dA = (jet.at[hi].a2 - jet.at[lo].a2) / dt;
  };

  double res_a = 0.0, res_b = 0.0, min_eig = 0.0;
  int max_dim = 0;
  double max_da2 = 0.0, a2_scale = 0.0;
  double res_evxi = 0.0, res_evphi = 0.0;

  for (int node = first; node <= N; ++node) {
    const QuadraticJetForm& J = jet.node(node);
    Eigen::MatrixXd dP;
    Eigen::VectorXd dX;
    double dA;
    dcoef(node, dP, dX, dA);
    max_da2 = std::max(max_da2, std::abs(dA));
    a2_scale = std::max(a2_scale, std::abs(J.a2));

    const int s = 4 * node;
    const int step = std::min(node, N - 1);
    const Eigen::VectorXd& q = ctx.cache.state(s);
    const Eigen::VectorXd u = ctx.cache.control(step);
    const Eigen::MatrixXd M = ctx.cache.drift_jacobian(step, s);
    const Eigen::VectorXd ph = phi.col(node);

    // (a) control stationarity
    for (int i = 0; i < k; ++i) {
      const double r =
          ctx.cache.field(i, s).dot(J.xi) + 2.0 * J.a2 * u(i);
      res_a = std::max(res_a, std::abs(r));
    }

    // first-order image basis (plain end-point map)
    const Eigen::MatrixXd Bb =
        column_space(B.b1(node).leftCols(node * k));

    // (b) linearized-state stationarity
    for (int i = 0; i < k; ++i) {
      const Eigen::VectorXd Xi = ctx.cache.field(i, s);
      const Eigen::MatrixXd Ji = ctx.cache.jac(i, s);
      for (int c = 0; c < Bb.cols(); ++c) {
        const Eigen::VectorXd b = Bb.col(c);
        const double r = 2.0 * (Ji * b).dot(ph) +
                         2.0 * Xi.dot(J.Phi2 * b) + u(i) * b.dot(J.xi);
        res_b = std::max(res_b, std::abs(r));
      }
    }

    // (d) transport laws used when a2 is constant
    for (int c = 0; c < Bb.cols(); ++c) {
      const Eigen::VectorXd b = Bb.col(c);
      res_evxi = std::max(res_evxi, std::abs(b.dot(dX) + (M * b).dot(J.xi)));
      for (int c2 = 0; c2 < Bb.cols(); ++c2) {
        const Eigen::VectorXd b2 = Bb.col(c2);
        const double r = b.dot(dP * b2) + (M * b).dot(J.Phi2 * b2) +
                         b.dot(J.Phi2 * (M * b2));
        res_evphi = std::max(res_evphi, std::abs(r));
      }
    }

    // (c) the extended second-order form on the reachable (b, c1) subspace
    Eigen::MatrixXd S = -dP - (J.Phi2 * M + M.transpose() * J.Phi2);
    for (int i = 0; i < k; ++i) {
      if (u(i) == 0.0) continue;
      const auto& H = ctx.cache.hess(i, s);
      for (int m = 0; m < n; ++m) S += u(i) * ph(m) * H[m];
    }
    const Eigen::VectorXd w = -(dX + M.transpose() * J.xi);
    Eigen::MatrixXd Omega = Eigen::MatrixXd::Zero(n + 1, n + 1);
    Omega.topLeftCorner(n, n) = 0.5 * (S + S.transpose());
    Omega.block(0, n, n, 1) = 0.5 * w;
    Omega.block(n, 0, 1, n) = 0.5 * w.transpose();
    Omega(n, n) = -dA;

    Eigen::MatrixXd ext(n + 1, node * k);
    ext.topRows(n) = B.b1(node).leftCols(node * k);
    for (int a = 0; a < node * k; ++a) ext(n, a) = B.bundle(a).c1(node);
    const Eigen::MatrixXd R = column_space(ext);
    max_dim = std::max(max_dim, static_cast<int>(R.cols()));
    if (R.cols() > 0) {
      const Eigen::MatrixXd Or = R.transpose() * Omega * R;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
          0.5 * (Or + Or.transpose()));
      min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
    }
  }

  ResidualReport rep;
  rep.items.push_back(make_item("xi_u_1", res_a, tol.stationarity));
  rep.items.push_back(make_item("Phi_b_1", res_b, tol.linearized));
  rep.items.push_back(
      make_item("2_form_positive", std::max(0.0, -min_eig), tol.form, max_dim));
  const bool a2_const = max_da2 <= 1e-10 * std::max(1.0, a2_scale);
  if (a2_const) {
    rep.items.push_back(make_item("ev_xi_1", res_evxi, tol.transport));
    rep.items.push_back(make_item("ev_Phi_2", res_evphi, tol.transport));
  }
  return rep;
}

double check_antisym(const FlowContext& ctx, const Eigen::VectorXd& psi0) {
  const int N = ctx.N(), k = ctx.k(), n = ctx.n();
  double res = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j2 = i + 1; j2 < k; ++j2) {
      auto br = ctx.scen.system.fields.bracket(i, j2);
      for (int r = 0; r <= 2 * N; ++r) {
        const Eigen::VectorXd& q = ctx.cache.state(2 * r);
        const Eigen::VectorXd Y1i = ctx.frame.Y1(ctx.cache, i, r);
        const Eigen::VectorXd Y1j = ctx.frame.Y1(ctx.cache, j2, r);
        const Eigen::MatrixXd Y2i = ctx.frame.Y2(ctx.cache, i, r);
        const Eigen::MatrixXd Y2j = ctx.frame.Y2(ctx.cache, j2, r);
        const double anti = psi0.dot(Y2j * Y1i - Y2i * Y1j);
        Eigen::VectorXd brv(n);
        for (int m = 0; m < n; ++m) brv(m) = eval(br[m], q.data());
        const double direct = psi0.dot(ctx.frame.lambda1(r) * brv);
        res = std::max(res, std::abs(anti - direct));
      }
    }
  return res;
}

}  // namespace srjet
