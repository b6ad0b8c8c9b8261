#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "srjet/verify.hpp"

using namespace srjet;
using namespace srjet::testing;

namespace {

Eigen::MatrixXd constant_covector(const Eigen::VectorXd& phi, int N) {
  return phi * Eigen::RowVectorXd::Ones(N + 1);
}

JetTable martinet_closed_forms(const Scenario& scen, int first_node = 1) {
  return analytic_jet_table({{"0", "0", "0"}, {"0", "1/t", "0"}, {"0", "0", "0"}},
                            {"0", "-2/t", "0"}, "1/t", scen, first_node);
}

// fitted manifold-frame jets on the tail [N/2, N] of the grid
JetTable martinet_fitted_tail(const FlowContext& ctx, const ImpulseBasis& B) {
  const int N = ctx.N();
  const Eigen::Vector3d psi0(0, 0, 1);
  GramTable T(B, psi0);
  std::vector<OCPSolver> solvers = build_node_solvers(B, T);
  std::vector<QuadraticJetForm> jets;
  for (int j = N / 2; j <= N; ++j) {
    QuadraticJetForm adapted = fit_value_function(solvers[j - 1], ctx.scen);
    REQUIRE(adapted.a2_defined);
    jets.push_back(to_manifold_frame(adapted, ctx.frame, psi0));
  }
  return fitted_jet_table(std::move(jets), N / 2);
}

}  // namespace

TEST_SUITE("verify") {

TEST_CASE("first-order residuals") {
  {
    FlowContext ctx(martinet_abnormal(32));
    ResidualReport rep = check_first_order(
        ctx, constant_covector(Eigen::Vector3d(0, 0, 1), 32), 0.0);
    CHECK(rep.all_pass());
    CHECK(rep.find("u_from_phi")->residual <= 1e-9);
    CHECK(rep.find("phi_transport")->residual <= 1e-9);
  }
  {
    FlowContext ctx(heisenberg_line(32));
    ResidualReport rep = check_first_order(
        ctx, constant_covector(Eigen::Vector3d(1, 0, 0), 32), -1.0);
    CHECK(rep.all_pass());
    CHECK(rep.find("u_from_phi")->residual <= 1e-9);
  }
  {
    // a generic covector is not adjoint
    std::mt19937 rng(53);
    std::normal_distribution<double> g(0.0, 1.0);
    FlowContext ctx(martinet_abnormal(32));
    Eigen::Vector3d phi(g(rng), g(rng), g(rng));
    phi.normalize();
    ResidualReport rep =
        check_first_order(ctx, constant_covector(phi, 32), 0.0);
    CHECK_FALSE(rep.all_pass());
    CHECK(rep.find("u_from_phi")->residual > 0.1);
  }
}

TEST_CASE("Goh condition") {
  {
    FlowContext ctx(martinet_abnormal(32));
    ResidualReport rep =
        check_goh(ctx, constant_covector(Eigen::Vector3d(0, 0, 1), 32));
    CHECK(rep.all_pass());
    CHECK(rep.find("goh_bracket")->residual <= 1e-10);
  }
  {
    // [X1,X2] = -dy + x dz pairs to -1 against dy
    FlowContext ctx(martinet_abnormal(32));
    ResidualReport rep =
        check_goh(ctx, constant_covector(Eigen::Vector3d(0, 1, 0), 32));
    CHECK_FALSE(rep.all_pass());
    CHECK(rep.find("goh_bracket")->residual == doctest::Approx(1.0));
  }
  {
    // k = 1: no pairs, vacuously zero
    FlowContext ctx(single_integrator(8));
    ResidualReport rep =
        check_goh(ctx, constant_covector(Eigen::VectorXd::Ones(1), 8));
    CHECK(rep.all_pass());
    CHECK(rep.find("goh_bracket")->residual == 0.0);
  }
}

TEST_CASE("second-order residuals with the analytic closed forms") {
  FlowContext ctx(martinet_abnormal(64));
  ImpulseBasis B(ctx);
  const Eigen::MatrixXd phi = constant_covector(Eigen::Vector3d(0, 0, 1), 64);
  JetTable jet = martinet_closed_forms(ctx.scen);
  ResidualReport rep = check_second_order(ctx, B, phi, jet);
  CHECK(rep.all_pass());
  CHECK(rep.find("xi_u_1")->residual <= 1e-6);
  CHECK(rep.find("Phi_b_1")->residual <= 1e-6);
  // the restricted form is a perfect square and never dips below zero
  CHECK(rep.find("2_form_positive")->residual <= 1e-8);
  CHECK(rep.find("2_form_positive")->subspace_dim >= 1);
}

TEST_CASE("zero jet passes on Martinet, a perturbed xi does not") {
  FlowContext ctx(martinet_abnormal(32));
  ImpulseBasis B(ctx);
  const Eigen::MatrixXd phi = constant_covector(Eigen::Vector3d(0, 0, 1), 32);
  {
    // all coefficients zero: every second-order term vanishes along x == 0,
    // and the Hessian block of the 2-form is the positive dx (x) dx
    JetTable zero = analytic_jet_table(
        {{"0", "0", "0"}, {"0", "0", "0"}, {"0", "0", "0"}}, {"0", "0", "0"},
        "0", ctx.scen);
    ResidualReport rep = check_second_order(ctx, B, phi, zero);
    CHECK(rep.find("xi_u_1")->residual <= 1e-9);
    CHECK(rep.find("Phi_b_1")->residual <= 1e-9);
    CHECK(rep.find("2_form_positive")->residual <= 1e-10);
  }
  {
    // xi = dy couples to the active control: <X2, dy> = 1 - x = 1
    JetTable bad = analytic_jet_table(
        {{"0", "0", "0"}, {"0", "0", "0"}, {"0", "0", "0"}}, {"0", "1", "0"},
        "0", ctx.scen);
    ResidualReport rep = check_second_order(ctx, B, phi, bad);
    CHECK_FALSE(rep.all_pass());
    CHECK(rep.find("xi_u_1")->residual == doctest::Approx(1.0));
  }
}

TEST_CASE("second-order residuals with the fitted jet") {
  FlowContext ctx(martinet_abnormal(64));
  ImpulseBasis B(ctx);
  const Eigen::MatrixXd phi = constant_covector(Eigen::Vector3d(0, 0, 1), 64);
  JetTable jet = martinet_fitted_tail(ctx, B);
  const double h = ctx.scen.h();
  SecondOrderTolerances tol;
  tol.stationarity = tol.linearized = tol.form = tol.transport = 2.5 * h;
  ResidualReport rep = check_second_order(ctx, B, phi, jet, tol);
  CHECK(rep.find("xi_u_1")->residual <= 5e-2);
  CHECK(rep.find("Phi_b_1")->residual <= 5e-2);
  CHECK(rep.find("xi_u_1")->pass);
  CHECK(rep.find("Phi_b_1")->pass);
  // the difference-quotient a2 errors keep the form check advisory on
  // fitted data; it must still stay within the O(h) band
  CHECK(rep.find("2_form_positive")->residual <= 2.5 * h);
}

TEST_CASE("tolerance gating is monotone") {
  FlowContext ctx(martinet_abnormal(32));
  ImpulseBasis B(ctx);
  const Eigen::MatrixXd phi = constant_covector(Eigen::Vector3d(0, 0, 1), 32);
  JetTable jet = martinet_fitted_tail(ctx, B);

  SecondOrderTolerances tight;
  tight.stationarity = tight.linearized = tight.form = tight.transport = 1e-12;
  SecondOrderTolerances loose;
  loose.stationarity = loose.linearized = loose.form = loose.transport = 1.0;

  ResidualReport a = check_second_order(ctx, B, phi, jet, tight);
  ResidualReport b = check_second_order(ctx, B, phi, jet, loose);
  REQUIRE(a.items.size() == b.items.size());
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    // residual values do not depend on the gate
    CHECK(a.items[i].residual == b.items[i].residual);
    // loosening never flips pass -> fail
    if (a.items[i].pass) CHECK(b.items[i].pass);
  }
}

TEST_CASE("antisymmetrized second-order frame matches the bracket") {
  {
    FlowContext ctx(martinet_abnormal(32));
    CHECK(check_antisym(ctx, Eigen::Vector3d(0, 0, 1)) <= 1e-8);
  }
  {
    FlowContext ctx(heisenberg_line(32));
    CHECK(check_antisym(ctx, Eigen::Vector3d(0, 0, 1)) <= 1e-8);
  }
}

}  // TEST_SUITE
