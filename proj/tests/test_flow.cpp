#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "srjet/flow.hpp"

using namespace srjet;
using namespace srjet::testing;

namespace {

// RK4-order fixture: xdot = u (1 + x^2), exact solution tan(t) for u = 1.
Scenario tan_fixture(int N) {
  SRSystem sys;
  sys.name = "tan";
  sys.fields = VectorFieldSet::from_strings({"x"}, {{"1+x^2"}});
  return make_scenario(std::move(sys), Eigen::VectorXd::Zero(1), N,
                       Eigen::VectorXd::Ones(1));
}

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("reference trajectories of the catalog scenarios") {
  Scenario m = martinet_abnormal(64);
  Trajectory tm = integrate_trajectory(m);
  CHECK(tm.q.col(64).isApprox(Eigen::Vector3d(0, 1, 0), 1e-14));
  CHECK(tm.energy(64) == doctest::Approx(0.5));
  // energy non-decreasing and zero at t0
  CHECK(tm.energy(0) == 0.0);
  for (int j = 0; j < 64; ++j) CHECK(tm.energy(j + 1) >= tm.energy(j));

  Scenario h = heisenberg_line(64);
  Trajectory th = integrate_trajectory(h);
  CHECK(th.q.col(64).isApprox(Eigen::Vector3d(1, 0, 0), 1e-14));

  // u == 0 keeps the state put
  Scenario z = martinet_abnormal(16);
  z.u = ControlGrid::zero(2, 16, 0, 1);
  Trajectory tz = integrate_trajectory(z);
  for (int j = 0; j <= 16; ++j) CHECK(tz.q.col(j).norm() == 0.0);
  CHECK(tz.energy(16) == 0.0);
}

TEST_CASE("RK4 is exact on the nilpotent catalog and 4th order in general") {
  // Heisenberg with u=(1,1): z stays 0 by symmetry, endpoint (1,1,0) exactly
  Scenario h = make_scenario(builtin_system("heisenberg"),
                             Eigen::Vector3d::Zero(), 16,
                             (Eigen::VectorXd(2) << 1, 1).finished());
  CHECK(integrate_trajectory(h).q.col(16).isApprox(Eigen::Vector3d(1, 1, 0),
                                                   1e-14));

  const double exact = std::tan(1.0);
  double e1 = std::abs(integrate_trajectory(tan_fixture(32)).q(0, 32) - exact);
  double e2 = std::abs(integrate_trajectory(tan_fixture(64)).q(0, 64) - exact);
  CHECK(e2 <= e1 / 8.0);  // order >= 3 gain on halving; RK4 gives ~16x
}

TEST_CASE("integration failure reports blow-up") {
  SRSystem sys;
  sys.fields = VectorFieldSet::from_strings({"x"}, {{"x^2"}});
  Scenario s = make_scenario(std::move(sys), Eigen::VectorXd::Constant(1, 2.0),
                             64, Eigen::VectorXd::Ones(1));
  CHECK_THROWS_AS(integrate_trajectory(s), IntegrationError);
}

TEST_CASE("Martinet variation closed forms") {
  Scenario s = martinet_abnormal(64);
  FlowCache cache(s);

  Eigen::MatrixXd du1 = Eigen::MatrixXd::Zero(2, 64);
  du1.row(0).setOnes();  // du = (1, 0)
  VariationBundle v1 = integrate_variations(cache, du1);
  for (int j = 0; j <= 64; ++j) {
    const double t = s.time_at(j);
    CHECK(v1.b1(0, j) == doctest::Approx(t).epsilon(1e-12));
    CHECK(v1.b1(1, j) == doctest::Approx(-t * t / 2).epsilon(1e-12));
    CHECK(std::abs(v1.b1(2, j)) <= 1e-14);
    CHECK(std::abs(v1.c1(j)) <= 1e-14);
    CHECK(v1.b2(2, j) == doctest::Approx(t * t * t / 3).epsilon(1e-12));
  }

  Eigen::MatrixXd du2 = Eigen::MatrixXd::Zero(2, 64);
  du2.row(1).setOnes();  // du = (0, 1)
  VariationBundle v2 = integrate_variations(cache, du2);
  for (int j = 0; j <= 64; ++j) {
    const double t = s.time_at(j);
    CHECK(v2.b1(0, j) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(v2.b1(1, j) == doctest::Approx(t).epsilon(1e-12));
    CHECK(v2.c1(j) == doctest::Approx(t).epsilon(1e-12));
  }

  VariationBundle v0 =
      integrate_variations(cache, Eigen::MatrixXd::Zero(2, 64));
  CHECK(v0.b1.norm() == 0.0);
  CHECK(v0.b2.norm() == 0.0);
  CHECK(v0.c1.norm() == 0.0);
  CHECK(v0.c2.norm() == 0.0);
}

TEST_CASE("c2 equals the exact step sum") {
  std::mt19937 rng(3);
  Scenario s = heisenberg_line(32);
  FlowCache cache(s);
  Eigen::MatrixXd du = random_du(rng, 2, 32);
  VariationBundle v = integrate_variations(cache, du);
  double acc = 0.0;
  const double h = s.h();
  for (int j = 0; j < 32; ++j) {
    acc += h * du.col(j).squaredNorm();
    CHECK(v.c2(j + 1) == acc);  // bit-identical accumulation
    CHECK(v.c2(j + 1) >= v.c2(j));
  }
}

TEST_CASE("finite-difference oracle agrees with the variational ODEs") {
  std::mt19937 rng(17);
  for (int which = 0; which < 2; ++which) {
    Scenario s = which == 0 ? martinet_abnormal(64) : heisenberg_line(64);
    FlowCache cache(s);
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::MatrixXd du = random_du(rng, 2, 64);
      VariationBundle v = integrate_variations(cache, du);
      JetProbe probe = finite_difference_oracle(s, du, 1e-3);
      Eigen::VectorXd first(4), second(4);
      first << v.b1.col(64), v.c1(64);
      second << v.b2.col(64), v.c2(64);
      CHECK((first - probe.first).norm() <=
            1e-5 * std::max(1.0, probe.first.norm()));
      CHECK((second - probe.second).norm() <=
            1e-4 * std::max(1.0, probe.second.norm()));
    }
    JetProbe zero = finite_difference_oracle(s, Eigen::MatrixXd::Zero(2, 64),
                                             1e-3);
    CHECK(zero.first.norm() <= 1e-12);
    CHECK(zero.second.norm() <= 1e-9);
  }
}

TEST_CASE("covector transport") {
  Scenario m = martinet_abnormal(32);
  FlowCache cm(m);
  Eigen::MatrixXd phi =
      transport_covector_backward(cm, Eigen::Vector3d(0, 0, 1));
  for (int j = 0; j <= 32; ++j)
    CHECK(phi.col(j).isApprox(Eigen::Vector3d(0, 0, 1), 1e-13));

  Scenario h = heisenberg_line(32);
  FlowCache ch(h);
  Eigen::MatrixXd phx =
      transport_covector_backward(ch, Eigen::Vector3d(1, 0, 0));
  for (int j = 0; j <= 32; ++j)
    CHECK(phx.col(j).isApprox(Eigen::Vector3d(1, 0, 0), 1e-13));

  Eigen::MatrixXd phz = transport_covector_backward(ch, Eigen::Vector3d::Zero());
  CHECK(phz.norm() == 0.0);

  // forward from phi(t0) inverts backward from its terminal value
  Eigen::MatrixXd fwd = transport_covector_forward(ch, Eigen::Vector3d(1, 2, 3));
  Eigen::MatrixXd back = transport_covector_backward(ch, fwd.col(32));
  CHECK((fwd - back).norm() <= 1e-12);
}

TEST_CASE("abnormal pairing is conserved along Martinet") {
  std::mt19937 rng(5);
  Scenario s = martinet_abnormal(64);
  FlowCache cache(s);
  Eigen::MatrixXd phi =
      transport_covector_backward(cache, Eigen::Vector3d(0, 0, 1));
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd du = random_du(rng, 2, 64);
    VariationBundle v = integrate_variations(cache, du);
    for (int j = 0; j <= 64; ++j)
      CHECK(std::abs(v.b1.col(j).dot(phi.col(j))) <= 1e-8);
  }
}

TEST_CASE("adapted frame basics") {
  // u == 0: identity frame
  Scenario z = heisenberg_line(8);
  z.u = ControlGrid::zero(2, 8, 0, 1);
  FlowCache cz(z);
  AdaptedFrame fz(cz);
  for (int r = 0; r <= 16; ++r) {
    CHECK(fz.lambda1(r).isApprox(Eigen::Matrix3d::Identity(), 1e-15));
    for (const auto& l2 : fz.lambda2(r)) CHECK(l2.norm() == 0.0);
  }

  // Martinet: lambda1(t) = I + t * (dx -> -dy row correction from DX2)
  Scenario m = martinet_abnormal(32);
  FlowCache cm(m);
  AdaptedFrame fm(cm);
  for (int r = 0; r <= 64; ++r) {
    const double t = r * m.h() / 2.0;
    Eigen::Matrix3d expected = Eigen::Matrix3d::Identity();
    expected(1, 0) = t;
    CHECK(fm.lambda1(r).isApprox(expected, 1e-12));
  }
  CHECK(fm.min_abs_det() >= 1e-6);

  // lambda2 paired with dz is -t dx (x) dx
  Eigen::MatrixXd l2z = fm.lambda2_pair(Eigen::Vector3d(0, 0, 1), 64);
  Eigen::Matrix3d expect2 = Eigen::Matrix3d::Zero();
  expect2(0, 0) = -1.0;
  CHECK(l2z.isApprox(expect2, 1e-12));
}

TEST_CASE("frame consistency: lambda1 b1 vs direct characteristic flow") {
  std::mt19937 rng(23);
  for (int which = 0; which < 2; ++which) {
    Scenario s = which == 0 ? martinet_abnormal(32) : heisenberg_line(32);
    FlowCache cache(s);
    AdaptedFrame frame(cache);
    Eigen::MatrixXd du = random_du(rng, 2, 32);
    VariationBundle v = integrate_variations(cache, du);

    // integrate q1' = sum_i du_i(t) Y1_i(t) with RK4 on the half grid
    Eigen::VectorXd q1 = Eigen::VectorXd::Zero(3);
    for (int j = 0; j < 32; ++j) {
      auto rhs = [&](int r) {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(3);
        for (int i = 0; i < 2; ++i)
          f += du(i, j) * frame.Y1(cache, i, r);
        return f;
      };
      const double h = s.h();
      Eigen::VectorXd k1 = rhs(2 * j), k2 = rhs(2 * j + 1),
                      k3 = rhs(2 * j + 1), k4 = rhs(2 * j + 2);
      q1 += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      Eigen::VectorXd via_frame = frame.lambda1(2 * (j + 1)) * v.b1.col(j + 1);
      CHECK((q1 - via_frame).norm() <= 1e-6);
    }
  }
}

TEST_CASE("adapted jets and the two-jet pairing") {
  Scenario s = martinet_abnormal(64);
  FlowContext ctx(s);

  VariationBundle zero =
      integrate_variations(ctx.cache, Eigen::MatrixXd::Zero(2, 64));
  AdaptedJet jz = to_adapted(ctx.frame, zero);
  CHECK(jz.q1.norm() == 0.0);
  CHECK(jz.q2.norm() == 0.0);

  Eigen::MatrixXd du = Eigen::MatrixXd::Zero(2, 64);
  du.row(0).setOnes();
  VariationBundle v = integrate_variations(ctx.cache, du);
  AdaptedJet j = to_adapted(ctx.frame, v);
  CHECK(j.q1.col(0).norm() == 0.0);
  CHECK(j.q1.col(64).isApprox(ctx.frame.lambda1(2 * 64) * v.b1.col(64), 1e-13));

  // <q2(1), dz> = b2_z(1) - b1_x(1)^2 = 1/3 - 1 on the closed forms
  const Eigen::Vector3d psi0(0, 0, 1);
  const double paired = pair_two_jet(ctx.frame, v, psi0, 64);
  CHECK(paired == doctest::Approx(1.0 / 3.0 - 1.0).epsilon(1e-10));
  CHECK(paired == doctest::Approx(psi0.dot(j.q2.col(64))).epsilon(1e-12));
}

TEST_CASE("dense trajectory output interpolates the nodes") {
  Scenario s = heisenberg_line(16);
  Trajectory t = integrate_trajectory(s);
  for (int j = 0; j <= 16; ++j)
    CHECK(t.state_at(s.time_at(j)).isApprox(t.q.col(j), 1e-12));
  CHECK(t.state_at(0.5 + 0.25 * s.h())(0) ==
        doctest::Approx(0.5 + 0.25 * s.h()).epsilon(1e-10));
}

}  // TEST_SUITE
