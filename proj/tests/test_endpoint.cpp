#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"

using namespace srjet;
using namespace srjet::testing;

TEST_SUITE("endpoint") {

TEST_CASE("Martinet first-order classification") {
  FlowContext ctx(martinet_abnormal(64));
  ImpulseBasis B(ctx);
  FirstOrderReport rep = classify_first_order(B);

  CHECK(rep.rank == 3);
  CHECK(rep.corank == 1);
  CHECK(rep.cls == ExtremalClass::Abnormal);
  CHECK(rep.strictly_abnormal);
  CHECK(rep.cost_direction_reachable);
  REQUIRE(rep.abnormal_psi0.cols() == 1);
  // covector cosine-similar to dz
  Eigen::Vector3d psi0 = rep.abnormal_psi0.col(0).head(3);
  CHECK(std::abs(psi0(2)) / psi0.norm() >= 1.0 - 1e-8);
  // the manifold adjoint curve is constant dz (up to sign)
  REQUIRE(rep.phi.size() == 1);
  const double sign = psi0(2) > 0 ? 1.0 : -1.0;
  for (int j = 0; j <= 64; ++j)
    CHECK((sign * rep.phi[0].col(j) - Eigen::Vector3d(0, 0, 1)).norm() <=
          1e-10);
}

TEST_CASE("classification is stable across grid size and rank tolerance") {
  FirstOrderReport coarse, fine;
  {
    FlowContext ctx(martinet_abnormal(4));
    ImpulseBasis B(ctx);
    coarse = classify_first_order(B);
  }
  {
    FlowContext ctx(martinet_abnormal(64));
    ImpulseBasis B(ctx);
    fine = classify_first_order(B);
    for (double eps : {1e-10, 1e-8, 1e-7}) {
      FirstOrderReport r = classify_first_order(B, eps);
      CHECK(r.rank == 3);
      CHECK(r.cls == ExtremalClass::Abnormal);
      CHECK(r.strictly_abnormal);
    }
  }
  CHECK(coarse.rank == fine.rank);
  CHECK(coarse.corank == fine.corank);
  CHECK(coarse.cls == fine.cls);
}

TEST_CASE("Heisenberg straight line is a normal extremal (rank 3)") {
  // b1_x == c1 identically for u=(1,0), so the extended differential has
  // rank 3 with the normal certificate dx - dE, and no abnormal covector
  FlowContext ctx(heisenberg_line(16));
  ImpulseBasis B(ctx);
  FirstOrderReport rep = classify_first_order(B);
  CHECK(rep.rank == 3);
  CHECK(rep.corank == 1);
  CHECK(rep.cls == ExtremalClass::Normal);
  CHECK(rep.abnormal_psi0.cols() == 0);
  CHECK(rep.has_normal_certificate);
  // scaled so the energy component is -1: psi = (1, 0, 0 | -1)
  CHECK(rep.normal_psi.isApprox(
      (Eigen::VectorXd(4) << 1, 0, 0, -1).finished(), 1e-8));
}

TEST_CASE("single integrator straight line is normal") {
  // b1 = int du = c1 identically for xdot = u with u == 1, so the extended
  // rank is 1 (not 2) at every N -- the straight line is a normal geodesic
  // with certificate dx - dE
  for (int N : {1, 8}) {
    FlowContext ctx(single_integrator(N));
    ImpulseBasis B(ctx);
    FirstOrderReport rep = classify_first_order(B);
    CHECK(rep.rank == 1);
    CHECK(rep.corank == 1);
    CHECK(rep.cls == ExtremalClass::Normal);
    CHECK(rep.abnormal_psi0.cols() == 0);
    CHECK(rep.normal_psi.isApprox((Eigen::VectorXd(2) << 1, -1).finished(),
                                  1e-9));
  }
}

TEST_CASE("reachable space filtration on Martinet") {
  FlowContext ctx(martinet_abnormal(32));
  ImpulseBasis B(ctx);
  ReachableBasis R = reachable_spaces(B);

  CHECK(R.dim[0] == 0);
  CHECK(R.dim[1] == 2);  // only the k = 2 impulses of the first step
  for (int j = 2; j <= 32; ++j) CHECK(R.dim[j] == 3);
  for (int j = 0; j < 32; ++j) CHECK(R.dim[j + 1] >= R.dim[j]);

  // the adapted q1_z direction is never reached
  for (int j = 1; j <= 32; ++j) {
    Eigen::VectorXd dz = Eigen::VectorXd::Zero(4);
    dz(2) = 1.0;
    CHECK((R.basis[j].transpose() * dz).norm() <= 1e-9);
  }
}

TEST_CASE("terminal variations are linear in the control") {
  std::mt19937 rng(29);
  FlowContext ctx(martinet_abnormal(24));
  FlowCache& cache = ctx.cache;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd du = random_du(rng, 2, 24), dv = random_du(rng, 2, 24);
    const double a = 0.7, b = -1.3;
    VariationBundle vu = integrate_variations(cache, du);
    VariationBundle vv = integrate_variations(cache, dv);
    VariationBundle vw = integrate_variations(cache, a * du + b * dv);
    CHECK((vw.b1.col(24) - a * vu.b1.col(24) - b * vv.b1.col(24)).norm() <=
          1e-9);
    CHECK(std::abs(vw.c1(24) - a * vu.c1(24) - b * vv.c1(24)) <= 1e-9);
  }
}

TEST_CASE("abnormal covector annihilates the first-order frame fields") {
  FlowContext ctx(martinet_abnormal(32));
  const Eigen::Vector3d psi0(0, 0, 1);
  for (int r = 0; r <= 64; ++r)
    for (int i = 0; i < 2; ++i)
      CHECK(std::abs(ctx.frame.Y1(ctx.cache, i, r).dot(psi0)) <= 1e-8);
}

TEST_CASE("controllability divisions") {
  {
    FlowContext ctx(martinet_abnormal(32));
    ImpulseBasis B(ctx);
    CHECK(controllability_divisions(B).empty());
  }
  {
    FlowContext ctx(single_integrator(8));
    ImpulseBasis B(ctx);
    CHECK(controllability_divisions(B).empty());
  }
  {
    FlowContext ctx(switchoff_fixture(32));
    ImpulseBasis B(ctx);
    std::vector<double> div = controllability_divisions(B);
    REQUIRE(div.size() == 1);
    CHECK(div[0] == doctest::Approx(0.5));
  }
}

}  // TEST_SUITE
