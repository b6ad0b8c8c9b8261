#pragma once

#include <random>
#include <string>

#include "srjet/endpoint.hpp"
#include "srjet/system.hpp"

namespace srjet::testing {

inline Scenario make_scenario(SRSystem sys, Eigen::VectorXd q0, int N,
                              Eigen::VectorXd u_const, double t0 = 0.0,
                              double t1 = 1.0) {
  Scenario s;
  s.system = std::move(sys);
  s.q0 = std::move(q0);
  s.t0 = t0;
  s.t1 = t1;
  s.N = N;
  s.u = ControlGrid::constant(s.k(), N, t0, t1, u_const);
  return s;
}

inline Scenario martinet_abnormal(int N) {
  return make_scenario(builtin_system("martinet"), Eigen::Vector3d::Zero(), N,
                       (Eigen::VectorXd(2) << 0, 1).finished());
}

inline Scenario heisenberg_line(int N) {
  return make_scenario(builtin_system("heisenberg"), Eigen::Vector3d::Zero(),
                       N, (Eigen::VectorXd(2) << 1, 0).finished());
}

// Abnormal straight line with sign-indefinite kernel Gram: the second
// variation paired with dx3 is the weighted form \int (1-2t) b2^2.
inline Scenario indefinite_fixture(int N) {
  SRSystem sys;
  sys.name = "indefinite";
  sys.fields = VectorFieldSet::from_strings(
      {"x1", "x2", "x3"}, {{"1", "0", "x2^2/2"}, {"0", "1", "x1^2*x2"}});
  return make_scenario(std::move(sys), Eigen::Vector3d::Zero(), N,
                       (Eigen::VectorXd(2) << 1, 0).finished());
}

// Planar system whose second control switches off at t = 1/2: the energy
// direction stops being controllable to zero there.
inline Scenario switchoff_fixture(int N = 32) {
  SRSystem sys;
  sys.name = "planar";
  sys.fields = VectorFieldSet::from_strings({"x", "y"},
                                            {{"1", "0"}, {"0", "1"}});
  Scenario s = make_scenario(std::move(sys), Eigen::Vector2d::Zero(), N,
                             (Eigen::VectorXd(2) << 1, 1).finished());
  for (int j = N / 2; j < N; ++j) s.u.values(1, j) = 0.0;
  return s;
}

inline Scenario single_integrator(int N) {
  SRSystem sys;
  sys.name = "line";
  sys.fields = VectorFieldSet::from_strings({"x"}, {{"1"}});
  return make_scenario(std::move(sys), Eigen::VectorXd::Zero(1), N,
                       Eigen::VectorXd::Ones(1));
}

inline Eigen::MatrixXd random_du(std::mt19937& rng, int k, int N) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd du(k, N);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < N; ++j) du(i, j) = g(rng);
  return du;
}

inline std::string scenario_path(const std::string& name) {
  return std::string(SRJET_SCENARIO_DIR) + "/" + name;
}

}  // namespace srjet::testing
