#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "srjet/vector_field.hpp"

namespace srjet {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Piecewise-constant control samples on a uniform grid over [t0,t1].
struct ControlGrid {
  int k = 0;
  int N = 0;
  double t0 = 0.0, t1 = 1.0;
  Eigen::MatrixXd values;  // k x N, column j is the control on step j

  double h() const { return (t1 - t0) / N; }
  static ControlGrid constant(int k, int N, double t0, double t1,
                              const Eigen::VectorXd& u);
  static ControlGrid zero(int k, int N, double t0, double t1);
};

// A sub-Riemannian system: orthonormal fields X_1..X_k on R^n in one chart.
struct SRSystem {
  std::string name;
  VectorFieldSet fields;
};

// Returns a catalog system.  Throws ConfigError listing the available names.
SRSystem builtin_system(const std::string& name);

struct Scenario {
  SRSystem system;
  Eigen::VectorXd q0;
  double t0 = 0.0, t1 = 1.0;
  int N = 0;
  ControlGrid u;

  int n() const { return system.fields.n(); }
  int k() const { return system.fields.k(); }
  double h() const { return (t1 - t0) / N; }
  double time_at(int j) const { return t0 + j * h(); }
};

// Loads a scenario from a JSON document (text).  Accepts a builtin system
// name or inline field expressions, q0, t0/t1, N, and a control given as a
// constant k-vector, a named profile ("zero"), or k arrays of N samples.
Scenario load_scenario_text(const std::string& json_text);
Scenario load_scenario_file(const std::string& path);

// Round-trip serialization; load(serialize(s)) is an identical scenario.
std::string serialize_scenario(const Scenario& s);

// Checks that the k fields are linearly independent at q (numerical rank).
bool fields_independent_at(const SRSystem& sys, const Eigen::VectorXd& q,
                           double tol = 1e-9);

}  // namespace srjet
