#pragma once

#include <string>
#include <vector>

#include "srjet/minjet.hpp"

namespace srjet {

struct ConditionResidual {
  std::string name;
  double residual = 0.0;   // max-over-grid residual; for forms, the negative
                           // part of the minimal restricted eigenvalue
  double tolerance = 0.0;
  bool pass = false;
  int subspace_dim = -1;   // restriction dimension, when applicable
};

struct ResidualReport {
  std::vector<ConditionResidual> items;
  bool all_pass() const {
    for (const auto& it : items)
      if (!it.pass) return false;
    return true;
  }
  const ConditionResidual* find(const std::string& name) const {
    for (const auto& it : items)
      if (it.name == name) return &it;
    return nullptr;
  }
};

// |<X_i(q), phi> + a1 u_i| over the grid, plus the defect between the stored
// covector and a fresh backward transport from its terminal value.
ResidualReport check_first_order(const FlowContext& ctx,
                                 const Eigen::MatrixXd& phi, double a1,
                                 double tol = 1e-9);

// |<[X_i, X_j](q), phi>| over the grid (symbolic brackets).
ResidualReport check_goh(const FlowContext& ctx, const Eigen::MatrixXd& phi,
                         double tol = 1e-10);

// Quadratic value-function coefficients over the grid (manifold frame),
// optionally with exact time derivatives (closed-form jets).
struct JetTable {
  int first_node = 1;  // 1/t-type coefficients are skipped at t = t0
  std::vector<QuadraticJetForm> at;  // node first_node .. N
  bool has_analytic_derivatives = false;
  std::vector<Eigen::MatrixXd> dPhi2;
  std::vector<Eigen::VectorXd> dxi;
  std::vector<double> da2;

  const QuadraticJetForm& node(int j) const { return at[j - first_node]; }
};

// Builds a JetTable from coefficient expressions in the time variable "t",
// differentiated symbolically.
JetTable analytic_jet_table(const std::vector<std::vector<std::string>>& Phi2,
                            const std::vector<std::string>& xi,
                            const std::string& a2, const Scenario& scen,
                            int first_node = 1);

// Collects numerically fitted jets (manifold frame, one per node) into a
// table; time derivatives by central differences inside check_second_order.
JetTable fitted_jet_table(std::vector<QuadraticJetForm> jets, int first_node);

struct SecondOrderTolerances {
  double stationarity = 1e-6;   // (a) control stationarity of xi / a2
  double linearized = 1e-6;     // (b) linearized-state stationarity
  double form = 1e-8;           // (c) allowed negative part of the 2-form
  double transport = 1e-6;      // (d) a2-constant transport laws
};

// Second-order residual suite:
//  (a) <X_i, xi> + 2 a2 u_i
//  (b) 2<DX_i[b], phi> + 2 Phi2[X_i, b] + u_i <b, xi> over the first-order
//      image basis
//  (c) minimal eigenvalue of the extended second-order form on the reachable
//      (b, c1) subspace
//  (d) when a2 is constant: the xi / Phi2 transport laws
ResidualReport check_second_order(const FlowContext& ctx,
                                  const ImpulseBasis& B,
                                  const Eigen::MatrixXd& phi,
                                  const JetTable& jet,
                                  const SecondOrderTolerances& tol = {});

// Antisymmetrized second-order frame fields against the symbolic bracket:
// max |<Y2_j(t, Y1_i) - Y2_i(t, Y1_j), psi0> - <lambda1 [X_i,X_j](q), psi0>|.
double check_antisym(const FlowContext& ctx, const Eigen::VectorXd& psi0);

}  // namespace srjet
