#pragma once

#include <vector>

#include "srjet/endpoint.hpp"

namespace srjet {

// Pairwise second-order pairings of the impulse directions against a fixed
// abnormal covector psi0 (extended covector (psi0, 0)).  Off-diagonal entries
// come from polarization of the exactly-quadratic b2 map:
//   b11[a,b] = (b2(e_a+e_b) - b2(e_a) - b2(e_b)) / 2.
// `manifold(node)` is <b11(tau), phi(tau)> with phi = lambda1^T psi0; the
// adapted cost form <q2(tau), psi0> adds the lambda2(tau)[b1, b1] correction,
// which vanishes on the constraint kernel (both forms restrict identically
// to U0).
class GramTable {
 public:
  // nodes: grid nodes at which the forms are tabulated; empty = all nodes
  GramTable(const ImpulseBasis& B, const Eigen::VectorXd& psi0,
            std::vector<int> nodes = {});

  const ImpulseBasis& basis() const { return *B_; }
  const Eigen::VectorXd& psi0() const { return psi0_; }
  const std::vector<int>& nodes() const { return nodes_; }

  const Eigen::MatrixXd& manifold(int node) const;  // m x m symmetric
  Eigen::MatrixXd adapted(int node) const;          // m x m symmetric

 private:
  const ImpulseBasis* B_;
  Eigen::VectorXd psi0_;
  std::vector<int> nodes_;
  std::vector<int> slot_;                // node -> index into forms_, or -1
  std::vector<Eigen::MatrixXd> forms_;   // manifold pairing per stored node
  int slot(int node) const;
};

// Second-variation data at one grid time, restricted to the controls
// supported before it.
struct GramForm {
  int node = 0;
  int m_active = 0;
  Eigen::VectorXd psi0;
  Eigen::MatrixXd G;       // m_active x m_active manifold pairing
  Eigen::MatrixXd Ga;      // m_active x m_active adapted cost form
  Eigen::MatrixXd C;       // (n+1) x m_active constraint map q~1(tau)
  Eigen::MatrixXd kernel;  // m_active x dk orthonormal basis of U0(t0,tau)
  Eigen::MatrixXd range;   // (n+1) x d orthonormal basis of R(t0,tau)
};

GramForm build_gram(const ImpulseBasis& B, const GramTable& T, int node,
                    double eps_rank = 1e-9);

struct IndexReport {
  int negative_index = 0;
  int kernel_dim = 0;
  Eigen::VectorXd spectrum;  // eigenvalues of the kernel-restricted form
};

IndexReport as_index(const GramForm& g, double eps_idx = 1e-8);

struct IndexDivisions {
  std::vector<int> profile;       // I(t0, tau_j) at every tabulated node
  std::vector<double> divisions;  // grid times where the index grows
  bool per_piece_nonneg = true;   // fresh sub-interval re-check
  bool bound_violated = false;    // more divisions than the corank allows
};

IndexDivisions index_divisions(const ImpulseBasis& B, const GramTable& T,
                               int corank, double eps_rank = 1e-9,
                               double eps_idx = 1e-8);

}  // namespace srjet
