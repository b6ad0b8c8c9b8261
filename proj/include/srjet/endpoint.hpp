#pragma once

#include <vector>

#include "srjet/flow.hpp"

namespace srjet {

// The kN canonical control impulses e_{i,j} (field i active on step j only,
// value 1), with cached variation bundles and their adapted first-order
// histories.  Column ordering is step-major: a = j*k + i, so the columns
// supported on steps < j are exactly the first j*k ones.
class ImpulseBasis {
 public:
  explicit ImpulseBasis(const FlowContext& ctx);

  const FlowContext& ctx() const { return *ctx_; }
  int size() const { return m_; }
  int field_of(int a) const { return a % k_; }
  int step_of(int a) const { return a / k_; }
  Eigen::MatrixXd impulse(int a) const;  // k x N

  const VariationBundle& bundle(int a) const { return bundles_[a]; }

  // adapted extended state (q1, c1) of every impulse at a grid node:
  // (n+1) x m, rows 0..n-1 = q1 components, row n = c1
  const Eigen::MatrixXd& q1tilde(int node) const { return q1t_[node]; }

  // raw first variations b1 at a node: n x m
  const Eigen::MatrixXd& b1(int node) const { return b1_[node]; }

  // columns supported strictly before the node
  Eigen::MatrixXd active_q1tilde(int node) const {
    return q1t_[node].leftCols(node * k_);
  }

 private:
  const FlowContext* ctx_;
  int m_ = 0, k_ = 0, n_ = 0, N_ = 0;
  std::vector<VariationBundle> bundles_;
  std::vector<Eigen::MatrixXd> q1t_;  // per node
  std::vector<Eigen::MatrixXd> b1_;   // per node
};

// Orthonormal bases of the reachable spaces R(t0, tau_j) of the
// characteristic control system, in adapted extended coordinates.
struct ReachableBasis {
  std::vector<int> dim;                // per node
  std::vector<Eigen::MatrixXd> basis;  // per node, (n+1) x dim[j]
};

ReachableBasis reachable_spaces(const ImpulseBasis& B, double eps_rank = 1e-9);

enum class ExtremalClass { NotExtremal, Normal, Abnormal };

struct FirstOrderReport {
  int rank = 0;
  int corank = 0;
  ExtremalClass cls = ExtremalClass::NotExtremal;
  bool cost_direction_reachable = false;
  bool strictly_abnormal = false;
  // orthonormal left-null covectors with (numerically) zero energy component,
  // (n+1) x r_abn
  Eigen::MatrixXd abnormal_psi0;
  bool has_normal_certificate = false;
  Eigen::VectorXd normal_psi;  // (n+1), scaled so the energy component is -1
  // manifold adjoint curves for the abnormal candidates:
  // phi(t_j) = lambda1(t_j)^T psi0, one n x (N+1) matrix per candidate
  std::vector<Eigen::MatrixXd> phi;
};

FirstOrderReport classify_first_order(const ImpulseBasis& B,
                                      double eps_rank = 1e-9);

// Grid times where the forward-reachable space stops being controllable to
// zero by the remaining controls (start of each maximal failing run of the
// span-inclusion scan).
std::vector<double> controllability_divisions(const ImpulseBasis& B,
                                              double eps_rank = 1e-9);

}  // namespace srjet
