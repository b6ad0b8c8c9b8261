#pragma once

#include <vector>

#include "srjet/secondvar.hpp"

namespace srjet {

struct UnboundedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OCPSolution {
  Eigen::VectorXd v;            // (n+1) target in adapted coordinates
  Eigen::VectorXd du;           // m_active impulse coefficients
  double value = 0.0;
  bool bounded = true;
  Eigen::VectorXd multipliers;  // (n+1) KKT multipliers of C du = v
};

// Equality-constrained quadratic minimization of the adapted cost form over
// controls hitting a prescribed first-order target (null-space method).
class OCPSolver {
 public:
  OCPSolver(GramForm g, double eps_rank = 1e-9, double eps_idx = 1e-8);

  const GramForm& gram() const { return g_; }
  int node() const { return g_.node; }
  // the kernel-restricted form is positive semidefinite
  bool form_psd() const { return psd_; }
  // null directions of the kernel-restricted form: the discretized zero-target
  // solution space Sol(tau)(0), as m_active x dim control coefficients
  const Eigen::MatrixXd& solution_space_zero() const { return sol0_; }

  // throws std::domain_error when v is not reachable at this node;
  // sets bounded=false (value -inf) when the problem is unbounded below
  OCPSolution solve(const Eigen::VectorXd& v) const;

 private:
  GramForm g_;
  double eps_rank_, eps_idx_;
  bool psd_ = true;
  Eigen::JacobiSVD<Eigen::MatrixXd> csvd_;  // SVD of C
  int crank_ = 0;
  Eigen::MatrixXd H_;        // kernel-restricted adapted form
  double scale_ = 0.0;       // eigenvalue reference scale (floored by |Ga|)
  Eigen::VectorXd evals_;    // eigenvalues of H
  Eigen::MatrixXd evecs_;
  Eigen::MatrixXd sol0_;
};

// Per-time quadratic value function: Q(q1, c1) = Phi2[q1,q1] + <q1,xi> c1
// + a2 c1^2.  In the adapted frame the coefficients are (Psi2, zeta, a2).
struct QuadraticJetForm {
  bool adapted_frame = true;
  int node = 0;
  double time = 0.0;
  Eigen::MatrixXd Phi2;  // n x n symmetric
  Eigen::VectorXd xi;    // n
  double a2 = 0.0;
  bool a2_defined = false;
};

// Tabulates Q_min on the reachable basis at the solver's node and recovers
// the quadratic coefficients by polarization.  Throws UnboundedError when any
// sub-problem is unbounded below.
QuadraticJetForm fit_value_function(const OCPSolver& solver,
                                    const Scenario& scen);

// Pull-back through (lambda1, lambda2):
//   Phi2 = lambda1^T Psi2 lambda1 - Lambda2(psi0),  xi = lambda1^T zeta,
// a2 and c1 are frame-invariant.
QuadraticJetForm to_manifold_frame(const QuadraticJetForm& adapted,
                                   const AdaptedFrame& frame,
                                   const Eigen::VectorXd& psi0);

struct BellmanReport {
  Eigen::VectorXd f;              // cost - Q_min at every node
  double min_decrement = 0.0;     // min over steps of f(t_{j+1}) - f(t_j)
  std::vector<double> violations; // times with decrement < -eps_mono
};

// One OCP solver per node 1..N (reusable across many probes).  Requires a
// GramTable over all nodes.
std::vector<OCPSolver> build_node_solvers(const ImpulseBasis& B,
                                          const GramTable& T,
                                          double eps_rank = 1e-9,
                                          double eps_idx = 1e-8);

// Monotonicity probe: f(t) = cost(t, du) - Q_min(t, q~1(t, du)) must be
// non-decreasing along the grid (the value function absorbs no more than the
// cost spends).
BellmanReport bellman_monotonicity(const std::vector<OCPSolver>& solvers,
                                   const ImpulseBasis& B,
                                   const Eigen::MatrixXd& du,
                                   double eps_mono = 1e-7);

BellmanReport bellman_monotonicity(const ImpulseBasis& B, const GramTable& T,
                                   const Eigen::MatrixXd& du,
                                   double eps_rank = 1e-9,
                                   double eps_idx = 1e-8,
                                   double eps_mono = 1e-7);

struct SecondOrderReport {
  bool two_normal = false;
  std::vector<double> a2_samples;  // per supplied jet, in node order
  std::vector<double> zero_times;  // times where a2 falls below threshold
};

// 2-normal iff a2 stays above eps_a (relative to its largest magnitude) at
// every supplied interior time.  Throws std::domain_error when a2 is
// undefined anywhere (piece not strictly abnormal).
SecondOrderReport classify_second_order(
    const std::vector<QuadraticJetForm>& jets, double eps_a = 1e-6);

struct SolutionSpaceReport {
  int kernel_dim = 0;
  int sol_dim = 0;
  int codim = 0;                       // codimension of Sol(tau)(0) in U0
  double max_principle_residual = 0.0; // stationarity with p0 = -1
  Eigen::VectorXd principle_residual;  // same, per control index (max over t)
  double max_transport_defect = 0.0;   // backward-difference covector law
  double max_bilinear_residual = 0.0;  // |Ga[du*, dv]| over dv in Sol(tau)(0)
};

// Monti diagnostic and PMP residuals for one solved target.
SolutionSpaceReport solution_space_analysis(const OCPSolver& solver,
                                            const ImpulseBasis& B,
                                            const Eigen::VectorXd& v);

}  // namespace srjet
