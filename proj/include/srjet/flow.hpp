#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "srjet/system.hpp"

namespace srjet {

struct IntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reference trajectory on the control grid.  Node states from fixed-step RK4
// (one step per control interval); the energy column is the exact step sum
// h/2 * sum |u_j|^2.  Dense output is cubic Hermite per step.
struct Trajectory {
  double t0 = 0.0, t1 = 1.0;
  int N = 0;
  Eigen::MatrixXd q;          // n x (N+1)
  Eigen::VectorXd energy;     // N+1
  Eigen::MatrixXd qdot_left;  // n x N, f(q_j; u_j)
  Eigen::MatrixXd qdot_right; // n x N, f(q_{j+1}; u_j)

  double h() const { return (t1 - t0) / N; }
  double time_at(int j) const { return t0 + j * h(); }
  Eigen::VectorXd state_at(double t) const;
};

Trajectory integrate_trajectory(const Scenario& s);

// Field data sampled along the reference flow at quarter-step resolution
// (4N+1 samples; the extra resolution feeds the h/2 frame integration).
// The quarter states come from re-integrating the flow with four RK4
// substeps per control interval, so they are at least as accurate as the
// node trajectory and coincide with it on polynomial (nilpotent) systems.
class FlowCache {
 public:
  explicit FlowCache(const Scenario& s);

  int n() const { return n_; }
  int k() const { return k_; }
  int N() const { return N_; }
  double h() const { return h_; }
  double t0() const { return t0_; }
  int samples() const { return 4 * N_ + 1; }
  double time_of(int s) const { return t0_ + s * h_ / 4.0; }

  // control on step j, 0 <= j < N
  Eigen::VectorXd control(int j) const { return u_.col(j); }

  const Eigen::VectorXd& state(int s) const { return q_[s]; }
  const Eigen::VectorXd& field(int i, int s) const { return X_[s][i]; }
  const Eigen::MatrixXd& jac(int i, int s) const { return J_[s][i]; }
  const std::vector<Eigen::MatrixXd>& hess(int i, int s) const {
    return H_[s][i];
  }

  // M(t) = sum_i u_i(j) DX_i(q(t)) at sample s, with the controls of step j.
  Eigen::MatrixXd drift_jacobian(int j, int s) const;

 private:
  int n_ = 0, k_ = 0, N_ = 0;
  double t0_ = 0.0, h_ = 0.0;
  Eigen::MatrixXd u_;                                // k x N
  std::vector<Eigen::VectorXd> q_;                   // [4N+1]
  std::vector<std::vector<Eigen::VectorXd>> X_;      // [4N+1][k]
  std::vector<std::vector<Eigen::MatrixXd>> J_;      // [4N+1][k]
  std::vector<std::vector<std::vector<Eigen::MatrixXd>>> H_;  // [4N+1][k][n]
};

// First and second state/energy variations along a control perturbation du
// (k x N, per-step constants).  b1 solves the linearized flow, b2 the
// second-variation flow driven by b1; c1/c2 are the exact first/second
// energy derivatives (step sums).  The combined RK4 map keeps b1 exactly
// linear and b2 exactly quadratic in du, so polarization identities hold to
// rounding.
struct VariationBundle {
  Eigen::MatrixXd b1;  // n x (N+1)
  Eigen::MatrixXd b2;  // n x (N+1)
  Eigen::VectorXd c1;  // N+1
  Eigen::VectorXd c2;  // N+1
};

VariationBundle integrate_variations(const FlowCache& cache,
                                     const Eigen::MatrixXd& du);

// Independent derivative probe: central differences of the full nonlinear
// endpoint (state, energy) under u + s*du, Richardson-extrapolated over
// {scale, scale/2}.  Used to cross-check the variational integrators.
struct JetProbe {
  Eigen::VectorXd first;   // n+1
  Eigen::VectorXd second;  // n+1
};

JetProbe finite_difference_oracle(const Scenario& s, const Eigen::MatrixXd& du,
                                  double scale);

// Transport of a covector along the flow: phi' = -M(t)^T phi.  Forward from
// phi(t0), or backward from phi(t1); returns phi at every node (n x (N+1)).
Eigen::MatrixXd transport_covector_forward(const FlowCache& cache,
                                           const Eigen::VectorXd& phi_t0);
Eigen::MatrixXd transport_covector_backward(const FlowCache& cache,
                                            const Eigen::VectorXd& phi_t1);

// Adapted linearizing frame along the flow: lambda1 solves
// lambda1' = -lambda1 M with lambda1(t0) = I, and the symmetric second-order
// slices lambda2_a solve
//   lambda2_a' = -W_a - M^T lambda2_a - lambda2_a M,  lambda2_a(t0) = 0,
//   W_a = sum_i u_i sum_m (lambda1)_{am} Hess((X_i)_m).
// Integrated at step h/2 (half-grid index r = 0..2N; node j sits at r = 2j).
class AdaptedFrame {
 public:
  explicit AdaptedFrame(const FlowCache& cache);

  int samples() const { return 2 * N_ + 1; }
  const Eigen::MatrixXd& lambda1(int r) const { return l1_[r]; }
  const std::vector<Eigen::MatrixXd>& lambda2(int r) const { return l2_[r]; }
  const Eigen::MatrixXd& inverse(int r) const { return inv_[r]; }
  double min_abs_det() const { return min_abs_det_; }

  // pushed-forward control fields: Y1_i = lambda1 X_i(q)
  Eigen::VectorXd Y1(const FlowCache& cache, int i, int r) const;

  // second-order pushed field as a matrix acting on adapted first-order
  // displacements: Y2_i = (lambda1 J_i + K_i) lambda1^{-1},
  // (K_i)_{aj} = sum_p (X_i)_p (lambda2_a)_{pj}.
  Eigen::MatrixXd Y2(const FlowCache& cache, int i, int r) const;

  // sum_a psi0_a lambda2_a (the bilinear pairing of the second-order frame
  // slice with a fixed covector)
  Eigen::MatrixXd lambda2_pair(const Eigen::VectorXd& psi0, int r) const;

 private:
  int N_ = 0, n_ = 0;
  std::vector<Eigen::MatrixXd> l1_, inv_;
  std::vector<std::vector<Eigen::MatrixXd>> l2_;
  double min_abs_det_ = 0.0;
};

// Variation pushed to the adapted chart at the grid nodes:
//   q1 = lambda1 b1,   q2 = lambda1 b2 + lambda2[b1, b1].
struct AdaptedJet {
  Eigen::MatrixXd q1;  // n x (N+1)
  Eigen::MatrixXd q2;  // n x (N+1)
  Eigen::VectorXd c1, c2;
};

AdaptedJet to_adapted(const AdaptedFrame& frame, const VariationBundle& v);

// <q2(node), psi0> without forming the full adapted jet.
double pair_two_jet(const AdaptedFrame& frame, const VariationBundle& v,
                    const Eigen::VectorXd& psi0, int node);

// Everything the higher-level analyses need about one scenario.
struct FlowContext {
  Scenario scen;
  Trajectory traj;
  FlowCache cache;
  AdaptedFrame frame;

  explicit FlowContext(const Scenario& s)
      : scen(s), traj(integrate_trajectory(s)), cache(s), frame(cache) {}

  int n() const { return scen.n(); }
  int k() const { return scen.k(); }
  int N() const { return scen.N; }
};

}  // namespace srjet
