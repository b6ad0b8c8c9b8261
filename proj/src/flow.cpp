#include "srjet/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace srjet {

namespace {

Eigen::VectorXd drift(const VectorFieldSet& F, const Eigen::VectorXd& u,
                      const Eigen::VectorXd& q) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(q.size());
  for (int i = 0; i < F.k(); ++i) f += u(i) * F.eval_field(i, q);
  return f;
}

// one RK4 step of qdot = drift(q) with constant control
Eigen::VectorXd rk4_state_step(const VectorFieldSet& F,
                               const Eigen::VectorXd& u,
                               const Eigen::VectorXd& q, double h) {
  Eigen::VectorXd k1 = drift(F, u, q);
  Eigen::VectorXd k2 = drift(F, u, q + 0.5 * h * k1);
  Eigen::VectorXd k3 = drift(F, u, q + 0.5 * h * k2);
  Eigen::VectorXd k4 = drift(F, u, q + h * k3);
  Eigen::VectorXd out = q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) throw IntegrationError("trajectory blew up");
  return out;
}

// component m of D^2X[b,b'] given the Hessian slices of one field
Eigen::VectorXd hess_apply(const std::vector<Eigen::MatrixXd>& H,
                           const Eigen::VectorXd& b,
                           const Eigen::VectorXd& bp) {
  Eigen::VectorXd out(static_cast<int>(H.size()));
  for (std::size_t m = 0; m < H.size(); ++m)
    out(static_cast<int>(m)) = b.dot(H[m] * bp);
  return out;
}

}  // namespace

Eigen::VectorXd Trajectory::state_at(double t) const {
  const double hh = h();
  double s = (t - t0) / hh;
  int j = static_cast<int>(std::floor(s));
  if (j < 0) j = 0;
  if (j > N - 1) j = N - 1;
  double th = s - j;  // in [0,1] on step j
  const Eigen::VectorXd q0 = q.col(j), q1 = q.col(j + 1);
  const Eigen::VectorXd m0 = hh * qdot_left.col(j), m1 = hh * qdot_right.col(j);
  const double t2 = th * th, t3 = t2 * th;
  return (2 * t3 - 3 * t2 + 1) * q0 + (t3 - 2 * t2 + th) * m0 +
         (-2 * t3 + 3 * t2) * q1 + (t3 - t2) * m1;
}

Trajectory integrate_trajectory(const Scenario& s) {
  const int n = s.n(), N = s.N;
  const double h = s.h();
  Trajectory tr;
  tr.t0 = s.t0;
  tr.t1 = s.t1;
  tr.N = N;
  tr.q.resize(n, N + 1);
  tr.energy.resize(N + 1);
  tr.qdot_left.resize(n, N);
  tr.qdot_right.resize(n, N);
  tr.q.col(0) = s.q0;
  tr.energy(0) = 0.0;
  for (int j = 0; j < N; ++j) {
    const Eigen::VectorXd u = s.u.values.col(j);
    tr.qdot_left.col(j) = drift(s.system.fields, u, tr.q.col(j));
    tr.q.col(j + 1) = rk4_state_step(s.system.fields, u, tr.q.col(j), h);
    tr.qdot_right.col(j) = drift(s.system.fields, u, tr.q.col(j + 1));
    tr.energy(j + 1) = tr.energy(j) + 0.5 * h * u.squaredNorm();
  }
  return tr;
}

FlowCache::FlowCache(const Scenario& s) {
  n_ = s.n();
  k_ = s.k();
  N_ = s.N;
  t0_ = s.t0;
  h_ = s.h();
  u_ = s.u.values;
  const int S = samples();
  q_.resize(S);
  q_[0] = s.q0;
  for (int q = 0; q < 4 * N_; ++q) {
    const Eigen::VectorXd u = u_.col(q / 4);
    q_[q + 1] = rk4_state_step(s.system.fields, u, q_[q], h_ / 4.0);
  }
  X_.resize(S);
  J_.resize(S);
  H_.resize(S);
  for (int sidx = 0; sidx < S; ++sidx) {
    X_[sidx].resize(k_);
    J_[sidx].resize(k_);
    H_[sidx].resize(k_);
    for (int i = 0; i < k_; ++i) {
      X_[sidx][i] = s.system.fields.eval_field(i, q_[sidx]);
      J_[sidx][i] = s.system.fields.eval_jacobian(i, q_[sidx]);
      H_[sidx][i] = s.system.fields.eval_hessian(i, q_[sidx]);
    }
  }
}

Eigen::MatrixXd FlowCache::drift_jacobian(int j, int s) const {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < k_; ++i) M += u_(i, j) * J_[s][i];
  return M;
}

VariationBundle integrate_variations(const FlowCache& cache,
                                     const Eigen::MatrixXd& du) {
  const int n = cache.n(), k = cache.k(), N = cache.N();
  if (du.rows() != k || du.cols() != N)
    throw std::invalid_argument("du must be k x N");
  const double h = cache.h();

  VariationBundle v;
  v.b1 = Eigen::MatrixXd::Zero(n, N + 1);
  v.b2 = Eigen::MatrixXd::Zero(n, N + 1);
  v.c1 = Eigen::VectorXd::Zero(N + 1);
  v.c2 = Eigen::VectorXd::Zero(N + 1);

  // everything stays zero until the perturbation first acts
  int first = 0;
  while (first < N && du.col(first).isZero(0.0)) ++first;

  Eigen::VectorXd b1 = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd b2 = Eigen::VectorXd::Zero(n);
  for (int j = first; j < N; ++j) {
    const Eigen::VectorXd uj = cache.control(j);
    const Eigen::VectorXd dj = du.col(j);
    // stage derivative at cache sample s given stage values (a1, a2)
    auto deriv = [&](int s, const Eigen::VectorXd& a1,
                     const Eigen::VectorXd& a2, Eigen::VectorXd& d1,
                     Eigen::VectorXd& d2) {
      const Eigen::MatrixXd M = cache.drift_jacobian(j, s);
      d1 = M * a1;
      d2 = M * a2;
      for (int i = 0; i < k; ++i) {
        d1 += dj(i) * cache.field(i, s);
        d2 += uj(i) * hess_apply(cache.hess(i, s), a1, a1) +
              2.0 * dj(i) * (cache.jac(i, s) * a1);
      }
    };
    const int s0 = 4 * j, s2 = 4 * j + 2, s4 = 4 * j + 4;
    Eigen::VectorXd k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
    deriv(s0, b1, b2, k1a, k1b);
    deriv(s2, b1 + 0.5 * h * k1a, b2 + 0.5 * h * k1b, k2a, k2b);
    deriv(s2, b1 + 0.5 * h * k2a, b2 + 0.5 * h * k2b, k3a, k3b);
    deriv(s4, b1 + h * k3a, b2 + h * k3b, k4a, k4b);
    b1 += (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
    b2 += (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
    if (!b1.allFinite() || !b2.allFinite())
      throw IntegrationError("variation blew up");
    v.b1.col(j + 1) = b1;
    v.b2.col(j + 1) = b2;
    v.c1(j + 1) = v.c1(j) + h * uj.dot(dj);
    v.c2(j + 1) = v.c2(j) + h * dj.squaredNorm();
  }
  return v;
}

JetProbe finite_difference_oracle(const Scenario& s, const Eigen::MatrixXd& du,
                                  double scale) {
  auto endpoint = [&](double eps) -> Eigen::VectorXd {
    Scenario p = s;
    p.u.values = s.u.values + eps * du;
    Trajectory tr = integrate_trajectory(p);
    Eigen::VectorXd out(s.n() + 1);
    out.head(s.n()) = tr.q.col(s.N);
    out(s.n()) = tr.energy(s.N);
    return out;
  };
  const Eigen::VectorXd F0 = endpoint(0.0);
  auto diffs = [&](double eps, Eigen::VectorXd& d1, Eigen::VectorXd& d2) {
    const Eigen::VectorXd Fp = endpoint(eps), Fm = endpoint(-eps);
    d1 = (Fp - Fm) / (2.0 * eps);
    d2 = (Fp - 2.0 * F0 + Fm) / (eps * eps);
  };
  Eigen::VectorXd d1a, d2a, d1b, d2b;
  diffs(scale, d1a, d2a);
  diffs(scale / 2.0, d1b, d2b);
  JetProbe probe;
  probe.first = (4.0 * d1b - d1a) / 3.0;
  probe.second = (4.0 * d2b - d2a) / 3.0;
  return probe;
}

namespace {

Eigen::MatrixXd transport(const FlowCache& cache, const Eigen::VectorXd& phi0,
                          bool forward) {
  const int n = cache.n(), N = cache.N();
  const double h = cache.h();
  Eigen::MatrixXd out(n, N + 1);
  Eigen::VectorXd phi = phi0;
  auto deriv = [&](int j, int s, const Eigen::VectorXd& p) -> Eigen::VectorXd {
    return -cache.drift_jacobian(j, s).transpose() * p;
  };
  if (forward) {
    out.col(0) = phi;
    for (int j = 0; j < N; ++j) {
      const int s0 = 4 * j, s2 = 4 * j + 2, s4 = 4 * j + 4;
      Eigen::VectorXd k1 = deriv(j, s0, phi);
      Eigen::VectorXd k2 = deriv(j, s2, phi + 0.5 * h * k1);
      Eigen::VectorXd k3 = deriv(j, s2, phi + 0.5 * h * k2);
      Eigen::VectorXd k4 = deriv(j, s4, phi + h * k3);
      phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      out.col(j + 1) = phi;
    }
  } else {
    out.col(N) = phi;
    for (int j = N - 1; j >= 0; --j) {
      const int s0 = 4 * j + 4, s2 = 4 * j + 2, s4 = 4 * j;
      Eigen::VectorXd k1 = deriv(j, s0, phi);
      Eigen::VectorXd k2 = deriv(j, s2, phi - 0.5 * h * k1);
      Eigen::VectorXd k3 = deriv(j, s2, phi - 0.5 * h * k2);
      Eigen::VectorXd k4 = deriv(j, s4, phi - h * k3);
      phi -= (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      out.col(j) = phi;
    }
  }
  if (!out.allFinite()) throw IntegrationError("covector transport blew up");
  return out;
}

}  // namespace

Eigen::MatrixXd transport_covector_forward(const FlowCache& cache,
                                           const Eigen::VectorXd& phi_t0) {
  return transport(cache, phi_t0, true);
}

Eigen::MatrixXd transport_covector_backward(const FlowCache& cache,
                                            const Eigen::VectorXd& phi_t1) {
  return transport(cache, phi_t1, false);
}

AdaptedFrame::AdaptedFrame(const FlowCache& cache) {
  N_ = cache.N();
  n_ = cache.n();
  const int k = cache.k();
  const double hh = cache.h() / 2.0;  // frame substep

  l1_.resize(2 * N_ + 1);
  l2_.resize(2 * N_ + 1);
  inv_.resize(2 * N_ + 1);

  Eigen::MatrixXd l1 = Eigen::MatrixXd::Identity(n_, n_);
  std::vector<Eigen::MatrixXd> l2(n_, Eigen::MatrixXd::Zero(n_, n_));
  l1_[0] = l1;
  l2_[0] = l2;

  // stage derivative at cache quarter sample s with controls of step j
  auto deriv = [&](int j, int s, const Eigen::MatrixXd& a1,
                   const std::vector<Eigen::MatrixXd>& a2,
                   Eigen::MatrixXd& d1, std::vector<Eigen::MatrixXd>& d2) {
    const Eigen::MatrixXd M = cache.drift_jacobian(j, s);
    d1 = -a1 * M;
    d2.assign(n_, Eigen::MatrixXd::Zero(n_, n_));
    for (int a = 0; a < n_; ++a) {
      Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n_, n_);
      for (int i = 0; i < k; ++i) {
        const auto& H = cache.hess(i, s);
        const double ui = cache.control(j)(i);
        if (ui == 0.0) continue;
        for (int m = 0; m < n_; ++m)
          if (a1(a, m) != 0.0) W += ui * a1(a, m) * H[m];
      }
      d2[a] = -W - M.transpose() * a2[a] - a2[a] * M;
    }
  };

  for (int r = 0; r < 2 * N_; ++r) {
    const int j = r / 2;  // control step
    const int s0 = 2 * r, s1 = 2 * r + 1, s2 = 2 * r + 2;
    Eigen::MatrixXd k1a, k2a, k3a, k4a;
    std::vector<Eigen::MatrixXd> k1b, k2b, k3b, k4b;
    auto axpy = [&](const Eigen::MatrixXd& base1,
                    const std::vector<Eigen::MatrixXd>& base2, double c,
                    const Eigen::MatrixXd& dir1,
                    const std::vector<Eigen::MatrixXd>& dir2,
                    Eigen::MatrixXd& out1, std::vector<Eigen::MatrixXd>& out2) {
      out1 = base1 + c * dir1;
      out2.resize(n_);
      for (int a = 0; a < n_; ++a) out2[a] = base2[a] + c * dir2[a];
    };
    Eigen::MatrixXd t1;
    std::vector<Eigen::MatrixXd> t2;
    deriv(j, s0, l1, l2, k1a, k1b);
    axpy(l1, l2, 0.5 * hh, k1a, k1b, t1, t2);
    deriv(j, s1, t1, t2, k2a, k2b);
    axpy(l1, l2, 0.5 * hh, k2a, k2b, t1, t2);
    deriv(j, s1, t1, t2, k3a, k3b);
    axpy(l1, l2, hh, k3a, k3b, t1, t2);
    deriv(j, s2, t1, t2, k4a, k4b);
    l1 += (hh / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
    for (int a = 0; a < n_; ++a)
      l2[a] += (hh / 6.0) * (k1b[a] + 2.0 * k2b[a] + 2.0 * k3b[a] + k4b[a]);
    if (!l1.allFinite()) throw IntegrationError("frame blew up");
    l1_[r + 1] = l1;
    l2_[r + 1] = l2;
  }

  min_abs_det_ = std::numeric_limits<double>::infinity();
  for (int r = 0; r <= 2 * N_; ++r) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(l1_[r]);
    const double d = std::abs(lu.determinant());
    min_abs_det_ = std::min(min_abs_det_, d);
    if (d < 1e-12)
      throw IntegrationError("frame lost invertibility along the flow");
    inv_[r] = lu.inverse();
  }
}

Eigen::VectorXd AdaptedFrame::Y1(const FlowCache& cache, int i, int r) const {
  return l1_[r] * cache.field(i, 2 * r);
}

Eigen::MatrixXd AdaptedFrame::Y2(const FlowCache& cache, int i, int r) const {
  const Eigen::VectorXd& X = cache.field(i, 2 * r);
  Eigen::MatrixXd K(n_, n_);
  for (int a = 0; a < n_; ++a) K.row(a) = (l2_[r][a].transpose() * X).transpose();
  return (l1_[r] * cache.jac(i, 2 * r) + K) * inv_[r];
}

Eigen::MatrixXd AdaptedFrame::lambda2_pair(const Eigen::VectorXd& psi0,
                                           int r) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_, n_);
  for (int a = 0; a < n_; ++a) out += psi0(a) * l2_[r][a];
  return out;
}

AdaptedJet to_adapted(const AdaptedFrame& frame, const VariationBundle& v) {
  const int N = static_cast<int>(v.b1.cols()) - 1;
  const int n = static_cast<int>(v.b1.rows());
  AdaptedJet jet;
  jet.q1.resize(n, N + 1);
  jet.q2.resize(n, N + 1);
  jet.c1 = v.c1;
  jet.c2 = v.c2;
  for (int j = 0; j <= N; ++j) {
    const int r = 2 * j;
    const Eigen::VectorXd b1 = v.b1.col(j);
    jet.q1.col(j) = frame.lambda1(r) * b1;
    Eigen::VectorXd quad(n);
    for (int a = 0; a < n; ++a) quad(a) = b1.dot(frame.lambda2(r)[a] * b1);
    jet.q2.col(j) = frame.lambda1(r) * v.b2.col(j) + quad;
  }
  return jet;
}

double pair_two_jet(const AdaptedFrame& frame, const VariationBundle& v,
                    const Eigen::VectorXd& psi0, int node) {
  const int r = 2 * node;
  const Eigen::VectorXd b1 = v.b1.col(node);
  return psi0.dot(frame.lambda1(r) * v.b2.col(node)) +
         b1.dot(frame.lambda2_pair(psi0, r) * b1);
}

}  // namespace srjet
