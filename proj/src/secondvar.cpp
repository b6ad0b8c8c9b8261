#include "srjet/secondvar.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <stdexcept>

namespace srjet {

GramTable::GramTable(const ImpulseBasis& B, const Eigen::VectorXd& psi0,
                     std::vector<int> nodes)
    : B_(&B), psi0_(psi0) {
  const FlowContext& ctx = B.ctx();
  const int N = ctx.N(), m = B.size();
  if (psi0_.size() != ctx.n())
    throw std::invalid_argument("psi0 must have dimension n");
  if (nodes.empty())
    for (int j = 0; j <= N; ++j) nodes.push_back(j);
  nodes_ = nodes;
  slot_.assign(N + 1, -1);
  for (std::size_t p = 0; p < nodes_.size(); ++p) {
    if (nodes_[p] < 0 || nodes_[p] > N)
      throw std::invalid_argument("Gram node off the grid");
    slot_[nodes_[p]] = static_cast<int>(p);
  }

  // manifold covector at each tabulated node
  std::vector<Eigen::VectorXd> phi(nodes_.size());
  for (std::size_t p = 0; p < nodes_.size(); ++p)
    phi[p] = ctx.frame.lambda1(2 * nodes_[p]).transpose() * psi0_;

  forms_.assign(nodes_.size(), Eigen::MatrixXd::Zero(m, m));

  // diagonal costs
  Eigen::MatrixXd diag(nodes_.size(), m);
  for (int a = 0; a < m; ++a) {
    const Eigen::MatrixXd& b2 = B.bundle(a).b2;
    for (std::size_t p = 0; p < nodes_.size(); ++p)
      diag(p, a) = phi[p].dot(b2.col(nodes_[p]));
  }
  for (int a = 0; a < m; ++a)
    for (std::size_t p = 0; p < nodes_.size(); ++p)
      forms_[p](a, a) = diag(p, a);

  // off-diagonals by polarization of the quadratic b2 map
  const int k = ctx.k();
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      Eigen::MatrixXd du = Eigen::MatrixXd::Zero(k, N);
      du(B.field_of(a), B.step_of(a)) += 1.0;
      du(B.field_of(b), B.step_of(b)) += 1.0;
      VariationBundle pair = integrate_variations(ctx.cache, du);
      for (std::size_t p = 0; p < nodes_.size(); ++p) {
        const double cab = phi[p].dot(pair.b2.col(nodes_[p]));
        const double g = 0.5 * (cab - diag(p, a) - diag(p, b));
        forms_[p](a, b) = g;
        forms_[p](b, a) = g;
      }
    }
  }
}

int GramTable::slot(int node) const {
  if (node < 0 || node >= static_cast<int>(slot_.size()) || slot_[node] < 0)
    throw std::invalid_argument("node not tabulated in this GramTable");
  return slot_[node];
}

const Eigen::MatrixXd& GramTable::manifold(int node) const {
  return forms_[slot(node)];
}

Eigen::MatrixXd GramTable::adapted(int node) const {
  const Eigen::MatrixXd& B1 = B_->b1(node);
  const Eigen::MatrixXd L2 = B_->ctx().frame.lambda2_pair(psi0_, 2 * node);
  return forms_[slot(node)] + B1.transpose() * L2 * B1;
}

GramForm build_gram(const ImpulseBasis& B, const GramTable& T, int node,
                    double eps_rank) {
  GramForm g;
  g.node = node;
  g.psi0 = T.psi0();
  const int n = B.ctx().n();
  const int ma = node * B.ctx().k();
  g.m_active = ma;
  g.G = T.manifold(node).topLeftCorner(ma, ma);
  g.Ga = T.adapted(node).topLeftCorner(ma, ma);
  g.C = B.q1tilde(node).leftCols(ma);
  if (ma == 0) {
    g.kernel.resize(0, 0);
    g.range.resize(n + 1, 0);
    return g;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      g.C, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > eps_rank * sv(0)) ++rank;
  g.range = svd.matrixU().leftCols(rank);
  g.kernel = svd.matrixV().rightCols(ma - rank);
  return g;
}

IndexReport as_index(const GramForm& g, double eps_idx) {
  IndexReport rep;
  rep.kernel_dim = static_cast<int>(g.kernel.cols());
  if (rep.kernel_dim == 0) {
    rep.spectrum.resize(0);
    return rep;
  }
  const Eigen::MatrixXd K =
      g.kernel.transpose() * g.G * g.kernel;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      0.5 * (K + K.transpose()));
  rep.spectrum = eig.eigenvalues();
  const double rho = rep.spectrum.cwiseAbs().maxCoeff();
  for (int i = 0; i < rep.spectrum.size(); ++i)
    if (rep.spectrum(i) < -eps_idx * rho) ++rep.negative_index;
  return rep;
}

namespace {

// index of the form restricted to controls supported on steps [ja, jb) with
// zero target at node jb (fresh sub-interval Gram)
int piece_index(const ImpulseBasis& B, const GramTable& T, int ja, int jb,
                double eps_rank, double eps_idx) {
  const int k = B.ctx().k();
  const int lo = ja * k, w = (jb - ja) * k;
  if (w <= 0) return 0;
  const Eigen::MatrixXd C = B.q1tilde(jb).middleCols(lo, w);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > eps_rank * sv(0)) ++rank;
  const Eigen::MatrixXd Z = svd.matrixV().rightCols(w - rank);
  if (Z.cols() == 0) return 0;
  const Eigen::MatrixXd Gblk = T.manifold(jb).block(lo, lo, w, w);
  const Eigen::MatrixXd K = Z.transpose() * Gblk * Z;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (K + K.transpose()));
  const double rho = eig.eigenvalues().cwiseAbs().maxCoeff();
  int idx = 0;
  for (int i = 0; i < eig.eigenvalues().size(); ++i)
    if (eig.eigenvalues()(i) < -eps_idx * rho) ++idx;
  return idx;
}

}  // namespace

IndexDivisions index_divisions(const ImpulseBasis& B, const GramTable& T,
                               int corank, double eps_rank, double eps_idx) {
  IndexDivisions out;
  std::vector<int> division_nodes;
  int prev = 0;
  for (int node : T.nodes()) {
    GramForm g = build_gram(B, T, node, eps_rank);
    const int idx = as_index(g, eps_idx).negative_index;
    out.profile.push_back(idx);
    if (idx > prev) {
      division_nodes.push_back(node);
      out.divisions.push_back(B.ctx().scen.time_at(node));
    }
    prev = idx;
  }
  out.bound_violated = static_cast<int>(out.divisions.size()) > corank;

  // each open piece between consecutive division points must carry index 0;
  // a piece that ends at a division stops one tabulated node short of it
  // (the jump happens exactly when the division node is included)
  std::vector<int> cuts;
  cuts.push_back(T.nodes().front());
  for (int d : division_nodes) cuts.push_back(d);
  cuts.push_back(T.nodes().back());
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    int end = cuts[p + 1];
    if (p + 2 < cuts.size()) {
      // largest tabulated node strictly before the division
      int best = cuts[p];
      for (int node : T.nodes())
        if (node > best && node < cuts[p + 1]) best = node;
      end = best;
    }
    if (end <= cuts[p]) continue;
    if (piece_index(B, T, cuts[p], end, eps_rank, eps_idx) > 0)
      out.per_piece_nonneg = false;
  }
  return out;
}

}  // namespace srjet
