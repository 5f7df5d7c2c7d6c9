#include "poro/pbdw.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace poro {

Matrix cross_gramian(const ObservationSpace& space, const Matrix& phi) {
  if (space.MW.rows() != phi.rows()) throw Error("cross_gramian: dimension mismatch");
  return space.MW.transpose() * phi;
}

Matrix cross_gramian(const Matrix& W, const SparseMatrix& M, const Matrix& phi) {
  if (W.rows() != M.rows() || M.cols() != phi.rows()) throw Error("cross_gramian: dimension mismatch");
  return W.transpose() * (M * phi);
}

double stability_constant(const Matrix& G) {
  if (G.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(G);
  return svd.singularValues().tail(1)(0);
}

int select_dimension(const std::vector<double>& eps_hat, const std::vector<double>& beta) {
  if (eps_hat.size() != beta.size() || eps_hat.empty())
    throw Error("select_dimension: need matching nonempty ε̂ and β tables");
  int best = -1;
  double best_val = 0;
  for (size_t i = 0; i < eps_hat.size(); ++i) {
    if (!(beta[i] > 0)) continue;
    double val = eps_hat[i] / beta[i];
    if (best < 0 || val < best_val) {
      best = static_cast<int>(i);
      best_val = val;
    }
  }
  if (best < 0) throw Error("select_dimension: no admissible dimension (β ≡ 0)");
  return best + 1;
}

DimensionSelection select_dimension(const Vector& eigenvalues, const Matrix& G_full) {
  const int n_max = static_cast<int>(G_full.cols());
  const int m = static_cast<int>(G_full.rows());
  if (n_max == 0 || m == 0) throw Error("select_dimension: empty cross-Gramian");
  if (n_max > m) throw Error("select_dimension: more modes than measurements (need m ≥ n)");

  DimensionSelection sel;
  Eigen::HouseholderQR<Matrix> qr(G_full);
  Matrix R = qr.matrixQR().topRows(n_max).triangularView<Eigen::Upper>();
  for (int n = 1; n <= n_max; ++n) {
    Eigen::JacobiSVD<Matrix> svd(R.topLeftCorner(n, n));
    double beta = svd.singularValues().tail(1)(0);
    double eps = pod_tail_error(eigenvalues, n);
    sel.beta.push_back(beta);
    sel.eps_hat.push_back(eps);
    sel.bound.push_back(beta > 0 ? eps / beta : std::numeric_limits<double>::infinity());
  }
  sel.n_star = select_dimension(sel.eps_hat, sel.beta);
  return sel;
}

Reconstructor::Reconstructor(const ReducedBasis& basis, int n, const ObservationSpace& space,
                             const JointMass& jm)
    : space_(&space), jm_(&jm) {
  if (n < 1 || n > basis.n()) throw Error("reconstructor: n out of range");
  if (space.m() < n)
    throw Error("reconstructor: fewer measurements than modes (m = " + std::to_string(space.m()) +
                ", n = " + std::to_string(n) + ")");
  phi_ = basis.Phi.leftCols(n);
  Mphi_ = jm.M * phi_;
  G_ = space.MW.transpose() * phi_;
  eps_hat_ = pod_tail_error(basis.eigenvalues, n);

  beta_ = stability_constant(G_);
  if (!(beta_ > 0))
    throw Error("reconstructor: observability constant β is zero; V_n contains unobservable states");
  qr_.compute(G_);

  double r0 = std::abs(qr_.matrixQR()(0, 0));
  double rn = std::abs(qr_.matrixQR()(n - 1, n - 1));
  double cond = rn > 0 ? r0 / rn : std::numeric_limits<double>::infinity();
  if (cond > 1e12)
    throw Error("reconstructor: GᵀG is numerically singular (condition estimate " +
                std::to_string(cond) + ")");
}

Vector Reconstructor::solve_coefficients(const Vector& l_ortho) const {
  if (l_ortho.size() != G_.rows()) throw Error("reconstruct: measurement vector has wrong length");
  return qr_.solve(l_ortho);
}

Reconstruction Reconstructor::reconstruct(const Vector& l_ortho) const {
  Reconstruction rec;
  rec.coefficients = solve_coefficients(l_ortho);
  rec.v_star = phi_ * rec.coefficients;
  Vector defect = l_ortho - G_ * rec.coefficients;
  rec.eta_star = space_->W * defect;
  rec.u_star = rec.v_star + rec.eta_star;

  auto& d = rec.diag;
  d.beta = beta_;
  d.eps_hat = eps_hat_;
  d.bound = eps_hat_ / beta_;
  d.n = n();
  d.m = m();
  d.zeta = jm_->zeta;

  Vector constraint = space_->MW.transpose() * rec.u_star - l_ortho;
  double l_norm = l_ortho.norm();
  d.constraint_residual = l_norm > 0 ? constraint.norm() / l_norm : constraint.norm();

  Vector orth = Mphi_.transpose() * rec.eta_star;
  double eta_norm = std::sqrt(std::max(0.0, rec.eta_star.dot(jm_->M * rec.eta_star)));
  d.orthogonality_residual =
      eta_norm > 0 ? orth.lpNorm<Eigen::Infinity>() / eta_norm : orth.lpNorm<Eigen::Infinity>();

  Vector gtl = G_.transpose() * l_ortho;
  Vector neq = G_.transpose() * (G_ * rec.coefficients - l_ortho);
  double gtl_norm = gtl.norm();
  d.normal_eq_residual = gtl_norm > 0 ? neq.norm() / gtl_norm : neq.norm();
  return rec;
}

std::pair<Vector, Vector> solve_saddle(const Vector& l_ortho, const Matrix& phi,
                                       const ObservationSpace& space, const JointMass& jm,
                                       Eigen::Index max_dofs) {
  const Eigen::Index N = phi.rows();
  const Eigen::Index m = space.W.cols();
  if (N > max_dofs)
    throw Error("solve_saddle: dense cross-check restricted to fixtures ≤ " +
                std::to_string(max_dofs) + " DOFs");
  if (l_ortho.size() != m) throw Error("solve_saddle: measurement vector has wrong length");

  Matrix S = Matrix::Zero(N + m, N + m);
  S.topLeftCorner(N, N) = Matrix::Identity(N, N) - phi * (jm.M * phi).transpose();
  S.topRightCorner(N, m) = -space.W;
  S.bottomLeftCorner(m, N) = space.MW.transpose();
  Vector rhs = Vector::Zero(N + m);
  rhs.tail(m) = l_ortho;

  Eigen::PartialPivLU<Matrix> lu(S);
  Vector sol = lu.solve(rhs);
  for (int it = 0; it < 2; ++it) sol += lu.solve(rhs - S * sol);
  double residual = (S * sol - rhs).norm();
  double scale = std::max(rhs.norm(), 1e-300);
  if (!(residual < 1e-6 * scale))
    throw Error("solve_saddle: singular saddle system (residual " + std::to_string(residual) +
                ", β = " + std::to_string(stability_constant(space.MW.transpose() * phi)) + ")");
  return {sol.head(N), sol.tail(m)};
}

double apriori_bound(double eps_hat, double beta) {
  if (!(beta > 0)) throw Error("apriori_bound: β must be positive");
  return eps_hat / beta;
}

double apriori_bound_joint(double eps_u, double eps_p, double zeta, double beta) {
  if (!(beta > 0)) throw Error("apriori_bound: β must be positive");
  return std::sqrt(eps_u * eps_u + zeta * eps_p * eps_p) / beta;
}

}  // namespace poro
