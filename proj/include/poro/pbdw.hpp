#pragma once

#include "poro/fem.hpp"
#include "poro/observation.hpp"
#include "poro/rom.hpp"
#include "poro/types.hpp"

#include <Eigen/QR>

#include <vector>

namespace poro {

/// Cross-Gramian G_ij = ⟨w_i, ρ_j⟩_ζ between the observation space and the
/// reduced basis.
Matrix cross_gramian(const ObservationSpace& space, const Matrix& phi);
Matrix cross_gramian(const Matrix& W, const SparseMatrix& M, const Matrix& phi);

/// Stability (observability) constant β = σ_min(G) ∈ [0, 1]; β² equals the
/// smallest eigenvalue of GᵀG.
double stability_constant(const Matrix& G);

struct DimensionSelection {
  int n_star = 0;                // 1-based selected dimension
  std::vector<double> eps_hat;   // ε̂_n, n = 1..n_max
  std::vector<double> beta;      // β(V_n, W), n = 1..n_max
  std::vector<double> bound;     // ε̂_n / β(n)
};

/// n* = argmin ε̂_n / β(n), ties toward smaller n; only n with β(n) > 0 are
/// admissible.
int select_dimension(const std::vector<double>& eps_hat, const std::vector<double>& beta);

/// Sweep over nested bases using one QR of the full cross-Gramian: the
/// singular values of G[:, :n] are those of the leading n×n triangle of R.
DimensionSelection select_dimension(const Vector& eigenvalues, const Matrix& G_full);

struct ReconstructionDiagnostics {
  double beta = 0;
  double eps_hat = 0;
  double bound = 0;                   // β⁻¹ ε̂_n
  double constraint_residual = 0;     // ‖𝒲ᵀM u* − l‖ / ‖l‖
  double orthogonality_residual = 0;  // max_i |⟨η*, ρ_i⟩_ζ| / ‖η*‖_ζ
  double normal_eq_residual = 0;      // ‖Gᵀ(Gc − l)‖ / ‖Gᵀl‖
  int n = 0, m = 0;
  double zeta = 1;
};

struct Reconstruction {
  Vector v_star;        // predictor in V_n
  Vector eta_star;      // corrector in W ∩ V_n^⊥ (pressure block zero)
  Vector u_star;        // v* + η*
  Vector coefficients;  // c with v* = Φ c
  ReconstructionDiagnostics diag;
};

/// PBDW reconstruction operator for a fixed reduced dimension n. Immutable
/// after construction; reconstruct() is safe to call concurrently.
class Reconstructor {
public:
  /// Requires m ≥ n and β > 0; throws otherwise. `space` and `jm` must
  /// outlive the reconstructor.
  Reconstructor(const ReducedBasis& basis, int n, const ObservationSpace& space,
                const JointMass& jm);

  /// Closed-form predictor/corrector: v* = Φ(GᵀG)⁻¹Gᵀl (via rank-revealing
  /// QR of G), η* = 𝒲(l − 𝒲ᵀM v*), u* = v* + η*.
  Reconstruction reconstruct(const Vector& l_ortho) const;

  double beta() const { return beta_; }
  double beta_gram() const { return beta_ * beta_; }  // min singular value of GᵀG
  double eps_hat() const { return eps_hat_; }
  double bound() const { return eps_hat_ / beta_; }
  int n() const { return static_cast<int>(phi_.cols()); }
  int m() const { return static_cast<int>(G_.rows()); }
  const Matrix& G() const { return G_; }
  const Matrix& phi() const { return phi_; }
  const ObservationSpace& space() const { return *space_; }
  const JointMass& joint_mass() const { return *jm_; }

  /// Least-squares coefficients c = argmin ‖Gc − l‖.
  Vector solve_coefficients(const Vector& l_ortho) const;

private:
  Matrix phi_;    // N × n
  Matrix G_;      // m × n
  Matrix Mphi_;   // M_ζ Φ (cached for residuals)
  const ObservationSpace* space_;
  const JointMass* jm_;
  Eigen::ColPivHouseholderQR<Matrix> qr_;
  double beta_ = 0;
  double eps_hat_ = 0;
};

/// Euler-Lagrange cross-check: solves the dense saddle-point system
/// [[I − ΦΦᵀM, −𝒲], [𝒲ᵀM, 0]] (u, λ) = (0, l). Restricted to small
/// fixtures; returns (u, λ).
std::pair<Vector, Vector> solve_saddle(const Vector& l_ortho, const Matrix& phi,
                                       const ObservationSpace& space, const JointMass& jm,
                                       Eigen::Index max_dofs = 5000);

/// A-priori bound β⁻¹·ε̂_n, and the joint-tail form
/// sqrt(ε̂_U² + ζ·ε̂_P²)·β⁻¹.
double apriori_bound(double eps_hat, double beta);
double apriori_bound_joint(double eps_u, double eps_p, double zeta, double beta);

}  // namespace poro
