#pragma once

#include "poro/mesh.hpp"
#include "poro/types.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <functional>
#include <memory>
#include <vector>

namespace poro {

/// Model parameters in CGS units (cm, g, s, dyn). The first four form the
/// sampled parameter vector θ; the rest are fixed physical constants.
struct MaterialParameters {
  double kappa = 5e-9;          // permeability (cm²)
  double E = 5e5;               // Young modulus (dyn/cm²)
  double nu = 0.42;             // Poisson ratio
  double p_ventricles = 1.05e4; // ventricular pressure (dyn/cm²)

  double alpha = 1.0;   // Biot-Willis
  double mu_f = 1e-2;   // fluid viscosity (P)
  double rho = 1.0;     // solid density (g/cm³)
  double skempton = 0.99;
  double p_csf = 1e4;   // outer CSF pressure (dyn/cm²)
  double xi = -500.0;   // pulse magnitude (dyn)
  double omega = 50.0;  // pulse frequency (Hz)

  void validate() const;  // throws Error
};

/// Which (ε(u), ε(v)) coefficient the elastic stiffness uses. Hooke assembles
/// the constitutive law with 2·mu_s = E/(1+ν); TwoE uses the literal 2E
/// coefficient of the printed weak form.
enum class StressLaw { Hooke, TwoE };

struct DerivedModuli {
  double lambda;  // Lamé first parameter (dyn/cm²)
  double mu_s;    // shear-like modulus in the stress law (dyn/cm²)
  double S_eps;   // storage coefficient (cm²/dyn)
};

DerivedModuli derive_moduli(const MaterialParameters& theta, StressLaw law = StressLaw::Hooke);

/// DOF layout: displacement node-major (3*node + component), pressure block
/// appended (3*n_nodes + node). Matches the PORO1 state file layout.
inline int udof(int node, int comp) { return 3 * node + comp; }
inline int pdof(int n_nodes, int node) { return 3 * n_nodes + node; }

enum class TimeProfile { Constant, Ramp, Quadratic };  // g, g·t, g·t²

/// Block matrices of the semi-discrete system, physical factors included:
/// M_U = ρ·(vector mass), A_U = elastic stiffness, B = α·(∇p, v),
/// Bp = α·(∇·u, q), M_P = S_ε·(scalar mass), A_P = (κ/μ_f)·(scalar stiffness).
/// Raw (factor-free) Gram matrices are kept for norms and reassembly.
struct FemSystem {
  int n_nodes = 0;
  Eigen::Index n_dof = 0;
  MaterialParameters theta;
  DerivedModuli moduli{};
  StressLaw law = StressLaw::Hooke;

  SparseMatrix mass_scalar;    // nodes×nodes
  SparseMatrix stiff_scalar;   // nodes×nodes
  SparseMatrix eps_gram;       // 3n×3n
  SparseMatrix div_gram;       // 3n×3n

  SparseMatrix M_U, A_U, B, Bp, M_P, A_P;

  // Dirichlet data attached by apply_boundary_conditions (or tests).
  std::vector<int> dirichlet_dofs;
  Vector dirichlet_values;
  TimeProfile dirichlet_profile = TimeProfile::Constant;
  int dirichlet_clashes = 0;  // ventricle-over-csf precedence resolutions

  bool has_bc() const { return !dirichlet_dofs.empty(); }
};

FemSystem assemble_blocks(const Mesh& mesh, const MaterialParameters& theta,
                          StressLaw law = StressLaw::Hooke);

/// Joint L² metric ⟨(u,p),(v,q)⟩_ζ = (u,v) + ζ(p,q) as a block-diagonal SPD
/// matrix, plus the factorization used for Riesz solves.
struct JointMass {
  double zeta = 1.0;
  int n_nodes = 0;
  Eigen::Index n_dof = 0;
  SparseMatrix M;            // N×N
  SparseMatrix mass_scalar;  // nodes×nodes

  double dot(const Vector& x, const Vector& y) const { return x.dot(M * y); }
  double norm(const Vector& x) const;
  double u_norm2(const Vector& state) const;
  double p_norm2(const Vector& state) const;  // unweighted L² of the pressure block

  /// Solves M_ζ w = rhs (used for Riesz representers).
  Vector solve(const Vector& rhs) const;

  std::shared_ptr<Eigen::SimplicialLLT<SparseMatrix>> mass_llt;  // scalar mass factor
};

JointMass assemble_joint_mass(const Mesh& mesh, double zeta);

/// u = 0 (or (δ,δ,δ)) on Γ_neck, p = p_ventricles on Γ_ventricles,
/// p = p_csf on Γ_MRE; ventricle value wins on shared nodes.
void apply_boundary_conditions(FemSystem& sys, const Mesh& mesh, double neck_delta = 0.0);

/// Replaces the Dirichlet data wholesale (manufactured-solution tests).
void set_dirichlet(FemSystem& sys, std::vector<int> dofs, Vector values, TimeProfile profile);

/// A load with separable time dependence: vector(t) = spatial · amplitude(t).
struct LoadTerm {
  Vector spatial;
  std::function<double(double)> amplitude;
};

/// Spatial part of the MRE traction: ξ s(x) d̂ tested on Γ_MRE, with
/// s(x) = 1 − y/L. Full load is spatial · sin(2πωt).
Vector assemble_traction_spatial(const Mesh& mesh, const MaterialParameters& theta,
                                 const Vec3& direction = Vec3(0, 1, 0));
LoadTerm traction_load(const Mesh& mesh, const MaterialParameters& theta,
                       const Vec3& direction = Vec3(0, 1, 0));

/// Traction load evaluated at time t (zero entries off Γ_MRE).
Vector assemble_load(const Mesh& mesh, const MaterialParameters& theta, double t,
                     const Vec3& direction = Vec3(0, 1, 0));

/// Volumetric sources (f_u, f_p) tested against the P1 basis; for
/// manufactured solutions. Second-row scaling is applied by the solver.
Vector assemble_volume_load(const Mesh& mesh, const std::function<Vec3(const Vec3&)>& f_u,
                            const std::function<double(const Vec3&)>& f_p);

struct NewmarkConfig {
  double tau = 1e-3;      // time step (s)
  int steps = 20;         // steps per run (one pulse period by default)
  double beta_hat = 0.5;  // Newmark β̂ ∈ (0, 1/2]
  // Initial pressure level (uniform). Zero is the literal homogeneous
  // state; forward runs start from the reference CSF pressure so the
  // transient carries only the ventricular excess.
  double initial_pressure = 0.0;
};

/// Forward trajectory; states[0] is the homogeneous initial state at t=0,
/// states[k] the solution at t = k·τ.
struct TimeSeries {
  double tau = 0;
  double period = 0;  // pulse period T (s)
  std::vector<Vector> states;
  int solved_steps() const { return static_cast<int>(states.size()) - 1; }
};

/// Time integrator for M ÿ + C ẏ + A y = F(t): Newmark update for the
/// second-order (displacement) terms, ẏ_{n+1} = ẏ_n + τ ÿ_{n+1} for the
/// first-order ones. The constant iteration matrix (second row scaled by
/// β̂τ) is factorized once and reused for every step.
class NewmarkSolver {
public:
  NewmarkSolver(const FemSystem& sys, NewmarkConfig cfg, std::vector<LoadTerm> loads);

  void reset();
  void advance();  // one step
  TimeSeries run();

  const Vector& y() const { return y_; }
  const Vector& ydot() const { return ydot_; }
  const Vector& yddot() const { return yddot_; }
  double time() const { return t_; }
  int step_index() const { return step_; }
  void set_state(const Vector& y, const Vector& ydot, const Vector& yddot, int step_index);

  /// Unconstrained iteration matrix and the right-hand side of the next
  /// step; exposed so tests can run an independent dense solve.
  const SparseMatrix& iteration_matrix() const { return K_; }
  const SparseMatrix& constrained_matrix() const { return Kc_; }
  Vector step_rhs(const Vector& y, const Vector& ydot, const Vector& yddot, double t_next) const;

private:
  const FemSystem& sys_;
  NewmarkConfig cfg_;
  std::vector<LoadTerm> loads_;
  SparseMatrix K_, Kc_;
  Vector lift_;  // K · (base dirichlet values)
  Eigen::SparseLU<SparseMatrix> lu_;
  Vector y_, ydot_, yddot_;
  double t_ = 0;
  int step_ = 0;

  double bc_scale(double t) const;
};

/// Unconstrained Newmark iteration matrix
/// [[M_U/(β̂τ²) + A_U, B], [B′, M_P + β̂τ A_P]] (Dirichlet rows untouched).
SparseMatrix newmark_matrix(const FemSystem& sys, double tau, double beta_hat);

TimeSeries newmark_solve(const FemSystem& sys, NewmarkConfig cfg, std::vector<LoadTerm> loads);

/// |||(u,p)|||² = (ρ/τ²)‖u‖² + 2E‖ε(u)‖² + S_ε‖p‖² + (κτ/μ_f)‖∇p‖².
double triple_norm_squared(const FemSystem& sys, const Vector& state, double tau);
double triple_norm(const FemSystem& sys, const Vector& state, double tau);

/// The one-step bilinear form evaluated at (x, x): xᵀ K_newmark x.
double bilinear_form(const FemSystem& sys, const Vector& state, double tau, double beta_hat);

}  // namespace poro
