#pragma once

#include "poro/fem.hpp"
#include "poro/mesh.hpp"
#include "poro/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace poro {

/// Training intervals for θ = (κ, E, ν, p_ventricles); defaults are the
/// physiological ranges the manifold is sampled from.
struct ParameterRanges {
  std::array<double, 2> kappa{1e-9, 1e-8};        // cm²
  std::array<double, 2> E{1e5, 1e6};              // dyn/cm²
  std::array<double, 2> nu{0.40, 0.45};
  std::array<double, 2> p_ventricles{1e4, 1.1e4}; // dyn/cm²

  void validate() const;
};

struct ParameterSample {
  MaterialParameters theta;
  int id = 0;
  std::string provenance;
};

enum class SamplingStrategy { Grid, Random, Lhs };

/// Uniform tensor grid (counts per axis; a single count places the
/// midpoint), uniform random samples, or Latin-hypercube samples (uniform
/// marginals with stratified per-axis coverage); deterministic under seed.
std::vector<ParameterSample> sample_parameters(const ParameterRanges& ranges,
                                               const std::array<int, 4>& counts,
                                               SamplingStrategy strategy, std::uint64_t seed,
                                               int random_total = 0,
                                               const MaterialParameters& base = {});

/// Uniform draws rejected against an existing sample set (exact tuple
/// comparison), so validation cases never coincide with training cases.
std::vector<ParameterSample> sample_held_out(const ParameterRanges& ranges, int count,
                                             std::uint64_t seed,
                                             const std::vector<ParameterSample>& exclude,
                                             const MaterialParameters& base = {});

struct SnapshotColumn {
  int sample_id;
  int step;  // solved step index, 1-based
};

struct SnapshotSet {
  Matrix A;  // N × K, columns are joint (u,p) states
  std::vector<SnapshotColumn> columns;
  std::vector<ParameterSample> samples;
  double tau = 0;
  int steps_per_sample = 0;
  std::vector<int> failed_samples;  // per-sample failures, isolated

  Eigen::Index K() const { return A.cols(); }
};

/// One forward simulation per sample; the retained solved steps become
/// columns. settle_steps extra steps are solved first and discarded, so the
/// retained window is the settled regime (an MRE acquisition images the
/// established vibration, not the startup transient).
/// Per-sample failures are recorded and do not abort the remaining runs.
SnapshotSet generate_manifold(const Mesh& mesh, const std::vector<ParameterSample>& samples,
                              const NewmarkConfig& time_cfg, StressLaw law = StressLaw::Hooke,
                              int workers = 1, int settle_steps = 0);

/// ζ = max_k ‖u_k‖_{L²} / max_k ‖p_k‖_{L²} over the training snapshots.
double compute_zeta(const SnapshotSet& snapshots, const JointMass& jm);

struct ReducedBasis {
  Matrix Phi;          // N × n_keep, M_ζ-orthonormal, by decreasing eigenvalue
  Vector eigenvalues;  // all K eigenvalues, nonincreasing, clamped at zero
  double zeta = 1.0;
  int clamped = 0;     // negative eigenvalues clamped to zero

  int n() const { return static_cast<int>(Phi.cols()); }
};

/// Covariance-route POD: C = AᵀM_ζA, C = BΛBᵀ, Φ_i = A b_i / √Λ_i. Keeps at
/// most max_modes modes (0 = all above the 1e-12·Λ₁ drop tolerance); modes
/// are sign-fixed so each column's largest-magnitude entry is positive.
ReducedBasis compute_pod(const SnapshotSet& snapshots, const JointMass& jm, int max_modes = 0);

/// ε̂_n = sqrt(Σ_{i>n} Λ_i / Σ_i Λ_i); ε̂_0 = 1, ε̂_K = 0, nonincreasing.
double pod_tail_error(const Vector& eigenvalues, int n);

/// Component tails (ε̂_{U,n}, ε̂_{P,n}) from the training residuals, with
/// ε̂_{U,n}² + ζ·ε̂_{P,n}² equal to ε̂_n² by block decomposition.
std::pair<double, double> component_tail_errors(const SnapshotSet& snapshots,
                                                const ReducedBasis& basis, const JointMass& jm,
                                                int n);

}  // namespace poro
