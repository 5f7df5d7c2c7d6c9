#pragma once

#include "poro/fem.hpp"
#include "poro/mesh.hpp"
#include "poro/types.hpp"

#include <cstdint>
#include <vector>

namespace poro {

struct VoxelBox {
  int id;
  Vec3 lo, hi;
  Vec3 center() const { return 0.5 * (lo + hi); }
};

/// Axis-aligned voxel boxes generated from slice planes; voxels with empty
/// mesh intersection are dropped (and counted).
struct VoxelGrid {
  std::vector<VoxelBox> voxels;
  std::vector<double> planes;
  double edge = 0;
  int dropped = 0;

  int size() const { return static_cast<int>(voxels.size()); }
};

/// Tiles each slice's bounding rectangle with edge³ voxels centered on the
/// plane, in lexicographic center order.
VoxelGrid make_slice_voxels(const Mesh& mesh, const std::vector<double>& planes, double edge);

/// Rows indexed by (voxel, component) as 3*voxel + component; columns are
/// displacement DOFs (pressure columns identically zero).
/// Row (i,j) applied to a coefficient vector v gives ∫_{Ω_i∩Ω} v_j dx,
/// by element quadrature with point-in-box counting.
struct FunctionalMatrix {
  SparseMatrix L;  // m × N
  int n_voxels = 0;
  bool normalized = false;

  int m() const { return static_cast<int>(L.rows()); }
};

FunctionalMatrix assemble_functionals(const VoxelGrid& grid, const Mesh& mesh, bool normalize = false);

/// Raw Riesz representers: column i solves M_ζ w_i = (row i of L)ᵀ.
Matrix riesz_representers(const FunctionalMatrix& functionals, const JointMass& jm);

/// M_ζ-orthonormal measurement space with the triangular change of basis
/// recorded so raw functional values can be mapped into it.
struct ObservationSpace {
  Matrix W;                 // N × m, WᵀM_ζW = I
  Matrix MW;                // M_ζ · W (cached)
  Matrix R;                 // kept × raw MGS coefficients: W_raw = W · R
  std::vector<int> kept;    // indices of raw columns that survived
  std::vector<int> dropped; // raw columns dropped as numerically dependent
  double zeta = 1.0;
  VoxelGrid grid;           // provenance

  int m() const { return static_cast<int>(W.cols()); }

  /// Maps raw functional values l_raw to the orthonormal basis, solving
  /// Rᵀ l̃ = l_raw on the kept columns.
  Vector to_orthonormal(const Vector& l_raw) const;
};

/// Modified Gram-Schmidt in the M_ζ inner product with one full
/// re-orthogonalization pass; columns with norm below 1e-12 of the largest
/// initial column norm are dropped.
ObservationSpace orthonormalize(const Matrix& w_raw, const JointMass& jm);

struct MeasurementSeries {
  double tau = 0;
  double noise_intensity = 0;  // Ξ
  std::uint64_t seed = 0;
  std::vector<Vector> values;  // one vector of m raw functional values per step

  int steps() const { return static_cast<int>(values.size()); }
};

/// l(t) = L · state(t). By default the homogeneous initial state is skipped
/// so values[k] corresponds to the k+1-th solved step.
MeasurementSeries observe(const TimeSeries& series, const FunctionalMatrix& functionals,
                          bool include_initial = false);

/// Adds i.i.d. zero-mean Gaussian noise with σ = Ξ · max_{i,t}|l_i(t)| to
/// every entry; bit-exact passthrough for Ξ = 0; deterministic under seed.
MeasurementSeries add_noise(const MeasurementSeries& ms, double intensity, std::uint64_t seed);

}  // namespace poro
