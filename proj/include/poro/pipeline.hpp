#pragma once

#include "poro/fem.hpp"
#include "poro/io.hpp"
#include "poro/mesh.hpp"
#include "poro/observation.hpp"
#include "poro/pbdw.hpp"
#include "poro/rom.hpp"
#include "poro/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace poro {

struct ObservationConfig {
  std::vector<double> planes{5.0};
  double edge = 1.0;  // voxel edge (cm)
};

struct SliceStudyConfig {
  std::vector<double> single{5.0};
  std::vector<double> three{3.0, 5.0, 7.0};
  double full_edge = 1.25;  // full-domain grid at lower resolution
};

struct BiomarkerConfig {
  std::array<double, 2> normal{1.0e4, 1.02e4};     // dyn/cm²
  std::array<double, 2> increased{1.08e4, 1.1e4};  // dyn/cm²
  int per_group = 8;
  double threshold = 1.05e4;  // midpoint between the group ranges
  double noise = 0.1;         // Ξ for the noisy repeat
};

struct ExperimentConfig {
  std::string preset = "desk";
  PhantomConfig phantom;
  std::string mesh_file;  // optional poromesh path; overrides the phantom
  MaterialParameters base;
  ParameterRanges ranges;
  std::array<int, 4> training_counts{2, 2, 2, 2};
  SamplingStrategy strategy = SamplingStrategy::Grid;
  int random_total = 0;
  NewmarkConfig time_cfg{1e-3, 20, 0.5};
  // Extra steps solved (and discarded) before the observed window so the
  // retained cycle is the settled vibration regime.
  int settle_steps = 20;
  ObservationConfig obs;
  SliceStudyConfig slices;
  std::vector<double> noise_levels{0.0, 0.05, 0.1};
  int validation_count = 18;
  std::vector<double> mismatch_deltas{0.0, 1e-6, 1e-5, 1e-4, 3.1623e-4, 1e-3, 3.1623e-3};
  BiomarkerConfig biomarker;
  std::string out_dir = "out";
  std::uint64_t seed = 20260808;
  int workers = 2;
  int max_modes = 0;  // 0 = all kept POD modes (capped at m)
  int forced_n = 0;   // 0 = minimize ε̂_n/β(n)
  StressLaw law = StressLaw::Hooke;
  double zeta_override = 0;            // 0 = derived from the manifold
  double zeta_scale = 1.0;             // multiplier on the derived metric weight
  double frontal_length_override = 0;  // 0 = bounding-box y extent
};

ExperimentConfig desk_preset();
ExperimentConfig paper_preset();

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);
std::string config_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

/// Everything the offline phase produces. Reconstructor keeps pointers into
/// the model, hence the unique_ptr handoff from run_training.
struct TrainedModel {
  ExperimentConfig cfg;
  Mesh mesh;
  JointMass jm;
  SnapshotSet snapshots;  // absolute states
  ReducedBasis basis;     // POD of deviations from the reference state
  VoxelGrid grid;
  FunctionalMatrix functionals;
  ObservationSpace space;
  DimensionSelection selection;
  double zeta = 1;
  std::unique_ptr<Reconstructor> recon;

  /// Reference (equilibrium) state: zero displacement, p ≡ p_csf. The
  /// reduced space is affine: u_ref + span(Φ); representers cannot see
  /// u_ref, so measurements are unchanged. Reconstructions are deviations;
  /// absolute states are u_ref + u*.
  Vector u_ref;

  Matrix Mphi;  // M_ζ Φ (cached)
  Matrix Hu;    // Φ_uᵀ M_u Φ_u
  Matrix Hp;    // Φ_pᵀ M_p Φ_p

  TrainedModel() = default;
  TrainedModel(const TrainedModel&) = delete;
  TrainedModel& operator=(const TrainedModel&) = delete;

  int n_star() const { return recon->n(); }
};

/// Offline phase: sampling, manifold, ζ, POD, observation space, dimension
/// selection; persists artifacts under cfg.out_dir.
std::unique_ptr<TrainedModel> run_training(const ExperimentConfig& cfg, bool persist = true);

/// Loads training artifacts sufficiently to reconstruct from stored
/// measurements (mesh, basis, observation space, n*). Snapshots stay on disk.
std::unique_ptr<TrainedModel> load_trained(const std::filesystem::path& dir);

/// Per-n sweep context for one observation grid against the trained basis.
struct GridContext {
  const ObservationSpace* space = nullptr;
  Matrix G_full;  // m × n_max
  Matrix R;       // n_max × n_max leading triangle of QR(G_full)
  Eigen::HouseholderQR<Matrix> qr;
  std::vector<double> beta_of_n;

  int n_max() const { return static_cast<int>(G_full.cols()); }
};

GridContext make_grid_context(const TrainedModel& model, const ObservationSpace& space);

/// Ground truth and cached inner products for one held-out case.
struct ValidationCase {
  ParameterSample sample;
  std::vector<Vector> truth;  // absolute states, solved steps only
  MeasurementSeries clean;    // raw functional values per solved step
  Matrix a, au, ap;           // n_max × S caches on the deviation truth
  Vector tn2, tun2, tpn2;     // absolute truth squared norms (denominators)
  Vector dn2, dun2, dpn2;     // deviation truth squared norms (numerators)
  bool failed = false;
  std::string error;
};

struct StepErrors {
  double e_up, e_u, e_p;
};

/// Exact cached evaluation of the joint and component relative errors for
/// reduced dimension n; b is the grid-side cache 𝒲ᵀM·truth, qt the cached
/// Qᵀ l̃ per step.
StepErrors evaluate_errors(const TrainedModel& model, const GridContext& gc,
                           const ValidationCase& vc, const Matrix& b, const Matrix& qt,
                           const Matrix& l_ortho, int step, int n);

struct CaseResult {
  int case_id = 0;
  MaterialParameters theta;
  std::vector<double> e_up, e_u, e_p;  // per solved step
  double e_up_T = 0, e_u_T = 0, e_p_T = 0;
  double max_constraint = 0, max_orthogonality = 0, max_normal_eq = 0;
  double max_error_over_bound = 0;
  bool failed = false;
  std::string error;
};

struct ValidationResult {
  std::vector<ValidationCase> cases;
  std::vector<CaseResult> results;
  std::vector<double> mean_e_up_t, mean_e_u_t, mean_e_p_t;  // per-step means
  double mean_e_up_T = 0, mean_e_u_T = 0, mean_e_p_T = 0;
  double max_constraint = 0, max_orthogonality = 0, max_normal_eq = 0;
  double max_error_over_bound = 0;  // criterion: ≤ 1 means the a-priori bound held
  double bound = 0;                 // β⁻¹ ε̂ at n*
};

ValidationResult run_validation(const TrainedModel& model, bool write_csv = true);

struct NoiseStudyRow {
  double xi;
  int n;
  double e_up_T, e_u_T, e_p_T;
};

struct NoiseStudyResult {
  std::vector<NoiseStudyRow> rows;
  std::vector<std::pair<double, int>> optimal_n;  // per Ξ, argmin of e_up_T
};

NoiseStudyResult run_noise_study(const TrainedModel& model, const ValidationResult& validation,
                                 bool write_csv = true);

struct SliceStudyRow {
  std::string label;
  int m = 0, n_star = 0;
  double beta = 0;
  double e_up_T, e_u_T, e_p_T;
};

std::vector<SliceStudyRow> run_slice_study(const TrainedModel& model,
                                           const ValidationResult& validation,
                                           bool write_csv = true);

struct MismatchRow {
  double delta;
  double e_up_T, e_u_T, e_p_T;
};

std::vector<MismatchRow> run_mismatch_study(const TrainedModel& model,
                                            const ValidationResult& validation,
                                            bool write_csv = true);

/// p_v: trapezoid time average of the ventricle-surface mean pressure over
/// the states stored in the series.
double compute_biomarker(const TimeSeries& series, const Mesh& mesh);

struct PatientResult {
  int id;
  bool increased_truth;
  MaterialParameters theta;
  double p_v_true, p_v_rec, p_v_rec_noisy;
  bool classified_increased, classified_increased_noisy;
  bool correct, correct_noisy;
  double rel_err, rel_err_noisy;
};

struct ClassificationResult {
  std::vector<PatientResult> patients;
  int correct_noise_free = 0, correct_noisy = 0;
  double max_rel_err = 0, max_rel_err_noisy = 0;
};

ClassificationResult run_classification(const TrainedModel& model, bool write_csv = true);

/// Aggregated summary.json (β, ζ, n*, ε̂ curve, study tables, seeds, hash).
void export_report(const TrainedModel& model, const ValidationResult* validation,
                   const NoiseStudyResult* noise, const std::vector<SliceStudyRow>* slices,
                   const std::vector<MismatchRow>* mismatch, const ClassificationResult* classify,
                   const std::filesystem::path& path);

}  // namespace poro
