#include "poro/pipeline.hpp"

#include "poro/parallel.hpp"
#include "poro/rng.hpp"

#include <Eigen/SVD>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace poro {

using ordered_json = nlohmann::ordered_json;

namespace {

// seed streams
constexpr std::uint64_t kStreamValidation = 2;
constexpr std::uint64_t kStreamClassifyNormal = 3;
constexpr std::uint64_t kStreamClassifyIncreased = 4;
constexpr std::uint64_t kStreamTrainingRandom = 1;

std::uint64_t noise_seed(std::uint64_t master, int case_id, int xi_index) {
  return derive_seed(master, 1000 + static_cast<std::uint64_t>(case_id) * 64 +
                                 static_cast<std::uint64_t>(xi_index));
}

std::uint64_t classify_noise_seed(std::uint64_t master, int patient) {
  return derive_seed(master, 2000 + static_cast<std::uint64_t>(patient));
}

}  // namespace

ExperimentConfig desk_preset() {
  ExperimentConfig cfg;  // defaults are the desk preset
  cfg.strategy = SamplingStrategy::Lhs;
  cfg.random_total = 16;
  // Pressure weight an order below the balanced value: keeps the pressure
  // directions inside the observable range of the dimension selection.
  cfg.zeta_scale = 0.1;
  // Cap the retained POD modes at the per-trajectory step count: beyond it
  // the eigenvalue tail is numerical-rank noise and the a-priori bound
  // ε̂/β dips spuriously in the unobservable regime.
  cfg.max_modes = cfg.time_cfg.steps;
  return cfg;
}

ExperimentConfig paper_preset() {
  ExperimentConfig cfg;
  cfg.preset = "paper";
  cfg.mesh_file = "brain.poromesh";  // user-supplied segmented mesh
  cfg.training_counts = {4, 4, 4, 8};
  cfg.time_cfg = NewmarkConfig{5e-4, 40, 0.5};
  cfg.validation_count = 18;
  cfg.frontal_length_override = 16.86;
  cfg.obs.planes = {0.0};
  return cfg;
}

namespace {

ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["preset"] = c.preset;
  j["phantom"] = {{"outer_lo", {c.phantom.outer_lo.x(), c.phantom.outer_lo.y(), c.phantom.outer_lo.z()}},
                  {"outer_hi", {c.phantom.outer_hi.x(), c.phantom.outer_hi.y(), c.phantom.outer_hi.z()}},
                  {"cavity_lo", {c.phantom.cavity_lo.x(), c.phantom.cavity_lo.y(), c.phantom.cavity_lo.z()}},
                  {"cavity_hi", {c.phantom.cavity_hi.x(), c.phantom.cavity_hi.y(), c.phantom.cavity_hi.z()}},
                  {"neck", {c.phantom.neck_xmin, c.phantom.neck_xmax, c.phantom.neck_ymin, c.phantom.neck_ymax}},
                  {"h", c.phantom.h}};
  j["mesh_file"] = c.mesh_file;
  j["constants"] = {{"alpha", c.base.alpha},   {"mu_f", c.base.mu_f}, {"rho", c.base.rho},
                    {"skempton", c.base.skempton}, {"p_csf", c.base.p_csf}, {"xi", c.base.xi},
                    {"omega", c.base.omega}};
  j["theta_ranges"] = {{"kappa", c.ranges.kappa},
                       {"E", c.ranges.E},
                       {"nu", c.ranges.nu},
                       {"p_ventricles", c.ranges.p_ventricles}};
  j["training"] = {{"counts", c.training_counts},
                   {"strategy", c.strategy == SamplingStrategy::Grid      ? "grid"
                                : c.strategy == SamplingStrategy::Random ? "random"
                                                                         : "lhs"},
                   {"random_total", c.random_total}};
  j["time"] = {{"tau", c.time_cfg.tau}, {"steps", c.time_cfg.steps}, {"beta_hat", c.time_cfg.beta_hat}, {"settle_steps", c.settle_steps}};
  j["observation"] = {{"planes", c.obs.planes}, {"edge", c.obs.edge}};
  j["slice_study"] = {{"single", c.slices.single}, {"three", c.slices.three}, {"full_edge", c.slices.full_edge}};
  j["noise_levels"] = c.noise_levels;
  j["validation_count"] = c.validation_count;
  j["mismatch_deltas"] = c.mismatch_deltas;
  j["biomarker"] = {{"normal", c.biomarker.normal},
                    {"increased", c.biomarker.increased},
                    {"per_group", c.biomarker.per_group},
                    {"threshold", c.biomarker.threshold},
                    {"noise", c.biomarker.noise}};
  j["out_dir"] = c.out_dir;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["max_modes"] = c.max_modes;
  j["forced_n"] = c.forced_n;
  j["stress_law"] = c.law == StressLaw::Hooke ? "hooke" : "two_e";
  j["zeta_override"] = c.zeta_override;
  j["zeta_scale"] = c.zeta_scale;
  j["frontal_length_override"] = c.frontal_length_override;
  return j;
}

template <typename T>
void maybe(const ordered_json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Vec3 vec3_of(const ordered_json& j) { return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }

ExperimentConfig from_json(const ordered_json& j) {
  ExperimentConfig c;
  maybe(j, "preset", c.preset);
  if (c.preset == "paper") c = paper_preset();
  else c = desk_preset();
  maybe(j, "preset", c.preset);
  if (j.contains("phantom")) {
    const auto& p = j.at("phantom");
    if (p.contains("outer_lo")) c.phantom.outer_lo = vec3_of(p.at("outer_lo"));
    if (p.contains("outer_hi")) c.phantom.outer_hi = vec3_of(p.at("outer_hi"));
    if (p.contains("cavity_lo")) c.phantom.cavity_lo = vec3_of(p.at("cavity_lo"));
    if (p.contains("cavity_hi")) c.phantom.cavity_hi = vec3_of(p.at("cavity_hi"));
    if (p.contains("neck")) {
      c.phantom.neck_xmin = p.at("neck").at(0).get<double>();
      c.phantom.neck_xmax = p.at("neck").at(1).get<double>();
      c.phantom.neck_ymin = p.at("neck").at(2).get<double>();
      c.phantom.neck_ymax = p.at("neck").at(3).get<double>();
    }
    if (p.contains("h")) c.phantom.h = p.at("h").get<double>();
  }
  maybe(j, "mesh_file", c.mesh_file);
  if (j.contains("constants")) {
    const auto& k = j.at("constants");
    maybe(k, "alpha", c.base.alpha);
    maybe(k, "mu_f", c.base.mu_f);
    maybe(k, "rho", c.base.rho);
    maybe(k, "skempton", c.base.skempton);
    maybe(k, "p_csf", c.base.p_csf);
    maybe(k, "xi", c.base.xi);
    maybe(k, "omega", c.base.omega);
  }
  if (j.contains("theta_ranges")) {
    const auto& r = j.at("theta_ranges");
    maybe(r, "kappa", c.ranges.kappa);
    maybe(r, "E", c.ranges.E);
    maybe(r, "nu", c.ranges.nu);
    maybe(r, "p_ventricles", c.ranges.p_ventricles);
  }
  if (j.contains("training")) {
    const auto& t = j.at("training");
    maybe(t, "counts", c.training_counts);
    std::string s = c.strategy == SamplingStrategy::Grid      ? "grid"
                    : c.strategy == SamplingStrategy::Random ? "random"
                                                             : "lhs";
    maybe(t, "strategy", s);
    c.strategy = s == "random" ? SamplingStrategy::Random
                 : s == "lhs"  ? SamplingStrategy::Lhs
                               : SamplingStrategy::Grid;
    maybe(t, "random_total", c.random_total);
  }
  if (j.contains("time")) {
    const auto& t = j.at("time");
    maybe(t, "tau", c.time_cfg.tau);
    maybe(t, "steps", c.time_cfg.steps);
    maybe(t, "beta_hat", c.time_cfg.beta_hat);
    maybe(t, "settle_steps", c.settle_steps);
  }
  if (j.contains("observation")) {
    maybe(j.at("observation"), "planes", c.obs.planes);
    maybe(j.at("observation"), "edge", c.obs.edge);
  }
  if (j.contains("slice_study")) {
    maybe(j.at("slice_study"), "single", c.slices.single);
    maybe(j.at("slice_study"), "three", c.slices.three);
    maybe(j.at("slice_study"), "full_edge", c.slices.full_edge);
  }
  maybe(j, "noise_levels", c.noise_levels);
  maybe(j, "validation_count", c.validation_count);
  maybe(j, "mismatch_deltas", c.mismatch_deltas);
  if (j.contains("biomarker")) {
    const auto& b = j.at("biomarker");
    maybe(b, "normal", c.biomarker.normal);
    maybe(b, "increased", c.biomarker.increased);
    maybe(b, "per_group", c.biomarker.per_group);
    maybe(b, "threshold", c.biomarker.threshold);
    maybe(b, "noise", c.biomarker.noise);
  }
  maybe(j, "out_dir", c.out_dir);
  maybe(j, "seed", c.seed);
  maybe(j, "workers", c.workers);
  maybe(j, "max_modes", c.max_modes);
  maybe(j, "forced_n", c.forced_n);
  if (j.contains("stress_law"))
    c.law = j.at("stress_law").get<std::string>() == "two_e" ? StressLaw::TwoE : StressLaw::Hooke;
  maybe(j, "zeta_override", c.zeta_override);
  maybe(j, "zeta_scale", c.zeta_scale);
  maybe(j, "frontal_length_override", c.frontal_length_override);
  return c;
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path.string());
  ordered_json j = ordered_json::parse(in);
  return from_json(j);
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open config for writing: " + path.string());
  out << to_json(cfg).dump(2) << "\n";
}

std::string config_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(2); }

std::string config_hash(const ExperimentConfig& cfg) {
  ExperimentConfig canonical = cfg;
  canonical.out_dir.clear();   // execution params, not semantics
  canonical.workers = 0;
  std::string s = to_json(canonical).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::unique_ptr<TrainedModel> run_training(const ExperimentConfig& cfg, bool persist) {
  auto model = std::make_unique<TrainedModel>();
  model->cfg = cfg;

  if (!cfg.mesh_file.empty()) model->mesh = load_mesh(cfg.mesh_file);
  else model->mesh = build_phantom(cfg.phantom);
  if (cfg.frontal_length_override > 0)
    model->mesh.frontal_length_override = cfg.frontal_length_override;
  require_valid(model->mesh);

  // Training manifold.
  std::vector<ParameterSample> samples =
      sample_parameters(cfg.ranges, cfg.training_counts, cfg.strategy,
                        derive_seed(cfg.seed, kStreamTrainingRandom), cfg.random_total, cfg.base);
  model->snapshots = generate_manifold(model->mesh, samples, cfg.time_cfg, cfg.law, cfg.workers,
                                       cfg.settle_steps);

  // Reference equilibrium state: zero displacement, reference CSF pressure.
  const int nn0 = model->mesh.num_nodes();
  model->u_ref = Vector::Zero(4 * static_cast<Eigen::Index>(nn0));
  model->u_ref.tail(nn0).setConstant(cfg.base.p_csf);

  // The reduced space is affine around the reference state: ζ and the POD
  // are computed from the deviation snapshots.
  SnapshotSet deviations = model->snapshots;
  deviations.A.colwise() -= model->u_ref;

  // ζ scaling: Eq-style field ratio max‖u‖/max‖p‖ of the deviations,
  // squared for the metric weight so the induced norm ‖u‖² + ζ‖p‖²
  // weights both components equally.
  JointMass unit = assemble_joint_mass(model->mesh, 1.0);
  double zeta_ratio = compute_zeta(deviations, unit);
  model->zeta = cfg.zeta_override > 0 ? cfg.zeta_override
                                      : cfg.zeta_scale * zeta_ratio * zeta_ratio;
  model->jm = assemble_joint_mass(model->mesh, model->zeta);
  model->basis = compute_pod(deviations, model->jm, cfg.max_modes);

  // Observation space (offline: consumes only mesh + grid).
  model->grid = make_slice_voxels(model->mesh, cfg.obs.planes, cfg.obs.edge);
  model->functionals = assemble_functionals(model->grid, model->mesh);
  Matrix w_raw = riesz_representers(model->functionals, model->jm);
  model->space = orthonormalize(w_raw, model->jm);
  model->space.grid = model->grid;

  const int m = model->space.m();
  const int n_max = std::min(m, model->basis.n());
  if (cfg.forced_n > n_max)
    throw Error("training: requested n = " + std::to_string(cfg.forced_n) +
                " exceeds admissible n_max = " + std::to_string(n_max) + " (need m ≥ n)");

  model->Mphi = model->jm.M * model->basis.Phi;
  const int nn = model->mesh.num_nodes();
  Matrix MPhi_p = model->Mphi.bottomRows(nn) / model->zeta;  // M_p Φ_p
  model->Hp = model->basis.Phi.bottomRows(nn).transpose() * MPhi_p;
  model->Hu = model->basis.Phi.topRows(3 * nn).transpose() * model->Mphi.topRows(3 * nn);

  Matrix G_full = model->space.MW.transpose() * model->basis.Phi.leftCols(n_max);
  model->selection = select_dimension(model->basis.eigenvalues, G_full);
  int n_star = cfg.forced_n > 0 ? cfg.forced_n : model->selection.n_star;
  model->recon = std::make_unique<Reconstructor>(model->basis, n_star, model->space, model->jm);

  if (persist) {
    namespace fs = std::filesystem;
    fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    save_config(cfg, dir / "config.json");
    save_mesh(model->mesh, dir / "mesh.poromesh");
    write_matrix_poro1(dir / "snapshots.poro1", model->snapshots.A, model->snapshots.tau);
    write_matrix_poro1(dir / "basis.poro1", model->basis.Phi);
    write_matrix_poro1(dir / "observation_w.poro1", model->space.W);
    write_matrix_poro1(dir / "observation_r.poro1", model->space.R);

    ordered_json sj;
    sj["tau"] = model->snapshots.tau;
    sj["steps_per_sample"] = model->snapshots.steps_per_sample;
    sj["zeta"] = model->zeta;
    sj["failed_samples"] = model->snapshots.failed_samples;
    sj["columns"] = ordered_json::array();
    for (const auto& c : model->snapshots.columns)
      sj["columns"].push_back({{"sample", c.sample_id}, {"step", c.step}});
    sj["samples"] = ordered_json::array();
    for (const auto& s : model->snapshots.samples)
      sj["samples"].push_back({{"id", s.id},
                               {"provenance", s.provenance},
                               {"kappa", s.theta.kappa},
                               {"E", s.theta.E},
                               {"nu", s.theta.nu},
                               {"p_ventricles", s.theta.p_ventricles}});
    std::ofstream(dir / "snapshots.json", std::ios::binary) << sj.dump(2) << "\n";

    ordered_json bj;
    bj["zeta"] = model->zeta;
    bj["reference_pressure"] = cfg.base.p_csf;
    bj["n_kept"] = model->basis.n();
    bj["clamped"] = model->basis.clamped;
    bj["eigenvalues"] = std::vector<double>(model->basis.eigenvalues.data(),
                                            model->basis.eigenvalues.data() + model->basis.eigenvalues.size());
    std::ofstream(dir / "basis.json", std::ios::binary) << bj.dump(2) << "\n";

    ordered_json gj;
    gj["planes"] = model->grid.planes;
    gj["edge"] = model->grid.edge;
    gj["dropped"] = model->grid.dropped;
    gj["kept_columns"] = model->space.kept;
    gj["voxels"] = ordered_json::array();
    for (const auto& v : model->grid.voxels)
      gj["voxels"].push_back({{"id", v.id},
                              {"lo", {v.lo.x(), v.lo.y(), v.lo.z()}},
                              {"hi", {v.hi.x(), v.hi.y(), v.hi.z()}}});
    std::ofstream(dir / "grid.json", std::ios::binary) << gj.dump(2) << "\n";

    ordered_json mj;
    mj["config_hash"] = config_hash(cfg);
    mj["seed"] = cfg.seed;
    mj["zeta"] = model->zeta;
    mj["zeta_field_ratio"] = zeta_ratio;
    mj["m"] = m;
    mj["n_star"] = n_star;
    mj["beta"] = model->recon->beta();
    mj["beta_gram"] = model->recon->beta_gram();
    mj["eps_hat"] = model->recon->eps_hat();
    mj["bound"] = model->recon->bound();
    mj["selection"] = {{"eps_hat", model->selection.eps_hat},
                       {"beta", model->selection.beta},
                       {"bound", model->selection.bound}};
    std::ofstream(dir / "model.json", std::ios::binary) << mj.dump(2) << "\n";
  }
  return model;
}

std::unique_ptr<TrainedModel> load_trained(const std::filesystem::path& dir) {
  auto model = std::make_unique<TrainedModel>();
  model->cfg = load_config(dir / "config.json");
  model->mesh = load_mesh(dir / "mesh.poromesh");
  if (model->cfg.frontal_length_override > 0)
    model->mesh.frontal_length_override = model->cfg.frontal_length_override;

  std::ifstream bin(dir / "basis.json");
  if (!bin) throw Error("cannot open " + (dir / "basis.json").string());
  ordered_json bj = ordered_json::parse(bin);
  model->zeta = bj.at("zeta").get<double>();
  model->basis.zeta = model->zeta;
  std::vector<double> evals = bj.at("eigenvalues").get<std::vector<double>>();
  model->basis.eigenvalues = Eigen::Map<Vector>(evals.data(), static_cast<Eigen::Index>(evals.size()));
  model->basis.Phi = read_matrix_poro1(dir / "basis.poro1");

  model->jm = assemble_joint_mass(model->mesh, model->zeta);

  std::ifstream gin(dir / "grid.json");
  if (!gin) throw Error("cannot open " + (dir / "grid.json").string());
  ordered_json gj = ordered_json::parse(gin);
  model->grid.planes = gj.at("planes").get<std::vector<double>>();
  model->grid.edge = gj.at("edge").get<double>();
  model->grid.dropped = gj.at("dropped").get<int>();
  for (const auto& v : gj.at("voxels")) {
    VoxelBox box;
    box.id = v.at("id").get<int>();
    box.lo = vec3_of(v.at("lo"));
    box.hi = vec3_of(v.at("hi"));
    model->grid.voxels.push_back(box);
  }
  model->functionals = assemble_functionals(model->grid, model->mesh);

  model->space.W = read_matrix_poro1(dir / "observation_w.poro1");
  model->space.R = read_matrix_poro1(dir / "observation_r.poro1");
  model->space.MW = model->jm.M * model->space.W;
  model->space.kept = gj.at("kept_columns").get<std::vector<int>>();
  model->space.zeta = model->zeta;
  model->space.grid = model->grid;

  std::ifstream min(dir / "model.json");
  if (!min) throw Error("cannot open " + (dir / "model.json").string());
  ordered_json mj = ordered_json::parse(min);
  int n_star = mj.at("n_star").get<int>();

  model->Mphi = model->jm.M * model->basis.Phi;
  const int nn = model->mesh.num_nodes();
  model->u_ref = Vector::Zero(4 * static_cast<Eigen::Index>(nn));
  model->u_ref.tail(nn).setConstant(bj.value("reference_pressure", model->cfg.base.p_csf));
  model->Hp = model->basis.Phi.bottomRows(nn).transpose() * (model->Mphi.bottomRows(nn) / model->zeta);
  model->Hu = model->basis.Phi.topRows(3 * nn).transpose() * model->Mphi.topRows(3 * nn);
  model->recon = std::make_unique<Reconstructor>(model->basis, n_star, model->space, model->jm);
  return model;
}

GridContext make_grid_context(const TrainedModel& model, const ObservationSpace& space) {
  GridContext gc;
  gc.space = &space;
  const int n_max = std::min(space.m(), model.basis.n());
  gc.G_full = space.MW.transpose() * model.basis.Phi.leftCols(n_max);
  gc.qr.compute(gc.G_full);
  gc.R = gc.qr.matrixQR().topRows(n_max).triangularView<Eigen::Upper>();
  for (int n = 1; n <= n_max; ++n) {
    Eigen::JacobiSVD<Matrix> svd(gc.R.topLeftCorner(n, n));
    gc.beta_of_n.push_back(svd.singularValues().tail(1)(0));
  }
  return gc;
}

namespace {

// Basis-side caches for one truth trajectory: inner products against the
// deviation from the reference state, plus absolute norms for denominators.
void fill_basis_caches(const TrainedModel& model, ValidationCase& vc) {
  const int S = static_cast<int>(vc.truth.size());
  const int n_all = model.basis.n();
  const int nn = model.mesh.num_nodes();
  vc.a.resize(n_all, S);
  vc.au.resize(n_all, S);
  vc.ap.resize(n_all, S);
  vc.tn2.resize(S);
  vc.tun2.resize(S);
  vc.tpn2.resize(S);
  vc.dn2.resize(S);
  vc.dun2.resize(S);
  vc.dpn2.resize(S);
  for (int s = 0; s < S; ++s) {
    const Vector& t = vc.truth[static_cast<size_t>(s)];
    Vector d = t - model.u_ref;
    vc.a.col(s) = model.Mphi.transpose() * d;
    vc.au.col(s) = model.Mphi.topRows(3 * nn).transpose() * d.head(3 * nn);
    vc.ap.col(s) = (model.Mphi.bottomRows(nn).transpose() * d.tail(nn)) / model.zeta;
    vc.tn2[s] = t.dot(model.jm.M * t);
    vc.tun2[s] = model.jm.u_norm2(t);
    vc.tpn2[s] = model.jm.p_norm2(t);
    vc.dn2[s] = d.dot(model.jm.M * d);
    vc.dun2[s] = model.jm.u_norm2(d);
    vc.dpn2[s] = model.jm.p_norm2(d);
  }
}

// Grid-side cache 𝒲ᵀM·truth for one case (representers cannot see the
// reference state, so absolute and deviation caches coincide).
Matrix grid_b_cache(const ObservationSpace& space, const ValidationCase& vc) {
  const int S = static_cast<int>(vc.truth.size());
  Matrix b(space.m(), S);
  for (int s = 0; s < S; ++s) b.col(s) = space.MW.transpose() * vc.truth[static_cast<size_t>(s)];
  return b;
}

struct OrthoMeasurements {
  Matrix l;   // m × S measurements in the orthonormal basis
  Matrix qt;  // m × S cached Qᵀl
};

OrthoMeasurements ortho_measurements(const GridContext& gc, const MeasurementSeries& raw) {
  const int S = raw.steps();
  OrthoMeasurements om;
  om.l.resize(gc.space->m(), S);
  om.qt.resize(gc.space->m(), S);
  for (int s = 0; s < S; ++s) {
    om.l.col(s) = gc.space->to_orthonormal(raw.values[static_cast<size_t>(s)]);
    om.qt.col(s) = gc.qr.householderQ().adjoint() * om.l.col(s);
  }
  return om;
}

double time_mean(const std::vector<double>& v) {
  if (v.empty()) return 0;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

StepErrors evaluate_errors(const TrainedModel& model, const GridContext& gc,
                           const ValidationCase& vc, const Matrix& b, const Matrix& qt,
                           const Matrix& l_ortho, int step, int n) {
  Vector c = gc.R.topLeftCorner(n, n).triangularView<Eigen::Upper>().solve(qt.col(step).head(n));
  Vector Gc = gc.G_full.leftCols(n) * c;
  Vector d = l_ortho.col(step) - Gc;

  // truth and reconstruction compared as deviations from u_ref (the
  // reference cancels); denominators are the absolute truth norms
  const double cc = c.squaredNorm();
  const double dd = d.squaredNorm();
  const double Gcd = Gc.dot(d);
  const double a_c = vc.a.col(step).head(n).dot(c);
  const double b_d = b.col(step).dot(d);

  double e_up2 = vc.dn2[step] - 2.0 * (a_c + b_d) + cc + 2.0 * Gcd + dd;

  const auto Hp_n = model.Hp.topLeftCorner(n, n);
  const double cHpc = c.dot(Hp_n * c);
  const double au_c = vc.au.col(step).head(n).dot(c);
  const double cHuc = c.dot(model.Hu.topLeftCorner(n, n) * c);
  double e_u2 = vc.dun2[step] - 2.0 * (au_c + b_d) + cHuc + 2.0 * Gcd + dd;

  const double ap_c = vc.ap.col(step).head(n).dot(c);
  double e_p2 = vc.dpn2[step] - 2.0 * ap_c + cHpc;

  auto rel = [](double num2, double den2) {
    if (!(den2 > 0)) throw Error("evaluate_errors: zero truth norm");
    return std::sqrt(std::max(0.0, num2) / den2);
  };
  return {rel(e_up2, vc.tn2[step]), rel(e_u2, vc.tun2[step]), rel(e_p2, vc.tpn2[step])};
}

namespace {

ValidationCase solve_case(const TrainedModel& model, const ParameterSample& sample,
                          double neck_delta = 0.0) {
  ValidationCase vc;
  vc.sample = sample;
  FemSystem sys = assemble_blocks(model.mesh, sample.theta, model.cfg.law);
  apply_boundary_conditions(sys, model.mesh, neck_delta);
  NewmarkConfig tc = model.cfg.time_cfg;
  tc.steps = model.cfg.settle_steps + model.cfg.time_cfg.steps;
  tc.initial_pressure = sys.theta.p_csf;
  TimeSeries ts = newmark_solve(sys, tc, {traction_load(model.mesh, sys.theta)});
  vc.truth.assign(ts.states.begin() + 1 + model.cfg.settle_steps, ts.states.end());
  TimeSeries solved;
  solved.tau = ts.tau;
  solved.states = vc.truth;
  MeasurementSeries ms;
  ms.tau = ts.tau;
  for (const auto& st : vc.truth) ms.values.push_back(model.functionals.L * st);
  vc.clean = std::move(ms);
  fill_basis_caches(model, vc);
  return vc;
}

}  // namespace

ValidationResult run_validation(const TrainedModel& model, bool write_csv) {
  const auto& cfg = model.cfg;
  ValidationResult out;
  out.bound = model.recon->bound();

  std::vector<ParameterSample> held =
      sample_held_out(cfg.ranges, cfg.validation_count, derive_seed(cfg.seed, kStreamValidation),
                      model.snapshots.samples, cfg.base);

  out.cases.resize(held.size());
  out.results.resize(held.size());
  GridContext gc = make_grid_context(model, model.space);
  const int n_star = model.recon->n();

  parallel_for(static_cast<int>(held.size()), cfg.workers, [&](int i) {
    auto& res = out.results[static_cast<size_t>(i)];
    res.case_id = i;
    res.theta = held[static_cast<size_t>(i)].theta;
    try {
      ValidationCase vc = solve_case(model, held[static_cast<size_t>(i)]);
      Matrix b = grid_b_cache(model.space, vc);
      OrthoMeasurements om = ortho_measurements(gc, vc.clean);
      const int S = static_cast<int>(vc.truth.size());
      for (int s = 0; s < S; ++s) {
        StepErrors e = evaluate_errors(model, gc, vc, b, om.qt, om.l, s, n_star);
        res.e_up.push_back(e.e_up);
        res.e_u.push_back(e.e_u);
        res.e_p.push_back(e.e_p);
        res.max_error_over_bound = std::max(res.max_error_over_bound, e.e_up / out.bound);

        Reconstruction rec = model.recon->reconstruct(om.l.col(s));
        res.max_constraint = std::max(res.max_constraint, rec.diag.constraint_residual);
        res.max_orthogonality = std::max(res.max_orthogonality, rec.diag.orthogonality_residual);
        res.max_normal_eq = std::max(res.max_normal_eq, rec.diag.normal_eq_residual);
      }
      res.e_up_T = time_mean(res.e_up);
      res.e_u_T = time_mean(res.e_u);
      res.e_p_T = time_mean(res.e_p);
      out.cases[static_cast<size_t>(i)] = std::move(vc);
    } catch (const std::exception& e) {
      res.failed = true;
      res.error = e.what();
    }
  });

  const int S = cfg.time_cfg.steps;
  out.mean_e_up_t.assign(static_cast<size_t>(S), 0);
  out.mean_e_u_t.assign(static_cast<size_t>(S), 0);
  out.mean_e_p_t.assign(static_cast<size_t>(S), 0);
  int ok = 0;
  for (const auto& r : out.results) {
    if (r.failed) continue;
    ++ok;
    for (int s = 0; s < S; ++s) {
      out.mean_e_up_t[static_cast<size_t>(s)] += r.e_up[static_cast<size_t>(s)];
      out.mean_e_u_t[static_cast<size_t>(s)] += r.e_u[static_cast<size_t>(s)];
      out.mean_e_p_t[static_cast<size_t>(s)] += r.e_p[static_cast<size_t>(s)];
    }
    out.mean_e_up_T += r.e_up_T;
    out.mean_e_u_T += r.e_u_T;
    out.mean_e_p_T += r.e_p_T;
    out.max_constraint = std::max(out.max_constraint, r.max_constraint);
    out.max_orthogonality = std::max(out.max_orthogonality, r.max_orthogonality);
    out.max_normal_eq = std::max(out.max_normal_eq, r.max_normal_eq);
    out.max_error_over_bound = std::max(out.max_error_over_bound, r.max_error_over_bound);
  }
  if (ok == 0) throw Error("validation: every case failed");
  for (auto& v : out.mean_e_up_t) v /= ok;
  for (auto& v : out.mean_e_u_t) v /= ok;
  for (auto& v : out.mean_e_p_t) v /= ok;
  out.mean_e_up_T /= ok;
  out.mean_e_u_T /= ok;
  out.mean_e_p_T /= ok;

  if (write_csv) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    CsvWriter csv({"case_id", "t", "e_up", "e_u", "e_p"});
    for (const auto& r : out.results) {
      if (r.failed) continue;
      for (size_t s = 0; s < r.e_up.size(); ++s)
        csv.add_row({std::to_string(r.case_id), format_double((static_cast<double>(s) + 1) * cfg.time_cfg.tau),
                     format_double(r.e_up[s]), format_double(r.e_u[s]), format_double(r.e_p[s])});
    }
    csv.write(fs::path(cfg.out_dir) / "validation.csv");

    CsvWriter sum({"case_id", "kappa", "E", "nu", "p_ventricles", "e_up_T", "e_u_T", "e_p_T", "failed"});
    for (const auto& r : out.results)
      sum.add_row({std::to_string(r.case_id), format_double(r.theta.kappa), format_double(r.theta.E),
                   format_double(r.theta.nu), format_double(r.theta.p_ventricles), format_double(r.e_up_T),
                   format_double(r.e_u_T), format_double(r.e_p_T), r.failed ? "1" : "0"});
    sum.add_row({"mean", "", "", "", "", format_double(out.mean_e_up_T), format_double(out.mean_e_u_T),
                 format_double(out.mean_e_p_T), "0"});
    sum.write(fs::path(cfg.out_dir) / "validation_summary.csv");
  }
  return out;
}

NoiseStudyResult run_noise_study(const TrainedModel& model, const ValidationResult& validation,
                                 bool write_csv) {
  const auto& cfg = model.cfg;
  GridContext gc = make_grid_context(model, model.space);
  const int n_max = gc.n_max();
  std::vector<int> sweep;
  for (int n = 1; n <= n_max; ++n)
    if (gc.beta_of_n[static_cast<size_t>(n - 1)] > 0) sweep.push_back(n);

  NoiseStudyResult out;
  const int S = cfg.time_cfg.steps;

  for (size_t xi_idx = 0; xi_idx < cfg.noise_levels.size(); ++xi_idx) {
    double xi = cfg.noise_levels[xi_idx];
    // per case: noisy measurements generated once, then swept over n
    std::vector<Matrix> sum_errs(validation.cases.size());  // 3 × |sweep|
    parallel_for(static_cast<int>(validation.cases.size()), cfg.workers, [&](int i) {
      const auto& vc = validation.cases[static_cast<size_t>(i)];
      if (validation.results[static_cast<size_t>(i)].failed) return;
      MeasurementSeries ms = add_noise(vc.clean, xi, noise_seed(cfg.seed, i, static_cast<int>(xi_idx)));
      OrthoMeasurements om = ortho_measurements(gc, ms);
      Matrix b = grid_b_cache(model.space, vc);
      Matrix acc = Matrix::Zero(3, static_cast<Eigen::Index>(sweep.size()));
      for (size_t k = 0; k < sweep.size(); ++k) {
        for (int s = 0; s < S; ++s) {
          StepErrors e = evaluate_errors(model, gc, vc, b, om.qt, om.l, s, sweep[k]);
          acc(0, static_cast<Eigen::Index>(k)) += e.e_up;
          acc(1, static_cast<Eigen::Index>(k)) += e.e_u;
          acc(2, static_cast<Eigen::Index>(k)) += e.e_p;
        }
      }
      sum_errs[static_cast<size_t>(i)] = acc / S;  // time means per case
    });

    int ok = 0;
    Matrix mean = Matrix::Zero(3, static_cast<Eigen::Index>(sweep.size()));
    for (size_t i = 0; i < sum_errs.size(); ++i) {
      if (sum_errs[i].size() == 0) continue;
      mean += sum_errs[i];
      ++ok;
    }
    mean /= std::max(1, ok);

    int best_n = sweep.empty() ? 0 : sweep[0];
    double best = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < sweep.size(); ++k) {
      out.rows.push_back({xi, sweep[k], mean(0, static_cast<Eigen::Index>(k)),
                          mean(1, static_cast<Eigen::Index>(k)), mean(2, static_cast<Eigen::Index>(k))});
      if (mean(0, static_cast<Eigen::Index>(k)) < best) {
        best = mean(0, static_cast<Eigen::Index>(k));
        best_n = sweep[k];
      }
    }
    out.optimal_n.emplace_back(xi, best_n);
  }

  if (write_csv) {
    CsvWriter csv({"xi", "n", "e_up_T", "e_u_T", "e_p_T"});
    for (const auto& r : out.rows)
      csv.add_row({format_double(r.xi), std::to_string(r.n), format_double(r.e_up_T),
                   format_double(r.e_u_T), format_double(r.e_p_T)});
    csv.write(std::filesystem::path(cfg.out_dir) / "noise_study.csv");
  }
  return out;
}

std::vector<SliceStudyRow> run_slice_study(const TrainedModel& model,
                                           const ValidationResult& validation, bool write_csv) {
  const auto& cfg = model.cfg;
  const int S = cfg.time_cfg.steps;

  struct GridSpec {
    std::string label;
    std::vector<double> planes;
    double edge;
  };
  BoundingBox bb = model.mesh.bounding_box();
  std::vector<double> full_planes;
  for (double z = bb.lo.z() + cfg.slices.full_edge / 2; z < bb.hi.z(); z += cfg.slices.full_edge)
    full_planes.push_back(z);
  std::vector<GridSpec> specs = {{"one_slice", cfg.slices.single, cfg.obs.edge},
                                 {"three_slices", cfg.slices.three, cfg.obs.edge},
                                 {"full_domain", full_planes, cfg.slices.full_edge}};

  std::vector<SliceStudyRow> rows;
  for (const auto& spec : specs) {
    VoxelGrid grid = make_slice_voxels(model.mesh, spec.planes, spec.edge);
    FunctionalMatrix fm = assemble_functionals(grid, model.mesh);
    Matrix w_raw = riesz_representers(fm, model.jm);
    ObservationSpace space = orthonormalize(w_raw, model.jm);
    space.grid = grid;

    GridContext gc = make_grid_context(model, space);
    // the reduced model is held fixed across data sets; only W changes
    int n_star = std::min(model.recon->n(), gc.n_max());

    double sum_up = 0, sum_u = 0, sum_p = 0;
    int ok = 0;
    std::vector<std::array<double, 3>> acc(validation.cases.size(), {-1, 0, 0});
    parallel_for(static_cast<int>(validation.cases.size()), cfg.workers, [&](int i) {
      const auto& vc = validation.cases[static_cast<size_t>(i)];
      if (validation.results[static_cast<size_t>(i)].failed) return;
      MeasurementSeries ms;
      ms.tau = model.cfg.time_cfg.tau;
      for (const auto& st : vc.truth) ms.values.push_back(fm.L * st);
      OrthoMeasurements om = ortho_measurements(gc, ms);
      Matrix b = grid_b_cache(space, vc);
      double up = 0, u = 0, p = 0;
      for (int s = 0; s < S; ++s) {
        StepErrors e = evaluate_errors(model, gc, vc, b, om.qt, om.l, s, n_star);
        up += e.e_up;
        u += e.e_u;
        p += e.e_p;
      }
      acc[static_cast<size_t>(i)] = {up / S, u / S, p / S};
    });
    for (const auto& v : acc) {
      if (v[0] < 0) continue;
      sum_up += v[0];
      sum_u += v[1];
      sum_p += v[2];
      ++ok;
    }
    rows.push_back({spec.label, space.m(), n_star, gc.beta_of_n[static_cast<size_t>(n_star - 1)],
                    sum_up / std::max(1, ok), sum_u / std::max(1, ok), sum_p / std::max(1, ok)});
  }

  if (write_csv) {
    CsvWriter csv({"config", "m", "n_star", "beta", "e_up_T", "e_u_T", "e_p_T"});
    for (const auto& r : rows)
      csv.add_row({r.label, std::to_string(r.m), std::to_string(r.n_star), format_double(r.beta),
                   format_double(r.e_up_T), format_double(r.e_u_T), format_double(r.e_p_T)});
    csv.write(std::filesystem::path(cfg.out_dir) / "slice_study.csv");
  }
  return rows;
}

std::vector<MismatchRow> run_mismatch_study(const TrainedModel& model,
                                            const ValidationResult& validation, bool write_csv) {
  const auto& cfg = model.cfg;
  const int S = cfg.time_cfg.steps;
  if (validation.cases.empty()) throw Error("mismatch study: validation cases required");
  const ParameterSample& sample = validation.cases.front().sample;
  GridContext gc = make_grid_context(model, model.space);
  const int n_star = model.recon->n();

  std::vector<MismatchRow> rows(cfg.mismatch_deltas.size());
  parallel_for(static_cast<int>(cfg.mismatch_deltas.size()), cfg.workers, [&](int k) {
    double delta = cfg.mismatch_deltas[static_cast<size_t>(k)];
    ValidationCase vc = solve_case(model, sample, delta);
    Matrix b = grid_b_cache(model.space, vc);
    OrthoMeasurements om = ortho_measurements(gc, vc.clean);
    double up = 0, u = 0, p = 0;
    for (int s = 0; s < S; ++s) {
      StepErrors e = evaluate_errors(model, gc, vc, b, om.qt, om.l, s, n_star);
      up += e.e_up;
      u += e.e_u;
      p += e.e_p;
    }
    rows[static_cast<size_t>(k)] = {delta, up / S, u / S, p / S};
  });

  if (write_csv) {
    CsvWriter csv({"delta", "e_up_T", "e_u_T", "e_p_T"});
    for (const auto& r : rows)
      csv.add_row({format_double(r.delta), format_double(r.e_up_T), format_double(r.e_u_T),
                   format_double(r.e_p_T)});
    csv.write(std::filesystem::path(cfg.out_dir) / "mismatch_study.csv");
  }
  return rows;
}

namespace {

struct VentricleFunctional {
  Vector q;  // qᵀ p = ∫_Γv p dΓ on pressure nodal values
  double area = 0;
};

VentricleFunctional ventricle_functional(const Mesh& mesh) {
  VentricleFunctional vf;
  vf.q = Vector::Zero(mesh.num_nodes());
  for (size_t f = 0; f < mesh.facets.size(); ++f) {
    const auto& fc = mesh.facets[f];
    if (fc.tag != BoundaryRegion::Ventricles) continue;
    double area = mesh.facet_area(static_cast<int>(f));
    vf.area += area;
    for (int v : fc.nodes) vf.q[v] += area / 3.0;
  }
  if (!(vf.area > 0)) throw Error("biomarker: ventricle surface has zero area");
  return vf;
}

double trapezoid_mean(const std::vector<double>& f) {
  const size_t S = f.size();
  if (S == 0) throw Error("biomarker: empty series");
  if (S == 1) return f[0];
  double sum = 0.5 * (f.front() + f.back());
  for (size_t k = 1; k + 1 < S; ++k) sum += f[k];
  return sum / static_cast<double>(S - 1);
}

}  // namespace

double compute_biomarker(const TimeSeries& series, const Mesh& mesh) {
  VentricleFunctional vf = ventricle_functional(mesh);
  const int nn = mesh.num_nodes();
  std::vector<double> means;
  for (const auto& st : series.states) {
    if (st.size() != 4 * static_cast<Eigen::Index>(nn)) throw Error("biomarker: state size mismatch");
    means.push_back(vf.q.dot(st.tail(nn)) / vf.area);
  }
  return trapezoid_mean(means);
}

ClassificationResult run_classification(const TrainedModel& model, bool write_csv) {
  const auto& cfg = model.cfg;
  const int S = cfg.time_cfg.steps;
  GridContext gc = make_grid_context(model, model.space);
  const int n_star = model.recon->n();

  VentricleFunctional vf = ventricle_functional(model.mesh);
  const int nn = model.mesh.num_nodes();
  Vector r_modes = (model.basis.Phi.bottomRows(nn).transpose() * vf.q) / vf.area;

  // Two synthetic populations, p_ventricles drawn from the group ranges.
  std::vector<ParameterSample> patients;
  for (int group = 0; group < 2; ++group) {
    ParameterRanges r = cfg.ranges;
    r.p_ventricles = group == 0 ? cfg.biomarker.normal : cfg.biomarker.increased;
    auto part = sample_parameters(r, {0, 0, 0, 0}, SamplingStrategy::Random,
                                  derive_seed(cfg.seed, group == 0 ? kStreamClassifyNormal
                                                                   : kStreamClassifyIncreased),
                                  cfg.biomarker.per_group, cfg.base);
    for (auto& s : part) {
      s.id = static_cast<int>(patients.size());
      s.provenance = (group == 0 ? "normal:" : "increased:") + s.provenance;
      patients.push_back(std::move(s));
    }
  }

  ClassificationResult out;
  out.patients.resize(patients.size());
  parallel_for(static_cast<int>(patients.size()), cfg.workers, [&](int i) {
    const auto& pat = patients[static_cast<size_t>(i)];
    PatientResult pr{};
    pr.id = pat.id;
    pr.increased_truth = pat.theta.p_ventricles >= cfg.biomarker.threshold;
    pr.theta = pat.theta;

    ValidationCase vc = solve_case(model, pat);
    TimeSeries solved;
    solved.tau = cfg.time_cfg.tau;
    solved.states = vc.truth;
    pr.p_v_true = compute_biomarker(solved, model.mesh);

    auto reconstruct_pv = [&](const MeasurementSeries& ms) {
      OrthoMeasurements om = ortho_measurements(gc, ms);
      std::vector<double> means;
      for (int s = 0; s < S; ++s) {
        Vector c = gc.R.topLeftCorner(n_star, n_star)
                       .triangularView<Eigen::Upper>()
                       .solve(om.qt.col(s).head(n_star));
        means.push_back(cfg.base.p_csf + r_modes.head(n_star).dot(c));
      }
      return trapezoid_mean(means);
    };

    pr.p_v_rec = reconstruct_pv(vc.clean);
    pr.p_v_rec_noisy =
        reconstruct_pv(add_noise(vc.clean, cfg.biomarker.noise, classify_noise_seed(cfg.seed, i)));
    pr.classified_increased = pr.p_v_rec >= cfg.biomarker.threshold;
    pr.classified_increased_noisy = pr.p_v_rec_noisy >= cfg.biomarker.threshold;
    pr.correct = pr.classified_increased == pr.increased_truth;
    pr.correct_noisy = pr.classified_increased_noisy == pr.increased_truth;
    pr.rel_err = std::abs(pr.p_v_rec - pr.p_v_true) / pr.p_v_true;
    pr.rel_err_noisy = std::abs(pr.p_v_rec_noisy - pr.p_v_true) / pr.p_v_true;
    out.patients[static_cast<size_t>(i)] = pr;
  });

  for (const auto& p : out.patients) {
    out.correct_noise_free += p.correct ? 1 : 0;
    out.correct_noisy += p.correct_noisy ? 1 : 0;
    out.max_rel_err = std::max(out.max_rel_err, p.rel_err);
    out.max_rel_err_noisy = std::max(out.max_rel_err_noisy, p.rel_err_noisy);
  }

  if (write_csv) {
    CsvWriter csv({"patient", "group", "kappa", "E", "nu", "p_ventricles", "p_v_true", "p_v_rec",
                   "p_v_rec_noisy", "class_nf", "class_noisy", "correct_nf", "correct_noisy"});
    for (const auto& p : out.patients)
      csv.add_row({std::to_string(p.id), p.increased_truth ? "increased" : "normal",
                   format_double(p.theta.kappa), format_double(p.theta.E), format_double(p.theta.nu),
                   format_double(p.theta.p_ventricles), format_double(p.p_v_true),
                   format_double(p.p_v_rec), format_double(p.p_v_rec_noisy),
                   p.classified_increased ? "increased" : "normal",
                   p.classified_increased_noisy ? "increased" : "normal", p.correct ? "1" : "0",
                   p.correct_noisy ? "1" : "0"});
    csv.write(std::filesystem::path(cfg.out_dir) / "classification.csv");
  }
  return out;
}

void export_report(const TrainedModel& model, const ValidationResult* validation,
                   const NoiseStudyResult* noise, const std::vector<SliceStudyRow>* slices,
                   const std::vector<MismatchRow>* mismatch, const ClassificationResult* classify,
                   const std::filesystem::path& path) {
  ordered_json j;
  j["config_hash"] = config_hash(model.cfg);
  j["seed"] = model.cfg.seed;
  j["zeta"] = model.zeta;
  j["n_star"] = model.recon->n();
  j["m"] = model.space.m();
  j["beta"] = model.recon->beta();
  j["beta_gram"] = model.recon->beta_gram();
  j["eps_hat"] = model.recon->eps_hat();
  j["bound"] = model.recon->bound();
  j["selection"] = {{"eps_hat", model.selection.eps_hat},
                    {"beta", model.selection.beta},
                    {"bound", model.selection.bound}};
  std::vector<double> evals(model.basis.eigenvalues.data(),
                            model.basis.eigenvalues.data() + model.basis.eigenvalues.size());
  j["eigenvalues"] = evals;

  if (validation) {
    ordered_json v;
    v["mean_e_up_T"] = validation->mean_e_up_T;
    v["mean_e_u_T"] = validation->mean_e_u_T;
    v["mean_e_p_T"] = validation->mean_e_p_T;
    v["max_constraint_residual"] = validation->max_constraint;
    v["max_orthogonality_residual"] = validation->max_orthogonality;
    v["max_normal_eq_residual"] = validation->max_normal_eq;
    v["max_error_over_bound"] = validation->max_error_over_bound;
    v["cases"] = ordered_json::array();
    for (const auto& r : validation->results)
      v["cases"].push_back({{"id", r.case_id},
                            {"e_up_T", r.e_up_T},
                            {"e_u_T", r.e_u_T},
                            {"e_p_T", r.e_p_T},
                            {"failed", r.failed}});
    j["validation"] = v;
  }
  if (noise) {
    ordered_json nj = ordered_json::array();
    for (const auto& r : noise->rows)
      nj.push_back({{"xi", r.xi}, {"n", r.n}, {"e_up_T", r.e_up_T}, {"e_u_T", r.e_u_T}, {"e_p_T", r.e_p_T}});
    j["noise_study"] = nj;
    ordered_json opt = ordered_json::array();
    for (const auto& [xi, n] : noise->optimal_n) opt.push_back({{"xi", xi}, {"optimal_n", n}});
    j["noise_optimal_n"] = opt;
  }
  if (slices) {
    ordered_json sj = ordered_json::array();
    for (const auto& r : *slices)
      sj.push_back({{"config", r.label},
                    {"m", r.m},
                    {"n_star", r.n_star},
                    {"beta", r.beta},
                    {"e_up_T", r.e_up_T},
                    {"e_u_T", r.e_u_T},
                    {"e_p_T", r.e_p_T}});
    j["slice_study"] = sj;
  }
  if (mismatch) {
    ordered_json mj = ordered_json::array();
    for (const auto& r : *mismatch)
      mj.push_back({{"delta", r.delta}, {"e_up_T", r.e_up_T}, {"e_u_T", r.e_u_T}, {"e_p_T", r.e_p_T}});
    j["mismatch_study"] = mj;
  }
  if (classify) {
    ordered_json cj;
    cj["correct_noise_free"] = classify->correct_noise_free;
    cj["correct_noisy"] = classify->correct_noisy;
    cj["max_rel_err"] = classify->max_rel_err;
    cj["max_rel_err_noisy"] = classify->max_rel_err_noisy;
    cj["patients"] = ordered_json::array();
    for (const auto& p : classify->patients)
      cj["patients"].push_back({{"id", p.id},
                                {"group", p.increased_truth ? "increased" : "normal"},
                                {"p_v_true", p.p_v_true},
                                {"p_v_rec", p.p_v_rec},
                                {"p_v_rec_noisy", p.p_v_rec_noisy},
                                {"correct", p.correct},
                                {"correct_noisy", p.correct_noisy}});
    j["classification"] = cj;
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open report for writing: " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace poro
