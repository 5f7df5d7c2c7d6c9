// Command-line driver: forward simulation, training, reconstruction, and the
// validation/noise/slice/mismatch/classification studies.

#include "poro/io.hpp"
#include "poro/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace poro;

namespace {

struct GlobalOpts {
  std::string config;
  std::string preset = "desk";
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

ExperimentConfig make_config(const GlobalOpts& g) {
  ExperimentConfig cfg;
  if (!g.config.empty()) cfg = load_config(g.config);
  else if (g.preset == "paper") cfg = paper_preset();
  else if (g.preset == "desk") cfg = desk_preset();
  else throw Error("unknown preset '" + g.preset + "' (expected desk|paper)");
  if (!g.out.empty()) cfg.out_dir = g.out;
  if (g.seed) cfg.seed = *g.seed;
  if (g.workers) cfg.workers = *g.workers;
  return cfg;
}

void print_model(const TrainedModel& model) {
  std::printf("trained: N=%lld dofs, K=%lld snapshots, m=%d, zeta=%.6g\n",
              static_cast<long long>(4 * model.mesh.num_nodes()),
              static_cast<long long>(model.snapshots.K()), model.space.m(), model.zeta);
  std::printf("         n*=%d, beta=%.6g (beta^2=%.6g), eps_hat=%.6g, bound=%.6g\n",
              model.recon->n(), model.recon->beta(), model.recon->beta_gram(),
              model.recon->eps_hat(), model.recon->bound());
}

int run_forward(const GlobalOpts& g, const MaterialParameters& theta, const std::string& series_out) {
  ExperimentConfig cfg = make_config(g);
  Mesh mesh = cfg.mesh_file.empty() ? build_phantom(cfg.phantom) : load_mesh(cfg.mesh_file);
  if (cfg.frontal_length_override > 0) mesh.frontal_length_override = cfg.frontal_length_override;
  FemSystem sys = assemble_blocks(mesh, theta, cfg.law);
  apply_boundary_conditions(sys, mesh);
  NewmarkConfig tc = cfg.time_cfg;
  tc.steps = cfg.settle_steps + cfg.time_cfg.steps;  // full trajectory incl. settling
  tc.initial_pressure = theta.p_csf;
  TimeSeries ts = newmark_solve(sys, tc, {traction_load(mesh, theta)});
  fs::create_directories(cfg.out_dir);
  fs::path out = series_out.empty() ? fs::path(cfg.out_dir) / "forward.poro1" : fs::path(series_out);
  write_series(out, ts);
  save_mesh(mesh, fs::path(cfg.out_dir) / "mesh.poromesh");
  std::printf("forward: %d steps, tau=%.6g s -> %s\n", ts.solved_steps(), ts.tau, out.string().c_str());
  return 0;
}

int run_reconstruct_cmd(const std::string& model_dir, const std::string& meas_file,
                        const std::string& out_dir) {
  auto model = load_trained(model_dir);
  MeasurementSeries ms = read_measurements(meas_file);
  fs::path dir = out_dir.empty() ? fs::path(model->cfg.out_dir) : fs::path(out_dir);
  fs::create_directories(dir);

  TimeSeries rec_series;
  rec_series.tau = ms.tau;
  nlohmann::ordered_json diag = nlohmann::ordered_json::array();
  for (int s = 0; s < ms.steps(); ++s) {
    Vector l = model->space.to_orthonormal(ms.values[static_cast<size_t>(s)]);
    Reconstruction rec = model->recon->reconstruct(l);
    rec_series.states.push_back(rec.u_star);
    diag.push_back({{"step", s},
                    {"beta", rec.diag.beta},
                    {"eps_n", rec.diag.eps_hat},
                    {"bound", rec.diag.bound},
                    {"constraint_residual", rec.diag.constraint_residual},
                    {"orthogonality_residual", rec.diag.orthogonality_residual},
                    {"normal_eq_residual", rec.diag.normal_eq_residual},
                    {"n", rec.diag.n},
                    {"m", rec.diag.m},
                    {"zeta", rec.diag.zeta}});
  }
  write_series(dir / "reconstruction.poro1", rec_series);
  std::ofstream(dir / "reconstruction_diagnostics.json", std::ios::binary) << diag.dump(2) << "\n";
  std::printf("reconstructed %d steps -> %s\n", ms.steps(),
              (dir / "reconstruction.poro1").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PBDW state estimation for poroelastic brain elastography"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  GlobalOpts g;
  app.add_option("--config", g.config, "JSON experiment config");
  app.add_option("--preset", g.preset, "Config preset: desk|paper")->default_val("desk");
  app.add_option("--out", g.out, "Output directory (overrides config)");
  std::uint64_t seed_val = 0;
  auto* seed_opt = app.add_option("--seed", seed_val, "Master seed (overrides config)");
  int workers_val = 0;
  auto* workers_opt = app.add_option("--workers", workers_val, "Worker threads");

  // forward
  auto* fwd = app.add_subcommand("forward", "Run one forward Biot simulation");
  MaterialParameters theta;
  fwd->add_option("--kappa", theta.kappa, "Permeability (cm^2)");
  fwd->add_option("--E", theta.E, "Young modulus (dyn/cm^2)");
  fwd->add_option("--nu", theta.nu, "Poisson ratio");
  fwd->add_option("--p-ventricles", theta.p_ventricles, "Ventricular pressure (dyn/cm^2)");
  std::string series_out;
  fwd->add_option("--series-out", series_out, "Output PORO1 series path");

  auto* train = app.add_subcommand("train", "Train manifold, POD basis and observation space");
  auto* validate = app.add_subcommand("validate", "Held-out validation with error tables");
  auto* noise = app.add_subcommand("noise-study", "Noise level x reduced dimension sweep");
  auto* slice = app.add_subcommand("slice-study", "1-slice / 3-slice / full-domain comparison");
  auto* mismatch = app.add_subcommand("mismatch-study", "Neck boundary-condition mismatch sweep");
  auto* classify = app.add_subcommand("classify", "Ventricular-pressure biomarker classification");
  auto* report = app.add_subcommand("report", "Run all studies and write summary.json");

  auto* rec = app.add_subcommand("reconstruct", "Reconstruct states from stored measurements");
  std::string model_dir, meas_file, rec_out;
  rec->add_option("--model", model_dir, "Trained model directory")->required();
  rec->add_option("--measurements", meas_file, "MEAS1 measurement file")->required();
  rec->add_option("--output", rec_out, "Output directory");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed_val;
  if (*workers_opt) g.workers = workers_val;

  try {
    if (fwd->parsed()) return run_forward(g, theta, series_out);
    if (rec->parsed()) return run_reconstruct_cmd(model_dir, meas_file, rec_out);

    ExperimentConfig cfg = make_config(g);
    auto model = run_training(cfg);
    print_model(*model);
    if (train->parsed()) return 0;

    ValidationResult val = run_validation(*model);
    std::printf("validation: mean e_up_T=%.4g, e_u_T=%.4g, e_p_T=%.4g (bound %.4g)\n",
                val.mean_e_up_T, val.mean_e_u_T, val.mean_e_p_T, val.bound);

    std::optional<NoiseStudyResult> noise_res;
    std::optional<std::vector<SliceStudyRow>> slice_res;
    std::optional<std::vector<MismatchRow>> mismatch_res;
    std::optional<ClassificationResult> classify_res;

    if (noise->parsed() || report->parsed()) {
      noise_res = run_noise_study(*model, val);
      for (const auto& [xi, n] : noise_res->optimal_n)
        std::printf("noise xi=%.3g: empirical optimal n=%d\n", xi, n);
    }
    if (slice->parsed() || report->parsed()) {
      slice_res = run_slice_study(*model, val);
      for (const auto& r : *slice_res)
        std::printf("slice %-12s m=%-5d n*=%-3d beta=%.3g e_u_T=%.4g e_p_T=%.4g\n", r.label.c_str(),
                    r.m, r.n_star, r.beta, r.e_u_T, r.e_p_T);
    }
    if (mismatch->parsed() || report->parsed()) {
      mismatch_res = run_mismatch_study(*model, val);
      for (const auto& r : *mismatch_res)
        std::printf("mismatch delta=%.3g: e_up_T=%.4g\n", r.delta, r.e_up_T);
    }
    if (classify->parsed() || report->parsed()) {
      classify_res = run_classification(*model);
      std::printf("classification: %d/%zu correct noise-free, %d/%zu noisy; max rel err %.3g / %.3g\n",
                  classify_res->correct_noise_free, classify_res->patients.size(),
                  classify_res->correct_noisy, classify_res->patients.size(), classify_res->max_rel_err,
                  classify_res->max_rel_err_noisy);
    }

    export_report(*model, &val, noise_res ? &*noise_res : nullptr,
                  slice_res ? &*slice_res : nullptr, mismatch_res ? &*mismatch_res : nullptr,
                  classify_res ? &*classify_res : nullptr,
                  fs::path(cfg.out_dir) / "summary.json");
    std::printf("report -> %s\n", (fs::path(cfg.out_dir) / "summary.json").string().c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
