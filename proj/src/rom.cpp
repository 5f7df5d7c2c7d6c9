#include "poro/rom.hpp"

#include "poro/parallel.hpp"
#include "poro/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace poro {

void ParameterRanges::validate() const {
  auto ok = [](const std::array<double, 2>& r) { return r[0] <= r[1]; };
  if (!ok(kappa) || !ok(E) || !ok(nu) || !ok(p_ventricles))
    throw Error("parameter ranges: empty interval");
}

namespace {

MaterialParameters make_theta(const MaterialParameters& base, double kappa, double E, double nu,
                              double pv) {
  MaterialParameters t = base;
  t.kappa = kappa;
  t.E = E;
  t.nu = nu;
  t.p_ventricles = pv;
  return t;
}

std::array<double, 4> draw(Rng& rng, const ParameterRanges& r) {
  // fixed draw order: κ, E, ν, p_v
  double k = rng.uniform(r.kappa[0], r.kappa[1]);
  double e = rng.uniform(r.E[0], r.E[1]);
  double n = rng.uniform(r.nu[0], r.nu[1]);
  double p = rng.uniform(r.p_ventricles[0], r.p_ventricles[1]);
  return {k, e, n, p};
}

}  // namespace

std::vector<ParameterSample> sample_parameters(const ParameterRanges& ranges,
                                               const std::array<int, 4>& counts,
                                               SamplingStrategy strategy, std::uint64_t seed,
                                               int random_total, const MaterialParameters& base) {
  ranges.validate();
  std::vector<ParameterSample> out;

  if (strategy == SamplingStrategy::Grid) {
    for (int c : counts)
      if (c < 1) throw Error("sample_parameters: grid counts must be >= 1");
    auto axis = [](const std::array<double, 2>& r, int c) {
      std::vector<double> v;
      if (c == 1) v.push_back(0.5 * (r[0] + r[1]));
      else
        for (int i = 0; i < c; ++i) v.push_back(r[0] + (r[1] - r[0]) * i / (c - 1));
      return v;
    };
    auto ks = axis(ranges.kappa, counts[0]);
    auto es = axis(ranges.E, counts[1]);
    auto ns = axis(ranges.nu, counts[2]);
    auto ps = axis(ranges.p_ventricles, counts[3]);
    int id = 0;
    for (size_t a = 0; a < ks.size(); ++a)
      for (size_t b = 0; b < es.size(); ++b)
        for (size_t c = 0; c < ns.size(); ++c)
          for (size_t d = 0; d < ps.size(); ++d) {
            ParameterSample s;
            s.theta = make_theta(base, ks[a], es[b], ns[c], ps[d]);
            s.id = id++;
            s.provenance = "grid(" + std::to_string(a) + "," + std::to_string(b) + "," +
                           std::to_string(c) + "," + std::to_string(d) + ")";
            out.push_back(std::move(s));
          }
  } else if (strategy == SamplingStrategy::Random) {
    if (random_total < 1) throw Error("sample_parameters: random_total must be >= 1");
    Rng rng(seed);
    for (int i = 0; i < random_total; ++i) {
      auto [k, e, n, p] = draw(rng, ranges);
      ParameterSample s;
      s.theta = make_theta(base, k, e, n, p);
      s.id = i;
      s.provenance = "random(seed=" + std::to_string(seed) + ",i=" + std::to_string(i) + ")";
      out.push_back(std::move(s));
    }
  } else {
    if (random_total < 1) throw Error("sample_parameters: random_total must be >= 1");
    Rng rng(seed);
    const int K = random_total;
    // one stratum per sample and axis, in a seeded random permutation
    std::array<std::vector<int>, 4> perms;
    for (auto& perm : perms) {
      perm.resize(static_cast<size_t>(K));
      for (int i = 0; i < K; ++i) perm[static_cast<size_t>(i)] = i;
      for (int i = K - 1; i > 0; --i) {
        int j = static_cast<int>(rng.uniform() * (i + 1));
        std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
      }
    }
    auto stratum = [&](const std::array<double, 2>& r, int cell) {
      double width = (r[1] - r[0]) / K;
      return r[0] + width * (cell + rng.uniform());
    };
    for (int i = 0; i < K; ++i) {
      double k = stratum(ranges.kappa, perms[0][static_cast<size_t>(i)]);
      double e = stratum(ranges.E, perms[1][static_cast<size_t>(i)]);
      double n = stratum(ranges.nu, perms[2][static_cast<size_t>(i)]);
      double p = stratum(ranges.p_ventricles, perms[3][static_cast<size_t>(i)]);
      ParameterSample s;
      s.theta = make_theta(base, k, e, n, p);
      s.id = i;
      s.provenance = "lhs(seed=" + std::to_string(seed) + ",i=" + std::to_string(i) + ")";
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<ParameterSample> sample_held_out(const ParameterRanges& ranges, int count,
                                             std::uint64_t seed,
                                             const std::vector<ParameterSample>& exclude,
                                             const MaterialParameters& base) {
  ranges.validate();
  if (count < 0) throw Error("sample_held_out: count must be >= 0");
  auto clashes = [&](double k, double e, double n, double p) {
    for (const auto& s : exclude)
      if (s.theta.kappa == k && s.theta.E == e && s.theta.nu == n && s.theta.p_ventricles == p)
        return true;
    return false;
  };
  Rng rng(seed);
  std::vector<ParameterSample> out;
  int guard = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++guard > 1000 * (count + 1)) throw Error("sample_held_out: rejection sampling stalled");
    auto [k, e, n, p] = draw(rng, ranges);
    if (clashes(k, e, n, p)) continue;
    ParameterSample s;
    s.theta = make_theta(base, k, e, n, p);
    s.id = static_cast<int>(out.size());
    s.provenance = "held_out(seed=" + std::to_string(seed) + ",i=" + std::to_string(s.id) + ")";
    out.push_back(std::move(s));
  }
  return out;
}

SnapshotSet generate_manifold(const Mesh& mesh, const std::vector<ParameterSample>& samples,
                              const NewmarkConfig& time_cfg, StressLaw law, int workers,
                              int settle_steps) {
  if (samples.empty()) throw Error("generate_manifold: no samples");
  if (settle_steps < 0) throw Error("generate_manifold: settle_steps must be >= 0");
  SnapshotSet set;
  set.tau = time_cfg.tau;
  set.steps_per_sample = time_cfg.steps;
  set.samples = samples;

  const Eigen::Index n_dof = 4 * static_cast<Eigen::Index>(mesh.num_nodes());
  const int per = time_cfg.steps;
  set.A.resize(n_dof, static_cast<Eigen::Index>(samples.size()) * per);

  std::vector<std::string> errors(samples.size());
  parallel_for(static_cast<int>(samples.size()), workers, [&](int i) {
    try {
      FemSystem sys = assemble_blocks(mesh, samples[static_cast<size_t>(i)].theta, law);
      apply_boundary_conditions(sys, mesh);
      NewmarkConfig tc = time_cfg;
      tc.steps = settle_steps + per;
      tc.initial_pressure = sys.theta.p_csf;
      TimeSeries ts = newmark_solve(sys, tc, {traction_load(mesh, sys.theta)});
      for (int s = 1; s <= per; ++s)
        set.A.col(static_cast<Eigen::Index>(i) * per + (s - 1)) =
            ts.states[static_cast<size_t>(settle_steps + s)];
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(i)] = e.what();
    }
  });

  // Compact away failed samples, keeping column metadata consistent.
  std::vector<Eigen::Index> keep;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (!errors[i].empty()) {
      set.failed_samples.push_back(samples[i].id);
      continue;
    }
    for (int s = 1; s <= per; ++s) {
      keep.push_back(static_cast<Eigen::Index>(i) * per + (s - 1));
      set.columns.push_back({samples[i].id, settle_steps + s});
    }
  }
  if (keep.empty()) throw Error("generate_manifold: all forward solves failed");
  if (static_cast<Eigen::Index>(keep.size()) != set.A.cols()) {
    Matrix compact(n_dof, static_cast<Eigen::Index>(keep.size()));
    for (size_t c = 0; c < keep.size(); ++c) compact.col(static_cast<Eigen::Index>(c)) = set.A.col(keep[c]);
    set.A = std::move(compact);
  }
  return set;
}

double compute_zeta(const SnapshotSet& snapshots, const JointMass& jm) {
  if (snapshots.K() < 1) throw Error("compute_zeta: empty snapshot set");
  double max_u = 0, max_p = 0;
  for (Eigen::Index k = 0; k < snapshots.K(); ++k) {
    Vector col = snapshots.A.col(k);
    max_u = std::max(max_u, std::sqrt(std::max(0.0, jm.u_norm2(col))));
    max_p = std::max(max_p, std::sqrt(std::max(0.0, jm.p_norm2(col))));
  }
  if (!(max_p > 0)) throw Error("compute_zeta: all snapshot pressures are zero");
  return max_u / max_p;
}

ReducedBasis compute_pod(const SnapshotSet& snapshots, const JointMass& jm, int max_modes) {
  const Eigen::Index K = snapshots.K();
  if (K < 1) throw Error("compute_pod: empty snapshot set");
  if (snapshots.A.rows() != jm.n_dof) throw Error("compute_pod: dimension mismatch");

  Matrix MA = jm.M * snapshots.A;
  Matrix C = snapshots.A.transpose() * MA;
  C = 0.5 * (C + C.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(C);
  if (eig.info() != Eigen::Success) throw Error("compute_pod: eigendecomposition failed");

  ReducedBasis basis;
  basis.zeta = jm.zeta;
  basis.eigenvalues.resize(K);
  Matrix B(K, K);
  for (Eigen::Index i = 0; i < K; ++i) {  // descending order
    basis.eigenvalues[i] = eig.eigenvalues()[K - 1 - i];
    B.col(i) = eig.eigenvectors().col(K - 1 - i);
  }
  double lambda_max = std::max(0.0, basis.eigenvalues[0]);
  for (Eigen::Index i = 0; i < K; ++i)
    if (basis.eigenvalues[i] < 0) {
      if (basis.eigenvalues[i] < -1e-12 * lambda_max) ++basis.clamped;
      basis.eigenvalues[i] = 0;
    }

  int keep = 0;
  for (Eigen::Index i = 0; i < K; ++i)
    if (basis.eigenvalues[i] > 1e-12 * lambda_max) ++keep;
  if (keep == 0) throw Error("compute_pod: all eigenvalues are zero");
  if (max_modes > 0) keep = std::min(keep, max_modes);

  basis.Phi.resize(snapshots.A.rows(), keep);
  for (int i = 0; i < keep; ++i) {
    basis.Phi.col(i) = snapshots.A * (B.col(i) / std::sqrt(basis.eigenvalues[i]));
    // sign convention: largest-magnitude entry positive
    Eigen::Index imax = 0;
    double amax = -1;
    for (Eigen::Index r = 0; r < basis.Phi.rows(); ++r) {
      double a = std::abs(basis.Phi(r, i));
      if (a > amax) {
        amax = a;
        imax = r;
      }
    }
    if (basis.Phi(imax, i) < 0) basis.Phi.col(i) = -basis.Phi.col(i);
  }
  return basis;
}

double pod_tail_error(const Vector& eigenvalues, int n) {
  const int K = static_cast<int>(eigenvalues.size());
  if (n < 0 || n > K) throw Error("pod_tail_error: n out of range");
  double total = 0, tail = 0;
  for (int i = 0; i < K; ++i) {
    double v = std::max(0.0, eigenvalues[i]);
    total += v;
    if (i >= n) tail += v;
  }
  if (!(total > 0)) throw Error("pod_tail_error: all eigenvalues are zero");
  return std::sqrt(std::max(0.0, tail / total));
}

std::pair<double, double> component_tail_errors(const SnapshotSet& snapshots,
                                                const ReducedBasis& basis, const JointMass& jm,
                                                int n) {
  if (n < 0 || n > basis.n()) throw Error("component_tail_errors: n out of range");
  double total = 0;
  for (Eigen::Index i = 0; i < basis.eigenvalues.size(); ++i) total += basis.eigenvalues[i];
  if (!(total > 0)) throw Error("component_tail_errors: all eigenvalues are zero");

  const auto Phi_n = basis.Phi.leftCols(n);
  Matrix MPhi = jm.M * Phi_n;
  double res_u = 0, res_p = 0;
  for (Eigen::Index k = 0; k < snapshots.K(); ++k) {
    Vector s = snapshots.A.col(k);
    Vector r = s - Phi_n * (MPhi.transpose() * s);
    res_u += jm.u_norm2(r);
    res_p += jm.p_norm2(r);
  }
  return {std::sqrt(std::max(0.0, res_u / total)),
          std::sqrt(std::max(0.0, res_p / total))};
}

}  // namespace poro
