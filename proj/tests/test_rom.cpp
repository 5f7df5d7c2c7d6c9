#include "poro/rom.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <set>

using namespace poro;

TEST_CASE("parameter sampling: grid corners, counts, determinism") {
  ParameterRanges r;
  auto corners = sample_parameters(r, {2, 2, 2, 2}, SamplingStrategy::Grid, 0);
  CHECK(corners.size() == 16);
  for (const auto& s : corners) {
    CHECK((s.theta.kappa == r.kappa[0] || s.theta.kappa == r.kappa[1]));
    CHECK((s.theta.E == r.E[0] || s.theta.E == r.E[1]));
    CHECK((s.theta.nu == r.nu[0] || s.theta.nu == r.nu[1]));
    CHECK((s.theta.p_ventricles == r.p_ventricles[0] || s.theta.p_ventricles == r.p_ventricles[1]));
  }
  std::set<std::array<double, 4>> distinct;
  for (const auto& s : corners)
    distinct.insert({s.theta.kappa, s.theta.E, s.theta.nu, s.theta.p_ventricles});
  CHECK(distinct.size() == 16);

  // paper-scale grid: 4*4*4*8 = 512 simulations
  auto paper = sample_parameters(r, {4, 4, 4, 8}, SamplingStrategy::Grid, 0);
  CHECK(paper.size() == 512);

  auto r1 = sample_parameters(r, {}, SamplingStrategy::Random, 77, 10);
  auto r2 = sample_parameters(r, {}, SamplingStrategy::Random, 77, 10);
  REQUIRE(r1.size() == r2.size());
  for (size_t i = 0; i < r1.size(); ++i) {
    CHECK(r1[i].theta.kappa == r2[i].theta.kappa);
    CHECK(r1[i].theta.E == r2[i].theta.E);
    CHECK(r1[i].theta.nu >= r.nu[0]);
    CHECK(r1[i].theta.nu <= r.nu[1]);
  }

  auto held = sample_held_out(r, 5, 99, corners);
  CHECK(held.size() == 5);
}

TEST_CASE("generate_manifold: single sample column equals the forward state") {
  Mesh mesh = test::tiny_box();
  ParameterSample sample;
  sample.theta = test::mid_theta();
  sample.id = 0;
  NewmarkConfig cfg{1e-3, 3, 0.5};
  SnapshotSet set = generate_manifold(mesh, {sample}, cfg);
  REQUIRE(set.K() == 3);
  CHECK(set.columns.size() == 3);

  FemSystem sys = assemble_blocks(mesh, sample.theta);
  apply_boundary_conditions(sys, mesh);
  NewmarkConfig ref_cfg = cfg;
  ref_cfg.initial_pressure = sample.theta.p_csf;  // forward runs start equilibrated
  TimeSeries ts = newmark_solve(sys, ref_cfg, {traction_load(mesh, sample.theta)});
  for (int s = 1; s <= 3; ++s)
    CHECK((set.A.col(s - 1) - ts.states[static_cast<size_t>(s)]).norm() == 0.0);  // bit-exact

  // metadata join: (sample, step) recoverable and unique
  std::set<std::pair<int, int>> keys;
  for (const auto& c : set.columns) keys.insert({c.sample_id, c.step});
  CHECK(keys.size() == set.columns.size());

  // settled window: retained columns are the last `steps` solved states
  SnapshotSet settled = generate_manifold(mesh, {sample}, cfg, StressLaw::Hooke, 1, 2);
  NewmarkConfig long_cfg = ref_cfg;
  long_cfg.steps = 5;
  TimeSeries full = newmark_solve(sys, long_cfg, {traction_load(mesh, sample.theta)});
  for (int s = 1; s <= 3; ++s) {
    CHECK((settled.A.col(s - 1) - full.states[static_cast<size_t>(2 + s)]).norm() == 0.0);
    CHECK(settled.columns[static_cast<size_t>(s - 1)].step == 2 + s);
  }
}

TEST_CASE("compute_zeta: max-ratio definition and homogeneity") {
  Mesh mesh = test::tiny_box();
  JointMass jm = assemble_joint_mass(mesh, 1.0);
  const int nn = mesh.num_nodes();

  SnapshotSet set;
  set.A = Matrix::Zero(4 * nn, 2);
  // snapshot 0: u ≡ (a,0,0) with ‖u‖ = 2; snapshot 1: p ≡ b with ‖p‖ = 4
  double V = mesh.volume();
  double a = 2.0 / std::sqrt(V), b = 4.0 / std::sqrt(V);
  for (int i = 0; i < nn; ++i) set.A(udof(i, 0), 0) = a;
  for (int i = 0; i < nn; ++i) set.A(pdof(nn, i), 1) = b;
  set.columns = {{0, 1}, {0, 2}};

  CHECK(compute_zeta(set, jm) == doctest::Approx(0.5).epsilon(1e-12));

  SnapshotSet scaled = set;
  scaled.A.row(3 * nn + 0) *= 1.0;  // no-op; scale all pressure rows:
  scaled.A.bottomRows(nn) *= 10.0;
  CHECK(compute_zeta(scaled, jm) == doctest::Approx(0.05).epsilon(1e-12));

  // brute-force max-ratio oracle on a random set
  Rng rng(3);
  SnapshotSet rnd;
  rnd.A = Matrix(4 * nn, 6);
  for (Eigen::Index c = 0; c < 6; ++c)
    for (Eigen::Index r = 0; r < rnd.A.rows(); ++r) rnd.A(r, c) = rng.uniform(-1, 1);
  double max_u = 0, max_p = 0;
  for (Eigen::Index c = 0; c < 6; ++c) {
    max_u = std::max(max_u, std::sqrt(jm.u_norm2(rnd.A.col(c))));
    max_p = std::max(max_p, std::sqrt(jm.p_norm2(rnd.A.col(c))));
  }
  CHECK(compute_zeta(rnd, jm) == doctest::Approx(max_u / max_p).epsilon(1e-12));

  SnapshotSet zero_p = set;
  zero_p.A.bottomRows(nn).setZero();
  CHECK_THROWS_AS(compute_zeta(zero_p, jm), Error);
}

TEST_CASE("POD: rank-1, hand 2x2 eigenproblem, orthonormality") {
  Mesh mesh = test::tiny_box();
  JointMass jm = assemble_joint_mass(mesh, 0.8);
  const int nn = mesh.num_nodes();
  const Eigen::Index N = 4 * nn;

  // rank-1
  Rng rng(9);
  SnapshotSet one;
  one.A = Matrix(N, 1);
  for (Eigen::Index r = 0; r < N; ++r) one.A(r, 0) = rng.uniform(-1, 1);
  ReducedBasis b1 = compute_pod(one, jm);
  REQUIRE(b1.n() == 1);
  double norm = std::sqrt(one.A.col(0).dot(jm.M * one.A.col(0)));
  CHECK(b1.eigenvalues[0] == doctest::Approx(norm * norm).epsilon(1e-12));
  double align = std::abs(b1.Phi.col(0).dot(jm.M * one.A.col(0))) / norm;
  CHECK(align == doctest::Approx(1.0).epsilon(1e-12));

  // two M-orthogonal snapshots with norms 2 and 1
  SnapshotSet two;
  two.A = Matrix::Zero(N, 2);
  double V = mesh.volume();
  for (int i = 0; i < nn; ++i) two.A(udof(i, 1), 0) = 2.0 / std::sqrt(V);           // ‖·‖ = 2
  for (int i = 0; i < nn; ++i) two.A(pdof(nn, i), 1) = 1.0 / std::sqrt(0.8 * V);    // ‖·‖_ζ = 1
  ReducedBasis b2 = compute_pod(two, jm);
  REQUIRE(b2.n() == 2);
  CHECK(b2.eigenvalues[0] == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(b2.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(b2.Phi.col(0).dot(jm.M * two.A.col(0)) / 2.0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(b2.Phi.col(1).dot(jm.M * two.A.col(1)) / 1.0) == doctest::Approx(1.0).epsilon(1e-10));

  // random set: M-orthonormality of the basis
  SnapshotSet rnd;
  rnd.A = Matrix(N, 12);
  for (Eigen::Index c = 0; c < 12; ++c)
    for (Eigen::Index r = 0; r < N; ++r) rnd.A(r, c) = rng.uniform(-1, 1);
  ReducedBasis br = compute_pod(rnd, jm);
  Matrix gram = br.Phi.transpose() * (jm.M * br.Phi);
  CHECK((gram - Matrix::Identity(br.n(), br.n())).cwiseAbs().maxCoeff() <= 1e-10);
  for (int i = 1; i < br.n(); ++i) CHECK(br.eigenvalues[i] <= br.eigenvalues[i - 1]);
}

TEST_CASE("POD: dense SVD oracle on a small fixture") {
  Mesh mesh = test::tiny_box();  // 108 DOFs
  JointMass jm = assemble_joint_mass(mesh, 1.3);
  const Eigen::Index N = jm.n_dof;
  Rng rng(31);
  SnapshotSet set;
  set.A = Matrix(N, 20);
  for (Eigen::Index c = 0; c < 20; ++c)
    for (Eigen::Index r = 0; r < N; ++r) set.A(r, c) = rng.uniform(-1, 1);
  ReducedBasis basis = compute_pod(set, jm);

  // oracle: modes are M^{-1/2} (left singular vectors of M^{1/2} A)
  Eigen::SelfAdjointEigenSolver<Matrix> meig(Matrix(jm.M));
  Matrix sqrtM = meig.operatorSqrt();
  Eigen::JacobiSVD<Matrix> svd(sqrtM * set.A, Eigen::ComputeThinU);
  for (int i = 0; i < basis.n(); ++i) {
    double sv = svd.singularValues()[i];
    CHECK(basis.eigenvalues[i] == doctest::Approx(sv * sv).epsilon(1e-8));
  }
  // subspace agreement: principal angles via singular values of Φ₁ᵀ M^{1/2}ᵀ...
  int n = std::min(basis.n(), 10);
  Matrix X = sqrtM * basis.Phi.leftCols(n);
  Matrix Y = svd.matrixU().leftCols(n);
  Eigen::JacobiSVD<Matrix> ang(X.transpose() * Y);
  for (int i = 0; i < n; ++i) CHECK(ang.singularValues()[i] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("POD: energy identity and scaling invariance") {
  Mesh mesh = test::tiny_box();
  JointMass jm = assemble_joint_mass(mesh, 0.6);
  Rng rng(13);
  SnapshotSet set;
  set.A = Matrix(jm.n_dof, 15);
  for (Eigen::Index c = 0; c < 15; ++c)
    for (Eigen::Index r = 0; r < set.A.rows(); ++r) set.A(r, c) = rng.uniform(-1, 1);
  ReducedBasis basis = compute_pod(set, jm);

  for (int n : {1, 5, 10}) {
    Matrix MPhi = jm.M * basis.Phi.leftCols(n);
    double residual = 0;
    for (Eigen::Index k = 0; k < set.K(); ++k) {
      Vector s = set.A.col(k);
      Vector r = s - basis.Phi.leftCols(n) * (MPhi.transpose() * s);
      residual += r.dot(jm.M * r);
    }
    double tail = 0;
    for (Eigen::Index i = n; i < basis.eigenvalues.size(); ++i) tail += basis.eigenvalues[i];
    CHECK(residual == doctest::Approx(tail).epsilon(1e-8));
  }

  // common rescaling: same modes (sign convention pins them), scaled Λ
  SnapshotSet scaled = set;
  scaled.A *= 3.0;
  ReducedBasis bs = compute_pod(scaled, jm);
  REQUIRE(bs.n() == basis.n());
  for (int i = 0; i < basis.n(); ++i) {
    CHECK(bs.eigenvalues[i] == doctest::Approx(9.0 * basis.eigenvalues[i]).epsilon(1e-10));
    CHECK((bs.Phi.col(i) - basis.Phi.col(i)).lpNorm<Eigen::Infinity>() <=
          1e-8 * basis.Phi.col(i).lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("pod_tail_error formula and monotonicity") {
  Vector evals(2);
  evals << 4.0, 1.0;
  CHECK(pod_tail_error(evals, 1) == doctest::Approx(std::sqrt(0.2)).epsilon(1e-12));
  CHECK(pod_tail_error(evals, 0) == 1.0);
  CHECK(pod_tail_error(evals, 2) == 0.0);

  Vector many(6);
  many << 32, 8, 4, 2, 1, 0.5;
  double prev = 1.0;
  for (int n = 0; n <= 6; ++n) {
    double e = pod_tail_error(many, n);
    CHECK(e <= prev + 1e-15);
    prev = e;
  }
  CHECK_THROWS_AS(pod_tail_error(Vector::Zero(3), 1), Error);
}

TEST_CASE("component tails recombine to the joint tail") {
  Mesh mesh = test::tiny_box();
  JointMass jm = assemble_joint_mass(mesh, 0.9);
  Rng rng(41);
  SnapshotSet set;
  set.A = Matrix(jm.n_dof, 10);
  for (Eigen::Index c = 0; c < 10; ++c)
    for (Eigen::Index r = 0; r < set.A.rows(); ++r) set.A(r, c) = rng.uniform(-1, 1);
  ReducedBasis basis = compute_pod(set, jm);
  for (int n : {1, 3, 7}) {
    auto [eu, ep] = component_tail_errors(set, basis, jm, n);
    double joint = pod_tail_error(basis.eigenvalues, n);
    CHECK(std::sqrt(eu * eu + jm.zeta * ep * ep) == doctest::Approx(joint).epsilon(1e-8));
  }
}
