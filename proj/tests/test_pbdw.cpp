#include "poro/pbdw.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>

using namespace poro;

namespace {

struct Fixture {
  Mesh mesh;
  JointMass jm;
  ObservationSpace space;
  ReducedBasis basis;

  Fixture(double zeta = 1.4, int n_snapshots = 14, std::uint64_t seed = 19) {
    mesh = test::tiny_box();
    jm = assemble_joint_mass(mesh, zeta);
    VoxelGrid grid = make_slice_voxels(mesh, {0.5}, 0.5);
    FunctionalMatrix fm = assemble_functionals(grid, mesh);
    space = orthonormalize(riesz_representers(fm, jm), jm);

    Rng rng(seed);
    SnapshotSet set;
    set.A = Matrix(jm.n_dof, n_snapshots);
    for (Eigen::Index c = 0; c < set.A.cols(); ++c)
      for (Eigen::Index r = 0; r < set.A.rows(); ++r) set.A(r, c) = rng.uniform(-1, 1);
    basis = compute_pod(set, jm);
  }
};

}  // namespace

TEST_CASE("cross-gramian: identity for nested sets, zero for orthogonal modes, dense oracle") {
  Fixture fx;

  // Φ ⊂ span(W) with matching order: the representer basis itself
  ReducedBasis wb;
  wb.Phi = fx.space.W;
  wb.eigenvalues = Vector::Ones(fx.space.m());
  Matrix G = cross_gramian(fx.space, wb.Phi);
  CHECK((G.transpose() * G - Matrix::Identity(G.cols(), G.cols())).cwiseAbs().maxCoeff() <= 1e-10);

  // a pressure-only mode is M-orthogonal to every representer
  const int nn = fx.mesh.num_nodes();
  Vector pmode = Vector::Zero(fx.jm.n_dof);
  for (int i = 0; i < nn; ++i) pmode[pdof(nn, i)] = 1.0;
  Matrix Gp = cross_gramian(fx.space, pmode);
  CHECK(Gp.cwiseAbs().maxCoeff() <= 1e-14);

  // dense entrywise oracle
  Matrix Gd(fx.space.m(), fx.basis.n());
  Matrix Mdense(fx.jm.M);
  for (int i = 0; i < fx.space.m(); ++i)
    for (int j = 0; j < fx.basis.n(); ++j)
      Gd(i, j) = fx.space.W.col(i).dot(Mdense * fx.basis.Phi.col(j));
  Matrix Gi = cross_gramian(fx.space, fx.basis.Phi);
  CHECK((Gi - Gd).cwiseAbs().maxCoeff() <= 1e-12 * Gd.cwiseAbs().maxCoeff());
}

TEST_CASE("stability constant: hand values and the sampled-ratio oracle") {
  Matrix G(3, 2);
  G << 1, 0, 0, 0.5, 0, 0;
  CHECK(stability_constant(G) == doctest::Approx(0.5).epsilon(1e-12));

  Matrix Gz(3, 2);
  Gz << 1, 0, 0.2, 0, 0.1, 0;
  CHECK(stability_constant(Gz) == 0.0);

  Fixture fx;
  int n = std::min(6, fx.basis.n());
  Matrix Gf = cross_gramian(fx.space, fx.basis.Phi.leftCols(n));
  double beta = stability_constant(Gf);
  CHECK(beta >= 0);
  CHECK(beta <= 1.0 + 1e-12);

  // β = inf ‖Π_W v‖/‖v‖ over unit v ∈ V_n: sampled minimum never dips below
  Rng rng(5);
  double sampled_min = 1e300;
  for (int t = 0; t < 10000; ++t) {
    Vector c(n);
    for (int i = 0; i < n; ++i) c[i] = rng.gaussian();
    c.normalize();
    sampled_min = std::min(sampled_min, (Gf * c).norm());
  }
  CHECK(sampled_min >= beta - 1e-9);
  CHECK(sampled_min <= 1.0);

  // the reported minimal singular value of GᵀG equals β²
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Gf.transpose() * Gf);
  CHECK(eig.eigenvalues().minCoeff() ==
        doctest::Approx(beta * beta).epsilon(1e-10));
}

TEST_CASE("select_dimension: synthetic table, monotone tails, flat beta") {
  CHECK(select_dimension(std::vector<double>{1.0, 0.5, 0.1, 0.09}, std::vector<double>{0.9, 0.8, 0.5, 0.01}) == 3);
  CHECK(select_dimension(std::vector<double>{1.0, 0.5, 0.1, 0.05}, std::vector<double>{1.0, 1.0, 1.0, 1.0}) == 4);  // ε̂ monotone
  CHECK(select_dimension(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5}) == 1);                       // tie toward smaller n
  CHECK_THROWS_AS(select_dimension(std::vector<double>{0.5}, std::vector<double>{0.0}), Error);

  Fixture fx;
  int n_max = std::min(fx.space.m(), fx.basis.n());
  Matrix Gf = cross_gramian(fx.space, fx.basis.Phi.leftCols(n_max));
  DimensionSelection sel = select_dimension(fx.basis.eigenvalues, Gf);
  REQUIRE(static_cast<int>(sel.beta.size()) == n_max);
  for (int n = 1; n < n_max; ++n)
    CHECK(sel.beta[static_cast<size_t>(n)] <= sel.beta[static_cast<size_t>(n - 1)] + 1e-10);
  for (size_t i = 0; i < sel.beta.size(); ++i) {
    Matrix Gn = Gf.leftCols(static_cast<Eigen::Index>(i + 1));
    CHECK(sel.beta[i] == doctest::Approx(stability_constant(Gn)).epsilon(1e-9));
  }
  CHECK(sel.n_star >= 1);
  CHECK(sel.n_star <= n_max);
}

TEST_CASE("reconstruct: R^2 toy problem by hand") {
  JointMass jm;
  jm.zeta = 1.0;
  jm.n_nodes = 0;
  jm.n_dof = 2;
  jm.M = SparseMatrix(2, 2);
  jm.M.setIdentity();

  ObservationSpace space;
  space.W = Matrix::Zero(2, 1);
  space.W(0, 0) = 1.0;  // e1
  space.MW = space.W;
  space.zeta = 1.0;

  ReducedBasis basis;
  basis.Phi = Matrix(2, 1);
  basis.Phi << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  basis.eigenvalues = Vector::Ones(1);

  Reconstructor rec(basis, 1, space, jm);
  CHECK(rec.beta() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  Vector l(1);
  l << 1.0;
  Reconstruction r = rec.reconstruct(l);
  CHECK(r.v_star[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.v_star[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.eta_star.norm() <= 1e-12);
  CHECK(r.u_star[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.diag.constraint_residual <= 1e-12);

  Reconstruction z = rec.reconstruct(Vector::Zero(1));
  CHECK(z.u_star.norm() == 0.0);
  CHECK(z.v_star.norm() == 0.0);
  CHECK(z.eta_star.norm() == 0.0);
}

TEST_CASE("reconstruct: optimality invariants and exact recovery") {
  Fixture fx;
  int n = std::min(8, std::min(fx.basis.n(), fx.space.m()));
  Reconstructor rec(fx.basis, n, fx.space, fx.jm);

  Rng rng(71);
  for (int t = 0; t < 5; ++t) {
    Vector l(fx.space.m());
    for (Eigen::Index i = 0; i < l.size(); ++i) l[i] = rng.uniform(-1, 1);
    Reconstruction r = rec.reconstruct(l);
    CHECK(r.diag.constraint_residual <= 1e-9);
    CHECK(r.diag.orthogonality_residual <= 1e-9);
    CHECK(r.diag.normal_eq_residual <= 1e-9);
    CHECK((r.u_star - (r.v_star + r.eta_star)).norm() == 0.0);
    // the corrector lives in W: pressure block zero
    CHECK(r.eta_star.tail(fx.mesh.num_nodes()).lpNorm<Eigen::Infinity>() == 0.0);
  }

  // exact recovery of u_true ∈ V_n from noise-free data
  Vector c_true(n);
  for (int i = 0; i < n; ++i) c_true[i] = rng.uniform(-2, 2);
  Vector u_true = fx.basis.Phi.leftCols(n) * c_true;
  Vector l = fx.space.MW.transpose() * u_true;
  Reconstruction r = rec.reconstruct(l);
  double rel = fx.jm.norm(r.u_star - u_true) / fx.jm.norm(u_true);
  CHECK(rel <= 1e-9);
}

TEST_CASE("saddle-point cross-check agrees with the closed form") {
  Fixture fx(0.9, 12, 101);
  for (int n : {3, 6}) {
    Reconstructor rec(fx.basis, n, fx.space, fx.jm);
    Rng rng(200 + static_cast<std::uint64_t>(n));
    Vector l(fx.space.m());
    for (Eigen::Index i = 0; i < l.size(); ++i) l[i] = rng.uniform(-1, 1);

    Reconstruction closed = rec.reconstruct(l);
    auto [u_saddle, lambda] = solve_saddle(l, fx.basis.Phi.leftCols(n), fx.space, fx.jm);

    double rel = fx.jm.norm(u_saddle - closed.u_star) / fx.jm.norm(closed.u_star);
    CHECK(rel <= 1e-8);

    // multiplier identity Gᵀλ = 0
    Vector gtl = rec.G().transpose() * lambda;
    CHECK(gtl.lpNorm<Eigen::Infinity>() <= 1e-9 * std::max(1.0, lambda.lpNorm<Eigen::Infinity>()));
  }

  // zero data: zero state and multiplier
  Reconstructor rec(fx.basis, 4, fx.space, fx.jm);
  auto [u0, lam0] = solve_saddle(Vector::Zero(fx.space.m()), fx.basis.Phi.leftCols(4), fx.space, fx.jm);
  CHECK(u0.norm() <= 1e-12);
  CHECK(lam0.norm() <= 1e-12);

  CHECK_THROWS_AS(solve_saddle(Vector::Zero(fx.space.m()), fx.basis.Phi.leftCols(4), fx.space, fx.jm, 10),
                  Error);  // fixture size guard
}

TEST_CASE("joint-space beta is bounded by the displacement-only beta") {
  Fixture fx(2.2, 10, 57);
  const int nn = fx.mesh.num_nodes();
  int n = std::min(5, fx.basis.n());

  Matrix G = cross_gramian(fx.space, fx.basis.Phi.leftCols(n));
  double beta_joint = stability_constant(G);

  // displacement parts, M_u-orthonormalized (pressure zeroed keeps the same
  // metric because representers have no pressure block)
  Matrix U = fx.basis.Phi.leftCols(n);
  U.bottomRows(nn).setZero();
  ObservationSpace uspace = orthonormalize(U, fx.jm);
  REQUIRE(uspace.m() == n);  // independent in exact arithmetic
  Matrix Gu = cross_gramian(fx.space, uspace.W);
  double beta_u = stability_constant(Gu);

  CHECK(beta_joint <= beta_u + 1e-10);
}

TEST_CASE("reconstructor rejects non-observable and ill-conditioned bases") {
  Fixture fx;
  const int nn = fx.mesh.num_nodes();

  // β = 0: a pressure-only mode is invisible to W
  ReducedBasis bad;
  bad.Phi = Matrix::Zero(fx.jm.n_dof, 1);
  for (int i = 0; i < nn; ++i) bad.Phi(pdof(nn, i), 0) = 1.0;
  double norm = std::sqrt(bad.Phi.col(0).dot(fx.jm.M * bad.Phi.col(0)));
  bad.Phi /= norm;
  bad.eigenvalues = Vector::Ones(1);
  CHECK_THROWS_AS(Reconstructor(bad, 1, fx.space, fx.jm), Error);

  // cond(G) > 1e12: a mode whose observable part is ~1e-14
  ReducedBasis nearly;
  nearly.Phi = Matrix(fx.jm.n_dof, 2);
  nearly.Phi.col(0) = fx.basis.Phi.col(0);
  double eps = 1e-14;
  nearly.Phi.col(1) = eps * fx.basis.Phi.col(1) + std::sqrt(1.0 - eps * eps) * bad.Phi.col(0);
  nearly.eigenvalues = Vector::Ones(2);
  CHECK_THROWS_AS(Reconstructor(nearly, 2, fx.space, fx.jm), Error);

  // m < n rejected
  ReducedBasis wide;
  wide.Phi = Matrix::Random(fx.jm.n_dof, fx.space.m() + 1);
  wide.eigenvalues = Vector::Ones(fx.space.m() + 1);
  CHECK_THROWS_AS(Reconstructor(wide, fx.space.m() + 1, fx.space, fx.jm), Error);
}

TEST_CASE("a-priori bound arithmetic") {
  CHECK(apriori_bound(0.0, 0.5) == 0.0);
  CHECK(apriori_bound(0.1, 0.5) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(apriori_bound(0.1, 0.0), Error);
  CHECK(apriori_bound_joint(0.3, 0.4, 1.0, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(apriori_bound_joint(0.0, 0.0, 2.0, 0.25) == 0.0);
}
