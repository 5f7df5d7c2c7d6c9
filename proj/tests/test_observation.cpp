#include "poro/observation.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace poro;

TEST_CASE("slice voxels: mid-plane on the desk phantom") {
  Mesh mesh = build_phantom(test::desk_phantom());
  VoxelGrid grid = make_slice_voxels(mesh, {5.0}, 1.0);
  CHECK(grid.size() <= 100);
  CHECK(grid.size() == 96);  // 100 lattice voxels minus 4 fully inside the cavity
  CHECK(grid.dropped == 4);

  CHECK_THROWS_AS(make_slice_voxels(mesh, {20.0}, 1.0), Error);

  VoxelGrid three = make_slice_voxels(mesh, {3.0, 5.0, 7.0}, 1.0);
  CHECK(three.size() > grid.size());

  // deterministic lexicographic ordering by center
  for (int i = 1; i < grid.size(); ++i) {
    Vec3 a = grid.voxels[static_cast<size_t>(i - 1)].center();
    Vec3 b = grid.voxels[static_cast<size_t>(i)].center();
    bool less = a.x() < b.x() || (a.x() == b.x() && (a.y() < b.y() || (a.y() == b.y() && a.z() < b.z())));
    CHECK(less);
  }
}

TEST_CASE("functionals are exact on affine fields over cell-aligned voxels") {
  Mesh mesh = build_phantom(test::desk_phantom());
  const int nn = mesh.num_nodes();

  // one voxel exactly covering the grid cell [0,1]^2 x [4.5,5.5]... use a
  // whole-cell box so every element is wholly in or out
  VoxelGrid grid;
  grid.edge = 1.0;
  VoxelBox box;
  box.id = 0;
  box.lo = Vec3(0, 0, 5);
  box.hi = Vec3(1, 1, 6);
  grid.voxels.push_back(box);
  FunctionalMatrix fm = assemble_functionals(grid, mesh);
  REQUIRE(fm.m() == 3);

  double Vv = 1.0;
  Vector e1 = Vector::Zero(4 * nn);
  for (int i = 0; i < nn; ++i) e1[udof(i, 0)] = 1.0;
  Vector vals = fm.L * e1;
  CHECK(vals[0] == doctest::Approx(Vv).epsilon(1e-12));
  CHECK(std::abs(vals[1]) <= 1e-14);
  CHECK(std::abs(vals[2]) <= 1e-14);

  // linear field v1 = x integrates to Vv * centroid_x = 1 * 0.5
  Vector vx = Vector::Zero(4 * nn);
  for (int i = 0; i < nn; ++i) vx[udof(i, 0)] = mesh.nodes[static_cast<size_t>(i)].x();
  CHECK((fm.L * vx)[0] == doctest::Approx(0.5 * Vv).epsilon(1e-12));

  // pressure-only state observes to zero
  Vector ponly = Vector::Zero(4 * nn);
  for (int i = 0; i < nn; ++i) ponly[pdof(nn, i)] = 3.14;
  CHECK((fm.L * ponly).lpNorm<Eigen::Infinity>() == 0.0);

  // normalization flag divides by the voxel volume
  FunctionalMatrix fmn = assemble_functionals(grid, mesh, true);
  CHECK((fmn.L * e1)[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("riesz representers: defining property, zero row, dense oracle") {
  Mesh mesh = test::tiny_box();
  const int nn = mesh.num_nodes();
  JointMass jm = assemble_joint_mass(mesh, 0.37);
  VoxelGrid grid = make_slice_voxels(mesh, {0.5}, 0.5);
  FunctionalMatrix fm = assemble_functionals(grid, mesh);
  Matrix W = riesz_representers(fm, jm);
  REQUIRE(W.cols() == fm.m());

  Rng rng(11);
  for (int i = 0; i < fm.m(); ++i) {
    // pressure block exactly zero
    CHECK(W.col(i).tail(nn).lpNorm<Eigen::Infinity>() == 0.0);
  }
  for (int t = 0; t < 20; ++t) {
    Vector v(4 * nn);
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = rng.uniform(-1, 1);
    Vector lhs = W.transpose() * (jm.M * v);
    Vector rhs = fm.L * v;
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <=
          1e-10 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>()));
  }

  // zero functional row -> zero representer
  FunctionalMatrix zero;
  zero.n_voxels = 1;
  zero.L = SparseMatrix(3, 4 * nn);
  Matrix Wz = riesz_representers(zero, jm);
  CHECK(Wz.cwiseAbs().maxCoeff() == 0.0);

  // dense-inverse oracle on the 108-DOF fixture
  Matrix Minv = Matrix(jm.M).inverse();
  Matrix Wd = Minv * Matrix(fm.L).transpose();
  CHECK((W - Wd).cwiseAbs().maxCoeff() <= 1e-10 * Wd.cwiseAbs().maxCoeff());
}

TEST_CASE("orthonormalize: Gram identity, span preservation, degenerate columns") {
  Mesh mesh = test::tiny_box();
  JointMass jm = assemble_joint_mass(mesh, 2.3);
  const Eigen::Index N = jm.n_dof;
  Rng rng(23);

  Matrix raw(N, 50);
  for (Eigen::Index c = 0; c < raw.cols(); ++c)
    for (Eigen::Index r = 0; r < N; ++r) raw(r, c) = rng.uniform(-1, 1);

  ObservationSpace space = orthonormalize(raw, jm);
  REQUIRE(space.m() == 50);
  Matrix gram = space.W.transpose() * (jm.M * space.W);
  Matrix defect = gram - Matrix::Identity(50, 50);
  CHECK(defect.cwiseAbs().maxCoeff() <= 1e-10);

  // span preserved: every original column reconstructs from the basis
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    Vector coef = space.MW.transpose() * raw.col(c);
    double rel = (space.W * coef - raw.col(c)).norm() / raw.col(c).norm();
    CHECK(rel <= 1e-10);
  }

  // the recorded transform maps raw functional evaluations to the basis
  Vector v(N);
  for (Eigen::Index r = 0; r < N; ++r) v[r] = rng.uniform(-1, 1);
  Vector raw_vals = raw.transpose() * (jm.M * v);
  Vector l = space.to_orthonormal(raw_vals);
  Vector direct = space.MW.transpose() * v;
  CHECK((l - direct).lpNorm<Eigen::Infinity>() <= 1e-9 * direct.lpNorm<Eigen::Infinity>());

  // already-orthonormal input: output equals input up to column signs
  ObservationSpace twice = orthonormalize(space.W, jm);
  REQUIRE(twice.m() == 50);
  for (int c = 0; c < 50; ++c) {
    double dot = twice.W.col(c).dot(jm.M * space.W.col(c));
    CHECK(std::abs(std::abs(dot) - 1.0) <= 1e-10);
  }

  // two identical columns: one dropped, m reduced by one
  Matrix dup(N, 3);
  dup.col(0) = raw.col(0);
  dup.col(1) = raw.col(0);
  dup.col(2) = raw.col(1);
  ObservationSpace dropped = orthonormalize(dup, jm);
  CHECK(dropped.m() == 2);
  CHECK(dropped.dropped.size() == 1);
  CHECK(dropped.dropped[0] == 1);
}

TEST_CASE("observe: zero states, linearity, projection identity") {
  Mesh mesh = test::tiny_box();
  const int nn = mesh.num_nodes();
  JointMass jm = assemble_joint_mass(mesh, 1.7);
  VoxelGrid grid = make_slice_voxels(mesh, {0.5}, 0.5);
  FunctionalMatrix fm = assemble_functionals(grid, mesh);

  TimeSeries ts;
  ts.tau = 0.5;
  ts.states.push_back(Vector::Zero(4 * nn));  // initial
  Rng rng(5);
  Vector s1(4 * nn), s2(4 * nn);
  for (Eigen::Index i = 0; i < s1.size(); ++i) {
    s1[i] = rng.uniform(-1, 1);
    s2[i] = rng.uniform(-1, 1);
  }
  ts.states.push_back(s1);
  ts.states.push_back(s2);

  MeasurementSeries ms = observe(ts, fm);
  REQUIRE(ms.steps() == 2);  // initial state skipped by default
  MeasurementSeries all = observe(ts, fm, true);
  REQUIRE(all.steps() == 3);
  CHECK(all.values[0].lpNorm<Eigen::Infinity>() == 0.0);

  // linearity
  TimeSeries combo;
  combo.tau = ts.tau;
  combo.states.push_back(Vector::Zero(4 * nn));
  combo.states.push_back(2.0 * s1 - 3.0 * s2);
  Vector lc = observe(combo, fm).values[0];
  Vector expect = 2.0 * ms.values[0] - 3.0 * ms.values[1];
  CHECK((lc - expect).lpNorm<Eigen::Infinity>() <= 1e-12 * expect.lpNorm<Eigen::Infinity>());

  // projection identity: Π_W u re-observed reproduces ℓ(u)
  Matrix W = riesz_representers(fm, jm);
  ObservationSpace space = orthonormalize(W, jm);
  Vector proj = space.W * (space.MW.transpose() * s1);
  Vector l_orig = fm.L * s1;
  Vector l_proj = fm.L * proj;
  CHECK((l_orig - l_proj).lpNorm<Eigen::Infinity>() <= 1e-10 * l_orig.lpNorm<Eigen::Infinity>());
}

TEST_CASE("noise: passthrough, sigma scale, empirical std") {
  MeasurementSeries ms;
  ms.tau = 1e-3;
  Rng rng(17);
  for (int s = 0; s < 100; ++s) {
    Vector v(1000);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-2, 2);
    ms.values.push_back(v);
  }

  MeasurementSeries clean = add_noise(ms, 0.0, 99);
  for (int s = 0; s < clean.steps(); ++s)
    CHECK((clean.values[static_cast<size_t>(s)] - ms.values[static_cast<size_t>(s)]).norm() == 0.0);

  double max_signal = 0;
  for (const auto& v : ms.values) max_signal = std::max(max_signal, v.lpNorm<Eigen::Infinity>());
  double sigma = 0.1 * max_signal;

  MeasurementSeries noisy = add_noise(ms, 0.1, 4242);
  MeasurementSeries again = add_noise(ms, 0.1, 4242);
  double sum2 = 0;
  long count = 0;
  for (int s = 0; s < noisy.steps(); ++s) {
    Vector d = noisy.values[static_cast<size_t>(s)] - ms.values[static_cast<size_t>(s)];
    // deterministic under the same seed
    CHECK((noisy.values[static_cast<size_t>(s)] - again.values[static_cast<size_t>(s)]).norm() == 0.0);
    sum2 += d.squaredNorm();
    count += d.size();
  }
  double emp = std::sqrt(sum2 / static_cast<double>(count));
  CHECK(emp == doctest::Approx(sigma).epsilon(0.02));  // 10^5 draws within 2%

  CHECK_THROWS_AS(add_noise(ms, -0.1, 1), Error);
}
