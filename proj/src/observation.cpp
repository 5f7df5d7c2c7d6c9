#include "poro/observation.hpp"

#include "poro/rng.hpp"

#include <algorithm>
#include <cmath>

namespace poro {

namespace {

struct QuadPoint {
  Vec3 x;
  double phi[4];  // P1 values at the point
  double weight;
};

// Same 4-point rule as the assembly; points are strictly interior to the
// element, so half-open voxel membership is unambiguous.
std::vector<QuadPoint> element_quadrature(const Mesh& mesh, int e) {
  const double a = (5.0 + 3.0 * std::sqrt(5.0)) / 20.0;
  const double b = (5.0 - std::sqrt(5.0)) / 20.0;
  const auto& nod = mesh.tets[static_cast<size_t>(e)];
  double w = mesh.tet_volume(e) / 4.0;
  std::vector<QuadPoint> out(4);
  for (int k = 0; k < 4; ++k) {
    QuadPoint& q = out[static_cast<size_t>(k)];
    q.weight = w;
    Vec3 x = Vec3::Zero();
    for (int v = 0; v < 4; ++v) {
      q.phi[v] = (v == k ? a : b);
      x += q.phi[v] * mesh.nodes[static_cast<size_t>(nod[static_cast<size_t>(v)])];
    }
    q.x = x;
  }
  return out;
}

bool in_box(const Vec3& x, const Vec3& lo, const Vec3& hi) {
  for (int d = 0; d < 3; ++d)
    if (x[d] < lo[d] || x[d] >= hi[d]) return false;
  return true;
}

}  // namespace

VoxelGrid make_slice_voxels(const Mesh& mesh, const std::vector<double>& planes, double edge) {
  if (!(edge > 0)) throw Error("voxels: edge must be positive");
  BoundingBox bb = mesh.bounding_box();
  for (double z : planes)
    if (z < bb.lo.z() || z > bb.hi.z())
      throw Error("voxels: slice plane z=" + std::to_string(z) + " lies outside the mesh");
  for (size_t i = 0; i < planes.size(); ++i)
    for (size_t j = i + 1; j < planes.size(); ++j)
      if (std::abs(planes[i] - planes[j]) < edge)
        throw Error("voxels: slice planes closer than one edge would overlap");

  const int nx = std::max(1, static_cast<int>(std::ceil((bb.hi.x() - bb.lo.x()) / edge - 1e-12)));
  const int ny = std::max(1, static_cast<int>(std::ceil((bb.hi.y() - bb.lo.y()) / edge - 1e-12)));

  // Mark lattice voxels that contain at least one element quadrature point,
  // the same membership rule the functional assembly uses.
  std::vector<std::vector<char>> hit(planes.size(), std::vector<char>(static_cast<size_t>(nx) * ny, 0));
  for (int e = 0; e < mesh.num_tets(); ++e) {
    for (const auto& q : element_quadrature(mesh, e)) {
      for (size_t k = 0; k < planes.size(); ++k) {
        double zlo = planes[k] - edge / 2.0, zhi = planes[k] + edge / 2.0;
        if (q.x.z() < zlo || q.x.z() >= zhi) continue;
        int ix = static_cast<int>(std::floor((q.x.x() - bb.lo.x()) / edge));
        int iy = static_cast<int>(std::floor((q.x.y() - bb.lo.y()) / edge));
        if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) continue;
        hit[k][static_cast<size_t>(iy) * nx + ix] = 1;
      }
    }
  }

  VoxelGrid grid;
  grid.planes = planes;
  grid.edge = edge;
  std::vector<VoxelBox> boxes;
  int total = 0;
  for (size_t k = 0; k < planes.size(); ++k) {
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix) {
        ++total;
        if (!hit[k][static_cast<size_t>(iy) * nx + ix]) continue;
        VoxelBox box;
        box.lo = Vec3(bb.lo.x() + ix * edge, bb.lo.y() + iy * edge, planes[k] - edge / 2.0);
        box.hi = box.lo + Vec3(edge, edge, edge);
        boxes.push_back(box);
      }
  }
  grid.dropped = total - static_cast<int>(boxes.size());
  std::sort(boxes.begin(), boxes.end(), [](const VoxelBox& a, const VoxelBox& b) {
    Vec3 ca = a.center(), cb = b.center();
    if (ca.x() != cb.x()) return ca.x() < cb.x();
    if (ca.y() != cb.y()) return ca.y() < cb.y();
    return ca.z() < cb.z();
  });
  for (size_t i = 0; i < boxes.size(); ++i) boxes[i].id = static_cast<int>(i);
  grid.voxels = std::move(boxes);
  if (grid.voxels.empty()) throw Error("voxels: no voxel intersects the mesh");
  return grid;
}

FunctionalMatrix assemble_functionals(const VoxelGrid& grid, const Mesh& mesh, bool normalize) {
  const int nn = mesh.num_nodes();
  const int m = 3 * grid.size();
  std::vector<Triplet> trip;

  for (int e = 0; e < mesh.num_tets(); ++e) {
    const auto& nod = mesh.tets[static_cast<size_t>(e)];
    for (const auto& q : element_quadrature(mesh, e)) {
      for (const auto& box : grid.voxels) {
        if (!in_box(q.x, box.lo, box.hi)) continue;
        double scale = q.weight;
        if (normalize) {
          Vec3 ext = box.hi - box.lo;
          scale /= ext.x() * ext.y() * ext.z();
        }
        for (int v = 0; v < 4; ++v)
          for (int j = 0; j < 3; ++j)
            trip.emplace_back(3 * box.id + j, udof(nod[static_cast<size_t>(v)], j), scale * q.phi[v]);
        break;  // voxels are disjoint
      }
    }
  }

  FunctionalMatrix fm;
  fm.n_voxels = grid.size();
  fm.normalized = normalize;
  fm.L = SparseMatrix(m, 4 * static_cast<Eigen::Index>(nn));
  fm.L.setFromTriplets(trip.begin(), trip.end());
  fm.L.makeCompressed();
  return fm;
}

Matrix riesz_representers(const FunctionalMatrix& functionals, const JointMass& jm) {
  if (functionals.L.cols() != jm.n_dof) throw Error("representers: dimension mismatch");
  const int m = functionals.m();
  Matrix W(jm.n_dof, m);
  SparseMatrix Lt = functionals.L.transpose();
  for (int i = 0; i < m; ++i) {
    Vector rhs = Lt.col(i);
    W.col(i) = jm.solve(rhs);
  }
  return W;
}

ObservationSpace orthonormalize(const Matrix& w_raw, const JointMass& jm) {
  const Eigen::Index n_dof = w_raw.rows();
  const int m_raw = static_cast<int>(w_raw.cols());
  if (n_dof != jm.n_dof) throw Error("orthonormalize: dimension mismatch");

  ObservationSpace space;
  space.zeta = jm.zeta;
  space.W.resize(n_dof, m_raw);
  space.MW.resize(n_dof, m_raw);
  Matrix R = Matrix::Zero(m_raw, m_raw);

  double s_max = 0;
  for (int k = 0; k < m_raw; ++k) {
    Vector mv = jm.M * w_raw.col(k);
    s_max = std::max(s_max, std::sqrt(std::max(0.0, w_raw.col(k).dot(mv))));
  }
  const double drop_tol = 1e-12 * s_max;

  int kept = 0;
  for (int k = 0; k < m_raw; ++k) {
    Vector v = w_raw.col(k);
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < kept; ++j) {
        double r = space.MW.col(j).dot(v);
        v -= r * space.W.col(j);
        R(j, k) += r;
      }
    }
    Vector mv = jm.M * v;
    double norm = std::sqrt(std::max(0.0, v.dot(mv)));
    if (norm <= drop_tol) {
      space.dropped.push_back(k);
      continue;
    }
    space.W.col(kept) = v / norm;
    space.MW.col(kept) = mv / norm;
    R(kept, k) = norm;
    space.kept.push_back(k);
    ++kept;
  }
  space.W.conservativeResize(Eigen::NoChange, kept);
  space.MW.conservativeResize(Eigen::NoChange, kept);
  space.R = R.topRows(kept);
  return space;
}

Vector ObservationSpace::to_orthonormal(const Vector& l_raw) const {
  if (l_raw.size() != R.cols()) throw Error("to_orthonormal: raw measurement size mismatch");
  const int mk = m();
  Matrix Rk(mk, mk);
  Vector rhs(mk);
  for (int j = 0; j < mk; ++j) {
    Rk.col(j) = R.col(kept[static_cast<size_t>(j)]);
    rhs[j] = l_raw[kept[static_cast<size_t>(j)]];
  }
  return Rk.transpose().triangularView<Eigen::Lower>().solve(rhs);
}

MeasurementSeries observe(const TimeSeries& series, const FunctionalMatrix& functionals,
                          bool include_initial) {
  MeasurementSeries ms;
  ms.tau = series.tau;
  size_t first = include_initial ? 0 : 1;
  if (series.states.size() <= first && !(include_initial && !series.states.empty()))
    throw Error("observe: series has no states to observe");
  for (size_t k = first; k < series.states.size(); ++k) {
    if (series.states[k].size() != functionals.L.cols()) throw Error("observe: dimension mismatch");
    ms.values.push_back(functionals.L * series.states[k]);
  }
  return ms;
}

MeasurementSeries add_noise(const MeasurementSeries& ms, double intensity, std::uint64_t seed) {
  if (intensity < 0) throw Error("noise: intensity must be nonnegative");
  if (intensity == 0) return ms;
  double max_signal = 0;
  for (const auto& v : ms.values) max_signal = std::max(max_signal, v.lpNorm<Eigen::Infinity>());
  double sigma = intensity * max_signal;

  MeasurementSeries out = ms;
  out.noise_intensity = intensity;
  out.seed = seed;
  Rng rng(seed);
  for (auto& v : out.values)
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += sigma * rng.gaussian();
  return out;
}

}  // namespace poro
