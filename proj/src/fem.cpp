#include "poro/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace poro {

void MaterialParameters::validate() const {
  if (!(E > 0)) throw Error("material: E must be positive");
  if (!(nu > 0 && nu < 0.5)) throw Error("material: nu must lie in (0, 0.5)");
  if (!(kappa > 0)) throw Error("material: kappa must be positive");
  if (!(mu_f > 0)) throw Error("material: mu_f must be positive");
  if (!(rho > 0)) throw Error("material: rho must be positive");
  if (!(skempton > 0 && skempton <= 1)) throw Error("material: B must lie in (0, 1]");
  if (!(alpha > 0 && alpha <= 1)) throw Error("material: alpha must lie in (0, 1]");
  double s = 3.0 * alpha * (1.0 - alpha * skempton) * (1.0 - 2.0 * nu) / (skempton * E);
  if (!(s > 0)) throw Error("material: derived storage coefficient is not positive");
}

DerivedModuli derive_moduli(const MaterialParameters& theta, StressLaw law) {
  theta.validate();
  DerivedModuli m;
  m.lambda = theta.E * theta.nu / ((1.0 + theta.nu) * (1.0 - 2.0 * theta.nu));
  m.mu_s = law == StressLaw::Hooke ? theta.E / (2.0 * (1.0 + theta.nu)) : theta.E;
  m.S_eps = 3.0 * theta.alpha * (1.0 - theta.alpha * theta.skempton) * (1.0 - 2.0 * theta.nu) /
            (theta.skempton * theta.E);
  return m;
}

namespace {

struct ElementGeometry {
  double volume;
  Vec3 grad[4];  // constant P1 gradients
};

ElementGeometry element_geometry(const Mesh& mesh, int e) {
  const auto& t = mesh.tets[static_cast<size_t>(e)];
  Vec3 p0 = mesh.nodes[static_cast<size_t>(t[0])];
  Eigen::Matrix3d J;
  for (int c = 0; c < 3; ++c) J.col(c) = mesh.nodes[static_cast<size_t>(t[c + 1])] - p0;
  double det = J.determinant();
  ElementGeometry g;
  g.volume = det / 6.0;
  if (!(std::abs(det) > 0)) throw Error("assembly: singular element Jacobian in tet " + std::to_string(e));
  Eigen::Matrix3d Jinv = J.inverse();
  for (int i = 0; i < 3; ++i) g.grad[i + 1] = Jinv.row(i).transpose();
  g.grad[0] = -(g.grad[1] + g.grad[2] + g.grad[3]);
  return g;
}

// 4-point tetrahedral quadrature, exact for quadratics. Barycentric
// (a,b,b,b) permutations with a = (5+3√5)/20, b = (5−√5)/20, weights V/4.
struct QuadRule {
  Vec3 points[4];
  double weight;  // common weight = volume/4
};

QuadRule quadrature(const Mesh& mesh, int e) {
  const auto& t = mesh.tets[static_cast<size_t>(e)];
  const double a = (5.0 + 3.0 * std::sqrt(5.0)) / 20.0;
  const double b = (5.0 - std::sqrt(5.0)) / 20.0;
  QuadRule q;
  q.weight = mesh.tet_volume(e) / 4.0;
  for (int k = 0; k < 4; ++k) {
    double bary[4] = {b, b, b, b};
    bary[k] = a;
    Vec3 x = Vec3::Zero();
    for (int v = 0; v < 4; ++v) x += bary[v] * mesh.nodes[static_cast<size_t>(t[v])];
    q.points[k] = x;
  }
  return q;
}

}  // namespace

FemSystem assemble_blocks(const Mesh& mesh, const MaterialParameters& theta, StressLaw law) {
  FemSystem sys;
  sys.n_nodes = mesh.num_nodes();
  sys.n_dof = 4 * static_cast<Eigen::Index>(sys.n_nodes);
  sys.theta = theta;
  sys.law = law;
  sys.moduli = derive_moduli(theta, law);

  const int nn = sys.n_nodes;
  std::vector<Triplet> t_mass, t_stiff, t_eps, t_div, t_grad, t_divc;
  t_mass.reserve(static_cast<size_t>(mesh.num_tets()) * 16);
  t_stiff.reserve(static_cast<size_t>(mesh.num_tets()) * 16);
  t_eps.reserve(static_cast<size_t>(mesh.num_tets()) * 144);
  t_div.reserve(static_cast<size_t>(mesh.num_tets()) * 144);
  t_grad.reserve(static_cast<size_t>(mesh.num_tets()) * 48);
  t_divc.reserve(static_cast<size_t>(mesh.num_tets()) * 48);

  for (int e = 0; e < mesh.num_tets(); ++e) {
    ElementGeometry g = element_geometry(mesh, e);
    const double V = g.volume;
    const auto& nod = mesh.tets[static_cast<size_t>(e)];
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        double mij = (i == j ? V / 10.0 : V / 20.0);
        t_mass.emplace_back(nod[static_cast<size_t>(i)], nod[static_cast<size_t>(j)], mij);
        t_stiff.emplace_back(nod[static_cast<size_t>(i)], nod[static_cast<size_t>(j)],
                             V * g.grad[i].dot(g.grad[j]));
        for (int a = 0; a < 3; ++a) {
          for (int b = 0; b < 3; ++b) {
            double eab = 0.5 * V * ((a == b ? g.grad[i].dot(g.grad[j]) : 0.0) + g.grad[i][b] * g.grad[j][a]);
            t_eps.emplace_back(udof(nod[static_cast<size_t>(i)], a), udof(nod[static_cast<size_t>(j)], b), eab);
            t_div.emplace_back(udof(nod[static_cast<size_t>(i)], a), udof(nod[static_cast<size_t>(j)], b),
                               V * g.grad[i][a] * g.grad[j][b]);
          }
          // (∂_a p_j, v_i e_a) and (∂_a u_j e_a, q_i)
          t_grad.emplace_back(udof(nod[static_cast<size_t>(i)], a), nod[static_cast<size_t>(j)],
                              V * g.grad[j][a] / 4.0);
          t_divc.emplace_back(nod[static_cast<size_t>(i)], udof(nod[static_cast<size_t>(j)], a),
                              V * g.grad[j][a] / 4.0);
        }
      }
    }
  }

  auto build = [](Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& trip) {
    SparseMatrix m(rows, cols);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
  };
  sys.mass_scalar = build(nn, nn, t_mass);
  sys.stiff_scalar = build(nn, nn, t_stiff);
  sys.eps_gram = build(3 * nn, 3 * nn, t_eps);
  sys.div_gram = build(3 * nn, 3 * nn, t_div);
  SparseMatrix grad_c = build(3 * nn, nn, t_grad);
  SparseMatrix div_c = build(nn, 3 * nn, t_divc);

  // Vector mass: component-diagonal copies of the scalar mass.
  std::vector<Triplet> t_vmass;
  t_vmass.reserve(static_cast<size_t>(sys.mass_scalar.nonZeros()) * 3);
  for (int k = 0; k < sys.mass_scalar.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(sys.mass_scalar, k); it; ++it)
      for (int a = 0; a < 3; ++a)
        t_vmass.emplace_back(udof(static_cast<int>(it.row()), a), udof(static_cast<int>(it.col()), a),
                             theta.rho * it.value());
  sys.M_U = build(3 * nn, 3 * nn, t_vmass);

  sys.A_U = 2.0 * sys.moduli.mu_s * sys.eps_gram + sys.moduli.lambda * sys.div_gram;
  sys.A_U.makeCompressed();
  sys.B = theta.alpha * grad_c;
  sys.Bp = theta.alpha * div_c;
  sys.M_P = sys.moduli.S_eps * sys.mass_scalar;
  sys.A_P = (theta.kappa / theta.mu_f) * sys.stiff_scalar;
  return sys;
}

double JointMass::norm(const Vector& x) const { return std::sqrt(std::max(0.0, dot(x, x))); }

double JointMass::u_norm2(const Vector& state) const {
  double s = 0;
  const auto u = state.head(3 * n_nodes);
  // component-wise against the scalar mass
  for (int a = 0; a < 3; ++a) {
    Vector comp(n_nodes);
    for (int i = 0; i < n_nodes; ++i) comp[i] = u[udof(i, a)];
    s += comp.dot(mass_scalar * comp);
  }
  return s;
}

double JointMass::p_norm2(const Vector& state) const {
  const auto p = state.tail(n_nodes);
  return p.dot(mass_scalar * p);
}

Vector JointMass::solve(const Vector& rhs) const {
  if (rhs.size() != n_dof) throw Error("joint mass: dimension mismatch");
  Vector w(n_dof);
  Vector tmp(n_nodes);
  for (int a = 0; a < 3; ++a) {
    for (int i = 0; i < n_nodes; ++i) tmp[i] = rhs[udof(i, a)];
    Vector sol = mass_llt->solve(tmp);
    for (int i = 0; i < n_nodes; ++i) w[udof(i, a)] = sol[i];
  }
  for (int i = 0; i < n_nodes; ++i) tmp[i] = rhs[pdof(n_nodes, i)];
  Vector sol = mass_llt->solve(tmp) / zeta;
  for (int i = 0; i < n_nodes; ++i) w[pdof(n_nodes, i)] = sol[i];
  return w;
}

JointMass assemble_joint_mass(const Mesh& mesh, double zeta) {
  if (!(zeta > 0)) throw Error("joint mass: zeta must be positive");
  JointMass jm;
  jm.zeta = zeta;
  jm.n_nodes = mesh.num_nodes();
  jm.n_dof = 4 * static_cast<Eigen::Index>(jm.n_nodes);

  std::vector<Triplet> t_mass;
  for (int e = 0; e < mesh.num_tets(); ++e) {
    double V = mesh.tet_volume(e);
    const auto& nod = mesh.tets[static_cast<size_t>(e)];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        t_mass.emplace_back(nod[static_cast<size_t>(i)], nod[static_cast<size_t>(j)],
                            i == j ? V / 10.0 : V / 20.0);
  }
  jm.mass_scalar = SparseMatrix(jm.n_nodes, jm.n_nodes);
  jm.mass_scalar.setFromTriplets(t_mass.begin(), t_mass.end());
  jm.mass_scalar.makeCompressed();

  std::vector<Triplet> t_joint;
  t_joint.reserve(static_cast<size_t>(jm.mass_scalar.nonZeros()) * 4);
  for (int k = 0; k < jm.mass_scalar.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(jm.mass_scalar, k); it; ++it) {
      for (int a = 0; a < 3; ++a)
        t_joint.emplace_back(udof(static_cast<int>(it.row()), a), udof(static_cast<int>(it.col()), a), it.value());
      t_joint.emplace_back(pdof(jm.n_nodes, static_cast<int>(it.row())), pdof(jm.n_nodes, static_cast<int>(it.col())),
                           zeta * it.value());
    }
  jm.M = SparseMatrix(jm.n_dof, jm.n_dof);
  jm.M.setFromTriplets(t_joint.begin(), t_joint.end());
  jm.M.makeCompressed();

  jm.mass_llt = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>();
  jm.mass_llt->compute(jm.mass_scalar);
  if (jm.mass_llt->info() != Eigen::Success) throw Error("joint mass: factorization failed");
  return jm;
}

void apply_boundary_conditions(FemSystem& sys, const Mesh& mesh, double neck_delta) {
  std::set<int> neck_nodes, vent_nodes, mre_nodes;
  for (const auto& f : mesh.facets) {
    auto* dst = f.tag == BoundaryRegion::Neck ? &neck_nodes
                : f.tag == BoundaryRegion::Ventricles ? &vent_nodes
                                                      : &mre_nodes;
    for (int v : f.nodes) dst->insert(v);
  }

  // Pressure: csf on Γ_MRE first, then ventricle values win on shared nodes.
  std::map<int, double> p_value;
  for (int v : mre_nodes) p_value[v] = sys.theta.p_csf;
  int clashes = 0;
  for (int v : vent_nodes) {
    if (p_value.count(v)) ++clashes;
    p_value[v] = sys.theta.p_ventricles;
  }

  std::vector<int> dofs;
  std::vector<double> values;
  for (int v : neck_nodes)
    for (int a = 0; a < 3; ++a) {
      dofs.push_back(udof(v, a));
      values.push_back(neck_delta);
    }
  for (const auto& [v, pv] : p_value) {
    dofs.push_back(pdof(sys.n_nodes, v));
    values.push_back(pv);
  }

  std::vector<size_t> order(dofs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return dofs[a] < dofs[b]; });

  sys.dirichlet_dofs.clear();
  sys.dirichlet_values.resize(static_cast<Eigen::Index>(dofs.size()));
  for (size_t i = 0; i < order.size(); ++i) {
    sys.dirichlet_dofs.push_back(dofs[order[i]]);
    sys.dirichlet_values[static_cast<Eigen::Index>(i)] = values[order[i]];
  }
  sys.dirichlet_profile = TimeProfile::Constant;
  sys.dirichlet_clashes = clashes;
}

void set_dirichlet(FemSystem& sys, std::vector<int> dofs, Vector values, TimeProfile profile) {
  if (static_cast<Eigen::Index>(dofs.size()) != values.size())
    throw Error("set_dirichlet: dofs/values size mismatch");
  sys.dirichlet_dofs = std::move(dofs);
  sys.dirichlet_values = std::move(values);
  sys.dirichlet_profile = profile;
}

Vector assemble_traction_spatial(const Mesh& mesh, const MaterialParameters& theta, const Vec3& direction) {
  const double L = mesh.frontal_length();
  if (!(L > 0)) throw Error("traction: frontal length L must be positive");
  const double y0 = mesh.bounding_box().lo.y();
  Vector load = Vector::Zero(4 * static_cast<Eigen::Index>(mesh.num_nodes()));
  bool any = false;
  for (size_t f = 0; f < mesh.facets.size(); ++f) {
    const auto& fc = mesh.facets[f];
    if (fc.tag != BoundaryRegion::Mre) continue;
    any = true;
    double area = mesh.facet_area(static_cast<int>(f));
    double s[3];
    for (int i = 0; i < 3; ++i)
      s[i] = 1.0 - (mesh.nodes[static_cast<size_t>(fc.nodes[i])].y() - y0) / L;
    for (int i = 0; i < 3; ++i) {
      // ∫_F s φ_i with both linear: A(2 s_i + s_j + s_k)/12
      double w = area * (2.0 * s[i] + s[(i + 1) % 3] + s[(i + 2) % 3]) / 12.0;
      for (int a = 0; a < 3; ++a) load[udof(fc.nodes[i], a)] += theta.xi * w * direction[a];
    }
  }
  if (!any) throw Error("traction: mesh has no MRE facets");
  return load;
}

LoadTerm traction_load(const Mesh& mesh, const MaterialParameters& theta, const Vec3& direction) {
  double omega = theta.omega;
  return LoadTerm{assemble_traction_spatial(mesh, theta, direction),
                  [omega](double t) { return std::sin(2.0 * std::numbers::pi * omega * t); }};
}

Vector assemble_load(const Mesh& mesh, const MaterialParameters& theta, double t, const Vec3& direction) {
  return assemble_traction_spatial(mesh, theta, direction) *
         std::sin(2.0 * std::numbers::pi * theta.omega * t);
}

Vector assemble_volume_load(const Mesh& mesh, const std::function<Vec3(const Vec3&)>& f_u,
                            const std::function<double(const Vec3&)>& f_p) {
  const int nn = mesh.num_nodes();
  Vector load = Vector::Zero(4 * static_cast<Eigen::Index>(nn));
  const double a = (5.0 + 3.0 * std::sqrt(5.0)) / 20.0;
  const double b = (5.0 - std::sqrt(5.0)) / 20.0;
  for (int e = 0; e < mesh.num_tets(); ++e) {
    const auto& nod = mesh.tets[static_cast<size_t>(e)];
    QuadRule q = quadrature(mesh, e);
    for (int k = 0; k < 4; ++k) {
      Vec3 fu = f_u ? f_u(q.points[k]) : Vec3::Zero();
      double fp = f_p ? f_p(q.points[k]) : 0.0;
      for (int v = 0; v < 4; ++v) {
        double phi = (v == k ? a : b);
        for (int c = 0; c < 3; ++c) load[udof(nod[static_cast<size_t>(v)], c)] += q.weight * phi * fu[c];
        load[pdof(nn, nod[static_cast<size_t>(v)])] += q.weight * phi * fp;
      }
    }
  }
  return load;
}

SparseMatrix newmark_matrix(const FemSystem& sys, double tau, double beta_hat) {
  if (!(tau > 0)) throw Error("newmark: tau must be positive");
  if (!(beta_hat > 0 && beta_hat <= 0.5)) throw Error("newmark: beta_hat must lie in (0, 1/2]");
  const int nn = sys.n_nodes;
  const double c_m = 1.0 / (beta_hat * tau * tau);
  std::vector<Triplet> trip;
  auto add_block = [&](const SparseMatrix& m, int row0, int col0, double scale) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it)
        trip.emplace_back(row0 + static_cast<int>(it.row()), col0 + static_cast<int>(it.col()),
                          scale * it.value());
  };
  add_block(sys.M_U, 0, 0, c_m);
  add_block(sys.A_U, 0, 0, 1.0);
  add_block(sys.B, 0, 3 * nn, 1.0);
  add_block(sys.Bp, 3 * nn, 0, 1.0);
  add_block(sys.M_P, 3 * nn, 3 * nn, 1.0);
  add_block(sys.A_P, 3 * nn, 3 * nn, beta_hat * tau);
  SparseMatrix K(sys.n_dof, sys.n_dof);
  K.setFromTriplets(trip.begin(), trip.end());
  K.makeCompressed();
  return K;
}

NewmarkSolver::NewmarkSolver(const FemSystem& sys, NewmarkConfig cfg, std::vector<LoadTerm> loads)
    : sys_(sys), cfg_(cfg), loads_(std::move(loads)) {
  K_ = newmark_matrix(sys, cfg.tau, cfg.beta_hat);

  // Row/column elimination with right-hand-side lifting.
  Vector base = Vector::Zero(sys.n_dof);
  for (size_t i = 0; i < sys.dirichlet_dofs.size(); ++i)
    base[sys.dirichlet_dofs[i]] = sys.dirichlet_values[static_cast<Eigen::Index>(i)];
  lift_ = K_ * base;

  std::vector<char> mask(static_cast<size_t>(sys.n_dof), 0);
  for (int d : sys.dirichlet_dofs) mask[static_cast<size_t>(d)] = 1;
  std::vector<Triplet> trip;
  trip.reserve(static_cast<size_t>(K_.nonZeros()));
  for (int k = 0; k < K_.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(K_, k); it; ++it)
      if (!mask[static_cast<size_t>(it.row())] && !mask[static_cast<size_t>(it.col())])
        trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int d : sys.dirichlet_dofs) trip.emplace_back(d, d, 1.0);
  Kc_ = SparseMatrix(sys.n_dof, sys.n_dof);
  Kc_.setFromTriplets(trip.begin(), trip.end());
  Kc_.makeCompressed();

  lu_.compute(Kc_);
  if (lu_.info() != Eigen::Success)
    throw Error("newmark: singular iteration matrix (tau=" + std::to_string(cfg.tau) +
                ", beta_hat=" + std::to_string(cfg.beta_hat) + ")");
  reset();
}

void NewmarkSolver::reset() {
  y_ = Vector::Zero(sys_.n_dof);
  if (cfg_.initial_pressure != 0.0)
    y_.tail(sys_.n_nodes).setConstant(cfg_.initial_pressure);
  ydot_ = Vector::Zero(sys_.n_dof);
  yddot_ = Vector::Zero(sys_.n_dof);
  t_ = 0;
  step_ = 0;
}

double NewmarkSolver::bc_scale(double t) const {
  switch (sys_.dirichlet_profile) {
    case TimeProfile::Constant: return 1.0;
    case TimeProfile::Ramp: return t;
    case TimeProfile::Quadratic: return t * t;
  }
  return 1.0;
}

Vector NewmarkSolver::step_rhs(const Vector& y, const Vector& ydot, const Vector& yddot, double t_next) const {
  const int nn = sys_.n_nodes;
  const double tau = cfg_.tau, bh = cfg_.beta_hat;
  const double c_m = 1.0 / (bh * tau * tau);
  const double c2 = (1.0 - 2.0 * bh) / (2.0 * bh);

  Vector rhs = Vector::Zero(sys_.n_dof);
  for (const auto& term : loads_) {
    double amp = term.amplitude ? term.amplitude(t_next) : 1.0;
    rhs.head(3 * nn) += amp * term.spatial.head(3 * nn);
    rhs.tail(nn) += (bh * tau) * amp * term.spatial.tail(nn);  // second-row scaling
  }

  Vector pred = y + tau * ydot;
  rhs.head(3 * nn) += c_m * (sys_.M_U * pred.head(3 * nn)) + c2 * (sys_.M_U * yddot.head(3 * nn));

  Vector hist_u = pred.head(3 * nn) - (bh * tau) * ydot.head(3 * nn) +
                  (bh * tau * tau * c2) * yddot.head(3 * nn);
  Vector hist_p = pred.tail(nn) - (bh * tau) * ydot.tail(nn) + (bh * tau * tau * c2) * yddot.tail(nn);
  rhs.tail(nn) += sys_.Bp * hist_u + sys_.M_P * hist_p;

  double s = bc_scale(t_next);
  rhs -= s * lift_;
  for (size_t i = 0; i < sys_.dirichlet_dofs.size(); ++i)
    rhs[sys_.dirichlet_dofs[i]] = s * sys_.dirichlet_values[static_cast<Eigen::Index>(i)];
  return rhs;
}

void NewmarkSolver::advance() {
  const double tau = cfg_.tau, bh = cfg_.beta_hat;
  const double c2 = (1.0 - 2.0 * bh) / (2.0 * bh);
  double t_next = t_ + tau;
  Vector rhs = step_rhs(y_, ydot_, yddot_, t_next);
  Vector y_next = lu_.solve(rhs);
  Vector yddot_next = (y_next - y_ - tau * ydot_) / (bh * tau * tau) - c2 * yddot_;
  Vector ydot_next = ydot_ + tau * yddot_next;
  y_ = std::move(y_next);
  ydot_ = std::move(ydot_next);
  yddot_ = std::move(yddot_next);
  t_ = t_next;
  ++step_;
}

void NewmarkSolver::set_state(const Vector& y, const Vector& ydot, const Vector& yddot, int step_index) {
  y_ = y;
  ydot_ = ydot;
  yddot_ = yddot;
  step_ = step_index;
  t_ = step_index * cfg_.tau;
}

TimeSeries NewmarkSolver::run() {
  reset();
  TimeSeries ts;
  ts.tau = cfg_.tau;
  ts.period = 1.0 / sys_.theta.omega;
  ts.states.reserve(static_cast<size_t>(cfg_.steps) + 1);
  ts.states.push_back(y_);
  for (int s = 0; s < cfg_.steps; ++s) {
    advance();
    ts.states.push_back(y_);
  }
  return ts;
}

TimeSeries newmark_solve(const FemSystem& sys, NewmarkConfig cfg, std::vector<LoadTerm> loads) {
  if (cfg.steps < 1) throw Error("newmark: steps must be >= 1");
  NewmarkSolver solver(sys, cfg, std::move(loads));
  return solver.run();
}

double triple_norm_squared(const FemSystem& sys, const Vector& state, double tau) {
  if (state.size() != sys.n_dof) throw Error("triple_norm: dimension mismatch");
  const int nn = sys.n_nodes;
  const auto u = state.head(3 * nn);
  const auto p = state.tail(nn);
  double s = u.dot(sys.M_U * u) / (tau * tau);  // M_U carries ρ
  s += 2.0 * sys.theta.E * u.dot(sys.eps_gram * u);
  s += sys.moduli.S_eps * p.dot(sys.mass_scalar * p);
  s += (sys.theta.kappa * tau / sys.theta.mu_f) * p.dot(sys.stiff_scalar * p);
  return s;
}

double triple_norm(const FemSystem& sys, const Vector& state, double tau) {
  return std::sqrt(std::max(0.0, triple_norm_squared(sys, state, tau)));
}

double bilinear_form(const FemSystem& sys, const Vector& state, double tau, double beta_hat) {
  const int nn = sys.n_nodes;
  const auto u = state.head(3 * nn);
  const auto p = state.tail(nn);
  const double c_m = 1.0 / (beta_hat * tau * tau);
  double s = c_m * u.dot(sys.M_U * u) + u.dot(sys.A_U * u) + u.dot(sys.B * p);
  s += p.dot(sys.Bp * u) + p.dot(sys.M_P * p) + beta_hat * tau * p.dot(sys.A_P * p);
  return s;
}

}  // namespace poro
