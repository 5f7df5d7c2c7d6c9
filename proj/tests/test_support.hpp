#pragma once

#include "poro/fem.hpp"
#include "poro/mesh.hpp"
#include "poro/rng.hpp"

#include <filesystem>
#include <string>

namespace poro::test {

/// Unit-cube phantom: cavity [0.4,0.6]^3, neck patch [0.3,0.7]^2, h = 0.1.
inline PhantomConfig unit_phantom(double h = 0.1) {
  PhantomConfig cfg;
  cfg.outer_lo = Vec3(0, 0, 0);
  cfg.outer_hi = Vec3(1, 1, 1);
  cfg.cavity_lo = Vec3(0.4, 0.4, 0.4);
  cfg.cavity_hi = Vec3(0.6, 0.6, 0.6);
  cfg.neck_xmin = 0.3;
  cfg.neck_xmax = 0.7;
  cfg.neck_ymin = 0.3;
  cfg.neck_ymax = 0.7;
  cfg.h = h;
  return cfg;
}

/// 10 cm desk phantom, cavity [4,6]^3, h = 1.
inline PhantomConfig desk_phantom() {
  PhantomConfig cfg;
  cfg.outer_lo = Vec3(0, 0, 0);
  cfg.outer_hi = Vec3(10, 10, 10);
  cfg.cavity_lo = Vec3(4, 4, 4);
  cfg.cavity_hi = Vec3(6, 6, 6);
  cfg.neck_xmin = 3;
  cfg.neck_xmax = 7;
  cfg.neck_ymin = 3;
  cfg.neck_ymax = 7;
  cfg.h = 1;
  return cfg;
}

/// 27-node box, N = 108 DOFs; dense-oracle scale.
inline Mesh tiny_box() { return build_tagged_box(Vec3(0, 0, 0), Vec3(1, 1, 1), 2, 2, 2); }

inline MaterialParameters mid_theta() {
  MaterialParameters t;
  t.kappa = 5e-9;
  t.E = 5e5;
  t.nu = 0.42;
  t.p_ventricles = 1.05e4;
  return t;
}

/// Random state with Dirichlet entries zeroed (the test spaces U_h, Q_h).
inline Vector random_free_state(const FemSystem& sys, Rng& rng) {
  Vector x(sys.n_dof);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 1.0);
  for (int d : sys.dirichlet_dofs) x[d] = 0;
  return x;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("poro_test_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace poro::test
