#include "poro/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace poro {

std::string to_string(BoundaryRegion r) {
  switch (r) {
    case BoundaryRegion::Neck: return "neck";
    case BoundaryRegion::Ventricles: return "ventricles";
    case BoundaryRegion::Mre: return "mre";
  }
  return "?";
}

std::optional<BoundaryRegion> region_from_string(const std::string& s) {
  std::string t;
  for (char c : s) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "neck") return BoundaryRegion::Neck;
  if (t == "ventricles") return BoundaryRegion::Ventricles;
  if (t == "mre") return BoundaryRegion::Mre;
  return std::nullopt;
}

double Mesh::tet_volume(int e) const {
  const auto& t = tets[static_cast<size_t>(e)];
  Vec3 a = nodes[static_cast<size_t>(t[1])] - nodes[static_cast<size_t>(t[0])];
  Vec3 b = nodes[static_cast<size_t>(t[2])] - nodes[static_cast<size_t>(t[0])];
  Vec3 c = nodes[static_cast<size_t>(t[3])] - nodes[static_cast<size_t>(t[0])];
  return a.cross(b).dot(c) / 6.0;
}

double Mesh::facet_area(int f) const {
  const auto& fc = facets[static_cast<size_t>(f)].nodes;
  Vec3 a = nodes[static_cast<size_t>(fc[1])] - nodes[static_cast<size_t>(fc[0])];
  Vec3 b = nodes[static_cast<size_t>(fc[2])] - nodes[static_cast<size_t>(fc[0])];
  return 0.5 * a.cross(b).norm();
}

double Mesh::volume() const {
  double v = 0;
  for (int e = 0; e < num_tets(); ++e) v += tet_volume(e);
  return v;
}

double Mesh::boundary_area(BoundaryRegion tag) const {
  double a = 0;
  for (int f = 0; f < static_cast<int>(facets.size()); ++f)
    if (facets[static_cast<size_t>(f)].tag == tag) a += facet_area(f);
  return a;
}

BoundingBox Mesh::bounding_box() const {
  BoundingBox bb;
  if (nodes.empty()) return bb;
  bb.lo = bb.hi = nodes[0];
  for (const auto& p : nodes) {
    bb.lo = bb.lo.cwiseMin(p);
    bb.hi = bb.hi.cwiseMax(p);
  }
  return bb;
}

double Mesh::frontal_length() const {
  if (frontal_length_override) return *frontal_length_override;
  BoundingBox bb = bounding_box();
  return bb.hi.y() - bb.lo.y();
}

void PhantomConfig::validate() const {
  if (h <= 0) throw Error("phantom: mesh size h must be positive");
  for (int d = 0; d < 3; ++d) {
    if (!(outer_lo[d] < outer_hi[d])) throw Error("phantom: empty outer extents");
    if (!(cavity_lo[d] < cavity_hi[d])) throw Error("phantom: empty cavity extents");
    if (!(cavity_lo[d] > outer_lo[d] && cavity_hi[d] < outer_hi[d]))
      throw Error("phantom: cavity must lie strictly inside the outer box");
  }
  if (!(neck_xmin < neck_xmax && neck_ymin < neck_ymax))
    throw Error("phantom: neck patch is empty");
}

namespace {

// Freudenthal/Kuhn split of a hex cell into 6 tets sharing the main
// diagonal; identical in every cell so shared faces get matching diagonals.
// Local corner index: c = i + 2*j + 4*k for offsets (i,j,k) in {0,1}.
constexpr int kKuhnTet[6][4] = {
    {0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7},
    {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7},
};

struct GridSpec {
  int nx, ny, nz;
  Vec3 lo;
  double h;
};

int cells_along(double lo, double hi, double h, const char* what) {
  double len = hi - lo;
  double n = len / h;
  int ni = static_cast<int>(std::lround(n));
  if (ni < 1 || std::abs(n - ni) > 1e-9 * std::max(1.0, n))
    throw Error(std::string("phantom: ") + what + " extent is not an integer multiple of h");
  return ni;
}

}  // namespace

Mesh build_phantom(const PhantomConfig& cfg) {
  cfg.validate();

  GridSpec g;
  g.lo = cfg.outer_lo;
  g.h = cfg.h;
  g.nx = cells_along(cfg.outer_lo.x(), cfg.outer_hi.x(), cfg.h, "outer x");
  g.ny = cells_along(cfg.outer_lo.y(), cfg.outer_hi.y(), cfg.h, "outer y");
  g.nz = cells_along(cfg.outer_lo.z(), cfg.outer_hi.z(), cfg.h, "outer z");

  auto node_id = [&](int i, int j, int k) { return i + (g.nx + 1) * (j + (g.ny + 1) * k); };
  auto cell_center = [&](int i, int j, int k) {
    return Vec3(g.lo.x() + (i + 0.5) * g.h, g.lo.y() + (j + 0.5) * g.h, g.lo.z() + (k + 0.5) * g.h);
  };
  auto in_cavity = [&](const Vec3& p) {
    return p.x() > cfg.cavity_lo.x() && p.x() < cfg.cavity_hi.x() && p.y() > cfg.cavity_lo.y() &&
           p.y() < cfg.cavity_hi.y() && p.z() > cfg.cavity_lo.z() && p.z() < cfg.cavity_hi.z();
  };

  // Remove cells whose center lies in the cavity.
  std::vector<char> removed(static_cast<size_t>(g.nx) * g.ny * g.nz, 0);
  auto cell_id = [&](int i, int j, int k) { return i + g.nx * (j + g.ny * k); };
  int n_removed = 0;
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        if (in_cavity(cell_center(i, j, k))) {
          removed[static_cast<size_t>(cell_id(i, j, k))] = 1;
          ++n_removed;
        }
  if (n_removed == 0) throw Error("phantom: h too coarse to resolve the cavity");

  Mesh mesh;
  int total_nodes = (g.nx + 1) * (g.ny + 1) * (g.nz + 1);
  std::vector<int> remap(static_cast<size_t>(total_nodes), -1);

  std::vector<std::array<int, 4>> tets;
  tets.reserve(static_cast<size_t>(g.nx) * g.ny * g.nz * 6);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        if (removed[static_cast<size_t>(cell_id(i, j, k))]) continue;
        int corner[8];
        for (int c = 0; c < 8; ++c)
          corner[c] = node_id(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
        for (const auto& lt : kKuhnTet) tets.push_back({corner[lt[0]], corner[lt[1]], corner[lt[2]], corner[lt[3]]});
      }

  for (auto& t : tets)
    for (int v : t) remap[static_cast<size_t>(v)] = 0;
  int next = 0;
  for (int k = 0; k <= g.nz; ++k)
    for (int j = 0; j <= g.ny; ++j)
      for (int i = 0; i <= g.nx; ++i) {
        int id = node_id(i, j, k);
        if (remap[static_cast<size_t>(id)] == 0) {
          remap[static_cast<size_t>(id)] = next++;
          mesh.nodes.emplace_back(g.lo.x() + i * g.h, g.lo.y() + j * g.h, g.lo.z() + k * g.h);
        }
      }
  for (auto& t : tets)
    for (int& v : t) v = remap[static_cast<size_t>(v)];

  // Fix orientation: positive determinant of the edge matrix.
  mesh.tets = std::move(tets);
  for (int e = 0; e < mesh.num_tets(); ++e)
    if (mesh.tet_volume(e) < 0) std::swap(mesh.tets[static_cast<size_t>(e)][2], mesh.tets[static_cast<size_t>(e)][3]);

  // Boundary faces = faces of exactly one tet.
  std::map<std::array<int, 3>, int> face_count;
  static constexpr int kFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
  auto sorted_face = [](const std::array<int, 4>& t, int f) {
    std::array<int, 3> k = {t[static_cast<size_t>(kFace[f][0])], t[static_cast<size_t>(kFace[f][1])],
                            t[static_cast<size_t>(kFace[f][2])]};
    std::sort(k.begin(), k.end());
    return k;
  };
  for (const auto& t : mesh.tets)
    for (int f = 0; f < 4; ++f) face_count[sorted_face(t, f)]++;

  const double tol = 1e-9 * cfg.h;
  auto on_plane = [&](double v, double plane) { return std::abs(v - plane) < tol; };
  auto classify = [&](const std::array<int, 3>& fn) {
    Vec3 p[3] = {mesh.nodes[static_cast<size_t>(fn[0])], mesh.nodes[static_cast<size_t>(fn[1])],
                 mesh.nodes[static_cast<size_t>(fn[2])]};
    Vec3 c = (p[0] + p[1] + p[2]) / 3.0;
    bool outer = false;
    for (int d = 0; d < 3; ++d)
      outer = outer || on_plane(c[d], cfg.outer_lo[d]) || on_plane(c[d], cfg.outer_hi[d]);
    if (!outer) return BoundaryRegion::Ventricles;  // cavity surface
    if (on_plane(c.z(), cfg.outer_lo.z())) {
      bool in_patch = true;
      for (const auto& q : p)
        in_patch = in_patch && q.x() > cfg.neck_xmin - tol && q.x() < cfg.neck_xmax + tol &&
                   q.y() > cfg.neck_ymin - tol && q.y() < cfg.neck_ymax + tol;
      if (in_patch) return BoundaryRegion::Neck;
    }
    return BoundaryRegion::Mre;
  };

  for (const auto& t : mesh.tets)
    for (int f = 0; f < 4; ++f) {
      auto key = sorted_face(t, f);
      if (face_count[key] == 1) {
        mesh.facets.push_back({key, classify(key)});
        face_count[key] = 2;  // emit once
      }
    }
  std::sort(mesh.facets.begin(), mesh.facets.end(),
            [](const Facet& a, const Facet& b) { return a.nodes < b.nodes; });

  bool has_neck = false, has_vent = false, has_mre = false;
  for (const auto& f : mesh.facets) {
    has_neck = has_neck || f.tag == BoundaryRegion::Neck;
    has_vent = has_vent || f.tag == BoundaryRegion::Ventricles;
    has_mre = has_mre || f.tag == BoundaryRegion::Mre;
  }
  if (!has_neck) throw Error("phantom: neck patch produced no facets");
  if (!has_vent || !has_mre) throw Error("phantom: degenerate boundary decomposition");

  require_valid(mesh);
  return mesh;
}

Mesh build_tagged_box(const Vec3& lo, const Vec3& hi, int nx, int ny, int nz) {
  if (nx < 1 || ny < 1 || nz < 1) throw Error("box: cell counts must be >= 1");
  for (int d = 0; d < 3; ++d)
    if (!(lo[d] < hi[d])) throw Error("box: empty extents");
  Mesh mesh;
  Vec3 h((hi.x() - lo.x()) / nx, (hi.y() - lo.y()) / ny, (hi.z() - lo.z()) / nz);
  auto node_id = [&](int i, int j, int k) { return i + (nx + 1) * (j + (ny + 1) * k); };
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        mesh.nodes.emplace_back(lo.x() + i * h.x(), lo.y() + j * h.y(), lo.z() + k * h.z());
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        int corner[8];
        for (int c = 0; c < 8; ++c)
          corner[c] = node_id(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
        for (const auto& lt : kKuhnTet)
          mesh.tets.push_back({corner[lt[0]], corner[lt[1]], corner[lt[2]], corner[lt[3]]});
      }
  for (int e = 0; e < mesh.num_tets(); ++e)
    if (mesh.tet_volume(e) < 0) std::swap(mesh.tets[static_cast<size_t>(e)][2], mesh.tets[static_cast<size_t>(e)][3]);

  std::map<std::array<int, 3>, int> face_count;
  static constexpr int kFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
  auto sorted_face = [](const std::array<int, 4>& t, int f) {
    std::array<int, 3> key = {t[static_cast<size_t>(kFace[f][0])], t[static_cast<size_t>(kFace[f][1])],
                              t[static_cast<size_t>(kFace[f][2])]};
    std::sort(key.begin(), key.end());
    return key;
  };
  for (const auto& t : mesh.tets)
    for (int f = 0; f < 4; ++f) face_count[sorted_face(t, f)]++;
  const double tol = 1e-9 * h.minCoeff();
  for (const auto& [face, count] : face_count) {
    if (count != 1) continue;
    Vec3 c = (mesh.nodes[static_cast<size_t>(face[0])] + mesh.nodes[static_cast<size_t>(face[1])] +
              mesh.nodes[static_cast<size_t>(face[2])]) /
             3.0;
    BoundaryRegion tag = BoundaryRegion::Mre;
    if (std::abs(c.z() - lo.z()) < tol) tag = BoundaryRegion::Neck;
    else if (std::abs(c.z() - hi.z()) < tol) tag = BoundaryRegion::Ventricles;
    mesh.facets.push_back({face, tag});
  }
  return mesh;
}

namespace {

struct LineReader {
  std::istream& in;
  int lineno = 0;
  bool next(std::istringstream& out) {
    std::string line;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      bool blank = true;
      for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
      if (blank) continue;
      out = std::istringstream(line);
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error("mesh parse error at line " + std::to_string(lineno) + ": " + msg);
  }
};

Mesh load_poromesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file: " + path.string());
  LineReader rd{in};
  std::istringstream ls;

  if (!rd.next(ls)) rd.fail("empty file");
  std::string word;
  int version = 0;
  ls >> word >> version;
  if (word != "poromesh" || version != 1) rd.fail("expected header 'poromesh 1'");

  Mesh mesh;
  auto read_count = [&](const char* section) {
    if (!rd.next(ls)) rd.fail(std::string("expected section '") + section + "'");
    std::string name;
    long count = -1;
    ls >> name >> count;
    if (name != section || count < 0) rd.fail(std::string("expected section '") + section + " <count>'");
    return count;
  };

  long n_nodes = read_count("nodes");
  mesh.nodes.reserve(static_cast<size_t>(n_nodes));
  for (long i = 0; i < n_nodes; ++i) {
    if (!rd.next(ls)) rd.fail("unexpected end of file in nodes");
    double x, y, z;
    if (!(ls >> x >> y >> z)) rd.fail("malformed node line");
    mesh.nodes.emplace_back(x, y, z);
  }

  long n_tets = read_count("tets");
  mesh.tets.reserve(static_cast<size_t>(n_tets));
  for (long i = 0; i < n_tets; ++i) {
    if (!rd.next(ls)) rd.fail("unexpected end of file in tets");
    std::array<int, 4> t{};
    if (!(ls >> t[0] >> t[1] >> t[2] >> t[3])) rd.fail("malformed tet line");
    for (int v : t)
      if (v < 0 || v >= static_cast<int>(mesh.nodes.size()))
        rd.fail("dangling node index " + std::to_string(v));
    mesh.tets.push_back(t);
  }

  long n_facets = read_count("facets");
  mesh.facets.reserve(static_cast<size_t>(n_facets));
  for (long i = 0; i < n_facets; ++i) {
    if (!rd.next(ls)) rd.fail("unexpected end of file in facets");
    std::array<int, 3> f{};
    std::string tag;
    if (!(ls >> f[0] >> f[1] >> f[2] >> tag)) rd.fail("malformed facet line");
    for (int v : f)
      if (v < 0 || v >= static_cast<int>(mesh.nodes.size()))
        rd.fail("dangling node index " + std::to_string(v));
    auto region = region_from_string(tag);
    if (!region) rd.fail("unknown tag name '" + tag + "'");
    mesh.facets.push_back({f, *region});
  }

  // Repair element orientation by vertex swap.
  for (int e = 0; e < mesh.num_tets(); ++e)
    if (mesh.tet_volume(e) < 0) std::swap(mesh.tets[static_cast<size_t>(e)][2], mesh.tets[static_cast<size_t>(e)][3]);

  return mesh;
}

Mesh load_gmsh_v2(const std::filesystem::path& path, const std::map<std::string, BoundaryRegion>* names) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file: " + path.string());

  std::map<int, BoundaryRegion> phys_to_region;
  auto map_name = [&](const std::string& raw) -> std::optional<BoundaryRegion> {
    if (names) {
      auto it = names->find(raw);
      if (it != names->end()) return it->second;
      return std::nullopt;
    }
    return region_from_string(raw);
  };

  Mesh mesh;
  std::unordered_map<long, int> node_remap;
  std::string line;
  int lineno = 0;
  auto get_line = [&]() -> std::string& {
    if (!std::getline(in, line)) throw Error("gmsh parse error: unexpected end of file");
    ++lineno;
    return line;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("$MeshFormat", 0) == 0) {
      std::istringstream ls(get_line());
      double version;
      ls >> version;
      if (version < 2.0 || version >= 3.0)
        throw Error("gmsh: unsupported format version (need 2.x ASCII)");
      get_line();  // $EndMeshFormat
    } else if (line.rfind("$PhysicalNames", 0) == 0) {
      long n = std::stol(get_line());
      for (long i = 0; i < n; ++i) {
        std::istringstream ls(get_line());
        int dim, id;
        std::string name;
        ls >> dim >> id;
        std::getline(ls, name);
        auto l = name.find('"'), r = name.rfind('"');
        if (l != std::string::npos && r > l) name = name.substr(l + 1, r - l - 1);
        if (auto region = map_name(name)) phys_to_region[id] = *region;
        else if (dim == 2)
          throw Error("gmsh: unknown physical surface name '" + name + "'");
      }
      get_line();  // $EndPhysicalNames
    } else if (line.rfind("$Nodes", 0) == 0) {
      long n = std::stol(get_line());
      for (long i = 0; i < n; ++i) {
        std::istringstream ls(get_line());
        long id;
        double x, y, z;
        ls >> id >> x >> y >> z;
        node_remap[id] = static_cast<int>(mesh.nodes.size());
        mesh.nodes.emplace_back(x, y, z);
      }
      get_line();  // $EndNodes
    } else if (line.rfind("$Elements", 0) == 0) {
      long n = std::stol(get_line());
      for (long i = 0; i < n; ++i) {
        std::istringstream ls(get_line());
        long id;
        int type, ntags;
        ls >> id >> type >> ntags;
        int phys = 0;
        for (int t = 0; t < ntags; ++t) {
          int tag;
          ls >> tag;
          if (t == 0) phys = tag;
        }
        auto remap = [&](long v) {
          auto it = node_remap.find(v);
          if (it == node_remap.end())
            throw Error("gmsh: dangling node index " + std::to_string(v) + " at line " + std::to_string(lineno));
          return it->second;
        };
        if (type == 4) {  // 4-node tetrahedron
          long a, b, c, d;
          ls >> a >> b >> c >> d;
          mesh.tets.push_back({remap(a), remap(b), remap(c), remap(d)});
        } else if (type == 2) {  // 3-node triangle
          long a, b, c;
          ls >> a >> b >> c;
          auto it = phys_to_region.find(phys);
          if (it == phys_to_region.end())
            throw Error("gmsh: surface element with unmapped physical group " + std::to_string(phys));
          mesh.facets.push_back({{remap(a), remap(b), remap(c)}, it->second});
        }
        // other element types ignored
      }
      get_line();  // $EndElements
    }
  }

  for (int e = 0; e < mesh.num_tets(); ++e)
    if (mesh.tet_volume(e) < 0) std::swap(mesh.tets[static_cast<size_t>(e)][2], mesh.tets[static_cast<size_t>(e)][3]);
  return mesh;
}

}  // namespace

Mesh load_mesh(const std::filesystem::path& path, MeshFormat format,
               const std::map<std::string, BoundaryRegion>* names) {
  switch (format) {
    case MeshFormat::Poromesh: return load_poromesh(path);
    case MeshFormat::GmshV2: return load_gmsh_v2(path, names);
  }
  throw Error("unknown mesh format");
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open mesh file for writing: " + path.string());
  char buf[128];
  out << "poromesh 1\n";
  out << "nodes " << mesh.nodes.size() << "\n";
  for (const auto& p : mesh.nodes) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out << buf;
  }
  out << "tets " << mesh.tets.size() << "\n";
  for (const auto& t : mesh.tets) out << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << "\n";
  out << "facets " << mesh.facets.size() << "\n";
  for (const auto& f : mesh.facets)
    out << f.nodes[0] << ' ' << f.nodes[1] << ' ' << f.nodes[2] << ' ' << to_string(f.tag) << "\n";
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<MeshDiagnostic> validate_mesh(const Mesh& mesh) {
  std::vector<MeshDiagnostic> out;
  const int nn = mesh.num_nodes();

  for (int e = 0; e < mesh.num_tets(); ++e) {
    bool in_range = true;
    for (int v : mesh.tets[static_cast<size_t>(e)])
      if (v < 0 || v >= nn) {
        out.push_back({MeshDiagnostic::Code::DanglingIndex, e,
                       "tet " + std::to_string(e) + " references node " + std::to_string(v)});
        in_range = false;
      }
    if (!in_range) continue;
    double vol = mesh.tet_volume(e);
    if (!(vol > 0))
      out.push_back({MeshDiagnostic::Code::NonPositiveVolume, e,
                     "tet " + std::to_string(e) + " has signed volume " + std::to_string(vol)});
  }

  // Collect boundary faces of the tet mesh (faces of exactly one tet).
  std::map<std::array<int, 3>, int> face_count;
  static constexpr int kFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
  for (const auto& t : mesh.tets) {
    bool in_range = true;
    for (int v : t) in_range = in_range && v >= 0 && v < nn;
    if (!in_range) continue;
    for (const auto& lf : kFace) {
      std::array<int, 3> k = {t[static_cast<size_t>(lf[0])], t[static_cast<size_t>(lf[1])],
                              t[static_cast<size_t>(lf[2])]};
      std::sort(k.begin(), k.end());
      face_count[k]++;
    }
  }

  std::set<std::array<int, 3>> tagged;
  for (int f = 0; f < static_cast<int>(mesh.facets.size()); ++f) {
    const auto& fc = mesh.facets[static_cast<size_t>(f)];
    bool in_range = true;
    for (int v : fc.nodes)
      if (v < 0 || v >= nn) {
        out.push_back({MeshDiagnostic::Code::DanglingIndex, f,
                       "facet " + std::to_string(f) + " references node " + std::to_string(v)});
        in_range = false;
      }
    if (!in_range) continue;
    std::array<int, 3> k = fc.nodes;
    std::sort(k.begin(), k.end());
    if (!tagged.insert(k).second)
      out.push_back({MeshDiagnostic::Code::DuplicateFacet, f, "facet " + std::to_string(f) + " tagged twice"});
    auto it = face_count.find(k);
    if (it == face_count.end() || it->second != 1)
      out.push_back({MeshDiagnostic::Code::FacetNotBoundaryFace, f,
                     "facet " + std::to_string(f) + " is not a face of exactly one tet"});
  }

  int fid = 0;
  for (const auto& [face, count] : face_count) {
    if (count == 1 && !tagged.count(face))
      out.push_back({MeshDiagnostic::Code::UntaggedBoundaryFacet, fid,
                     "boundary face (" + std::to_string(face[0]) + "," + std::to_string(face[1]) + "," +
                         std::to_string(face[2]) + ") carries no tag"});
    ++fid;
  }
  return out;
}

void require_valid(const Mesh& mesh) {
  auto diags = validate_mesh(mesh);
  if (diags.empty()) return;
  std::string msg = "invalid mesh:";
  for (size_t i = 0; i < diags.size() && i < 5; ++i) msg += "\n  " + diags[i].message;
  if (diags.size() > 5) msg += "\n  ... (" + std::to_string(diags.size() - 5) + " more)";
  throw Error(msg);
}

}  // namespace poro
