#pragma once

#include "poro/types.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace poro {

/// Boundary decomposition of the domain: every boundary facet carries
/// exactly one of these tags.
enum class BoundaryRegion { Neck, Ventricles, Mre };

std::string to_string(BoundaryRegion r);
std::optional<BoundaryRegion> region_from_string(const std::string& s);

struct Facet {
  std::array<int, 3> nodes;
  BoundaryRegion tag;
};

struct BoundingBox {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};

/// Tetrahedral mesh with tagged boundary facets. Coordinates in cm.
/// Immutable by convention after construction; safe for concurrent reads.
struct Mesh {
  std::vector<Vec3> nodes;
  std::vector<std::array<int, 4>> tets;
  std::vector<Facet> facets;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_tets() const { return static_cast<int>(tets.size()); }

  /// Signed volume of tetrahedron e under the fixed orientation convention.
  double tet_volume(int e) const;
  /// Area of boundary facet f.
  double facet_area(int f) const;

  double volume() const;
  double boundary_area(BoundaryRegion tag) const;

  BoundingBox bounding_box() const;

  /// Length along the frontal (y) axis; overridable for paper-scale runs.
  double frontal_length() const;
  std::optional<double> frontal_length_override;
};

/// Desk-scale stand-in geometry: an axis-aligned box with an interior
/// box cavity (surface tagged Ventricles), a rectangular patch of the
/// bottom face tagged Neck, and the remaining boundary tagged Mre.
struct PhantomConfig {
  Vec3 outer_lo = Vec3(0, 0, 0);
  Vec3 outer_hi = Vec3(10, 10, 10);
  Vec3 cavity_lo = Vec3(4, 4, 4);
  Vec3 cavity_hi = Vec3(6, 6, 6);
  // Neck patch on the bottom surface z = outer_lo.z, in x/y coordinates.
  double neck_xmin = 3, neck_xmax = 7;
  double neck_ymin = 3, neck_ymax = 7;
  double h = 1.0;  // target mesh size (cm)

  void validate() const;  // throws Error on infeasible geometry
};

Mesh build_phantom(const PhantomConfig& cfg);

/// Structured box without a cavity, tagged bottom → Neck, top → Ventricles,
/// sides → Mre. Small algebra fixtures; the phantom is the production path.
Mesh build_tagged_box(const Vec3& lo, const Vec3& hi, int nx, int ny, int nz);

enum class MeshFormat { Poromesh, GmshV2 };

/// Reads a mesh. For GmshV2, physical-group names map to tags via
/// `names` (defaults: "neck", "ventricles", "mre", case-insensitive).
Mesh load_mesh(const std::filesystem::path& path, MeshFormat format = MeshFormat::Poromesh,
               const std::map<std::string, BoundaryRegion>* names = nullptr);

/// Writes the documented ASCII `poromesh 1` format. Round-trips node
/// coordinates bit-exactly.
void save_mesh(const Mesh& mesh, const std::filesystem::path& path);

struct MeshDiagnostic {
  enum class Code {
    NonPositiveVolume,
    DanglingIndex,
    UntaggedBoundaryFacet,
    FacetNotBoundaryFace,
    DuplicateFacet,
  };
  Code code;
  int entity;  // element or facet index
  std::string message;
};

/// Reports violations of the Mesh invariants; empty iff the mesh is valid.
std::vector<MeshDiagnostic> validate_mesh(const Mesh& mesh);

/// Throws Error listing the first few diagnostics if the mesh is invalid.
void require_valid(const Mesh& mesh);

}  // namespace poro
