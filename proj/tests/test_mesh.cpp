#include "poro/mesh.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <fstream>
#include <set>

using namespace poro;

TEST_CASE("phantom: unit cube with cavity has three nonempty tag sets and positive volumes") {
  Mesh mesh = build_phantom(test::unit_phantom());
  for (int e = 0; e < mesh.num_tets(); ++e) CHECK(mesh.tet_volume(e) > 0);
  std::set<BoundaryRegion> tags;
  for (const auto& f : mesh.facets) tags.insert(f.tag);
  CHECK(tags.size() == 3);
  CHECK(validate_mesh(mesh).empty());
}

TEST_CASE("phantom: cavity touching the outer boundary is a geometry error") {
  PhantomConfig cfg = test::unit_phantom();
  cfg.cavity_lo = Vec3(0.0, 0.4, 0.4);  // touches x = 0
  CHECK_THROWS_AS(build_phantom(cfg), Error);
}

TEST_CASE("phantom: h too coarse to resolve the cavity") {
  PhantomConfig cfg = test::unit_phantom(0.5);  // no cell center falls in [0.4,0.6]^3
  CHECK_THROWS_AS(build_phantom(cfg), Error);
}

TEST_CASE("phantom: volume and tagged areas match the analytic box-minus-box") {
  PhantomConfig cfg = test::desk_phantom();
  Mesh mesh = build_phantom(cfg);
  double outer = 10.0 * 10.0 * 10.0, cavity = 2.0 * 2.0 * 2.0;
  CHECK(mesh.volume() == doctest::Approx(outer - cavity).epsilon(1e-9));

  // cavity surface: 6 faces of a 2x2 box; neck patch 4x4; MRE the rest
  CHECK(mesh.boundary_area(BoundaryRegion::Ventricles) == doctest::Approx(6 * 4.0).epsilon(1e-9));
  CHECK(mesh.boundary_area(BoundaryRegion::Neck) == doctest::Approx(16.0).epsilon(1e-9));
  CHECK(mesh.boundary_area(BoundaryRegion::Mre) == doctest::Approx(600.0 - 16.0).epsilon(1e-9));
  CHECK(mesh.frontal_length() == doctest::Approx(10.0));
}

TEST_CASE("mesh file: single-tetrahedron fixture parses") {
  auto path = test::temp_dir("mesh") / "single.poromesh";
  {
    std::ofstream out(path);
    out << "# smallest valid mesh\n";
    out << "poromesh 1\n";
    out << "nodes 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n";
    out << "tets 1\n0 1 2 3\n";
    out << "facets 4\n0 2 1 neck\n0 1 3 mre\n0 3 2 mre\n1 2 3 ventricles\n";
  }
  Mesh mesh = load_mesh(path);
  CHECK(mesh.num_nodes() == 4);
  CHECK(mesh.num_tets() == 1);
  CHECK(mesh.facets.size() == 4);
  CHECK(validate_mesh(mesh).empty());
  CHECK(mesh.volume() == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("mesh file: dangling node index is a parse error with line number") {
  auto path = test::temp_dir("mesh") / "dangling.poromesh";
  {
    std::ofstream out(path);
    out << "poromesh 1\nnodes 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n";
    out << "tets 1\n0 1 2 3\n";
    out << "facets 1\n0 1 99 mre\n";
  }
  try {
    load_mesh(path);
    FAIL("expected parse error");
  } catch (const Error& e) {
    std::string msg(e.what());
    CHECK(msg.find("99") != std::string::npos);
    CHECK(msg.find("line") != std::string::npos);
  }
}

TEST_CASE("mesh file: unknown tag name rejected") {
  auto path = test::temp_dir("mesh") / "badtag.poromesh";
  {
    std::ofstream out(path);
    out << "poromesh 1\nnodes 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n";
    out << "tets 1\n0 1 2 3\nfacets 1\n0 1 2 skull\n";
  }
  CHECK_THROWS_AS(load_mesh(path), Error);
}

TEST_CASE("mesh file: phantom round-trips bit-exactly") {
  Mesh mesh = build_phantom(test::unit_phantom(0.2));
  auto path = test::temp_dir("mesh") / "roundtrip.poromesh";
  save_mesh(mesh, path);
  Mesh back = load_mesh(path);
  REQUIRE(back.num_nodes() == mesh.num_nodes());
  REQUIRE(back.num_tets() == mesh.num_tets());
  REQUIRE(back.facets.size() == mesh.facets.size());
  for (int i = 0; i < mesh.num_nodes(); ++i)
    CHECK(back.nodes[static_cast<size_t>(i)] == mesh.nodes[static_cast<size_t>(i)]);  // bit-exact
  for (int e = 0; e < mesh.num_tets(); ++e) {
    CHECK(back.tets[static_cast<size_t>(e)] == mesh.tets[static_cast<size_t>(e)]);
    CHECK(back.tet_volume(e) == mesh.tet_volume(e));
  }
  for (size_t f = 0; f < mesh.facets.size(); ++f) {
    CHECK(back.facets[f].nodes == mesh.facets[f].nodes);
    CHECK(back.facets[f].tag == mesh.facets[f].tag);
  }
}

TEST_CASE("validate_mesh: inverted element reported with its volume") {
  Mesh mesh = build_phantom(test::unit_phantom(0.2));
  std::swap(mesh.tets[0][0], mesh.tets[0][1]);  // invert one element
  auto diags = validate_mesh(mesh);
  REQUIRE(!diags.empty());
  bool found = false;
  for (const auto& d : diags)
    if (d.code == MeshDiagnostic::Code::NonPositiveVolume && d.entity == 0) found = true;
  CHECK(found);
}

TEST_CASE("validate_mesh: untagged boundary facet named") {
  Mesh mesh = build_phantom(test::unit_phantom(0.2));
  mesh.facets.pop_back();
  auto diags = validate_mesh(mesh);
  bool found = false;
  for (const auto& d : diags)
    if (d.code == MeshDiagnostic::Code::UntaggedBoundaryFacet) found = true;
  CHECK(found);
}

TEST_CASE("validate_mesh: interior facet rejected") {
  Mesh mesh = build_phantom(test::unit_phantom(0.2));
  // fabricate a facet from an interior face (first face of tet 0 shared by two tets)
  Facet bogus{{mesh.tets[0][0], mesh.tets[0][1], mesh.tets[0][2]}, BoundaryRegion::Mre};
  mesh.facets.push_back(bogus);
  auto diags = validate_mesh(mesh);
  bool found = false;
  for (const auto& d : diags)
    if (d.code == MeshDiagnostic::Code::FacetNotBoundaryFace ||
        d.code == MeshDiagnostic::Code::DuplicateFacet)
      found = true;
  CHECK(found);
}

TEST_CASE("gmsh v2 import maps physical names to tags") {
  auto path = test::temp_dir("mesh") / "single.msh";
  {
    std::ofstream out(path);
    out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
    out << "$PhysicalNames\n3\n2 1 \"neck\"\n2 2 \"ventricles\"\n2 3 \"mre\"\n$EndPhysicalNames\n";
    out << "$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n$EndNodes\n";
    out << "$Elements\n5\n";
    out << "1 4 2 0 1 1 2 3 4\n";      // tet
    out << "2 2 2 1 1 1 3 2\n";        // neck triangle
    out << "3 2 2 2 2 2 3 4\n";        // ventricles
    out << "4 2 2 3 3 1 2 4\n";        // mre
    out << "5 2 2 3 3 1 4 3\n";        // mre
    out << "$EndElements\n";
  }
  Mesh mesh = load_mesh(path, MeshFormat::GmshV2);
  CHECK(mesh.num_nodes() == 4);
  CHECK(mesh.num_tets() == 1);
  CHECK(mesh.facets.size() == 4);
  CHECK(validate_mesh(mesh).empty());
  int neck = 0, vent = 0, mre = 0;
  for (const auto& f : mesh.facets) {
    neck += f.tag == BoundaryRegion::Neck;
    vent += f.tag == BoundaryRegion::Ventricles;
    mre += f.tag == BoundaryRegion::Mre;
  }
  CHECK(neck == 1);
  CHECK(vent == 1);
  CHECK(mre == 2);
}

TEST_CASE("tagged box fixture is a valid mesh") {
  Mesh mesh = test::tiny_box();
  CHECK(mesh.num_nodes() == 27);
  CHECK(validate_mesh(mesh).empty());
  CHECK(mesh.volume() == doctest::Approx(1.0).epsilon(1e-12));
}
