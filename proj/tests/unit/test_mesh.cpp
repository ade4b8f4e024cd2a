#include "graspcov/mesh/io.hpp"
#include "graspcov/mesh/shapes.hpp"
#include "graspcov/mesh/trimesh.hpp"
#include "graspcov/se3/sampling.hpp"
#include "support/brute.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include <unistd.h>

using namespace graspcov;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  fs::path d = fs::temp_directory_path() / ("graspcov_mesh_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

}  // namespace

TEST(TriMesh, CubeProperties) {
  const TriMesh cube = shapes::make_cube(20.0);
  EXPECT_TRUE(cube.watertight());
  EXPECT_EQ(cube.faces().size(), 12u);
  EXPECT_NEAR(cube.volume(), 8000.0, 1e-9);
  EXPECT_NEAR(cube.total_area(), 2400.0, 1e-9);
  EXPECT_TRUE(cube.com_is_volume_centroid());
  EXPECT_NEAR(cube.com().norm(), 0.0, 1e-12);
  EXPECT_TRUE(cube.aabb().min.isApprox(Vec3::Constant(-10.0)));
  EXPECT_TRUE(cube.aabb().max.isApprox(Vec3::Constant(10.0)));
  for (std::uint32_t f = 0; f < cube.faces().size(); ++f) {
    const auto tri = cube.triangle(f);
    const Vec3 centroid = (tri[0] + tri[1] + tri[2]) / 3.0;
    EXPECT_GT(cube.face_normals()[f].dot(centroid), 0.0) << "normal of face " << f << " points inward";
  }
}

TEST(TriMesh, InwardWindingIsFlipped) {
  const TriMesh cube = shapes::make_cube(10.0);
  std::vector<Face> reversed;
  for (Face f : cube.faces()) reversed.push_back({f[0], f[2], f[1]});
  const TriMesh flipped(cube.vertices(), reversed);
  EXPECT_TRUE(flipped.watertight());
  EXPECT_NEAR(flipped.volume(), 1000.0, 1e-9);
  for (std::uint32_t f = 0; f < flipped.faces().size(); ++f) {
    const auto tri = flipped.triangle(f);
    EXPECT_GT(flipped.face_normals()[f].dot(tri[0] + tri[1] + tri[2]), 0.0);
  }
}

TEST(TriMesh, DegenerateFacesDropped) {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}};
  const TriMesh m(v, {{0, 1, 2}, {0, 1, 3}});
  EXPECT_EQ(m.faces().size(), 1u);
  EXPECT_EQ(m.dropped_faces(), 1u);
  EXPECT_FALSE(m.watertight());
  EXPECT_EQ(m.volume(), 0.0);
}

TEST(TriMesh, Errors) {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  try {
    TriMesh m(v, {{0, 1, 2}});
    FAIL() << "expected EmptyMesh";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyMesh);
  }
  try {
    TriMesh m(v, {{0, 1, 7}});
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}

TEST(TriMesh, OpenMeshComIsSurfaceCentroid) {
  // Two triangles of different area: unit square split plus a far triangle.
  std::vector<Vec3> v = {{0, 0, 0}, {2, 0, 0}, {0, 2, 0}, {10, 0, 0}, {11, 0, 0}, {10, 1, 0}};
  const TriMesh m(v, {{0, 1, 2}, {3, 4, 5}});
  EXPECT_FALSE(m.com_is_volume_centroid());
  const Vec3 c1(2.0 / 3, 2.0 / 3, 0), c2(31.0 / 3, 1.0 / 3, 0);
  const Vec3 expected = (2.0 * c1 + 0.5 * c2) / 2.5;
  EXPECT_TRUE(m.com().isApprox(expected, 1e-12));
}

TEST(TriMesh, LBracketVolumeAndCom) {
  const TriMesh m = shapes::make_l_bracket(50, 40, 6, 20);
  EXPECT_TRUE(m.watertight());
  const double base = 50 * 6, upright = 6 * 34;
  EXPECT_NEAR(m.volume(), (base + upright) * 20, 1e-8);
  // Centroid of the L cross-section, shifted into the bounding-box frame.
  const double cx = (base * 25 + upright * 3) / (base + upright) - 25;
  const double cy = (base * 3 + upright * (6 + 17)) / (base + upright) - 20;
  EXPECT_NEAR(m.com().x(), cx, 1e-9);
  EXPECT_NEAR(m.com().y(), cy, 1e-9);
  EXPECT_NEAR(m.com().z(), 0.0, 1e-9);
}

TEST(TriMesh, OtherShapesAreClosed) {
  EXPECT_TRUE(shapes::make_cylinder(15, 40).watertight());
  EXPECT_TRUE(shapes::make_sphere(20, 2).watertight());
  const TriMesh mug = shapes::make_mug();
  EXPECT_TRUE(mug.watertight());
  EXPECT_GT(mug.volume(), 0.0);
  // Wall + base of the cup is well below the solid cylinder volume.
  EXPECT_LT(mug.volume(), kPi * 30 * 30 * 70 * 0.5);
  // The cavity is empty and the wall is solid.
  EXPECT_FALSE(contains_point(mug, Vec3(0, 0, 10)));
  EXPECT_TRUE(contains_point(mug, Vec3(27.5, 0.5, 0)));
  EXPECT_TRUE(contains_point(mug, Vec3(-29.7 - 16, 0, 0)));  // handle bar
}

TEST(Raycast, CubeFirstFarthestAll) {
  const TriMesh cube = shapes::make_cube(20.0);
  const Vec3 o(-50, 0.3, 0.2), d(1, 0, 0);
  auto first = raycast_first(cube, o, d);
  auto far = raycast_farthest(cube, o, d);
  ASSERT_TRUE(first && far);
  EXPECT_NEAR(first->t, 40.0, 1e-12);
  EXPECT_NEAR(far->t, 60.0, 1e-12);
  EXPECT_TRUE(first->normal.isApprox(Vec3(-1, 0, 0)));
  EXPECT_TRUE(far->normal.isApprox(Vec3(1, 0, 0)));
  EXPECT_EQ(raycast_all(cube, o, d).size(), 2u);
  EXPECT_EQ(raycast(cube, o, d, RayMode::First).size(), 1u);
  EXPECT_FALSE(raycast_first(cube, o, -d));
  EXPECT_TRUE(raycast(cube, o, -d, RayMode::Farthest).empty());
}

TEST(Raycast, StartingOnSurfaceSkipsOwnFace) {
  const TriMesh cube = shapes::make_cube(20.0);
  auto hit = raycast_first(cube, Vec3(-10, 1, 2), Vec3(1, 0, 0));
  ASSERT_TRUE(hit);
  EXPECT_NEAR(hit->t, 20.0, 1e-12);
}

TEST(Raycast, DiagonalEdgeTieGoesToLowerFace) {
  const TriMesh cube = shapes::make_cube(20.0);
  // Each square face is split along a diagonal; aim at a point on every
  // diagonal and check the reported face is the lowest one at that t.
  for (std::uint32_t f = 0; f < cube.faces().size(); ++f) {
    const auto tri = cube.triangle(f);
    const Vec3 n = cube.face_normals()[f];
    for (int e = 0; e < 3; ++e) {
      const Vec3 target = 0.5 * (tri[e] + tri[(e + 1) % 3]);
      const Vec3 origin = target + 5.0 * n;
      auto hit = raycast_first(cube, origin, -n);
      ASSERT_TRUE(hit);
      std::uint32_t lowest = UINT32_MAX;
      for (std::uint32_t g = 0; g < cube.faces().size(); ++g) {
        const auto t = cube.triangle(g);
        auto tt = detail::ray_triangle(origin, -n, t[0], t[1], t[2], kRayEpsilon, 1e9);
        if (tt && *tt == hit->t) lowest = std::min(lowest, g);
      }
      EXPECT_EQ(hit->face, lowest);
    }
  }
}

TEST(Raycast, MatchesBruteForceOnRandomRays) {
  const TriMesh meshes[] = {shapes::make_sphere(20, 3), shapes::make_mug(), shapes::make_l_bracket()};
  Rng rng(7);
  for (const TriMesh& m : meshes) {
    for (int i = 0; i < 300; ++i) {
      Vec3 o;
      for (int k = 0; k < 3; ++k) o[k] = uniform(rng, -60.0, 60.0);
      const Vec3 target = m.aabb().min + m.aabb().extents().cwiseProduct(
                                             Vec3(uniform01(rng), uniform01(rng), uniform01(rng)));
      const Vec3 d = (target - o).normalized();
      const auto expect = brute::ray_hits(m, o, d);
      const auto all = raycast_all(m, o, d);
      ASSERT_EQ(all.size(), expect.size());
      for (std::size_t k = 0; k < all.size(); ++k) EXPECT_EQ(all[k].t, expect[k]);
      const auto first = raycast_first(m, o, d);
      const auto far = raycast_farthest(m, o, d);
      ASSERT_EQ(first.has_value(), !expect.empty());
      if (first) {
        EXPECT_EQ(first->t, expect.front());
        EXPECT_EQ(far->t, expect.back());
      }
    }
  }
}

TEST(Containment, SphereAgainstAnalyticRadius) {
  const TriMesh sphere = shapes::make_sphere(20.0, 4);
  Rng rng(3);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const Vec3 p(uniform(rng, -25.0, 25.0), uniform(rng, -25.0, 25.0), uniform(rng, -25.0, 25.0));
    const double r = p.norm();
    if (r > 19.0 && r < 20.5) continue;  // polygonal band
    EXPECT_EQ(contains_point(sphere, p), r < 19.0) << r;
    ++checked;
  }
  EXPECT_GT(checked, 1500);
}

TEST(Containment, OpenMeshContainsNothing) {
  std::vector<Vec3> v = {{0, 0, 0}, {10, 0, 0}, {0, 10, 0}};
  const TriMesh m(v, {{0, 1, 2}});
  EXPECT_FALSE(contains_point(m, Vec3(1, 1, 0)));
}

TEST(BoxQueries, FacesInBoxAgreeWithSampling) {
  const TriMesh mesh = shapes::make_sphere(20.0, 2);
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    OrientedBox box;
    box.center = Vec3(uniform(rng, -25.0, 25.0), uniform(rng, -25.0, 25.0), uniform(rng, -25.0, 25.0));
    box.axes = random_rotation(rng).toRotationMatrix();
    box.half_extents = Vec3(uniform(rng, 0.5, 8.0), uniform(rng, 0.5, 8.0), uniform(rng, 0.5, 8.0));
    const auto faces = faces_in_box(mesh, box);
    for (std::uint32_t f = 0; f < mesh.faces().size(); ++f) {
      const bool listed = std::binary_search(faces.begin(), faces.end(), f);
      const auto tri = mesh.triangle(f);
      // Sampling can only under-report overlaps.
      if (brute::triangle_hits_box_sampled(tri, box)) {
        EXPECT_TRUE(listed) << "face " << f;
      }
      // Any overlap SAT reports must be visible with a slightly grown box.
      if (listed) {
        OrientedBox grown = box;
        grown.half_extents.array() += 0.3;
        EXPECT_TRUE(brute::triangle_hits_box_sampled(tri, grown, 80)) << "face " << f;
      }
    }
  }
}

TEST(BoxQueries, BvhPruningMatchesExhaustiveScan) {
  const TriMesh meshes[] = {shapes::make_mug(), shapes::make_l_bracket(), shapes::make_sphere(20, 3)};
  Rng rng(21);
  for (const TriMesh& mesh : meshes) {
    for (int i = 0; i < 500; ++i) {
      OrientedBox box;
      box.center = mesh.aabb().center() + Vec3(uniform(rng, -45, 45), uniform(rng, -45, 45), uniform(rng, -45, 45));
      box.axes = random_rotation(rng).toRotationMatrix();
      box.half_extents = Vec3(uniform(rng, 0.5, 30.0), uniform(rng, 0.5, 30.0), uniform(rng, 0.5, 30.0));
      std::vector<std::uint32_t> expect;
      for (std::uint32_t f = 0; f < mesh.faces().size(); ++f) {
        const auto t = mesh.triangle(f);
        if (detail::triangle_obb(t[0], t[1], t[2], box)) expect.push_back(f);
      }
      EXPECT_EQ(faces_in_box(mesh, box), expect);
      EXPECT_EQ(volume_intersects(mesh, box), !expect.empty() || contains_point(mesh, box.center));
    }
  }
}

TEST(BoxQueries, VolumeIntersects) {
  const TriMesh cube = shapes::make_cube(20.0);
  OrientedBox inside{Vec3(1, 1, 1), Mat3::Identity(), Vec3::Constant(2.0)};
  OrientedBox outside{Vec3(30, 0, 0), Mat3::Identity(), Vec3::Constant(5.0)};
  OrientedBox crossing{Vec3(12, 0, 0), Mat3::Identity(), Vec3::Constant(5.0)};
  OrientedBox touching{Vec3(15, 0, 0), Mat3::Identity(), Vec3::Constant(5.0)};
  OrientedBox enclosing{Vec3::Zero(), Mat3::Identity(), Vec3::Constant(50.0)};
  EXPECT_TRUE(volume_intersects(cube, inside));
  EXPECT_FALSE(volume_intersects(cube, outside));
  EXPECT_TRUE(volume_intersects(cube, crossing));
  EXPECT_TRUE(volume_intersects(cube, touching));
  EXPECT_TRUE(volume_intersects(cube, enclosing));
  EXPECT_TRUE(faces_in_box(cube, inside).empty());
}

TEST(SurfaceSampling, PointsLieOnFacesAndFollowArea) {
  const TriMesh plate = shapes::make_box(Vec3(60, 40, 2));
  Rng rng(5);
  const auto pts = sample_surface(plate, rng, 40000);
  std::size_t on_big = 0;
  for (const auto& sp : pts) {
    const auto tri = plate.triangle(sp.face);
    EXPECT_NEAR((sp.position - tri[0]).dot(plate.face_normals()[sp.face]), 0.0, 1e-9);
    EXPECT_TRUE(sp.normal.isApprox(plate.face_normals()[sp.face]));
    if (std::abs(sp.normal.z()) > 0.5) ++on_big;
  }
  const double expected = 2 * 60 * 40 / plate.total_area();
  const double sd = std::sqrt(expected * (1 - expected) / pts.size());
  EXPECT_NEAR(static_cast<double>(on_big) / pts.size(), expected, 5 * sd);
}

TEST(MeshIo, ObjRoundTripInMetres) {
  const fs::path dir = temp_dir();
  const TriMesh lb = shapes::make_l_bracket();
  write_obj(lb, dir / "lb.obj");
  const TriMesh back = load_mesh(dir / "lb.obj");
  ASSERT_EQ(back.faces().size(), lb.faces().size());
  EXPECT_NEAR(back.volume(), lb.volume(), 1e-6);
  // Loading without scaling keeps metres.
  EXPECT_NEAR(load_mesh(dir / "lb.obj", 1.0).aabb().extents().x(), 0.05, 1e-12);
}

TEST(MeshIo, ObjPolygonsNegativeIndicesAndSlashes) {
  const fs::path p = temp_dir() / "quad.obj";
  write_text(p, "# quad\nv 0 0 0\nv 0.01 0 0\nv 0.01 0.01 0\nv 0 0.01 0\nvn 0 0 1\nf -4//1 -3//1 -2//1 -1//1\n");
  const TriMesh m = load_mesh(p);
  EXPECT_EQ(m.faces().size(), 2u);
  EXPECT_NEAR(m.total_area(), 100.0, 1e-9);
}

TEST(MeshIo, StlAsciiAndBinary) {
  const fs::path dir = temp_dir();
  const TriMesh cube = shapes::make_cube(0.02);  // metres
  std::string ascii = "solid cube\n";
  std::string binary(80, '\0');
  const auto n = static_cast<std::uint32_t>(cube.faces().size());
  binary.append(reinterpret_cast<const char*>(&n), 4);
  for (std::uint32_t f = 0; f < n; ++f) {
    const auto tri = cube.triangle(f);
    ascii += " facet normal 0 0 0\n  outer loop\n";
    float rec[12] = {0, 0, 0};
    for (int k = 0; k < 3; ++k) {
      ascii += "   vertex " + std::to_string(tri[k].x()) + " " + std::to_string(tri[k].y()) + " " +
               std::to_string(tri[k].z()) + "\n";
      for (int c = 0; c < 3; ++c) rec[3 + 3 * k + c] = static_cast<float>(tri[k][c]);
    }
    ascii += "  endloop\n endfacet\n";
    binary.append(reinterpret_cast<const char*>(rec), 48);
    binary.append(2, '\0');
  }
  ascii += "endsolid cube\n";
  write_text(dir / "a.stl", ascii);
  write_text(dir / "b.stl", binary);
  for (const char* name : {"a.stl", "b.stl"}) {
    const TriMesh m = load_mesh(dir / name);
    EXPECT_TRUE(m.watertight()) << name;
    EXPECT_NEAR(m.volume(), 8000.0, 1e-3) << name;
  }
}

TEST(MeshIo, Errors) {
  const fs::path dir = temp_dir();
  try {
    load_mesh(dir / "missing.obj");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FileNotFound);
  }
  write_text(dir / "bad.obj", "v 0 0 0\nf 1 2 x\n");
  write_text(dir / "bad.stl", "not an stl");
  write_text(dir / "bad.ply", "ply");
  for (const char* name : {"bad.obj", "bad.stl", "bad.ply"}) {
    try {
      load_mesh(dir / name);
      FAIL() << name;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError) << name;
    }
  }
}
