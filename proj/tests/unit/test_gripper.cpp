#include "graspcov/gripper/gripper.hpp"
#include "graspcov/mesh/shapes.hpp"
#include "graspcov/se3/sampling.hpp"

#include <gtest/gtest.h>

#include <Eigen/Geometry>

using namespace graspcov;

namespace {

const GripperSpec kGripper;

// Identity orientation: closing = +y, approach = +z; a cube centred 20 mm
// below the fingertips sits in the closing region.
Pose straddle_pose(const Vec3& cube_center) { return Pose(cube_center + Vec3(0, 0, 20), Quat::Identity()); }

double plane_distance(const TriMesh& m, const SurfacePoint& sp) {
  const auto tri = m.triangle(sp.face);
  return std::abs((sp.position - tri[0]).dot(m.face_normals()[sp.face]));
}

}  // namespace

TEST(GripperSpec, DefaultsAndValidation) {
  EXPECT_NO_THROW(kGripper.validate());
  EXPECT_EQ(kGripper.contact_cols(), 9);
  EXPECT_EQ(kGripper.contact_rows(), 23);
  EXPECT_TRUE(kGripper.canonical_basis().isApprox(Mat3::Identity()));
  GripperSpec bad = kGripper;
  bad.max_opening = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = kGripper;
  bad.approach_axis = Vec3(0, 1, 0);
  EXPECT_THROW(bad.validate(), Error);
}

TEST(GripperGeometry, BoxLayout) {
  const GripperGeometry g(Pose(), kGripper);
  EXPECT_TRUE(g.left_finger.center.isApprox(Vec3(0, -45, -26.9)));
  EXPECT_TRUE(g.right_finger.center.isApprox(Vec3(0, 45, -26.9)));
  EXPECT_TRUE(g.palm.center.isApprox(Vec3(0, 0, -63.8)));
  EXPECT_TRUE(g.closing_region.half_extents.isApprox(Vec3(10, 40, 26.9)));
}

TEST(Validity, WorkedExamples) {
  const TriMesh cube = shapes::make_cube(20.0);
  EXPECT_EQ(check_validity(cube, Pose(Vec3(1000, 0, 0), Quat::Identity()), kGripper),
            Validity::EmptyClosingRegion);
  // Palm centre at the cube centre.
  EXPECT_EQ(check_validity(cube, Pose(Vec3(0, 0, 63.8), Quat::Identity()), kGripper), Validity::CollidingBody);
  EXPECT_EQ(check_validity(cube, straddle_pose(Vec3::Zero()), kGripper), Validity::Valid);
  // Finger through the cube.
  EXPECT_EQ(check_validity(cube, Pose(Vec3(0, 45, 20), Quat::Identity()), kGripper), Validity::CollidingBody);
  // Fingers clear but the closing region misses the cube (beside it laterally).
  EXPECT_EQ(check_validity(cube, Pose(Vec3(25, 0, 20), Quat::Identity()), kGripper),
            Validity::EmptyClosingRegion);
}

TEST(Validity, InvariantUnderRigidMotion) {
  const TriMesh mesh = shapes::make_l_bracket();
  Rng rng(31);
  int valid = 0;
  for (int i = 0; i < 2000; ++i) {
    const Pose pose = sample_uniform_pose(mesh.aabb().dilated(40.0), rng);
    const Mat3 R = random_rotation(rng).toRotationMatrix();
    const Vec3 t(uniform(rng, -100, 100), uniform(rng, -100, 100), uniform(rng, -100, 100));
    const TriMesh moved = transformed(mesh, R, t);
    const Validity a = check_validity(mesh, pose, kGripper);
    EXPECT_EQ(a, check_validity(moved, compose(R, t, pose), kGripper)) << i;
    valid += a == Validity::Valid;
  }
  EXPECT_GT(valid, 0);
}

TEST(Validity, WiderOpeningDoesNotCollideWhenObjectFitsTheSlab) {
  // Valid at width W with the whole object inside |closing| < W/2 stays
  // collision-free for any wider opening.
  const TriMesh mesh = shapes::make_cylinder(12, 30);
  Rng rng(4);
  int tested = 0;
  for (int i = 0; i < 3000; ++i) {
    const Pose pose = sample_uniform_pose(mesh.aabb().dilated(50.0), rng);
    if (check_validity(mesh, pose, kGripper) != Validity::Valid) continue;
    const Vec3 closing = pose.rotation() * kGripper.closing_axis;
    bool inside_slab = true;
    for (const Vec3& v : mesh.vertices())
      inside_slab = inside_slab && std::abs((v - pose.p).dot(closing)) < kGripper.max_opening / 2;
    if (!inside_slab) continue;
    ++tested;
    for (double w : {85.0, 100.0, 140.0}) {
      GripperSpec wide = kGripper;
      wide.max_opening = w;
      EXPECT_NE(check_validity(mesh, pose, wide), Validity::CollidingBody) << i << " " << w;
    }
  }
  EXPECT_GT(tested, 10);
}

TEST(CloseFingers, CubeFlatPinch) {
  const TriMesh cube = shapes::make_cube(20.0);
  const Pose pose = straddle_pose(Vec3::Zero());
  const auto c = close_fingers(cube, pose, kGripper);
  ASSERT_TRUE(c);
  EXPECT_NEAR(c->jaw_width, 20.0, 1e-9);
  EXPECT_TRUE(c->left.normal.isApprox(Vec3(0, -1, 0)));
  EXPECT_TRUE(c->right.normal.isApprox(Vec3(0, 1, 0)));
  EXPECT_NEAR((c->right.position - c->left.position).dot(Vec3::UnitY()), c->jaw_width, 1e-6);
}

TEST(CloseFingers, CubeRotated45AboutApproach) {
  const Mat3 R = Eigen::AngleAxisd(kPi / 4, Vec3::UnitZ()).toRotationMatrix();
  const TriMesh cube = transformed(shapes::make_cube(20.0), R, Vec3::Zero());
  const auto c = close_fingers(cube, straddle_pose(Vec3::Zero()), kGripper);
  ASSERT_TRUE(c);
  EXPECT_NEAR(c->jaw_width, 20.0 * std::sqrt(2.0), 1e-9);
  // A rotated cube wider than the jaw cannot be straddled at all.
  const TriMesh big = transformed(shapes::make_cube(60.0), R, Vec3::Zero());
  EXPECT_EQ(check_validity(big, Pose(Vec3(0, 0, 40), Quat::Identity()), kGripper), Validity::CollidingBody);
}

TEST(CloseFingers, MissesWhenOnlyOneSideTouches) {
  // Plate entirely on the left half of the jaw: the right finger reaches the
  // midplane without contact.
  const TriMesh plate = shapes::make_box(Vec3(10, 10, 10), Vec3(0, -20, -20));
  EXPECT_FALSE(close_fingers(plate, Pose(), kGripper));
}

TEST(CloseFingers, ContactsOnSurfaceAndWithinOpening) {
  const TriMesh meshes[] = {shapes::make_mug(), shapes::make_sphere(25, 3), shapes::make_l_bracket()};
  Rng rng(12);
  for (const TriMesh& m : meshes) {
    int pinched = 0;
    for (int i = 0; i < 1500; ++i) {
      const Pose pose = sample_uniform_pose(m.aabb().dilated(40.0), rng);
      if (check_validity(m, pose, kGripper) != Validity::Valid) continue;
      const auto c = close_fingers(m, pose, kGripper);
      if (!c) continue;
      ++pinched;
      EXPECT_GE(c->jaw_width, 0.0);
      EXPECT_LE(c->jaw_width, kGripper.max_opening);
      EXPECT_LT(plane_distance(m, c->left), 1e-6);
      EXPECT_LT(plane_distance(m, c->right), 1e-6);
      const Vec3 closing = pose.rotation() * kGripper.closing_axis;
      EXPECT_NEAR((c->right.position - c->left.position).dot(closing), c->jaw_width, 1e-6);
    }
    EXPECT_GT(pinched, 0);
  }
}
