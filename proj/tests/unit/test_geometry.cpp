#include <doctest.h>

#include <algorithm>
#include <numbers>

#include "canopose/error.hpp"
#include "canopose/so3_grid.hpp"
#include "../support.hpp"

using namespace canopose;
using canopose::testing::uniform;
constexpr double kPi = std::numbers::pi;

TEST_CASE("rotation validation") {
    CHECK_NOTHROW(Rotation::from_matrix(Mat3::Identity()));
    Mat3 nearly = Mat3::Identity();
    nearly(0, 1) = 5e-4;
    const Rotation repaired = Rotation::from_matrix(nearly);
    CHECK((repaired.matrix().transpose() * repaired.matrix() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    Mat3 bad = Mat3::Identity();
    bad(0, 1) = 0.1;
    CHECK_THROWS_AS(Rotation::from_matrix(bad), Error);
    Mat3 reflect = Mat3::Identity();
    reflect(2, 2) = -1;
    CHECK_THROWS_AS(Rotation::from_matrix(reflect), Error);
}

TEST_CASE("rigid pose limits") {
    CHECK_THROWS_AS(RigidPose(Vec3::Zero(), Rotation::identity(), 0.0), Error);
    CHECK_THROWS_AS(RigidPose(Vec3::Zero(), Rotation::identity(), 1.0, Vec3(0.2, 0, 0)), Error);
    const RigidPose p(Vec3(1, 2, 3), Rotation::identity(), 1.0, Vec3(0.05, -0.1, 0));
    CHECK((p.translation() - Vec3(1.05, 1.9, 3)).norm() < 1e-15);
}

TEST_CASE("geodesic distance closed forms") {
    CHECK(geodesic_distance(Rotation::identity(), Rotation::identity()) == doctest::Approx(0.0));
    CHECK(geodesic_distance(Rotation::identity(), Rotation::about_z(kPi)) == doctest::Approx(kPi));
    CHECK(geodesic_distance(Rotation::identity(), Rotation::about_x(kPi / 2)) == doctest::Approx(kPi / 2));
}

TEST_CASE("geodesic distance triangle inequality") {
    RandomTape tape = RandomTape::seeded(11);
    for (int i = 0; i < 500; ++i) {
        const Rotation a = random_rotation(tape), b = random_rotation(tape), c = random_rotation(tape);
        CHECK(geodesic_distance(a, c) <= geodesic_distance(a, b) + geodesic_distance(b, c) + 1e-6);
    }
}

TEST_CASE("centroid") {
    const std::vector<Vec3> two{{0, 0, 0}, {2, 0, 0}};
    CHECK((centroid(two) - Vec3(1, 0, 0)).norm() == 0.0);
    const std::vector<Vec3> one{{0.3, -2, 7}};
    CHECK(centroid(one) == one[0]);
    std::vector<Vec3> cube;
    for (int c = 0; c < 8; ++c) cube.emplace_back(c & 1, (c >> 1) & 1, (c >> 2) & 1);
    CHECK((centroid(cube) - Vec3(0.5, 0.5, 0.5)).norm() < 1e-15);
    CHECK_THROWS_AS(centroid(std::vector<Vec3>{}), Error);
}

TEST_CASE("canonical transform examples") {
    PointCloud pc;
    pc.points = {{1, 1, 1}};
    auto out = canonical_transform(pc, RigidPose(Vec3(1, 1, 1), Rotation::identity(), 2.0));
    REQUIRE(out.size() == 1);
    CHECK(out.points[0].norm() == 0.0);

    pc.points = {{2, 0, 0}};
    out = canonical_transform(pc, RigidPose(Vec3::Zero(), Rotation::about_z(kPi / 2), 4.0));
    REQUIRE(out.size() == 1);
    CHECK((out.points[0] - Vec3(0, -1, 0)).norm() < 1e-12);

    pc.points = {{3, 0, 0}};
    out = canonical_transform(pc, RigidPose(Vec3::Zero(), Rotation::identity(), 2.0));
    CHECK(out.empty());
}

TEST_CASE("canonical transform keeps colours and features aligned") {
    PointCloud pc;
    pc.points = {{0, 0, 0}, {5, 0, 0}, {0.5, 0, 0}};
    pc.colours = std::vector<Vec3>{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    pc.features = Eigen::MatrixXd(3, 2);
    *pc.features << 1, 2, 3, 4, 5, 6;
    const auto out = canonical_transform(pc, RigidPose(Vec3::Zero(), Rotation::identity(), 2.0));
    REQUIRE(out.size() == 2);
    CHECK((*out.colours)[1] == Vec3(0, 0, 1));
    CHECK((*out.features)(1, 1) == 6);
}

TEST_CASE("canonical transform round trip") {
    RandomTape tape = RandomTape::seeded(3);
    PointCloud pc;
    for (int i = 0; i < 200; ++i) pc.points.emplace_back(uniform(tape, -1, 1), uniform(tape, 2, 3), uniform(tape, 0, 0.5));
    const Vec3 c = centroid(pc);
    double radius = 0;
    for (const Vec3& p : pc.points) radius = std::max(radius, (p - c).cwiseAbs().maxCoeff());
    const RigidPose pose(c, random_rotation(tape), 4.0 * radius);
    const auto out = canonical_transform(pc, pose);
    REQUIRE(out.size() == pc.size());
    for (std::size_t i = 0; i < pc.size(); ++i) {
        CHECK((canonical_to_world(out.points[i], pose) - pc.points[i]).norm() < 1e-6);
    }
}

TEST_CASE("aabb volume") {
    std::vector<Vec3> cube;
    for (int c = 0; c < 8; ++c) cube.emplace_back(c & 1, (c >> 1) & 1, (c >> 2) & 1);
    CHECK(volume(aabb_of(cube)) == doctest::Approx(1.0));
    const std::vector<Vec3> flat{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    CHECK(volume(aabb_of(flat)) == doctest::Approx(kExtentFloor));
    const std::vector<Vec3> pair{{0, 0, 0}, {1, 2, 3}};
    CHECK(volume(aabb_of(pair)) == doctest::Approx(6.0));
}

TEST_CASE("volume permutation invariance and monotonicity") {
    RandomTape tape = RandomTape::seeded(5);
    std::vector<Vec3> pts;
    for (int i = 0; i < 50; ++i) pts.emplace_back(uniform(tape, -1, 1), uniform(tape, -1, 1), uniform(tape, -1, 1));
    const double v = volume(aabb_of(pts));
    std::vector<Vec3> rev(pts.rbegin(), pts.rend());
    CHECK(volume(aabb_of(rev)) == v);
    double prev = v;
    for (int i = 0; i < 20; ++i) {
        pts.emplace_back(uniform(tape, -2, 2), uniform(tape, -2, 2), uniform(tape, -2, 2));
        const double next = volume(aabb_of(pts));
        CHECK(next >= prev);
        prev = next;
    }
}

TEST_CASE("backprojection examples") {
    const CameraModel cam(100, 100, 20, 10, RigidPose(Vec3::Zero(), Rotation::identity(), 1.0), 200, 20);
    NdArray<double> depth({20, 200}, 0.0);
    NdArray<double> rgb({20, 200, 3}, 0.5);
    depth.at(10, 20) = 1.0;
    depth.at(10, 120) = 2.0;
    const Backprojection bp = backproject(depth, rgb, cam);
    REQUIRE(bp.cloud.size() == 2);
    CHECK((bp.cloud.points[0] - Vec3(0, 0, 1)).norm() < 1e-12);
    CHECK((bp.cloud.points[1] - Vec3(2, 0, 2)).norm() < 1e-12);
    CHECK(bp.pixels[1] == 10 * 200 + 120);
    CHECK_THROWS_AS(backproject(NdArray<double>({3, 3}), rgb, cam), Error);
}

TEST_CASE("backproject then reproject") {
    RandomTape tape = RandomTape::seeded(9);
    const CameraModel cam(120, 110, 32, 24, RigidPose(Vec3(0.1, -0.5, 0.4), random_rotation(tape), 1.0), 64, 48);
    NdArray<double> depth({48, 64});
    for (double& d : depth.values()) d = uniform(tape, 0.2, 3.0);
    const Backprojection bp = backproject(depth, NdArray<double>({48, 64, 3}), cam);
    REQUIRE(bp.cloud.size() == 48 * 64);
    for (std::size_t i = 0; i < bp.pixels.size(); ++i) {
        const Eigen::Vector3d uvz = cam.project(bp.cloud.points[i]);
        CHECK(std::abs(uvz.x() - static_cast<double>(bp.pixels[i] % 64)) < 1e-4);
        CHECK(std::abs(uvz.y() - static_cast<double>(bp.pixels[i] / 64)) < 1e-4);
    }
}
