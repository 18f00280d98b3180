#include "canopose/canonical_pose.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>

#include "canopose/error.hpp"

namespace canopose {

namespace {

double rotated_volume(std::span<const Vec3> points, const Mat3& r) {
    // Rows of R^T are the columns of R.
    const Vec3 ax = r.col(0);
    const Vec3 ay = r.col(1);
    const Vec3 az = r.col(2);
    constexpr double inf = std::numeric_limits<double>::infinity();
    double lox = inf, loy = inf, loz = inf, hix = -inf, hiy = -inf, hiz = -inf;
    for (const Vec3& p : points) {
        const double x = ax.dot(p);
        const double y = ay.dot(p);
        const double z = az.dot(p);
        lox = std::min(lox, x); hix = std::max(hix, x);
        loy = std::min(loy, y); hiy = std::max(hiy, y);
        loz = std::min(loz, z); hiz = std::max(hiz, z);
    }
    return volume(Aabb{Vec3(lox, loy, loz), Vec3(hix, hiy, hiz)});
}

}  // namespace

std::vector<double> grid_volumes(std::span<const Vec3> points, const std::vector<Rotation>& grid,
                                 Exec exec) {
    if (points.empty()) {
        throw Error(ErrorKind::EmptyCloud, "cannot measure volumes of an empty cloud");
    }
    std::vector<double> out(grid.size());
    const auto n = static_cast<std::int64_t>(grid.size());
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) out[i] = rotated_volume(points, grid[i].matrix());
    } else {
        for (std::int64_t i = 0; i < n; ++i) out[i] = rotated_volume(points, grid[i].matrix());
    }
    return out;
}

CanonicalPoseResult canonical_pose(std::span<const Vec3> points, const RotationGrid& grid,
                                   double beta, double box_size, Exec exec) {
    if (points.empty()) {
        throw Error(ErrorKind::EmptyCloud, "canonical pose of an empty cloud");
    }
    if (grid.rotations.empty()) {
        throw Error(ErrorKind::InvalidArgument, "empty rotation grid");
    }
    if (!(beta >= 0)) {
        throw Error(ErrorKind::InvalidArgument, "beta must be nonnegative");
    }
    const Vec3 t = centroid(points);
    std::vector<Vec3> centred(points.begin(), points.end());
    for (Vec3& p : centred) p -= t;

    const std::vector<double> volumes = grid_volumes(centred, grid.rotations, exec);
    const double v_min = *std::min_element(volumes.begin(), volumes.end());
    const double v_hi = (1.0 + beta) * v_min;

    CanonicalPoseResult result;
    result.min_volume = v_min;
    result.chosen_distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < volumes.size(); ++i) {
        if (volumes[i] > v_hi) continue;
        ++result.candidate_count;
        const double d = angle_to_identity(grid.rotations[i].matrix());
        if (d < result.chosen_distance) {
            result.chosen_distance = d;
            result.grid_index = i;
        }
    }
    const Aabb extent = aabb_of(points);
    result.degenerate = (extent.hi - extent.lo).maxCoeff() == 0.0;
    result.pose = RigidPose(t, grid.rotations[result.grid_index], box_size);
    return result;
}

std::vector<Rotation> cube_symmetry_group() {
    std::vector<Rotation> group;
    std::array<int, 3> perm{0, 1, 2};
    do {
        for (int signs = 0; signs < 8; ++signs) {
            Mat3 m = Mat3::Zero();
            for (int r = 0; r < 3; ++r) {
                m(r, perm[r]) = (signs >> r & 1) ? -1.0 : 1.0;
            }
            if (m.determinant() > 0) group.push_back(Rotation::from_matrix(m));
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return group;
}

double symmetry_aware_rotation_error(const Rotation& estimate, const Rotation& truth,
                                     const std::vector<Rotation>& group) {
    if (group.empty()) {
        throw Error(ErrorKind::InvalidArgument, "symmetry group must be nonempty");
    }
    double best = std::numeric_limits<double>::infinity();
    for (const Rotation& g : group) {
        best = std::min(best, geodesic_distance(estimate, truth * g));
    }
    return best;
}

}  // namespace canopose
