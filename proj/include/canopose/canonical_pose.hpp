#pragma once

#include <span>
#include <vector>

#include "canopose/geometry.hpp"
#include "canopose/parallel.hpp"
#include "canopose/so3_grid.hpp"

namespace canopose {

inline constexpr double kDefaultBeta = 0.01;

struct CanonicalPoseResult {
    RigidPose pose;
    double min_volume = 0;
    std::size_t candidate_count = 0;
    double chosen_distance = 0;  // radians from the world frame
    std::size_t grid_index = 0;
    bool degenerate = false;     // every input point coincides
};

/// AABB volume of (R^T p) for every grid rotation R. `points` should be
/// centred; the result does not depend on the execution policy.
std::vector<double> grid_volumes(std::span<const Vec3> points, const std::vector<Rotation>& grid,
                                 Exec exec = Exec::Parallel);

/// Minimum-volume canonical pose: among grid rotations whose AABB volume is
/// within (1 + beta) of the smallest, pick the one nearest the world frame
/// (lowest grid index on ties). Translation is the centre of mass.
CanonicalPoseResult canonical_pose(std::span<const Vec3> points, const RotationGrid& grid,
                                   double beta = kDefaultBeta, double box_size = 0.4,
                                   Exec exec = Exec::Parallel);
inline CanonicalPoseResult canonical_pose(const PointCloud& pc, const RotationGrid& grid,
                                          double beta = kDefaultBeta, double box_size = 0.4,
                                          Exec exec = Exec::Parallel) {
    return canonical_pose(pc.points, grid, beta, box_size, exec);
}

/// The 24 proper rotations mapping the cube onto itself.
std::vector<Rotation> cube_symmetry_group();

/// min over g in `group` of d(estimate, truth * g).
double symmetry_aware_rotation_error(const Rotation& estimate, const Rotation& truth,
                                     const std::vector<Rotation>& group = cube_symmetry_group());

}  // namespace canopose
