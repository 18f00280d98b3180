#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "canopose/canonical_pose.hpp"
#include "canopose/geometry.hpp"
#include "canopose/parallel.hpp"
#include "canopose/random_tape.hpp"

namespace canopose {

inline constexpr double kDefaultSigmaMax = 10.0;
inline constexpr double kDefaultOccupancyThreshold = 0.5;
inline constexpr int kDefaultVoxelsPerSide = 24;
/// Logit used for empty space; softplus of it is exactly zero.
inline constexpr double kEmptyLogit = -1e9;

double softplus(double x);
/// tanh(softplus(x)): the per-component occupancy probability.
double occupancy_probability(double logit);
/// Logit whose occupancy probability is exactly 1/2: ln(sqrt(3) - 1).
double half_occupancy_logit();

struct FieldSample {
    double logit = kEmptyLogit;
    Vec3 colour = Vec3::Zero();
};

/// Deterministic map (point, view direction) -> (density logit, colour).
class ComponentField {
public:
    virtual ~ComponentField() = default;
    virtual FieldSample evaluate(const Vec3& point, const Vec3& view_dir) const = 0;
};

/// Analytic solids share one logit profile: sharpness * (-signed distance)
/// shifted so the 1/2 occupancy level set is the surface itself.
class SphereField final : public ComponentField {
public:
    SphereField(Vec3 centre, double radius, Vec3 colour, double sharpness = 500.0);
    FieldSample evaluate(const Vec3& point, const Vec3& view_dir) const override;

private:
    Vec3 centre_;
    double radius_;
    Vec3 colour_;
    double sharpness_;
};

class BoxField final : public ComponentField {
public:
    BoxField(Vec3 centre, Rotation rotation, Vec3 half_extents, Vec3 colour,
             double sharpness = 500.0);
    FieldSample evaluate(const Vec3& point, const Vec3& view_dir) const override;

private:
    Vec3 centre_;
    Rotation rotation_;
    Vec3 half_;
    Vec3 colour_;
    double sharpness_;
};

/// Solid below the plane z = height (ground/table).
class HalfSpaceField final : public ComponentField {
public:
    HalfSpaceField(double height, Vec3 colour, double sharpness = 500.0);
    FieldSample evaluate(const Vec3& point, const Vec3& view_dir) const override;

private:
    double height_;
    Vec3 colour_;
    double sharpness_;
};

/// Logits tabulated at the S^3 cell centres of a pose's canonical box,
/// trilinearly interpolated; empty outside the box.
class VoxelField final : public ComponentField {
public:
    VoxelField(RigidPose pose, int voxels_per_side, std::vector<double> logits, Vec3 colour);
    FieldSample evaluate(const Vec3& point, const Vec3& view_dir) const override;

private:
    RigidPose pose_;
    int n_;
    std::vector<double> logits_;
    Vec3 colour_;
};

struct Composition {
    double sigma = 0;
    std::vector<double> sigma_hat;
};

/// sigma = sigma_max tanh(sum softplus(l_k)), sigma_hat = sigma softmax(l).
Composition compose(std::span<const double> logits, double sigma_max = kDefaultSigmaMax);

/// (1 / sigma_max) sum sigma_hat_k c_k.
Vec3 composed_colour(std::span<const double> logits, std::span<const Vec3> colours,
                     double sigma_max = kDefaultSigmaMax);

struct ComposedSample {
    Composition density;
    std::vector<Vec3> colours;
    Vec3 colour = Vec3::Zero();
};

class ComposedField {
public:
    ComposedField(std::vector<std::shared_ptr<const ComponentField>> components,
                  double sigma_max = kDefaultSigmaMax);

    ComposedSample evaluate(const Vec3& point, const Vec3& view_dir) const;
    std::size_t size() const noexcept { return components_.size(); }
    double sigma_max() const noexcept { return sigma_max_; }
    const ComponentField& component(std::size_t k) const { return *components_.at(k); }

private:
    std::vector<std::shared_ptr<const ComponentField>> components_;
    double sigma_max_;
};

struct VoxelShape {
    int voxels_per_side = 0;
    double threshold = kDefaultOccupancyThreshold;
    std::vector<std::uint8_t> occupancy;  // S^3, x-major then y then z
    std::vector<double> probability;      // tanh(softplus(logit)) per voxel
    std::vector<Vec3> centres;            // canonical cell midpoints in (-1, 1)

    std::size_t occupied_count() const;
};

/// Canonical cell midpoints of [-1, 1]^3 at S voxels per side.
std::vector<Vec3> voxel_centres(int voxels_per_side);

/// Thresholds the field's occupancy probability (strictly greater than
/// `threshold`) at the S^3 canonical cell centres mapped into the world.
VoxelShape voxel_occupancy(const ComponentField& field, const RigidPose& pose, int voxels_per_side,
                           double threshold = kDefaultOccupancyThreshold,
                           Exec exec = Exec::Parallel);

/// World positions of the occupied voxel centres.
std::vector<Vec3> occupied_world_points(const VoxelShape& shape, const RigidPose& pose);

/// Canonical pose of the occupied voxels (T^shape, R^shape). With `ground`
/// set, voxels below that height are ignored.
CanonicalPoseResult shape_pose_from_voxels(const VoxelShape& shape, const RigidPose& world_pose,
                                           const RotationGrid& grid, double beta = kDefaultBeta,
                                           Exec exec = Exec::Parallel,
                                           std::optional<double> ground = std::nullopt);

struct RaySamples {
    Vec3 surface = Vec3::Zero();
    Vec3 air = Vec3::Zero();
    double surface_depth = 0;
    double air_depth = 0;
    double rho_air = 0;
};

/// Surface sample at depth U[d, d + delta], air sample at depth U[near, d),
/// along pixel (u, v)'s ray. Draws the surface uniform first, then the air one.
RaySamples sample_ray_points(const CameraModel& cam, double u, double v, double d_surface,
                             double delta, double near, RandomTape& tape);

}  // namespace canopose
