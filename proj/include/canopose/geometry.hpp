#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <optional>
#include <span>
#include <vector>

#include "canopose/ndarray.hpp"

namespace canopose {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Extents below this floor (metres) are clamped before multiplying into a
/// volume, so planar and collinear clouds still rank by their other extents.
inline constexpr double kExtentFloor = 1e-6;

/// Element of SO(3). Construction validates orthonormality: inputs within
/// 1e-6 are kept verbatim, inputs within 1e-3 are re-orthonormalized, and
/// anything worse is rejected.
class Rotation {
public:
    Rotation() : m_(Mat3::Identity()) {}

    static Rotation from_matrix(const Mat3& m);
    static Rotation from_quaternion(const Eigen::Quaterniond& q);
    static Rotation about_axis(const Vec3& axis, double angle);
    static Rotation about_x(double angle) { return about_axis(Vec3::UnitX(), angle); }
    static Rotation about_y(double angle) { return about_axis(Vec3::UnitY(), angle); }
    static Rotation about_z(double angle) { return about_axis(Vec3::UnitZ(), angle); }
    static Rotation identity() { return {}; }

    const Mat3& matrix() const noexcept { return m_; }
    Rotation inverse() const { return Rotation(m_.transpose()); }
    Vec3 apply(const Vec3& v) const { return m_ * v; }
    Vec3 apply_inverse(const Vec3& v) const { return m_.transpose() * v; }

    Rotation operator*(const Rotation& other) const { return from_matrix(m_ * other.m_); }
    bool operator==(const Rotation& other) const { return m_ == other.m_; }

private:
    explicit Rotation(const Mat3& m) : m_(m) {}
    Mat3 m_;
};

/// Object pose {T, R}, box size s and the bounded translation correction.
class RigidPose {
public:
    RigidPose() = default;
    RigidPose(Vec3 translation, Rotation rotation, double box_size,
              Vec3 delta_translation = Vec3::Zero(), double max_delta = 0.1);

    const Vec3& base_translation() const noexcept { return translation_; }
    const Vec3& delta_translation() const noexcept { return delta_; }
    /// T + deltaT, the translation actually used by the canonical transform.
    Vec3 translation() const { return translation_ + delta_; }
    const Rotation& rotation() const noexcept { return rotation_; }
    double box_size() const noexcept { return box_size_; }

    /// Camera/rigid-body use: R p + T.
    Vec3 to_world(const Vec3& p) const { return rotation_.apply(p) + translation(); }
    Vec3 from_world(const Vec3& p) const { return rotation_.apply_inverse(p - translation()); }

private:
    Vec3 translation_ = Vec3::Zero();
    Rotation rotation_;
    double box_size_ = 1.0;
    Vec3 delta_ = Vec3::Zero();
};

struct Aabb {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();
};

struct PointCloud {
    std::vector<Vec3> points;
    std::optional<std::vector<Vec3>> colours;
    std::optional<Eigen::MatrixXd> features;  // N x D

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }
};

class CameraModel {
public:
    CameraModel(double fx, double fy, double cx, double cy, RigidPose extrinsic,
                std::size_t width, std::size_t height);

    double fx() const noexcept { return fx_; }
    double fy() const noexcept { return fy_; }
    double cx() const noexcept { return cx_; }
    double cy() const noexcept { return cy_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    /// Camera-to-world transform.
    const RigidPose& extrinsic() const noexcept { return extrinsic_; }

    /// World point at the given pixel and z-depth.
    Vec3 unproject(double u, double v, double depth) const;
    /// Pixel coordinates (u, v) and z-depth of a world point.
    Eigen::Vector3d project(const Vec3& world) const;
    Vec3 centre() const { return extrinsic_.translation(); }

private:
    double fx_, fy_, cx_, cy_;
    RigidPose extrinsic_;
    std::size_t width_, height_;
};

double geodesic_distance(const Rotation& a, const Rotation& b);
/// Geodesic distance of a raw matrix to the identity.
double angle_to_identity(const Mat3& m);

Vec3 centroid(std::span<const Vec3> points);
inline Vec3 centroid(const PointCloud& pc) { return centroid(pc.points); }

/// Maps points into the [-1, 1]^3 canonical box of `pose`, dropping points
/// that land outside it. Colours and features of survivors keep their order.
PointCloud canonical_transform(const PointCloud& pc, const RigidPose& pose);
/// Inverse of the canonical map for a single point (no box test).
Vec3 canonical_to_world(const Vec3& canonical, const RigidPose& pose);

Aabb aabb_of(std::span<const Vec3> points);
double volume(const Aabb& box, double extent_floor = kExtentFloor);

struct Backprojection {
    PointCloud cloud;
    std::vector<std::size_t> pixels;  // row-major index of each point's source pixel
};

/// Lifts an H x W depth map (zeros are invalid) and its H x W x 3 colour
/// image into a world-frame coloured point cloud.
Backprojection backproject(const NdArray<double>& depth, const NdArray<double>& rgb,
                           const CameraModel& cam);

}  // namespace canopose
