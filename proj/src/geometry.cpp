#include "canopose/geometry.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "canopose/error.hpp"

namespace canopose {

namespace {

constexpr double kKeepTolerance = 1e-6;
constexpr double kRepairTolerance = 1e-3;

double orthonormality_error(const Mat3& m) {
    const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
    return std::max(ortho, std::abs(m.determinant() - 1.0));
}

}  // namespace

Rotation Rotation::from_matrix(const Mat3& m) {
    if (!m.allFinite()) {
        throw Error(ErrorKind::InvalidArgument, "rotation matrix has non-finite entries");
    }
    const double err = orthonormality_error(m);
    if (err <= kKeepTolerance) {
        return Rotation(m);
    }
    if (err > kRepairTolerance) {
        throw Error(ErrorKind::InvalidArgument, "matrix is not a rotation");
    }
    // Nearest orthonormal matrix (polar factor).
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0) {
        throw Error(ErrorKind::InvalidArgument, "matrix is a reflection");
    }
    return Rotation(r);
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
    const double n = q.norm();
    if (!(n > 0) || !std::isfinite(n)) {
        throw Error(ErrorKind::InvalidArgument, "degenerate quaternion");
    }
    return from_matrix(q.normalized().toRotationMatrix());
}

Rotation Rotation::about_axis(const Vec3& axis, double angle) {
    return from_matrix(Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix());
}

RigidPose::RigidPose(Vec3 translation, Rotation rotation, double box_size,
                     Vec3 delta_translation, double max_delta)
    : translation_(std::move(translation)),
      rotation_(std::move(rotation)),
      box_size_(box_size),
      delta_(std::move(delta_translation)) {
    if (!(box_size_ > 0) || !std::isfinite(box_size_)) {
        throw Error(ErrorKind::InvalidArgument, "box size must be positive");
    }
    if (!translation_.allFinite() || !delta_.allFinite()) {
        throw Error(ErrorKind::InvalidArgument, "pose translation must be finite");
    }
    if (delta_.cwiseAbs().maxCoeff() > max_delta) {
        throw Error(ErrorKind::InvalidArgument, "delta translation exceeds T_max");
    }
}

CameraModel::CameraModel(double fx, double fy, double cx, double cy, RigidPose extrinsic,
                         std::size_t width, std::size_t height)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy), extrinsic_(std::move(extrinsic)),
      width_(width), height_(height) {
    if (!(fx_ > 0) || !(fy_ > 0)) {
        throw Error(ErrorKind::InvalidArgument, "focal lengths must be positive");
    }
    if (!(cx_ >= 0 && cx_ < static_cast<double>(width_)) ||
        !(cy_ >= 0 && cy_ < static_cast<double>(height_))) {
        throw Error(ErrorKind::InvalidArgument, "principal point outside the image");
    }
}

Vec3 CameraModel::unproject(double u, double v, double depth) const {
    const Vec3 local((u - cx_) * depth / fx_, (v - cy_) * depth / fy_, depth);
    return extrinsic_.to_world(local);
}

Eigen::Vector3d CameraModel::project(const Vec3& world) const {
    const Vec3 local = extrinsic_.from_world(world);
    return {fx_ * local.x() / local.z() + cx_, fy_ * local.y() / local.z() + cy_, local.z()};
}

double angle_to_identity(const Mat3& m) {
    const double c = std::clamp((m.trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
}

double geodesic_distance(const Rotation& a, const Rotation& b) {
    // tr(a^T b) without forming the product.
    const double tr = a.matrix().cwiseProduct(b.matrix()).sum();
    return std::acos(std::clamp((tr - 1.0) / 2.0, -1.0, 1.0));
}

Vec3 centroid(std::span<const Vec3> points) {
    if (points.empty()) {
        throw Error(ErrorKind::EmptyCloud, "centroid of an empty cloud");
    }
    Vec3 sum = Vec3::Zero();
    for (const Vec3& p : points) sum += p;
    return sum / static_cast<double>(points.size());
}

PointCloud canonical_transform(const PointCloud& pc, const RigidPose& pose) {
    const double scale = 2.0 / pose.box_size();
    const Vec3 t = pose.translation();
    PointCloud out;
    std::vector<Eigen::Index> kept;
    for (std::size_t i = 0; i < pc.points.size(); ++i) {
        const Vec3 c = scale * pose.rotation().apply_inverse(pc.points[i] - t);
        if (c.cwiseAbs().maxCoeff() > 1.0) continue;
        out.points.push_back(c);
        kept.push_back(static_cast<Eigen::Index>(i));
    }
    if (pc.colours) {
        out.colours.emplace();
        for (Eigen::Index i : kept) out.colours->push_back((*pc.colours)[static_cast<std::size_t>(i)]);
    }
    if (pc.features) {
        out.features = (*pc.features)(kept, Eigen::all);
    }
    return out;
}

Vec3 canonical_to_world(const Vec3& canonical, const RigidPose& pose) {
    return pose.translation() + 0.5 * pose.box_size() * pose.rotation().apply(canonical);
}

Aabb aabb_of(std::span<const Vec3> points) {
    if (points.empty()) {
        throw Error(ErrorKind::EmptyCloud, "bounding box of an empty cloud");
    }
    Aabb box{points.front(), points.front()};
    for (const Vec3& p : points) {
        box.lo = box.lo.cwiseMin(p);
        box.hi = box.hi.cwiseMax(p);
    }
    return box;
}

double volume(const Aabb& box, double extent_floor) {
    const Vec3 e = (box.hi - box.lo).cwiseMax(extent_floor);
    return e.x() * e.y() * e.z();
}

Backprojection backproject(const NdArray<double>& depth, const NdArray<double>& rgb,
                           const CameraModel& cam) {
    const std::size_t h = cam.height();
    const std::size_t w = cam.width();
    if (depth.ndim() != 2 || depth.dim(0) != h || depth.dim(1) != w) {
        throw Error(ErrorKind::ShapeMismatch, "depth map does not match camera size");
    }
    if (rgb.ndim() != 3 || rgb.dim(0) != h || rgb.dim(1) != w || rgb.dim(2) != 3) {
        throw Error(ErrorKind::ShapeMismatch, "colour image does not match camera size");
    }
    Backprojection out;
    out.cloud.colours.emplace();
    for (std::size_t v = 0; v < h; ++v) {
        for (std::size_t u = 0; u < w; ++u) {
            const double d = depth.at(v, u);
            if (!(d > 0)) continue;
            out.cloud.points.push_back(
                cam.unproject(static_cast<double>(u), static_cast<double>(v), d));
            out.cloud.colours->push_back(Vec3(rgb.at(v, u, 0), rgb.at(v, u, 1), rgb.at(v, u, 2)));
            out.pixels.push_back(v * w + u);
        }
    }
    return out;
}

}  // namespace canopose
