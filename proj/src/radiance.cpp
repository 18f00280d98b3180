#include "canopose/radiance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "canopose/error.hpp"

namespace canopose {

double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double occupancy_probability(double logit) { return std::tanh(softplus(logit)); }

double half_occupancy_logit() {
    static const double value = std::log(std::sqrt(3.0) - 1.0);
    return value;
}

namespace {

double solid_logit(double signed_distance, double sharpness) {
    return -sharpness * signed_distance + half_occupancy_logit();
}

void require_colour(const Vec3& c) {
    if (!c.allFinite() || c.minCoeff() < 0.0 || c.maxCoeff() > 1.0) {
        throw Error(ErrorKind::InvalidArgument, "colour components must lie in [0, 1]");
    }
}

}  // namespace

SphereField::SphereField(Vec3 centre, double radius, Vec3 colour, double sharpness)
    : centre_(std::move(centre)), radius_(radius), colour_(std::move(colour)), sharpness_(sharpness) {
    if (!(radius_ > 0) || !(sharpness_ > 0)) {
        throw Error(ErrorKind::InvalidArgument, "sphere radius and sharpness must be positive");
    }
    require_colour(colour_);
}

FieldSample SphereField::evaluate(const Vec3& point, const Vec3&) const {
    return {solid_logit((point - centre_).norm() - radius_, sharpness_), colour_};
}

BoxField::BoxField(Vec3 centre, Rotation rotation, Vec3 half_extents, Vec3 colour,
                   double sharpness)
    : centre_(std::move(centre)), rotation_(std::move(rotation)), half_(std::move(half_extents)),
      colour_(std::move(colour)), sharpness_(sharpness) {
    if (!(half_.minCoeff() > 0) || !(sharpness_ > 0)) {
        throw Error(ErrorKind::InvalidArgument, "box extents and sharpness must be positive");
    }
    require_colour(colour_);
}

FieldSample BoxField::evaluate(const Vec3& point, const Vec3&) const {
    const Vec3 q = rotation_.apply_inverse(point - centre_).cwiseAbs() - half_;
    const double sdf = q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
    return {solid_logit(sdf, sharpness_), colour_};
}

HalfSpaceField::HalfSpaceField(double height, Vec3 colour, double sharpness)
    : height_(height), colour_(std::move(colour)), sharpness_(sharpness) {
    if (!(sharpness_ > 0)) {
        throw Error(ErrorKind::InvalidArgument, "sharpness must be positive");
    }
    require_colour(colour_);
}

FieldSample HalfSpaceField::evaluate(const Vec3& point, const Vec3&) const {
    return {solid_logit(point.z() - height_, sharpness_), colour_};
}

VoxelField::VoxelField(RigidPose pose, int voxels_per_side, std::vector<double> logits, Vec3 colour)
    : pose_(std::move(pose)), n_(voxels_per_side), logits_(std::move(logits)),
      colour_(std::move(colour)) {
    if (n_ < 2) {
        throw Error(ErrorKind::InvalidArgument, "need at least 2 voxels per side");
    }
    const auto n = static_cast<std::size_t>(n_);
    if (logits_.size() != n * n * n) {
        throw Error(ErrorKind::ShapeMismatch, "voxel logits must have S^3 entries");
    }
    require_colour(colour_);
}

FieldSample VoxelField::evaluate(const Vec3& point, const Vec3&) const {
    const Vec3 c = (2.0 / pose_.box_size()) * pose_.rotation().apply_inverse(point - pose_.translation());
    if (c.cwiseAbs().maxCoeff() > 1.0) return {kEmptyLogit, colour_};
    const double n = n_;
    int i0[3];
    double f[3];
    for (int a = 0; a < 3; ++a) {
        const double x = std::clamp((c[a] + 1.0) * n / 2.0 - 0.5, 0.0, n - 1.0);
        i0[a] = std::min(static_cast<int>(x), n_ - 2);
        f[a] = x - i0[a];
    }
    auto at = [&](int i, int j, int k) {
        return logits_[(static_cast<std::size_t>(i) * n_ + j) * n_ + k];
    };
    double v = 0;
    for (int di = 0; di < 2; ++di) {
        for (int dj = 0; dj < 2; ++dj) {
            for (int dk = 0; dk < 2; ++dk) {
                const double w = (di ? f[0] : 1 - f[0]) * (dj ? f[1] : 1 - f[1]) * (dk ? f[2] : 1 - f[2]);
                if (w != 0) v += w * at(i0[0] + di, i0[1] + dj, i0[2] + dk);
            }
        }
    }
    return {v, colour_};
}

Composition compose(std::span<const double> logits, double sigma_max) {
    if (!(sigma_max > 0)) {
        throw Error(ErrorKind::InvalidArgument, "sigma_max must be positive");
    }
    Composition out;
    out.sigma_hat.resize(logits.size());
    if (logits.empty()) return out;
    double total = 0;
    for (double l : logits) total += softplus(l);
    out.sigma = sigma_max * std::tanh(total);
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    for (double l : logits) z += std::exp(l - mx);
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out.sigma_hat[k] = out.sigma * (std::exp(logits[k] - mx) / z);
    }
    return out;
}

Vec3 composed_colour(std::span<const double> logits, std::span<const Vec3> colours,
                     double sigma_max) {
    if (logits.size() != colours.size()) {
        throw Error(ErrorKind::DimMismatch, "one colour per component required");
    }
    const Composition c = compose(logits, sigma_max);
    Vec3 out = Vec3::Zero();
    for (std::size_t k = 0; k < logits.size(); ++k) out += c.sigma_hat[k] * colours[k];
    return out / sigma_max;
}

ComposedField::ComposedField(std::vector<std::shared_ptr<const ComponentField>> components,
                             double sigma_max)
    : components_(std::move(components)), sigma_max_(sigma_max) {
    if (!(sigma_max_ > 0)) {
        throw Error(ErrorKind::InvalidArgument, "sigma_max must be positive");
    }
}

ComposedSample ComposedField::evaluate(const Vec3& point, const Vec3& view_dir) const {
    std::vector<double> logits(components_.size());
    ComposedSample out;
    out.colours.resize(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const FieldSample s = components_[k]->evaluate(point, view_dir);
        logits[k] = s.logit;
        out.colours[k] = s.colour;
    }
    out.density = compose(logits, sigma_max_);
    for (std::size_t k = 0; k < components_.size(); ++k) {
        out.colour += out.density.sigma_hat[k] * out.colours[k];
    }
    out.colour /= sigma_max_;
    return out;
}

std::size_t VoxelShape::occupied_count() const {
    return static_cast<std::size_t>(std::count(occupancy.begin(), occupancy.end(), 1));
}

std::vector<Vec3> voxel_centres(int voxels_per_side) {
    const auto n = static_cast<std::size_t>(voxels_per_side);
    std::vector<Vec3> out;
    out.reserve(n * n * n);
    auto mid = [&](std::size_t i) { return -1.0 + (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n); };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) out.emplace_back(mid(i), mid(j), mid(k));
    return out;
}

VoxelShape voxel_occupancy(const ComponentField& field, const RigidPose& pose, int voxels_per_side,
                           double threshold, Exec exec) {
    if (voxels_per_side < 2) {
        throw Error(ErrorKind::InvalidArgument, "need at least 2 voxels per side");
    }
    VoxelShape shape;
    shape.voxels_per_side = voxels_per_side;
    shape.threshold = threshold;
    shape.centres = voxel_centres(voxels_per_side);
    shape.occupancy.resize(shape.centres.size());
    shape.probability.resize(shape.centres.size());
    const Vec3 view(0.0, 0.0, -1.0);
    const auto n = static_cast<std::int64_t>(shape.centres.size());
    auto eval = [&](std::int64_t i) {
        const Vec3 world = canonical_to_world(shape.centres[i], pose);
        const double p = occupancy_probability(field.evaluate(world, view).logit);
        shape.probability[i] = p;
        shape.occupancy[i] = p > threshold ? 1 : 0;
    };
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) eval(i);
    } else {
        for (std::int64_t i = 0; i < n; ++i) eval(i);
    }
    return shape;
}

std::vector<Vec3> occupied_world_points(const VoxelShape& shape, const RigidPose& pose) {
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < shape.centres.size(); ++i) {
        if (shape.occupancy[i]) out.push_back(canonical_to_world(shape.centres[i], pose));
    }
    return out;
}

CanonicalPoseResult shape_pose_from_voxels(const VoxelShape& shape, const RigidPose& world_pose,
                                           const RotationGrid& grid, double beta, Exec exec,
                                           std::optional<double> ground) {
    std::vector<Vec3> points = occupied_world_points(shape, world_pose);
    if (ground) {
        std::erase_if(points, [&](const Vec3& p) { return p.z() < *ground; });
    }
    if (points.empty()) {
        throw Error(ErrorKind::EmptyShape, "no voxel is occupied");
    }
    return canonical_pose(points, grid, beta, world_pose.box_size(), exec);
}

RaySamples sample_ray_points(const CameraModel& cam, double u, double v, double d_surface,
                             double delta, double near, RandomTape& tape) {
    if (!(d_surface > near)) {
        throw Error(ErrorKind::InvalidDepth, "surface depth must exceed the near plane");
    }
    if (!(delta > 0)) {
        throw Error(ErrorKind::InvalidArgument, "surface thickness must be positive");
    }
    RaySamples out;
    out.surface_depth = d_surface + tape.next() * delta;
    out.air_depth = near + tape.next() * (d_surface - near);
    out.surface = cam.unproject(u, v, out.surface_depth);
    out.air = cam.unproject(u, v, out.air_depth);
    out.rho_air = 1.0 / (d_surface - near);
    return out;
}

}  // namespace canopose
