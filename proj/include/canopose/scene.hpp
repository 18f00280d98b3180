#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "canopose/geometry.hpp"
#include "canopose/ndarray.hpp"
#include "canopose/parallel.hpp"
#include "canopose/radiance.hpp"

namespace canopose {

/// Model and pipeline hyperparameters with their defaults.
struct Hyperparameters {
    double sigma_std = 0.1;
    double sigma_max = 10.0;
    double box_size = 0.4;
    int n_thresh = 10;
    double t_max = 0.1;
    int voxels = 24;
    double delta = 0.01;
    double beta = 0.01;
    int slots = 4;
    int grid_level = 2;
    double sigma_t = 0.5;
    double near = 0.01;
    double kernel_bandwidth = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class PrimitiveType { Sphere, Box };

/// Analytic object moving with constant velocity and yaw rate.
struct Primitive {
    int id = 1;
    PrimitiveType type = PrimitiveType::Sphere;
    Vec3 centre = Vec3::Zero();       // at frame 0
    Vec3 velocity = Vec3::Zero();     // metres per frame
    double radius = 0.04;             // spheres
    Vec3 half_extents = Vec3::Constant(0.03);  // boxes
    double yaw = 0;                   // radians about +z at frame 0
    double yaw_rate = 0;              // radians per frame
    Vec3 colour = Vec3::Constant(0.5);

    Vec3 centre_at(int frame) const { return centre + frame * velocity; }
    Rotation rotation_at(int frame) const { return Rotation::about_z(yaw + frame * yaw_rate); }
    /// Radius of a sphere enclosing the primitive.
    double bounding_radius() const;
    std::shared_ptr<const ComponentField> field_at(int frame, double sharpness) const;
};

struct CameraSpec {
    double fx = 110, fy = 110, cx = 64, cy = 48;
    std::size_t width = 128, height = 96;
    Vec3 position = Vec3(0.0, -0.75, 0.65);
    Vec3 look_at = Vec3(0.0, 0.0, 0.03);

    CameraModel model() const;
};

struct EmbeddingSpec {
    double noise = 0.1;
    std::size_t channels = 5;     // background + up to four instances
    double prescope_margin = 4.0; // |logit| of the oracle background/foreground split
};

struct FrameFiles {
    std::string rgb, depth, labels, embeddings, prescope_logits;
    CameraSpec camera;
};

/// Full description of a scene on disk.
struct SceneManifest {
    int frames = 5;
    CameraSpec camera;
    double ground_height = 0.0;
    Vec3 ground_colour = Vec3(0.55, 0.45, 0.35);
    double sharpness = 500.0;
    double march_step = 0.002;
    double far = 3.0;
    EmbeddingSpec embedding;
    Hyperparameters hyper;
    std::vector<Primitive> primitives;
    std::vector<FrameFiles> frame_files;  // empty for a skeleton
    std::filesystem::path root;           // directory holding the frame files

    /// Scene components: ground first, then primitives in order.
    ComposedField field_at(int frame) const;
};

SceneManifest manifest_from_json(const nlohmann::json& j);
nlohmann::ordered_json manifest_to_json(const SceneManifest& m);
SceneManifest load_manifest(const std::filesystem::path& path);

struct RenderedFrame {
    NdArray<double> rgb;            // H x W x 3
    NdArray<double> depth;          // H x W, 0 where nothing was hit
    NdArray<std::int32_t> labels;   // H x W, primitive id or 0
};

/// Ray-marches every pixel in fixed depth steps; the first sample with
/// sigma >= sigma_max / 2 (linearly refined against the previous sample)
/// defines depth. Colour is the density-weighted component colour there.
RenderedFrame render_frame(const SceneManifest& scene, int frame, Exec exec = Exec::Parallel);

/// Places primitives when the skeleton lists only an object count, renders
/// every frame and writes tensors plus the completed manifest into `out`.
SceneManifest gen_scene(const nlohmann::json& skeleton, const std::filesystem::path& out,
                        std::optional<std::uint64_t> seed = std::nullopt,
                        std::optional<int> frames = std::nullopt);

}  // namespace canopose
