#include "canopose/scene.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>

#include "canopose/error.hpp"
#include "canopose/random_tape.hpp"
#include "canopose/tensor_file.hpp"

namespace canopose {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::size_t kMaxPrimitives = 4;
constexpr int kPlacementAttempts = 100;

Vec3 vec_from(const json& j) {
    if (!j.is_array() || j.size() != 3) {
        throw Error(ErrorKind::InvalidArgument, "expected a 3-vector, got " + j.dump());
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec_to(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json mat_to(const Mat3& m) {
    json a = json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
    return a;
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

CameraSpec camera_from(const json& j, CameraSpec c) {
    read_opt(j, "fx", c.fx);
    read_opt(j, "fy", c.fy);
    read_opt(j, "cx", c.cx);
    read_opt(j, "cy", c.cy);
    read_opt(j, "width", c.width);
    read_opt(j, "height", c.height);
    if (j.contains("position")) c.position = vec_from(j["position"]);
    if (j.contains("look_at")) c.look_at = vec_from(j["look_at"]);
    return c;
}

ordered_json camera_to(const CameraSpec& c) {
    ordered_json j;
    j["fx"] = c.fx;
    j["fy"] = c.fy;
    j["cx"] = c.cx;
    j["cy"] = c.cy;
    j["width"] = c.width;
    j["height"] = c.height;
    j["position"] = vec_to(c.position);
    j["look_at"] = vec_to(c.look_at);
    const CameraModel model = c.model();
    j["extrinsic"] = {{"translation", vec_to(model.extrinsic().translation())},
                      {"rotation", mat_to(model.extrinsic().rotation().matrix())}};
    return j;
}

Hyperparameters hyper_from(const json& j) {
    Hyperparameters h;
    read_opt(j, "sigma_std", h.sigma_std);
    read_opt(j, "sigma_max", h.sigma_max);
    read_opt(j, "box_size", h.box_size);
    read_opt(j, "n_thresh", h.n_thresh);
    read_opt(j, "t_max", h.t_max);
    read_opt(j, "voxels", h.voxels);
    read_opt(j, "delta", h.delta);
    read_opt(j, "beta", h.beta);
    read_opt(j, "slots", h.slots);
    read_opt(j, "grid_level", h.grid_level);
    read_opt(j, "sigma_t", h.sigma_t);
    read_opt(j, "near", h.near);
    read_opt(j, "kernel_bandwidth", h.kernel_bandwidth);
    read_opt(j, "seed", h.seed);
    return h;
}

ordered_json hyper_to(const Hyperparameters& h) {
    ordered_json j;
    j["sigma_std"] = h.sigma_std;
    j["sigma_max"] = h.sigma_max;
    j["box_size"] = h.box_size;
    j["n_thresh"] = h.n_thresh;
    j["t_max"] = h.t_max;
    j["voxels"] = h.voxels;
    j["delta"] = h.delta;
    j["beta"] = h.beta;
    j["slots"] = h.slots;
    j["grid_level"] = h.grid_level;
    j["sigma_t"] = h.sigma_t;
    j["near"] = h.near;
    j["kernel_bandwidth"] = h.kernel_bandwidth;
    j["seed"] = h.seed;
    return j;
}

Primitive primitive_from(const json& j, int id) {
    Primitive p;
    p.id = j.value("id", id);
    const std::string type = j.value("type", std::string("sphere"));
    if (type == "sphere") {
        p.type = PrimitiveType::Sphere;
    } else if (type == "box") {
        p.type = PrimitiveType::Box;
    } else {
        throw Error(ErrorKind::InvalidArgument, "unknown primitive type '" + type + "'");
    }
    if (j.contains("centre")) p.centre = vec_from(j["centre"]);
    if (j.contains("velocity")) p.velocity = vec_from(j["velocity"]);
    read_opt(j, "radius", p.radius);
    if (j.contains("half_extents")) p.half_extents = vec_from(j["half_extents"]);
    read_opt(j, "yaw", p.yaw);
    read_opt(j, "yaw_rate", p.yaw_rate);
    if (j.contains("colour")) p.colour = vec_from(j["colour"]);
    if (p.id < 1) throw Error(ErrorKind::InvalidArgument, "primitive ids start at 1");
    return p;
}

ordered_json primitive_to(const Primitive& p) {
    ordered_json j;
    j["id"] = p.id;
    j["type"] = p.type == PrimitiveType::Sphere ? "sphere" : "box";
    j["centre"] = vec_to(p.centre);
    j["velocity"] = vec_to(p.velocity);
    if (p.type == PrimitiveType::Sphere) {
        j["radius"] = p.radius;
    } else {
        j["half_extents"] = vec_to(p.half_extents);
    }
    j["yaw"] = p.yaw;
    j["yaw_rate"] = p.yaw_rate;
    j["colour"] = vec_to(p.colour);
    return j;
}

double uniform(RandomTape& tape, double lo, double hi) { return lo + (hi - lo) * tape.next(); }

bool overlaps(const Primitive& a, const Primitive& b, int frames) {
    constexpr double margin = 0.01;
    for (int t = 0; t < frames; ++t) {
        const double d = (a.centre_at(t) - b.centre_at(t)).head<2>().norm();
        if (d < a.bounding_radius() + b.bounding_radius() + margin) return true;
    }
    return false;
}

Primitive random_primitive(int id, RandomTape& tape, double ground) {
    Primitive p;
    p.id = id;
    p.type = tape.next() < 0.5 ? PrimitiveType::Sphere : PrimitiveType::Box;
    p.radius = uniform(tape, 0.03, 0.05);
    p.half_extents = Vec3(uniform(tape, 0.025, 0.05), uniform(tape, 0.025, 0.05),
                          uniform(tape, 0.025, 0.05));
    const double lift = p.type == PrimitiveType::Sphere ? p.radius : p.half_extents.z();
    p.centre = Vec3(uniform(tape, -0.15, 0.15), uniform(tape, -0.1, 0.1), ground + lift);
    p.velocity = Vec3(uniform(tape, -0.01, 0.01), uniform(tape, -0.01, 0.01), 0.0);
    p.yaw = uniform(tape, 0.0, 2.0 * std::numbers::pi);
    p.yaw_rate = uniform(tape, -0.1, 0.1);
    p.colour = Vec3(uniform(tape, 0.1, 0.9), uniform(tape, 0.1, 0.9), uniform(tape, 0.1, 0.9));
    return p;
}

struct Hit {
    double depth = 0;
    Vec3 colour = Vec3::Zero();
    std::int32_t label = 0;
};

Hit march_pixel(const SceneManifest& scene, const ComposedField& field,
                const std::vector<std::int32_t>& ids, const CameraModel& cam, std::size_t u,
                std::size_t v) {
    const double threshold = 0.5 * field.sigma_max();
    const Vec3 origin = cam.centre();
    const double uu = static_cast<double>(u);
    const double vv = static_cast<double>(v);
    const Vec3 dir = (cam.unproject(uu, vv, 1.0) - origin).normalized();
    double prev_depth = scene.hyper.near;
    double prev_sigma = field.evaluate(cam.unproject(uu, vv, prev_depth), dir).density.sigma;
    const auto steps = static_cast<long>(std::ceil((scene.far - scene.hyper.near) / scene.march_step));
    for (long i = 1; i <= steps; ++i) {
        const double depth = scene.hyper.near + static_cast<double>(i) * scene.march_step;
        const ComposedSample s = field.evaluate(cam.unproject(uu, vv, depth), dir);
        if (s.density.sigma >= threshold) {
            Hit hit;
            const double span = s.density.sigma - prev_sigma;
            const double frac = span > 0 ? (threshold - prev_sigma) / span : 1.0;
            hit.depth = prev_depth + std::clamp(frac, 0.0, 1.0) * (depth - prev_depth);
            const ComposedSample at = field.evaluate(cam.unproject(uu, vv, hit.depth), dir);
            std::size_t best = 0;
            for (std::size_t k = 0; k < at.colours.size(); ++k) {
                hit.colour += at.density.sigma_hat[k] * at.colours[k];
                if (at.density.sigma_hat[k] > at.density.sigma_hat[best]) best = k;
            }
            if (at.density.sigma > 0) hit.colour /= at.density.sigma;
            hit.colour = hit.colour.cwiseMax(0.0).cwiseMin(1.0);
            hit.label = ids[best];
            return hit;
        }
        prev_depth = depth;
        prev_sigma = s.density.sigma;
    }
    return {};
}

}  // namespace

void Hyperparameters::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0)) throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be positive");
    };
    positive(sigma_std, "sigma_std");
    positive(sigma_max, "sigma_max");
    positive(box_size, "box_size");
    positive(t_max, "t_max");
    positive(delta, "delta");
    positive(near, "near");
    positive(kernel_bandwidth, "kernel_bandwidth");
    if (n_thresh < 0) throw Error(ErrorKind::InvalidArgument, "n_thresh must be nonnegative");
    if (voxels < 2) throw Error(ErrorKind::InvalidArgument, "voxels must be at least 2");
    if (!(beta >= 0)) throw Error(ErrorKind::InvalidArgument, "beta must be nonnegative");
    if (slots < 1) throw Error(ErrorKind::InvalidArgument, "slots must be at least 1");
    if (grid_level < 0 || grid_level > 3) {
        throw Error(ErrorKind::LevelOutOfRange, "grid_level must be in [0, 3]");
    }
    if (!(sigma_t >= 0 && sigma_t < 1)) throw Error(ErrorKind::InvalidArgument, "sigma_t must be in [0, 1)");
}

double Primitive::bounding_radius() const {
    return type == PrimitiveType::Sphere ? radius : half_extents.norm();
}

std::shared_ptr<const ComponentField> Primitive::field_at(int frame, double sharpness) const {
    if (type == PrimitiveType::Sphere) {
        return std::make_shared<SphereField>(centre_at(frame), radius, colour, sharpness);
    }
    return std::make_shared<BoxField>(centre_at(frame), rotation_at(frame), half_extents, colour,
                                      sharpness);
}

CameraModel CameraSpec::model() const {
    const Vec3 forward = (look_at - position).normalized();
    Vec3 right = forward.cross(Vec3::UnitZ());
    if (right.norm() < 1e-9) {
        throw Error(ErrorKind::InvalidArgument, "camera must not look straight up or down");
    }
    right.normalize();
    const Vec3 down = forward.cross(right);
    Mat3 r;
    r.col(0) = right;
    r.col(1) = down;
    r.col(2) = forward;
    return CameraModel(fx, fy, cx, cy, RigidPose(position, Rotation::from_matrix(r), 1.0), width,
                       height);
}

ComposedField SceneManifest::field_at(int frame) const {
    std::vector<std::shared_ptr<const ComponentField>> parts;
    parts.push_back(std::make_shared<HalfSpaceField>(ground_height, ground_colour, sharpness));
    for (const Primitive& p : primitives) parts.push_back(p.field_at(frame, sharpness));
    return ComposedField(std::move(parts), hyper.sigma_max);
}

SceneManifest manifest_from_json(const json& j) {
    SceneManifest m;
    read_opt(j, "frame_count", m.frames);
    if (j.contains("camera")) m.camera = camera_from(j["camera"], m.camera);
    if (j.contains("ground")) {
        read_opt(j["ground"], "height", m.ground_height);
        if (j["ground"].contains("colour")) m.ground_colour = vec_from(j["ground"]["colour"]);
    }
    read_opt(j, "sharpness", m.sharpness);
    read_opt(j, "march_step", m.march_step);
    read_opt(j, "far", m.far);
    if (j.contains("embedding")) {
        read_opt(j["embedding"], "noise", m.embedding.noise);
        read_opt(j["embedding"], "channels", m.embedding.channels);
        read_opt(j["embedding"], "prescope_margin", m.embedding.prescope_margin);
    }
    if (j.contains("hyperparameters")) m.hyper = hyper_from(j["hyperparameters"]);
    if (j.contains("primitives")) {
        int id = 1;
        for (const auto& p : j["primitives"]) m.primitives.push_back(primitive_from(p, id++));
    }
    if (j.contains("frames")) {
        for (const auto& f : j["frames"]) {
            FrameFiles ff;
            ff.rgb = f.at("rgb").get<std::string>();
            ff.depth = f.at("depth").get<std::string>();
            ff.labels = f.at("labels").get<std::string>();
            ff.embeddings = f.at("embeddings").get<std::string>();
            ff.prescope_logits = f.at("prescope_logits").get<std::string>();
            ff.camera = f.contains("camera") ? camera_from(f["camera"], m.camera) : m.camera;
            m.frame_files.push_back(std::move(ff));
        }
    }
    if (m.frames < 1) throw Error(ErrorKind::InvalidArgument, "frame_count must be at least 1");
    if (m.primitives.size() > kMaxPrimitives) {
        throw Error(ErrorKind::InvalidArgument, "at most four primitives per scene");
    }
    if (!(m.march_step > 0) || !(m.far > m.hyper.near) || !(m.sharpness > 0)) {
        throw Error(ErrorKind::InvalidArgument, "invalid ray-march settings");
    }
    if (m.embedding.channels < m.primitives.size() + 1 || !(m.embedding.noise >= 0)) {
        throw Error(ErrorKind::InvalidArgument, "embedding needs one channel per instance plus background");
    }
    m.hyper.validate();
    (void)m.camera.model();
    return m;
}

ordered_json manifest_to_json(const SceneManifest& m) {
    ordered_json j;
    j["version"] = 1;
    j["frame_count"] = m.frames;
    j["camera"] = camera_to(m.camera);
    j["ground"] = {{"height", m.ground_height}, {"colour", vec_to(m.ground_colour)}};
    j["sharpness"] = m.sharpness;
    j["march_step"] = m.march_step;
    j["far"] = m.far;
    j["embedding"] = {{"noise", m.embedding.noise},
                      {"channels", m.embedding.channels},
                      {"prescope_margin", m.embedding.prescope_margin}};
    j["hyperparameters"] = hyper_to(m.hyper);
    ordered_json prims = ordered_json::array();
    for (const Primitive& p : m.primitives) prims.push_back(primitive_to(p));
    j["primitives"] = prims;
    ordered_json frames = ordered_json::array();
    for (std::size_t t = 0; t < m.frame_files.size(); ++t) {
        const FrameFiles& f = m.frame_files[t];
        ordered_json fj;
        fj["index"] = t;
        fj["rgb"] = f.rgb;
        fj["depth"] = f.depth;
        fj["labels"] = f.labels;
        fj["embeddings"] = f.embeddings;
        fj["prescope_logits"] = f.prescope_logits;
        fj["camera"] = camera_to(f.camera);
        ordered_json truth = ordered_json::array();
        for (const Primitive& p : m.primitives) {
            const int frame = static_cast<int>(t);
            truth.push_back({{"id", p.id},
                             {"centre", vec_to(p.centre_at(frame))},
                             {"rotation", mat_to(p.rotation_at(frame).matrix())}});
        }
        fj["ground_truth"] = truth;
        frames.push_back(fj);
    }
    j["frames"] = frames;
    return j;
}

SceneManifest load_manifest(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) {
        throw Error(ErrorKind::InvalidArgument, "no manifest at " + path.string());
    }
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open manifest " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("manifest is not valid JSON: ") + e.what());
    }
    SceneManifest m;
    try {
        m = manifest_from_json(j);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("malformed manifest: ") + e.what());
    }
    m.root = path.parent_path();
    for (const FrameFiles& f : m.frame_files) {
        for (const std::string* name : {&f.rgb, &f.depth, &f.labels, &f.embeddings, &f.prescope_logits}) {
            if (!std::filesystem::exists(m.root / *name)) {
                throw Error(ErrorKind::InvalidArgument, "manifest references missing file " + *name);
            }
        }
    }
    return m;
}

RenderedFrame render_frame(const SceneManifest& scene, int frame, Exec exec) {
    const CameraModel cam = scene.camera.model();
    const ComposedField field = scene.field_at(frame);
    std::vector<std::int32_t> ids{0};
    for (const Primitive& p : scene.primitives) ids.push_back(p.id);
    const std::size_t h = cam.height();
    const std::size_t w = cam.width();
    RenderedFrame out{NdArray<double>({h, w, 3}), NdArray<double>({h, w}), NdArray<std::int32_t>({h, w})};
    auto shade = [&](std::int64_t p) {
        const auto v = static_cast<std::size_t>(p) / w;
        const auto u = static_cast<std::size_t>(p) % w;
        const Hit hit = march_pixel(scene, field, ids, cam, u, v);
        out.depth.at(v, u) = hit.depth;
        out.labels.at(v, u) = hit.label;
        for (int c = 0; c < 3; ++c) out.rgb.at(v, u, c) = hit.colour[c];
    };
    const auto n = static_cast<std::int64_t>(h * w);
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 64)
        for (std::int64_t p = 0; p < n; ++p) shade(p);
    } else {
        for (std::int64_t p = 0; p < n; ++p) shade(p);
    }
    return out;
}

SceneManifest gen_scene(const json& skeleton, const std::filesystem::path& out,
                        std::optional<std::uint64_t> seed, std::optional<int> frames) {
    SceneManifest m;
    try {
        m = manifest_from_json(skeleton);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("malformed scene skeleton: ") + e.what());
    }
    if (seed) m.hyper.seed = *seed;
    if (frames) {
        if (*frames < 1) throw Error(ErrorKind::InvalidArgument, "frames must be at least 1");
        m.frames = *frames;
    }
    RandomTape tape = RandomTape::seeded(m.hyper.seed);

    if (m.primitives.empty() && skeleton.contains("object_count")) {
        const int count = skeleton["object_count"].get<int>();
        if (count < 0 || count > static_cast<int>(kMaxPrimitives)) {
            throw Error(ErrorKind::InvalidArgument, "object_count must be in [0, 4]");
        }
        for (int id = 1; id <= count; ++id) {
            bool placed = false;
            for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
                Primitive p = random_primitive(id, tape, m.ground_height);
                bool clash = false;
                for (const Primitive& q : m.primitives) clash = clash || overlaps(p, q, m.frames);
                if (!clash) {
                    m.primitives.push_back(p);
                    placed = true;
                }
            }
            if (!placed) {
                throw Error(ErrorKind::OverlapRejected,
                            "could not place object " + std::to_string(id) + " without overlap");
            }
        }
    } else {
        for (std::size_t a = 0; a < m.primitives.size(); ++a)
            for (std::size_t b = a + 1; b < m.primitives.size(); ++b)
                if (overlaps(m.primitives[a], m.primitives[b], m.frames)) {
                    throw Error(ErrorKind::OverlapRejected, "listed primitives overlap");
                }
    }
    if (m.embedding.channels < m.primitives.size() + 1) {
        throw Error(ErrorKind::InvalidArgument, "embedding needs one channel per instance plus background");
    }

    std::filesystem::create_directories(out);
    m.root = out;
    m.frame_files.clear();
    const std::size_t h = m.camera.height;
    const std::size_t w = m.camera.width;
    const std::size_t dc = m.embedding.channels;
    for (int t = 0; t < m.frames; ++t) {
        RenderedFrame r = render_frame(m, t);
        NdArray<double> emb({h, w, dc}, 0.0);
        NdArray<double> pre({h, w, 2}, 0.0);
        // Instance ids map to channels by their order in the primitive list.
        for (std::size_t p = 0; p < h * w; ++p) {
            const std::int32_t label = r.labels[p];
            std::size_t channel = 0;
            for (std::size_t k = 0; k < m.primitives.size(); ++k) {
                if (m.primitives[k].id == label) channel = k + 1;
            }
            for (std::size_t c = 0; c < dc; ++c) {
                emb[p * dc + c] = (c == channel ? 1.0 : 0.0) + m.embedding.noise * tape.normal();
            }
            const double split = (label == 0 ? 1.0 : -1.0) * m.embedding.prescope_margin;
            pre[p * 2 + 0] = split + m.embedding.noise * tape.normal();
            pre[p * 2 + 1] = -split + m.embedding.noise * tape.normal();
        }
        char prefix[32];
        std::snprintf(prefix, sizeof prefix, "frame_%03d_", t);
        FrameFiles f{std::string(prefix) + "rgb.cnpt", std::string(prefix) + "depth.cnpt",
                     std::string(prefix) + "labels.cnpt", std::string(prefix) + "embeddings.cnpt",
                     std::string(prefix) + "prescope.cnpt", m.camera};
        write_real_tensor(out / f.rgb, r.rgb);
        write_real_tensor(out / f.depth, r.depth);
        write_tensor_file(out / f.labels, r.labels);
        write_real_tensor(out / f.embeddings, emb);
        write_real_tensor(out / f.prescope_logits, pre);
        m.frame_files.push_back(std::move(f));
    }
    std::ofstream mf(out / "manifest.json");
    if (!mf) throw Error(ErrorKind::Io, "cannot write manifest");
    mf << manifest_to_json(m).dump(2) << '\n';
    return m;
}

}  // namespace canopose
