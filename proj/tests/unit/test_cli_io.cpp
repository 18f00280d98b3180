#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "canopose/error.hpp"
#include "canopose/pipeline.hpp"
#include "canopose/scene.hpp"
#include "canopose/tensor_file.hpp"
#include "../support.hpp"

using namespace canopose;
using canopose::testing::read_file;
using canopose::testing::scratch_dir;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json small_camera() {
    return {{"fx", 55}, {"fy", 55}, {"cx", 32}, {"cy", 24}, {"width", 64}, {"height", 48}};
}

template <typename T>
void round_trip(const NdArray<T>& t) {
    std::stringstream buf;
    write_tensor(buf, t);
    const AnyTensor back = read_tensor(buf);
    REQUIRE(std::holds_alternative<NdArray<T>>(back));
    const NdArray<T>& r = std::get<NdArray<T>>(back);
    CHECK(r.shape() == t.shape());
    CHECK(std::memcmp(r.data(), t.data(), t.size() * sizeof(T)) == 0);
}

std::vector<std::string> listing(const fs::path& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

std::size_t csv_rows(const fs::path& p, int frame) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::size_t n = 0;
    while (std::getline(in, line)) n += line.rfind(std::to_string(frame) + ",", 0) == 0;
    return n;
}

}  // namespace

TEST_CASE("tensor files round trip bit-exactly") {
    NdArray<float> f({2, 3});
    for (std::size_t i = 0; i < 6; ++i) f[i] = static_cast<float>(i) * 0.1f - 0.25f;
    f[5] = -0.0f;
    round_trip(f);
    round_trip(NdArray<std::uint8_t>({4}, std::vector<std::uint8_t>{0, 1, 128, 255}));
    round_trip(NdArray<std::int32_t>({2, 2, 1}, std::vector<std::int32_t>{-7, 0, 1 << 30, 42}));
    round_trip(NdArray<float>({0, 3}));
    round_trip(NdArray<std::int32_t>({}, std::vector<std::int32_t>{5}));
}

TEST_CASE("tensor file layout") {
    std::stringstream buf;
    write_tensor(buf, NdArray<std::int32_t>({1, 2}, std::vector<std::int32_t>{1, 258}));
    const std::string s = buf.str();
    REQUIRE(s.size() == 4 + 3 + 8 + 8);
    CHECK(s.substr(0, 4) == "CNPT");
    CHECK(s[4] == 1);
    CHECK(s[5] == 2);
    CHECK(s[6] == 2);
    CHECK(static_cast<unsigned char>(s[11]) == 2);
    CHECK(static_cast<unsigned char>(s[19]) == 2);
    CHECK(static_cast<unsigned char>(s[20]) == 1);

    std::stringstream bad("XXXX");
    CHECK_THROWS_AS(read_tensor(bad), Error);
    std::stringstream truncated(s.substr(0, s.size() - 2));
    CHECK_THROWS_AS(read_tensor(truncated), Error);
}

TEST_CASE("sphere depth matches ray-sphere intersection") {
    const fs::path dir = scratch_dir("sphere");
    const Vec3 centre(0, 0, 0.05);
    const double r = 0.05;
    json sk = {{"frame_count", 1}, {"camera", small_camera()}, {"embedding", {{"noise", 0.0}}},
               {"primitives", json::array({{{"type", "sphere"}, {"centre", {0, 0, 0.05}}, {"radius", r}}})}};
    const SceneManifest m = gen_scene(sk, dir);
    const NdArray<double> depth = read_real_tensor(dir / m.frame_files[0].depth);
    const NdArray<std::int32_t> labels = read_int_tensor(dir / m.frame_files[0].labels);
    const CameraModel cam = m.camera.model();
    const Vec3 o = cam.centre();
    const Vec3 d = cam.extrinsic().rotation().matrix().col(2);
    const double b = d.dot(o - centre);
    const double t = -b - std::sqrt(b * b - ((o - centre).squaredNorm() - r * r));
    CHECK(std::abs(depth.at(24, 32) - t) <= m.march_step);
    CHECK(labels.at(24, 32) == 1);
    CHECK(labels.at(0, 0) == 0);
    const NdArray<double> emb = read_real_tensor(dir / m.frame_files[0].embeddings);
    CHECK(emb.at(24, 32, 1) == 1.0);
    CHECK(emb.at(0, 0, 0) == 1.0);
}

TEST_CASE("empty scene shows the ground plane everywhere") {
    const fs::path dir = scratch_dir("empty");
    json sk = {{"frame_count", 1}, {"camera", small_camera()}};
    const SceneManifest m = gen_scene(sk, dir);
    const NdArray<double> depth = read_real_tensor(dir / m.frame_files[0].depth);
    const NdArray<std::int32_t> labels = read_int_tensor(dir / m.frame_files[0].labels);
    const CameraModel cam = m.camera.model();
    for (std::size_t v = 0; v < 48; ++v) {
        for (std::size_t u = 0; u < 64; ++u) {
            const Vec3 far = cam.unproject(static_cast<double>(u), static_cast<double>(v), 1.0);
            const Vec3 o = cam.centre();
            const double z_depth = (o.z() - m.ground_height) / (o.z() - far.z());
            CHECK(std::abs(depth.at(v, u) - z_depth) <= m.march_step);
            CHECK(labels.at(v, u) == 0);
        }
    }
}

TEST_CASE("scene validation") {
    const fs::path dir = scratch_dir("invalid");
    CHECK_THROWS_AS(gen_scene(json{{"frame_count", 0}}, dir), Error);
    CHECK_THROWS_AS(gen_scene(json{{"hyperparameters", {{"grid_level", 7}}}}, dir), Error);
    json overlap = {{"primitives", json::array({{{"type", "sphere"}, {"centre", {0, 0, 0.05}}},
                                                 {{"type", "sphere"}, {"centre", {0.01, 0, 0.05}}}})}};
    try {
        gen_scene(overlap, dir);
        FAIL("overlap accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::OverlapRejected);
    }
    CHECK_THROWS_AS(load_manifest(dir / "missing.json"), Error);
}

TEST_CASE("manifest json round trip") {
    json sk = {{"frame_count", 3},
               {"hyperparameters", {{"seed", 9}, {"kernel_bandwidth", 0.5}}},
               {"primitives", json::array({{{"type", "box"}, {"centre", {0.1, 0, 0.03}}, {"yaw", 0.2}}})}};
    const SceneManifest a = manifest_from_json(sk);
    const SceneManifest b = manifest_from_json(json::parse(manifest_to_json(a).dump()));
    CHECK(manifest_to_json(a).dump() == manifest_to_json(b).dump());
    CHECK(b.hyper.seed == 9);
    CHECK(b.primitives[0].type == PrimitiveType::Box);
}

TEST_CASE("argmax labels map special channels and remaining scope to background") {
    NdArray<double> pre({2, 1, 3}, std::vector<double>{0.9, 0.1, 0.1, 0.1, 0.9, 0.9});
    MaskState s = MaskState::start(pre, 2);
    s = sbp_step(s, NdArray<double>({1, 3}, std::vector<double>{1.0, 1.0, 0.0}));
    s = sbp_step(s, NdArray<double>({1, 3}, std::vector<double>{0.0, 0.0, 0.3}));
    const NdArray<std::int32_t> l = argmax_labels(s);
    CHECK(l[0] == 0);
    CHECK(l[1] == 1);
    CHECK(l[2] == 0);
}

TEST_CASE("pipeline on noise-free oracle embeddings") {
    const fs::path scene = scratch_dir("oracle_scene");
    json sk = {{"frame_count", 2}, {"camera", small_camera()}, {"embedding", {{"noise", 0.0}}},
               {"hyperparameters", {{"grid_level", 1}}},
               {"primitives", json::array({{{"type", "sphere"}, {"centre", {-0.1, 0.0, 0.045}}, {"radius", 0.045},
                                            {"velocity", {0.01, 0, 0}}},
                                           {{"type", "box"}, {"centre", {0.1, 0.0, 0.04}},
                                            {"half_extents", {0.04, 0.03, 0.04}}, {"yaw", 0.5}}})}};
    gen_scene(sk, scene);
    const fs::path a = scratch_dir("oracle_run_a"), b = scratch_dir("oracle_run_b");
    PipelineOptions opt;
    opt.exec = Exec::Parallel;
    const PipelineReport ra = run_pipeline(scene / "manifest.json", a, opt);
    opt.exec = Exec::Serial;
    run_pipeline(scene / "manifest.json", b, opt);
    REQUIRE(ra.frames.size() == 2);
    for (const FrameResult& f : ra.frames) {
        CHECK(f.scores.ari_fg == 1.0);
        CHECK(std::isfinite(f.losses.total));
        std::size_t active = 0;
        for (const SlotResult& s : f.slots) active += s.active;
        CHECK(csv_rows(a / "poses.csv", f.frame) == active);
    }
    CHECK(ra.max_centre_error < 1.5 * ra.voxel_pitch);
    // determinism and serial/parallel equivalence
    const auto names = listing(a);
    REQUIRE(names == listing(b));
    for (const std::string& n : names) CHECK_MESSAGE(read_file(a / n) == read_file(b / n), n);
    CHECK(fs::exists(a / "frame_000_masks.cnpt"));
    CHECK(fs::exists(a / "frame_001_argmax.pgm"));
    CHECK(fs::exists(a / "summary.json"));
}

TEST_CASE("single object leaves the other slots idle") {
    const fs::path scene = scratch_dir("idle_scene");
    json sk = {{"frame_count", 2}, {"camera", small_camera()},
               {"embedding", {{"noise", 0.0}, {"prescope_margin", 40.0}}},
               {"hyperparameters", {{"grid_level", 1}}},
               {"primitives", json::array({{{"type", "sphere"}, {"centre", {0.0, 0.0, 0.05}}, {"radius", 0.05}}})}};
    gen_scene(sk, scene);
    const fs::path out = scratch_dir("idle_run");
    const PipelineReport r = run_pipeline(scene / "manifest.json", out);
    for (const FrameResult& f : r.frames) {
        std::size_t active = 0, idle = 0;
        for (const SlotResult& s : f.slots) {
            active += s.active;
            idle += s.idle;
        }
        CHECK(active == 1);
        CHECK(idle == 3);
        CHECK(csv_rows(out / "poses.csv", f.frame) == 1);
    }
}

TEST_CASE("pipeline rejects bad inputs") {
    const fs::path out = scratch_dir("bad_run");
    CHECK_THROWS_AS(run_pipeline(out / "nope.json", out), Error);
    std::ofstream(out / "skeleton.json") << R"({"frame_count": 1})";
    try {
        run_pipeline(out / "skeleton.json", out);
        FAIL("skeleton accepted");
    } catch (const Error& e) {
        CHECK(e.is_validation());
    }
}

TEST_CASE("metric aggregation") {
    auto run = [](const std::string& name, double ari, double msc, double miou) {
        const fs::path d = scratch_dir(name);
        std::ofstream(d / "summary.json") << json{{"mean", {{"ari_fg", ari}, {"msc_fg", msc}, {"miou_bg", miou}}}}.dump();
        return d;
    };
    const AggregateReport one = report_metrics({run("agg_perfect", 1, 1, 1)});
    CHECK(one.ari_fg.mean == 1.0);
    CHECK(one.ari_fg.std == 0.0);
    CHECK(one.table.find("1.00 ± 0.00") != std::string::npos);
    const AggregateReport two = report_metrics({run("agg_zero", 0, 0, 0), run("agg_one", 1, 1, 1)});
    CHECK(two.ari_fg.mean == 0.5);
    CHECK(two.ari_fg.std == 0.5);
    CHECK(two.json["msc_fg"]["mean"].get<double>() == 0.5);
    CHECK(format_two_decimals(0.966) == "0.97");
    CHECK_THROWS_AS(report_metrics({}), Error);
}
