// canopose command-line front end.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "canopose/canonical_pose.hpp"
#include "canopose/error.hpp"
#include "canopose/pipeline.hpp"
#include "canopose/scene.hpp"
#include "canopose/so3_grid.hpp"
#include "canopose/tensor_file.hpp"

namespace fs = std::filesystem;
using namespace canopose;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

std::vector<Vec3> read_points(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorKind::InvalidArgument, "no such file: " + path.string());
    std::vector<Vec3> pts;
    if (path.extension() == ".cnpt") {
        const NdArray<double> t = read_real_tensor(path);
        if (t.ndim() != 2 || t.dim(1) != 3) throw Error(ErrorKind::ShapeMismatch, "expected an N x 3 tensor");
        for (std::size_t i = 0; i < t.dim(0); ++i) pts.emplace_back(t.at(i, 0), t.at(i, 1), t.at(i, 2));
        return pts;
    }
    std::ifstream in(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        double x, y, z;
        if (!(ss >> x >> y >> z)) {
            throw Error(ErrorKind::InvalidArgument, path.string() + ":" + std::to_string(lineno) + ": expected 'x y z'");
        }
        pts.emplace_back(x, y, z);
    }
    return pts;
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, path.string() + ": " + e.what());
    }
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + out);
    f << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Canonical object poses, stick-breaking decomposition and segmentation metrics"};
    app.require_subcommand(1);

    std::string manifest, out;
    std::optional<std::uint64_t> seed;
    std::optional<int> frames, grid_level;
    bool serial = false;

    auto* gen = app.add_subcommand("gen-scene", "render a synthetic scene from a manifest skeleton");
    gen->add_option("--manifest", manifest, "skeleton manifest JSON")->required();
    gen->add_option("--out", out, "output directory")->required();
    gen->add_option("--seed", seed, "placement and noise seed");
    gen->add_option("--frames", frames, "number of frames to render");

    auto* dec = app.add_subcommand("decompose", "run the per-frame pipeline on a generated scene");
    dec->add_option("--manifest", manifest, "scene manifest JSON")->required();
    dec->add_option("--out", out, "output directory")->required();
    dec->add_option("--seed", seed, "overrides the manifest seed");
    dec->add_option("--grid-level", grid_level, "SO(3) grid level 0-3");
    dec->add_option("--frames", frames, "process at most this many frames");
    dec->add_flag("--serial", serial, "use the serial reference kernels");

    std::string input;
    double beta = kDefaultBeta;
    double box_size = 0.4;
    int pose_level = 2;
    auto* pose = app.add_subcommand("pose", "canonical pose of a point cloud");
    pose->add_option("--input", input, "points as 'x y z' lines or an N x 3 .cnpt tensor")->required();
    pose->add_option("--grid-level", pose_level, "SO(3) grid level 0-3");
    pose->add_option("--beta", beta, "near-tie band");
    pose->add_option("--box-size", box_size, "canonical box size s");
    pose->add_option("--out", out, "write JSON here instead of stdout");

    std::vector<std::string> runs;
    auto* met = app.add_subcommand("metrics", "aggregate the scores of completed runs");
    met->add_option("runs", runs, "run directories holding summary.json")->required();
    met->add_option("--out", out, "write the aggregate JSON here");

    int cache_level = 2;
    auto* cache = app.add_subcommand("grid-cache", "write an SO(3) grid as an N x 3 x 3 tensor");
    cache->add_option("--grid-level", cache_level, "SO(3) grid level 0-3");
    cache->add_option("--out", out, "output .cnpt file or directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (*gen) {
            const SceneManifest m = gen_scene(read_json(manifest), out, seed, frames);
            std::cout << "wrote " << m.frame_files.size() << " frames to " << (fs::path(out) / "manifest.json").string() << '\n';
        } else if (*dec) {
            PipelineOptions opt;
            opt.frames = frames;
            opt.grid_level = grid_level;
            opt.seed = seed;
            opt.exec = serial ? Exec::Serial : Exec::Parallel;
            const PipelineReport rep = run_pipeline(manifest, out, opt);
            std::printf("frames %zu  ARI-FG %.4f  MSC-FG %.4f  mIoU-BG %.4f  max centre error %.4f m\n",
                        rep.frames.size(), rep.mean.ari_fg, rep.mean.msc_fg, rep.mean.miou_bg,
                        rep.max_centre_error);
        } else if (*pose) {
            const std::vector<Vec3> pts = read_points(input);
            const RotationGrid grid = generate_grid(pose_level);
            const CanonicalPoseResult r = canonical_pose(pts, grid, beta, box_size);
            nlohmann::ordered_json j;
            const Vec3 t = r.pose.translation();
            j["translation"] = {t.x(), t.y(), t.z()};
            nlohmann::ordered_json rot = nlohmann::ordered_json::array();
            for (int i = 0; i < 3; ++i)
                rot.push_back({r.pose.rotation().matrix()(i, 0), r.pose.rotation().matrix()(i, 1),
                               r.pose.rotation().matrix()(i, 2)});
            j["rotation"] = rot;
            j["min_volume"] = r.min_volume;
            j["candidates"] = r.candidate_count;
            j["grid_index"] = r.grid_index;
            j["distance_to_identity"] = r.chosen_distance;
            j["degenerate"] = r.degenerate;
            emit(j.dump(2) + "\n", out);
        } else if (*met) {
            std::vector<fs::path> dirs(runs.begin(), runs.end());
            const AggregateReport rep = report_metrics(dirs);
            std::cout << rep.table;
            if (!out.empty()) emit(rep.json.dump(2) + "\n", out);
        } else if (*cache) {
            const RotationGrid grid = generate_grid(cache_level);
            fs::path target = out;
            if (fs::is_directory(target)) target /= "so3_grid_level" + std::to_string(cache_level) + ".cnpt";
            NdArray<float> t({grid.rotations.size(), 3, 3});
            for (std::size_t n = 0; n < grid.rotations.size(); ++n)
                for (int i = 0; i < 3; ++i)
                    for (int k = 0; k < 3; ++k)
                        t.at(n, i, k) = static_cast<float>(grid.rotations[n].matrix()(i, k));
            write_tensor_file(target, t);
            std::cout << "wrote " << grid.rotations.size() << " rotations to " << target.string() << '\n';
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.is_validation() ? kExitValidation : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
