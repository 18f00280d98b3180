#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "canopose/tensor_file.hpp"
#include "../support.hpp"

namespace fs = std::filesystem;
using canopose::testing::read_file;
using canopose::testing::scratch_dir;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(CANOPOSE_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("cli end to end with exit codes") {
    const fs::path dir = scratch_dir("cli");
    {
        std::ofstream sk(dir / "skeleton.json");
        sk << R"({"frame_count": 2,
                  "camera": {"fx": 55, "fy": 55, "cx": 32, "cy": 24, "width": 64, "height": 48},
                  "hyperparameters": {"kernel_bandwidth": 0.5},
                  "primitives": [{"type": "sphere", "centre": [0.0, 0.0, 0.05], "radius": 0.05}]})";
    }
    const std::string scene = (dir / "scene").string();
    const std::string run_a = (dir / "run_a").string();
    CHECK(run("gen-scene --manifest " + (dir / "skeleton.json").string() + " --out " + scene + " --seed 4") == 0);
    CHECK(run("decompose --manifest " + scene + "/manifest.json --out " + run_a + " --grid-level 1") == 0);
    CHECK(fs::exists(fs::path(run_a) / "summary.json"));
    CHECK(run("decompose --manifest " + scene + "/manifest.json --out " + (dir / "run_b").string() +
              " --grid-level 1 --frames 1") == 0);
    CHECK(run("metrics " + run_a + " --out " + (dir / "agg.json").string()) == 0);
    const auto agg = nlohmann::json::parse(read_file(dir / "agg.json"));
    CHECK(agg["runs"] == 1);

    CHECK(run("pose --input " + run_a + "/frame_000_slot_0_voxels.txt --grid-level 0 --out " +
              (dir / "pose.json").string()) == 0);
    const auto pose = nlohmann::json::parse(read_file(dir / "pose.json"));
    CHECK(pose["rotation"].size() == 3);

    CHECK(run("grid-cache --grid-level 0 --out " + (dir / "g0.cnpt").string()) == 0);
    const auto grid = canopose::read_tensor_file(dir / "g0.cnpt");
    CHECK(std::get<canopose::NdArray<float>>(grid).shape() == std::vector<std::size_t>{72, 3, 3});

    // validation failures
    CHECK(run("") == 2);
    CHECK(run("grid-cache --grid-level 9 --out " + (dir / "g9.cnpt").string()) == 2);
    CHECK(run("decompose --manifest " + (dir / "missing.json").string() + " --out " + run_a) == 2);
    CHECK(run("decompose --manifest " + scene + "/manifest.json --out " + run_a + " --grid-level 4") == 2);
    CHECK(run("metrics " + (dir / "nowhere").string()) == 2);
    CHECK(run("pose --input " + (dir / "skeleton.json").string()) == 2);
    // runtime failure: output location is a regular file
    CHECK(run("grid-cache --grid-level 0 --out " + (dir / "skeleton.json").string() + "/x.cnpt") == 1);
}
