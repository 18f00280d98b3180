// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include "canopose/canonical_pose.hpp"
#include "canopose/icsbp.hpp"
#include "canopose/radiance.hpp"
#include "canopose/scene.hpp"
#include "canopose/so3_grid.hpp"

using namespace canopose;

namespace {

Exec exec_of(benchmark::State& state) {
    const bool serial = state.range(0) == 0;
    state.SetLabel(serial ? "serial" : "openmp");
    return serial ? Exec::Serial : Exec::Parallel;
}

std::vector<Vec3> cloud(std::size_t n) {
    RandomTape tape = RandomTape::seeded(1);
    std::vector<Vec3> pts;
    for (std::size_t i = 0; i < n; ++i) pts.emplace_back(0.1 * tape.normal(), 0.05 * tape.normal(), 0.02 * tape.normal());
    return pts;
}

const RotationGrid& grid(int level) {
    static const RotationGrid g2 = generate_grid(2), g3 = generate_grid(3);
    return level == 2 ? g2 : g3;
}

void BM_GridVolumes(benchmark::State& state) {
    const auto pts = cloud(500);
    const RotationGrid& g = grid(static_cast<int>(state.range(1)));
    const Exec exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(grid_volumes(pts, g.rotations, exec));
}
BENCHMARK(BM_GridVolumes)->ArgsProduct({{0, 1}, {2, 3}})->Unit(benchmark::kMillisecond);

void BM_NearestGridDistances(benchmark::State& state) {
    RandomTape tape = RandomTape::seeded(2);
    std::vector<Rotation> probes;
    for (int i = 0; i < 1000; ++i) probes.push_back(random_rotation(tape));
    const Exec exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(nearest_grid_distances(grid(2).rotations, probes, exec));
}
BENCHMARK(BM_NearestGridDistances)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_VoxelOccupancy(benchmark::State& state) {
    const BoxField box(Vec3::Zero(), Rotation::about_z(0.3), Vec3(0.05, 0.03, 0.04), Vec3(1, 0, 0));
    const RigidPose pose(Vec3::Zero(), Rotation::identity(), 0.4);
    const int s = static_cast<int>(state.range(1));
    const Exec exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(voxel_occupancy(box, pose, s, 0.5, exec));
}
BENCHMARK(BM_VoxelOccupancy)->ArgsProduct({{0, 1}, {24, 48}})->Unit(benchmark::kMillisecond);

void BM_GaussianAlpha(benchmark::State& state) {
    RandomTape tape = RandomTape::seeded(3);
    EmbeddingGrid e{NdArray<double>({96, 128, 5}), std::nullopt};
    for (double& v : e.data.values()) v = tape.normal();
    const std::vector<double> seed{1, 0, 0, 0, 0};
    const Exec exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(gaussian_alpha(e, seed, 0.5, exec));
}
BENCHMARK(BM_GaussianAlpha)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_RenderFrame(benchmark::State& state) {
    SceneManifest scene;
    scene.camera.width = 64;
    scene.camera.height = 48;
    scene.camera.fx = scene.camera.fy = 55;
    scene.camera.cx = 32;
    scene.camera.cy = 24;
    Primitive p;
    p.centre = Vec3(0, 0, 0.04);
    scene.primitives.push_back(p);
    const Exec exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(render_frame(scene, 0, exec));
}
BENCHMARK(BM_RenderFrame)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
