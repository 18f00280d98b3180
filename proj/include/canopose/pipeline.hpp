#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "canopose/canonical_pose.hpp"
#include "canopose/icsbp.hpp"
#include "canopose/losses.hpp"
#include "canopose/metrics.hpp"
#include "canopose/scene.hpp"

namespace canopose {

/// Per-slot memory carried across frames.
struct SlotTrack {
    std::optional<ClusterSeed> seed;
    bool idle = false;
    std::optional<Vec3> last_translation;          // T_hat of the latest active frame
    std::vector<std::optional<RigidPose>> history;  // one entry per processed frame
};

struct TrackState {
    std::vector<SlotTrack> slots;
    std::size_t frames_processed = 0;
};

struct SlotResult {
    std::size_t slot = 0;
    bool idle = false;
    bool active = false;
    bool fallback = false;       // pose taken from the previous frame
    std::size_t points = 0;
    std::optional<CanonicalPoseResult> pose;
    std::optional<int> primitive;        // associated ground-truth primitive id
    std::optional<Vec3> shape_centre;    // T^shape
    std::optional<Rotation> shape_rotation;
    std::optional<double> centre_error;  // |T^shape - true centre|
    std::size_t occupied_voxels = 0;
};

struct FrameResult {
    int frame = 0;
    SegScores scores;
    LossBreakdown losses;
    std::vector<SlotResult> slots;
};

struct PipelineOptions {
    std::optional<int> frames;        // process at most this many frames
    std::optional<int> grid_level;    // overrides the manifest
    std::optional<std::uint64_t> seed;
    Exec exec = Exec::Parallel;
};

struct PipelineReport {
    std::vector<FrameResult> frames;
    SegScores mean;
    double max_centre_error = 0;
    double voxel_pitch = 0;
};

/// Per-pixel label from the argmax over [special channels, slot masks,
/// remaining scope]; special channels and the remaining scope map to 0 and
/// slot k to k + 1.
NdArray<std::int32_t> argmax_labels(const MaskState& state);

/// Runs the whole per-frame pipeline on a generated scene and writes reports,
/// masks, pose CSV and voxel point lists into `out`.
PipelineReport run_pipeline(const std::filesystem::path& manifest_path,
                            const std::filesystem::path& out, const PipelineOptions& options = {});

struct MetricAggregate {
    double mean = 0;
    double std = 0;
};

struct AggregateReport {
    std::size_t runs = 0;
    MetricAggregate ari_fg, msc_fg, miou_bg;
    nlohmann::ordered_json json;
    std::string table;
};

/// Mean and population standard deviation of each run's mean scores.
AggregateReport report_metrics(const std::vector<std::filesystem::path>& run_dirs);

/// Two-decimal rendering used by the human-readable table.
std::string format_two_decimals(double v);

}  // namespace canopose
