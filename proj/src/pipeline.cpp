#include "canopose/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "canopose/error.hpp"
#include "canopose/losses.hpp"
#include "canopose/radiance.hpp"
#include "canopose/tensor_file.hpp"

namespace canopose {

using nlohmann::ordered_json;

namespace {

std::string frame_name(int frame, const std::string& suffix) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "frame_%03d_%s", frame, suffix.c_str());
    return buf;
}

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

ordered_json mat_json(const Mat3& m) {
    ordered_json a = ordered_json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
    return a;
}

ordered_json scores_json(const SegScores& s) {
    return {{"ari_fg", s.ari_fg}, {"msc_fg", s.msc_fg}, {"miou_bg", s.miou_bg}};
}

ordered_json losses_json(const LossBreakdown& l) { return ordered_json::parse(to_json(l)); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
}

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

/// Majority ground-truth id (>= 1) among the pixels predicted as `label`.
std::optional<int> associate(const NdArray<std::int32_t>& pred, const NdArray<std::int32_t>& truth,
                             std::int32_t label) {
    std::map<std::int32_t, std::size_t> votes;
    for (std::size_t p = 0; p < pred.size(); ++p) {
        if (pred[p] == label && truth[p] >= 1) ++votes[truth[p]];
    }
    std::optional<int> best;
    std::size_t best_count = 0;
    for (const auto& [id, count] : votes) {
        if (count > best_count) {
            best_count = count;
            best = id;
        }
    }
    return best;
}

const Primitive* find_primitive(const SceneManifest& m, int id) {
    for (const Primitive& p : m.primitives)
        if (p.id == id) return &p;
    return nullptr;
}

struct PixelLoss {
    double colour = 0;
    double depth = 0;
};

class EmptyField final : public ComponentField {
public:
    FieldSample evaluate(const Vec3&, const Vec3&) const override { return {}; }
};

}  // namespace

NdArray<std::int32_t> argmax_labels(const MaskState& state) {
    const std::size_t h = state.height();
    const std::size_t w = state.width();
    const std::size_t special = state.pre_scope.dim(0) - 1;
    NdArray<std::int32_t> out({h, w}, 0);
    for (std::size_t p = 0; p < h * w; ++p) {
        double best = -1;
        std::int32_t label = 0;
        for (std::size_t c = 0; c < special; ++c) {
            if (state.pre_scope.slab(c)[p] > best) {
                best = state.pre_scope.slab(c)[p];
                label = 0;
            }
        }
        for (std::size_t k = 0; k < state.capacity; ++k) {
            if (state.masks.slab(k)[p] > best) {
                best = state.masks.slab(k)[p];
                label = static_cast<std::int32_t>(k + 1);
            }
        }
        if (state.remaining_scope[p] > best) label = 0;
        out[p] = label;
    }
    return out;
}

PipelineReport run_pipeline(const std::filesystem::path& manifest_path,
                            const std::filesystem::path& out, const PipelineOptions& options) {
    SceneManifest scene = load_manifest(manifest_path);
    Hyperparameters hp = scene.hyper;
    if (options.grid_level) hp.grid_level = *options.grid_level;
    if (options.seed) hp.seed = *options.seed;
    hp.validate();
    if (scene.frame_files.empty()) {
        throw Error(ErrorKind::InvalidArgument, "manifest lists no frames; run gen-scene first");
    }
    int frame_count = static_cast<int>(scene.frame_files.size());
    if (options.frames) {
        if (*options.frames < 1) throw Error(ErrorKind::InvalidArgument, "frames must be at least 1");
        frame_count = std::min(frame_count, *options.frames);
    }
    std::filesystem::create_directories(out);

    const RotationGrid grid = generate_grid(hp.grid_level);
    const auto slots = static_cast<std::size_t>(hp.slots);
    const DecomposeOptions sbp{slots, hp.kernel_bandwidth, options.exec};
    RandomTape tape = RandomTape::seeded(hp.seed);
    TrackState track;
    track.slots.resize(slots);

    PipelineReport report;
    report.voxel_pitch = hp.box_size / hp.voxels;
    std::ostringstream csv;
    csv << "frame,slot,tx,ty,tz,r00,r01,r02,r10,r11,r12,r20,r21,r22,volume,idle\n";
    ordered_json summary_frames = ordered_json::array();

    for (int t = 0; t < frame_count; ++t) {
        const FrameFiles& files = scene.frame_files[static_cast<std::size_t>(t)];
        const CameraModel cam = files.camera.model();
        const NdArray<double> rgb = read_real_tensor(scene.root / files.rgb);
        const NdArray<double> depth = read_real_tensor(scene.root / files.depth);
        const NdArray<std::int32_t> truth_labels = read_int_tensor(scene.root / files.labels);
        EmbeddingGrid embeddings{read_real_tensor(scene.root / files.embeddings), std::nullopt};
        const NdArray<double> pre_logits = read_real_tensor(scene.root / files.prescope_logits);
        if (embeddings.data.ndim() != 3 || embeddings.height() != cam.height() ||
            embeddings.width() != cam.width()) {
            throw Error(ErrorKind::ShapeMismatch, "frame " + std::to_string(t) + ": embeddings do not match the image");
        }
        const Backprojection bp = backproject(depth, rgb, cam);

        std::optional<std::vector<std::optional<ClusterSeed>>> seeds_in;
        if (t > 0) {
            seeds_in.emplace();
            for (const SlotTrack& s : track.slots) seeds_in->push_back(s.idle ? std::nullopt : s.seed);
        }
        const MaskState state = decompose_frame(embeddings, pre_logits, tape, sbp, seeds_in);
        if (t == 0) {
            for (std::size_t k = 0; k < slots; ++k) {
                track.slots[k].seed = state.seeds[k];
                track.slots[k].idle = state.idle[k];
            }
        }
        const NdArray<std::int32_t> pred_labels = argmax_labels(state);
        const Labeling pred{pred_labels, std::nullopt};
        const Labeling truth{truth_labels, std::nullopt};

        FrameResult fr;
        fr.frame = t;
        fr.scores = score(pred, truth);

        std::vector<std::shared_ptr<const ComponentField>> slot_fields(slots, std::make_shared<EmptyField>());
        std::vector<Vec3> t_hat(slots, Vec3::Zero());
        std::vector<Vec3> t_shape(slots, Vec3::Zero());
        std::vector<bool> supervised(slots, false);

        for (std::size_t k = 0; k < slots; ++k) {
            SlotTrack& st = track.slots[k];
            SlotResult sr;
            sr.slot = k;
            sr.idle = st.idle;
            if (st.idle) {
                st.history.emplace_back();
                fr.slots.push_back(sr);
                continue;
            }
            const auto label = static_cast<std::int32_t>(k + 1);
            std::vector<Vec3> pts;
            for (std::size_t i = 0; i < bp.pixels.size(); ++i) {
                if (pred_labels[bp.pixels[i]] == label && bp.cloud.points[i].z() >= scene.ground_height) {
                    pts.push_back(bp.cloud.points[i]);
                }
            }
            sr.points = pts.size();
            RigidPose pose;
            if (static_cast<int>(pts.size()) >= hp.n_thresh && !pts.empty()) {
                sr.pose = canonical_pose(pts, grid, hp.beta, hp.box_size, options.exec);
                pose = sr.pose->pose;
            } else if (st.last_translation) {
                sr.fallback = true;
                pose = RigidPose(*st.last_translation, Rotation::identity(), hp.box_size);
                CanonicalPoseResult fallback;
                fallback.pose = pose;
                fallback.candidate_count = 0;
                sr.pose = fallback;
            } else {
                st.history.emplace_back();
                fr.slots.push_back(sr);
                continue;
            }
            sr.active = true;
            st.last_translation = pose.translation();
            st.history.push_back(pose);
            t_hat[k] = pose.translation();

            sr.primitive = associate(pred_labels, truth_labels, label);
            if (sr.primitive) {
                const Primitive* prim = find_primitive(scene, *sr.primitive);
                if (prim) {
                    slot_fields[k] = prim->field_at(t, scene.sharpness);
                    const VoxelShape shape = voxel_occupancy(*slot_fields[k], pose, hp.voxels, hp.sigma_t, options.exec);
                    sr.occupied_voxels = shape.occupied_count();
                    std::ostringstream pts_txt;
                    for (const Vec3& p : occupied_world_points(shape, pose)) {
                        pts_txt << fixed(p.x()) << ' ' << fixed(p.y()) << ' ' << fixed(p.z()) << '\n';
                    }
                    write_text(out / frame_name(t, "slot_" + std::to_string(k) + "_voxels.txt"), pts_txt.str());
                    if (sr.occupied_voxels > 0) {
                        const CanonicalPoseResult sp = shape_pose_from_voxels(
                            shape, pose, grid, hp.beta, options.exec, scene.ground_height);
                        sr.shape_centre = sp.pose.translation();
                        sr.shape_rotation = sp.pose.rotation();
                        sr.centre_error = (sp.pose.translation() - prim->centre_at(t)).norm();
                        t_shape[k] = sp.pose.translation();
                        supervised[k] = true;
                        report.max_centre_error = std::max(report.max_centre_error, *sr.centre_error);
                    }
                }
            }
            const Mat3& r = pose.rotation().matrix();
            csv << t << ',' << k;
            const Vec3 tr = pose.translation();
            for (int i = 0; i < 3; ++i) csv << ',' << fixed(tr[i]);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) csv << ',' << fixed(r(i, j));
            csv << ',' << fixed(sr.pose->min_volume) << ",0\n";
            fr.slots.push_back(sr);
        }

        // Loss terms over valid surface pixels; ray draws are taken in pixel
        // order before the parallel evaluation so results match serial runs.
        std::vector<std::shared_ptr<const ComponentField>> parts;
        parts.push_back(std::make_shared<HalfSpaceField>(scene.ground_height, scene.ground_colour, scene.sharpness));
        for (auto& f : slot_fields) parts.push_back(f);
        const ComposedField composed(parts, hp.sigma_max);
        const std::size_t comps = parts.size();

        RandomTape ray_tape = RandomTape::seeded(hp.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(t + 1)));
        std::vector<std::size_t> pix;
        std::vector<RaySamples> rays;
        const std::size_t w = cam.width();
        for (std::size_t p = 0; p < depth.size(); ++p) {
            if (!(depth[p] > hp.near)) continue;
            pix.push_back(p);
            rays.push_back(sample_ray_points(cam, static_cast<double>(p % w), static_cast<double>(p / w),
                                             depth[p], hp.delta, hp.near, ray_tape));
        }
        const std::size_t n = pix.size();
        SurfaceEvaluations eval{NdArray<double>({comps, n}), NdArray<double>({comps, n, 3}),
                                NdArray<double>({comps, n}), NdArray<double>({n, 3})};
        std::vector<PixelLoss> per_pixel(n);
        const std::size_t special = state.pre_scope.dim(0) - 1;
        auto eval_pixel = [&](std::int64_t i) {
            const std::size_t p = pix[i];
            const RaySamples& ray = rays[i];
            const Vec3 dir = (ray.surface - cam.centre()).normalized();
            const ComposedSample surf = composed.evaluate(ray.surface, dir);
            const ComposedSample air = composed.evaluate(ray.air, dir);
            const Vec3 obs(rgb[p * 3], rgb[p * 3 + 1], rgb[p * 3 + 2]);
            per_pixel[i].colour = colour_loss(obs, surf.colours, surf.density.sigma_hat, hp.sigma_std, hp.sigma_max);
            per_pixel[i].depth = depth_loss(surf.density.sigma, air.density.sigma, ray.rho_air);
            double bg_mask = 0;
            for (std::size_t c = 0; c < special; ++c) bg_mask += state.pre_scope.slab(c)[p];
            for (std::size_t k = 0; k < comps; ++k) {
                eval.masks.at(k, i) = k == 0 ? bg_mask : state.masks.slab(k - 1)[p];
                eval.sigma_hat.at(k, i) = surf.density.sigma_hat[k];
                for (int c = 0; c < 3; ++c) eval.colours.at(k, i, c) = surf.colours[k][c];
            }
            for (int c = 0; c < 3; ++c) eval.observed.at(i, c) = obs[c];
        };
        const auto n64 = static_cast<std::int64_t>(n);
        if (options.exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < n64; ++i) eval_pixel(i);
        } else {
            for (std::int64_t i = 0; i < n64; ++i) eval_pixel(i);
        }
        double colour_sum = 0, depth_sum = 0;
        for (const PixelLoss& l : per_pixel) {
            colour_sum += l.colour;
            depth_sum += l.depth;
        }
        fr.losses = total_loss(colour_sum, depth_sum, 0.0, where_loss(t_hat, t_shape, supervised),
                               attention_loss(eval, hp.sigma_std, hp.sigma_max),
                               scope_loss(state.remaining_scope));
        ++track.frames_processed;

        // Artefacts.
        write_real_tensor(out / frame_name(t, "masks.cnpt"), state.masks);
        write_real_tensor(out / frame_name(t, "remaining_scope.cnpt"), state.remaining_scope);
        NdArray<std::uint8_t> viz({cam.height(), cam.width()});
        for (std::size_t p = 0; p < viz.size(); ++p) viz[p] = static_cast<std::uint8_t>(pred_labels[p]);
        write_tensor_file(out / frame_name(t, "argmax.cnpt"), viz);
        {
            std::ostringstream pgm;
            pgm << "P5\n" << cam.width() << ' ' << cam.height() << "\n255\n";
            const int scale = 255 / std::max(1, hp.slots);
            for (std::size_t p = 0; p < viz.size(); ++p) pgm.put(static_cast<char>(viz[p] * scale));
            write_text(out / frame_name(t, "argmax.pgm"), pgm.str());
        }

        ordered_json fj;
        fj["frame"] = t;
        fj["scores"] = scores_json(fr.scores);
        fj["losses"] = losses_json(fr.losses);
        ordered_json slot_list = ordered_json::array();
        for (const SlotResult& sr : fr.slots) {
            ordered_json sj;
            sj["slot"] = sr.slot;
            sj["idle"] = sr.idle;
            sj["active"] = sr.active;
            sj["fallback"] = sr.fallback;
            sj["points"] = sr.points;
            if (sr.pose) {
                sj["translation"] = vec_json(sr.pose->pose.translation());
                sj["rotation"] = mat_json(sr.pose->pose.rotation().matrix());
                sj["volume"] = sr.pose->min_volume;
                sj["candidates"] = sr.pose->candidate_count;
            }
            sj["primitive"] = sr.primitive ? ordered_json(*sr.primitive) : ordered_json(nullptr);
            sj["occupied_voxels"] = sr.occupied_voxels;
            if (sr.shape_centre) {
                sj["shape_centre"] = vec_json(*sr.shape_centre);
                sj["shape_rotation"] = mat_json(sr.shape_rotation->matrix());
                sj["centre_error"] = *sr.centre_error;
            }
            slot_list.push_back(sj);
        }
        fj["slots"] = slot_list;
        write_text(out / frame_name(t, "report.json"), fj.dump(2) + "\n");
        summary_frames.push_back({{"frame", t}, {"scores", fj["scores"]}, {"losses", fj["losses"]}});
        report.frames.push_back(std::move(fr));
    }

    for (const FrameResult& fr : report.frames) {
        report.mean.ari_fg += fr.scores.ari_fg;
        report.mean.msc_fg += fr.scores.msc_fg;
        report.mean.miou_bg += fr.scores.miou_bg;
    }
    const auto nf = static_cast<double>(report.frames.size());
    report.mean.ari_fg /= nf;
    report.mean.msc_fg /= nf;
    report.mean.miou_bg /= nf;

    write_text(out / "poses.csv", csv.str());
    ordered_json summary;
    summary["manifest"] = manifest_path.filename().string();
    summary["frames_processed"] = report.frames.size();
    summary["grid_level"] = hp.grid_level;
    summary["seed"] = hp.seed;
    summary["mean"] = scores_json(report.mean);
    summary["max_centre_error"] = report.max_centre_error;
    summary["voxel_pitch"] = report.voxel_pitch;
    summary["frames"] = summary_frames;
    write_text(out / "summary.json", summary.dump(2) + "\n");
    return report;
}

std::string format_two_decimals(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

AggregateReport report_metrics(const std::vector<std::filesystem::path>& run_dirs) {
    if (run_dirs.empty()) {
        throw Error(ErrorKind::InvalidArgument, "need at least one completed run");
    }
    std::vector<SegScores> runs;
    for (const auto& dir : run_dirs) {
        std::ifstream in(dir / "summary.json");
        if (!in) throw Error(ErrorKind::InvalidArgument, "no summary.json in " + dir.string());
        const auto j = nlohmann::json::parse(in);
        const auto& m = j.at("mean");
        runs.push_back({m.at("ari_fg").get<double>(), m.at("msc_fg").get<double>(),
                        m.at("miou_bg").get<double>()});
    }
    auto aggregate = [&](double SegScores::*field) {
        MetricAggregate a;
        for (const SegScores& s : runs) a.mean += s.*field;
        a.mean /= static_cast<double>(runs.size());
        double var = 0;
        for (const SegScores& s : runs) var += (s.*field - a.mean) * (s.*field - a.mean);
        a.std = std::sqrt(var / static_cast<double>(runs.size()));
        return a;
    };
    AggregateReport rep;
    rep.runs = runs.size();
    rep.ari_fg = aggregate(&SegScores::ari_fg);
    rep.msc_fg = aggregate(&SegScores::msc_fg);
    rep.miou_bg = aggregate(&SegScores::miou_bg);
    auto agg_json = [](const MetricAggregate& a) { return ordered_json{{"mean", a.mean}, {"std", a.std}}; };
    rep.json["runs"] = rep.runs;
    rep.json["ari_fg"] = agg_json(rep.ari_fg);
    rep.json["msc_fg"] = agg_json(rep.msc_fg);
    rep.json["miou_bg"] = agg_json(rep.miou_bg);
    std::ostringstream table;
    table << "metric   mean ± std\n";
    auto row = [&](const char* name, const MetricAggregate& a) {
        table << name << "  " << format_two_decimals(a.mean) << " ± " << format_two_decimals(a.std) << '\n';
    };
    row("ARI-FG ", rep.ari_fg);
    row("MSC-FG ", rep.msc_fg);
    row("mIoU-BG", rep.miou_bg);
    rep.table = table.str();
    return rep;
}

}  // namespace canopose
