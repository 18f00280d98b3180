#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "canopose/geometry.hpp"
#include "canopose/random_tape.hpp"

namespace canopose::testing {

inline double uniform(RandomTape& tape, double lo, double hi) { return lo + (hi - lo) * tape.next(); }

/// Corners of an axis-aligned box plus uniformly spread interior points.
inline std::vector<Vec3> box_cloud(const Vec3& extent, std::size_t interior, RandomTape& tape) {
    std::vector<Vec3> pts;
    for (int c = 0; c < 8; ++c) {
        pts.emplace_back((c & 1 ? 0.5 : -0.5) * extent.x(), (c & 2 ? 0.5 : -0.5) * extent.y(),
                         (c & 4 ? 0.5 : -0.5) * extent.z());
    }
    for (std::size_t i = 0; i < interior; ++i) {
        pts.emplace_back(uniform(tape, -0.5, 0.5) * extent.x(), uniform(tape, -0.5, 0.5) * extent.y(),
                         uniform(tape, -0.5, 0.5) * extent.z());
    }
    return pts;
}

inline std::vector<Vec3> transformed(const std::vector<Vec3>& pts, const Rotation& r, const Vec3& t) {
    std::vector<Vec3> out;
    out.reserve(pts.size());
    for (const Vec3& p : pts) out.push_back(r.apply(p) + t);
    return out;
}

/// Fresh scratch directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("canopose_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::FILE* f = std::fopen(p.string().c_str(), "rb");
    if (!f) return {};
    std::string s;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) s.append(buf, n);
    std::fclose(f);
    return s;
}

}  // namespace canopose::testing
