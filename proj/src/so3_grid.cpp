#include "canopose/so3_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "canopose/error.hpp"

namespace canopose {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t isqrt(std::uint64_t v) {
    auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(v)));
    while (r * r > v) --r;
    while ((r + 1) * (r + 1) <= v) ++r;
    return r;
}

double max_trace(const Mat3& probe, const std::vector<Rotation>& grid) {
    double best = -std::numeric_limits<double>::infinity();
    for (const Rotation& g : grid) {
        best = std::max(best, probe.cwiseProduct(g.matrix()).sum());
    }
    return best;
}

double trace_to_angle(double tr) { return std::acos(std::clamp((tr - 1.0) / 2.0, -1.0, 1.0)); }

}  // namespace

std::size_t grid_size(int level) {
    return 72u * (std::size_t{1} << (3 * level));
}

std::vector<std::pair<double, double>> healpix_centres(std::uint32_t nside) {
    const std::uint64_t ns = nside;
    const std::uint64_t npix = 12 * ns * ns;
    const std::uint64_t ncap = 2 * ns * (ns - 1);
    const double fact2 = 4.0 / static_cast<double>(npix);
    const double fact1 = static_cast<double>(2 * ns) * fact2;

    std::vector<std::pair<double, double>> out;
    out.reserve(npix);
    for (std::uint64_t pix = 0; pix < npix; ++pix) {
        double z = 0;
        double phi = 0;
        if (pix < ncap) {  // north polar cap
            const std::uint64_t iring = (1 + isqrt(1 + 2 * pix)) >> 1;
            const std::uint64_t iphi = pix + 1 - 2 * iring * (iring - 1);
            z = 1.0 - static_cast<double>(iring * iring) * fact2;
            phi = (static_cast<double>(iphi) - 0.5) * (kPi / 2.0) / static_cast<double>(iring);
        } else if (pix < npix - ncap) {  // equatorial belt
            const std::uint64_t ip = pix - ncap;
            const std::uint64_t iring = ip / (4 * ns) + ns;
            const std::uint64_t iphi = ip % (4 * ns) + 1;
            const double fodd = ((iring + ns) & 1) ? 1.0 : 0.5;
            z = static_cast<double>(static_cast<std::int64_t>(2 * ns) -
                                    static_cast<std::int64_t>(iring)) * fact1;
            phi = (static_cast<double>(iphi) - fodd) * kPi / static_cast<double>(2 * ns);
        } else {  // south polar cap
            const std::uint64_t ip = npix - pix;
            const std::uint64_t iring = (1 + isqrt(2 * ip - 1)) >> 1;
            const std::uint64_t iphi = 4 * iring + 1 - (ip - 2 * iring * (iring - 1));
            z = -1.0 + static_cast<double>(iring * iring) * fact2;
            phi = (static_cast<double>(iphi) - 0.5) * (kPi / 2.0) / static_cast<double>(iring);
        }
        out.emplace_back(std::acos(std::clamp(z, -1.0, 1.0)), phi);
    }
    return out;
}

RotationGrid generate_grid(int level) {
    if (level < 0 || level > kMaxGridLevel) {
        throw Error(ErrorKind::LevelOutOfRange, "grid level must be in [0, 3]");
    }
    const auto nside = std::uint32_t{1} << level;
    const auto sphere = healpix_centres(nside);
    const std::size_t circle = 6u << level;
    const double step = 2.0 * kPi / static_cast<double>(circle);

    std::vector<Rotation> raw;
    raw.reserve(sphere.size() * circle);
    for (const auto& [theta, phi] : sphere) {
        for (std::size_t j = 0; j < circle; ++j) {
            const double psi = (static_cast<double>(j) + 0.5) * step;
            Eigen::Quaterniond q(std::cos(theta / 2) * std::cos(psi / 2),
                                 std::cos(theta / 2) * std::sin(psi / 2),
                                 std::sin(theta / 2) * std::cos(phi + psi / 2),
                                 std::sin(theta / 2) * std::sin(phi + psi / 2));
            if (q.w() < 0) q.coeffs() = -q.coeffs();
            raw.push_back(Rotation::from_quaternion(q));
        }
    }

    std::size_t anchor = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double d = angle_to_identity(raw[i].matrix());
        if (d < best) {
            best = d;
            anchor = i;
        }
    }
    const Rotation shift = raw[anchor].inverse();

    RotationGrid grid;
    grid.level = level;
    grid.rotations.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        grid.rotations.push_back(i == anchor ? Rotation::identity() : shift * raw[i]);
    }
    return grid;
}

Rotation random_rotation(RandomTape& tape) {
    const double u1 = tape.next();
    const double u2 = tape.next();
    const double u3 = tape.next();
    const double a = std::sqrt(1.0 - u1);
    const double b = std::sqrt(u1);
    Eigen::Quaterniond q(a * std::sin(2 * kPi * u2), a * std::cos(2 * kPi * u2),
                         b * std::sin(2 * kPi * u3), b * std::cos(2 * kPi * u3));
    return Rotation::from_quaternion(q);
}

std::vector<double> nearest_grid_distances(const std::vector<Rotation>& grid,
                                           const std::vector<Rotation>& probes, Exec exec) {
    std::vector<double> out(probes.size());
    const auto n = static_cast<std::int64_t>(probes.size());
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            out[i] = trace_to_angle(max_trace(probes[i].matrix(), grid));
        }
    } else {
        for (std::int64_t i = 0; i < n; ++i) {
            out[i] = trace_to_angle(max_trace(probes[i].matrix(), grid));
        }
    }
    return out;
}

std::size_t nearest_grid_index(const std::vector<Rotation>& grid, const Rotation& r) {
    std::size_t best = 0;
    double best_tr = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double tr = r.matrix().cwiseProduct(grid[i].matrix()).sum();
        if (tr > best_tr) {
            best_tr = tr;
            best = i;
        }
    }
    return best;
}

double grid_resolution(const RotationGrid& grid, int probes, std::uint64_t seed, Exec exec) {
    if (probes < 1) {
        throw Error(ErrorKind::InvalidArgument, "probes must be at least 1");
    }
    if (grid.rotations.empty()) {
        throw Error(ErrorKind::InvalidArgument, "empty rotation grid");
    }
    RandomTape tape = RandomTape::seeded(seed);
    std::vector<Rotation> samples;
    samples.reserve(static_cast<std::size_t>(probes));
    for (int i = 0; i < probes; ++i) samples.push_back(random_rotation(tape));
    const auto d = nearest_grid_distances(grid.rotations, samples, exec);
    return *std::max_element(d.begin(), d.end());
}

}  // namespace canopose
