#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "canopose/geometry.hpp"
#include "canopose/parallel.hpp"
#include "canopose/random_tape.hpp"

namespace canopose {

inline constexpr int kMaxGridLevel = 3;

struct RotationGrid {
    int level = 0;
    std::vector<Rotation> rotations;
    /// Covering radius in radians; NaN until measured with grid_resolution.
    double resolution = std::numeric_limits<double>::quiet_NaN();

    std::size_t size() const noexcept { return rotations.size(); }
};

/// Number of rotations at a refinement level: 72 * 8^level.
std::size_t grid_size(int level);

/// HEALPix pixel centres (ring scheme) as (theta, phi) pairs, 12 * nside^2 of them.
std::vector<std::pair<double, double>> healpix_centres(std::uint32_t nside);

/// Equivolumetric SO(3) grid from HEALPix sphere centres crossed with evenly
/// spaced circle angles through the Hopf fibration. The raw set is then
/// left-translated so its member nearest the identity becomes exactly I;
/// left translation is an isometry, so cell volumes are unchanged.
RotationGrid generate_grid(int level);

/// Uniform (Haar) random rotation from three tape draws.
Rotation random_rotation(RandomTape& tape);

/// For each probe, the geodesic distance to its nearest grid rotation.
std::vector<double> nearest_grid_distances(const std::vector<Rotation>& grid,
                                           const std::vector<Rotation>& probes,
                                           Exec exec = Exec::Parallel);

/// Index of the grid rotation nearest to `r` (lowest index on ties).
std::size_t nearest_grid_index(const std::vector<Rotation>& grid, const Rotation& r);

/// Max over `probes` uniform random rotations of the distance to the grid.
double grid_resolution(const RotationGrid& grid, int probes, std::uint64_t seed,
                       Exec exec = Exec::Parallel);

}  // namespace canopose
