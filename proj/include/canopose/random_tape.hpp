#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace canopose {

/// Source of uniform draws in [0, 1]. Either replays a fixed sequence
/// (tests inject exact draws) or wraps a seeded 64-bit Mersenne twister.
/// Draw conversion is done by hand so sequences are identical across
/// standard library implementations.
class RandomTape {
public:
    explicit RandomTape(std::vector<double> values);
    static RandomTape seeded(std::uint64_t seed);

    /// Next draw. Throws InvalidArgument when a fixed tape is exhausted.
    double next();
    /// Standard normal via Box-Muller on two draws.
    double normal();

    std::size_t consumed() const noexcept { return cursor_; }
    bool is_fixed() const noexcept { return !engine_.has_value(); }

private:
    RandomTape() = default;

    std::vector<double> values_;
    std::size_t cursor_ = 0;
    std::optional<std::mt19937_64> engine_;
};

}  // namespace canopose
