#include "canopose/random_tape.hpp"

#include <cmath>
#include <numbers>

#include "canopose/error.hpp"

namespace canopose {

RandomTape::RandomTape(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw Error(ErrorKind::InvalidArgument, "tape values must lie in [0, 1]");
        }
    }
}

RandomTape RandomTape::seeded(std::uint64_t seed) {
    RandomTape tape;
    tape.engine_.emplace(seed);
    return tape;
}

double RandomTape::next() {
    if (engine_) {
        ++cursor_;
        return static_cast<double>((*engine_)() >> 11) * 0x1.0p-53;
    }
    if (cursor_ >= values_.size()) {
        throw Error(ErrorKind::InvalidArgument, "random tape exhausted");
    }
    return values_[cursor_++];
}

double RandomTape::normal() {
    const double u1 = next();
    const double u2 = next();
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace canopose
