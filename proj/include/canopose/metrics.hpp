#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "canopose/ndarray.hpp"

namespace canopose {

/// Per-pixel instance labels: 0 is background, ids >= 1 need not be
/// contiguous. Pixels flagged in `ignore` are excluded from every score.
struct Labeling {
    NdArray<std::int32_t> labels;
    std::optional<std::vector<std::uint8_t>> ignore;

    std::size_t size() const { return labels.size(); }
    bool counted(std::size_t p) const { return !ignore || (*ignore)[p] == 0; }
};

struct SegScores {
    double ari_fg = 0;
    double msc_fg = 0;
    double miou_bg = 0;
};

/// Adjusted Rand index over truth-foreground pixels (predicted labels used
/// as-is, background included). Both partitions trivially equal gives 1.
double ari_fg(const Labeling& pred, const Labeling& truth);

/// Mean over truth instances of the best IoU with a predicted foreground
/// segment, both restricted to truth-foreground pixels.
double msc_fg(const Labeling& pred, const Labeling& truth);

/// IoU of predicted and true background (label 0). Empty union gives 1.
double miou_bg(const Labeling& pred, const Labeling& truth);

SegScores score(const Labeling& pred, const Labeling& truth);

/// Adjusted Rand index of two flat label vectors via the contingency table.
double adjusted_rand_index(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b);

}  // namespace canopose
