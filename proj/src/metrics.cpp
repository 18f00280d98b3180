#include "canopose/metrics.hpp"

#include <algorithm>
#include <map>

#include "canopose/error.hpp"

namespace canopose {

namespace {

using Int = __int128;

Int pairs(std::int64_t n) { return static_cast<Int>(n) * (n - 1) / 2; }

void require_same_shape(const Labeling& pred, const Labeling& truth) {
    if (pred.labels.shape() != truth.labels.shape()) {
        throw Error(ErrorKind::ShapeMismatch, "labelings differ in shape");
    }
}

bool counted(const Labeling& pred, const Labeling& truth, std::size_t p) {
    return pred.counted(p) && truth.counted(p);
}

struct Foreground {
    std::vector<std::int32_t> pred;
    std::vector<std::int32_t> truth;
};

Foreground foreground(const Labeling& pred, const Labeling& truth) {
    require_same_shape(pred, truth);
    Foreground fg;
    for (std::size_t p = 0; p < truth.size(); ++p) {
        if (!counted(pred, truth, p) || truth.labels[p] < 1) continue;
        fg.pred.push_back(pred.labels[p]);
        fg.truth.push_back(truth.labels[p]);
    }
    if (fg.truth.empty()) {
        throw Error(ErrorKind::NoForeground, "ground truth has no foreground pixels");
    }
    return fg;
}

}  // namespace

double adjusted_rand_index(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::DimMismatch, "label vectors differ in length");
    }
    std::map<std::pair<std::int32_t, std::int32_t>, std::int64_t> joint;
    std::map<std::int32_t, std::int64_t> rows;
    std::map<std::int32_t, std::int64_t> cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++joint[{a[i], b[i]}];
        ++rows[a[i]];
        ++cols[b[i]];
    }
    Int index = 0, sum_a = 0, sum_b = 0;
    for (const auto& [key, n] : joint) index += pairs(n);
    for (const auto& [key, n] : rows) sum_a += pairs(n);
    for (const auto& [key, n] : cols) sum_b += pairs(n);
    const Int total = pairs(static_cast<std::int64_t>(a.size()));
    // ARI = (index - sa*sb/total) / ((sa+sb)/2 - sa*sb/total), scaled by 2*total.
    const Int num = 2 * (total * index - sum_a * sum_b);
    const Int den = total * (sum_a + sum_b) - 2 * sum_a * sum_b;
    if (den == 0) return 1.0;
    return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

double ari_fg(const Labeling& pred, const Labeling& truth) {
    const Foreground fg = foreground(pred, truth);
    return adjusted_rand_index(fg.pred, fg.truth);
}

double msc_fg(const Labeling& pred, const Labeling& truth) {
    const Foreground fg = foreground(pred, truth);
    std::map<std::pair<std::int32_t, std::int32_t>, std::int64_t> inter;
    std::map<std::int32_t, std::int64_t> truth_area;
    std::map<std::int32_t, std::int64_t> pred_area;
    for (std::size_t i = 0; i < fg.truth.size(); ++i) {
        ++truth_area[fg.truth[i]];
        if (fg.pred[i] < 1) continue;
        ++pred_area[fg.pred[i]];
        ++inter[{fg.truth[i], fg.pred[i]}];
    }
    double sum = 0;
    for (const auto& [t, t_area] : truth_area) {
        double best = 0;
        for (const auto& [p, p_area] : pred_area) {
            const auto it = inter.find({t, p});
            if (it == inter.end()) continue;
            const double i = static_cast<double>(it->second);
            best = std::max(best, i / static_cast<double>(t_area + p_area - it->second));
        }
        sum += best;
    }
    return sum / static_cast<double>(truth_area.size());
}

double miou_bg(const Labeling& pred, const Labeling& truth) {
    require_same_shape(pred, truth);
    std::int64_t inter = 0, uni = 0;
    for (std::size_t p = 0; p < truth.size(); ++p) {
        if (!counted(pred, truth, p)) continue;
        const bool a = pred.labels[p] == 0;
        const bool b = truth.labels[p] == 0;
        inter += (a && b);
        uni += (a || b);
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

SegScores score(const Labeling& pred, const Labeling& truth) {
    return {ari_fg(pred, truth), msc_fg(pred, truth), miou_bg(pred, truth)};
}

}  // namespace canopose
