#include "canopose/icsbp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "canopose/error.hpp"

namespace canopose {

namespace {

double kernel_at(const double* z, const std::vector<double>& seed, double inv_two_var) {
    double d2 = 0;
    for (std::size_t c = 0; c < seed.size(); ++c) {
        const double diff = z[c] - seed[c];
        d2 += diff * diff;
    }
    return std::exp(-d2 * inv_two_var);
}

void require_plane(const NdArray<double>& a, std::size_t h, std::size_t w, const char* what) {
    if (a.ndim() != 2 || a.dim(0) != h || a.dim(1) != w) {
        throw Error(ErrorKind::ShapeMismatch, what);
    }
}

}  // namespace

MaskState MaskState::start(NdArray<double> pre_scope, std::size_t slots) {
    if (pre_scope.ndim() != 3 || pre_scope.dim(0) < 2) {
        throw Error(ErrorKind::ShapeMismatch, "pre-scope must be K' x H x W with K' >= 2");
    }
    if (slots < 1) {
        throw Error(ErrorKind::InvalidArgument, "need at least one slot");
    }
    const std::size_t kp = pre_scope.dim(0);
    const std::size_t h = pre_scope.dim(1);
    const std::size_t w = pre_scope.dim(2);
    MaskState s;
    s.capacity = slots;
    s.masks = NdArray<double>({slots, h, w}, 0.0);
    s.scope = NdArray<double>({h, w});
    const auto last = pre_scope.slab(kp - 1);
    std::copy(last.begin(), last.end(), s.scope.data());
    s.pre_scope = std::move(pre_scope);
    s.seeds.assign(slots, std::nullopt);
    s.idle.assign(slots, false);
    s.remaining_scope = s.scope;
    return s;
}

PreScope pre_scope(const NdArray<double>& logits) {
    if (logits.ndim() != 3 || logits.dim(2) < 2) {
        throw Error(ErrorKind::ShapeMismatch, "pre-scope logits must be H x W x K' with K' >= 2");
    }
    const std::size_t h = logits.dim(0);
    const std::size_t w = logits.dim(1);
    const std::size_t kp = logits.dim(2);
    PreScope out;
    out.all = NdArray<double>({kp, h, w});
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < kp; ++c) mx = std::max(mx, logits.at(i, j, c));
            double sum = 0;
            for (std::size_t c = 0; c < kp; ++c) sum += std::exp(logits.at(i, j, c) - mx);
            for (std::size_t c = 0; c < kp; ++c) {
                out.all.at(c, i, j) = std::exp(logits.at(i, j, c) - mx) / sum;
            }
        }
    }
    out.special = NdArray<double>({kp - 1, h, w});
    std::copy(out.all.data(), out.all.data() + (kp - 1) * h * w, out.special.data());
    out.scope = NdArray<double>({h, w});
    const auto last = out.all.slab(kp - 1);
    std::copy(last.begin(), last.end(), out.scope.data());
    return out;
}

NdArray<double> gaussian_alpha(const EmbeddingGrid& embeddings, const std::vector<double>& seed,
                               double sigma, Exec exec) {
    if (!(sigma > 0)) {
        throw Error(ErrorKind::InvalidArgument, "kernel bandwidth must be positive");
    }
    if (seed.size() != embeddings.channels()) {
        throw Error(ErrorKind::DimMismatch, "seed length differs from embedding channels");
    }
    const std::size_t dc = embeddings.channels();
    NdArray<double> alpha({embeddings.height(), embeddings.width()});
    const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
    const auto n = static_cast<std::int64_t>(embeddings.pixels());
    const double* z = embeddings.data.data();
    double* out = alpha.data();
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t p = 0; p < n; ++p) out[p] = kernel_at(z + p * dc, seed, inv_two_var);
    } else {
        for (std::int64_t p = 0; p < n; ++p) out[p] = kernel_at(z + p * dc, seed, inv_two_var);
    }
    return alpha;
}

MaskState sbp_step(MaskState state, const NdArray<double>& alpha) {
    if (state.steps >= state.capacity) {
        throw Error(ErrorKind::CapacityExceeded, "all slots already used");
    }
    require_plane(alpha, state.height(), state.width(), "alpha mask does not match scope");
    auto mask = state.masks.slab(state.steps);
    for (std::size_t p = 0; p < state.scope.size(); ++p) {
        const double s = state.scope[p];
        mask[p] = s * alpha[p];
        state.scope[p] = s * (1.0 - alpha[p]);
    }
    ++state.steps;
    state.remaining_scope = state.scope;
    return state;
}

SeedChoice select_seed(const MaskState& state, const EmbeddingGrid& embeddings, RandomTape& tape) {
    const std::size_t h = state.height();
    const std::size_t w = state.width();
    if (embeddings.height() != h || embeddings.width() != w) {
        throw Error(ErrorKind::ShapeMismatch, "embeddings do not match scope");
    }
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t p = 0; p < h * w; ++p) {
        const double score = state.scope[p] * tape.next();
        if (score > best_score) {
            best_score = score;
            best = p;
        }
    }
    SeedChoice choice;
    choice.row = best / w;
    choice.col = best % w;
    const std::size_t dc = embeddings.channels();
    const double* z = embeddings.data.data() + best * dc;
    choice.embedding.assign(z, z + dc);
    return choice;
}

bool check_termination(const MaskState& state, RandomTape& tape) {
    bool any = false;
    for (std::size_t p = 0; p < state.scope.size(); ++p) {
        const double prob = state.scope[p];
        const double u = tape.next();
        if (prob >= 1.0 || u < prob) any = true;
    }
    return !any;
}

MaskState decompose_frame(const EmbeddingGrid& embeddings, const NdArray<double>& pre_scope_logits,
                          RandomTape& tape, const DecomposeOptions& options,
                          const std::optional<std::vector<std::optional<ClusterSeed>>>& seeds_in) {
    if (options.slots < 1) {
        throw Error(ErrorKind::InvalidArgument, "need at least one slot");
    }
    if (pre_scope_logits.ndim() != 3 || pre_scope_logits.dim(0) != embeddings.height() ||
        pre_scope_logits.dim(1) != embeddings.width()) {
        throw Error(ErrorKind::ShapeMismatch, "pre-scope logits do not match embeddings");
    }
    MaskState state = MaskState::start(pre_scope(pre_scope_logits).all, options.slots);
    const std::size_t slots = options.slots;
    const NdArray<double> no_alpha({state.height(), state.width()}, 0.0);

    if (seeds_in) {
        if (seeds_in->size() != slots) {
            throw Error(ErrorKind::DimMismatch, "propagated seed list has wrong length");
        }
        for (std::size_t k = 0; k < slots; ++k) {
            const auto& seed = (*seeds_in)[k];
            if (!seed) {
                state.idle[k] = true;
                state = sbp_step(std::move(state), no_alpha);
                continue;
            }
            state.seeds[k] = seed;
            state = sbp_step(std::move(state),
                             gaussian_alpha(embeddings, seed->embedding, options.bandwidth,
                                            options.exec));
        }
        return state;
    }

    for (std::size_t k = 0; k < slots; ++k) {
        if (check_termination(state, tape)) {
            state.idle[k] = true;
            state = sbp_step(std::move(state), no_alpha);
            continue;
        }
        SeedChoice choice = select_seed(state, embeddings, tape);
        NdArray<double> alpha =
            gaussian_alpha(embeddings, choice.embedding, options.bandwidth, options.exec);
        state.seeds[k] = ClusterSeed{k, std::move(choice.embedding), choice.row, choice.col};
        state = sbp_step(std::move(state), alpha);
    }
    return state;
}

}  // namespace canopose
