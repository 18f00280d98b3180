#pragma once

#include <optional>
#include <vector>

#include "canopose/ndarray.hpp"
#include "canopose/parallel.hpp"
#include "canopose/random_tape.hpp"

namespace canopose {

inline constexpr int kDefaultSlots = 4;
inline constexpr double kDefaultKernelBandwidth = 1.0;

/// Per-pixel colour embeddings, H1 x W1 x Dc (optional H1 x W1 x Df features).
struct EmbeddingGrid {
    NdArray<double> data;
    std::optional<NdArray<double>> features;

    std::size_t height() const { return data.dim(0); }
    std::size_t width() const { return data.dim(1); }
    std::size_t channels() const { return data.dim(2); }
    std::size_t pixels() const { return data.dim(0) * data.dim(1); }
};

struct ClusterSeed {
    std::size_t slot = 0;
    std::vector<double> embedding;
    std::size_t row = 0;
    std::size_t col = 0;
};

/// Stick-breaking state for one frame. `masks` always holds K slabs; slots
/// that have not run yet or are idle are all zero.
struct MaskState {
    std::size_t capacity = 0;     // K
    std::size_t steps = 0;        // SBP steps applied so far
    NdArray<double> masks;        // K x H1 x W1
    NdArray<double> scope;        // current scope s_k, H1 x W1
    NdArray<double> pre_scope;    // K' x H1 x W1, last channel is s_0
    std::vector<std::optional<ClusterSeed>> seeds;  // per slot
    std::vector<bool> idle;       // per slot
    NdArray<double> remaining_scope;  // s_K once the frame is decomposed

    /// Fresh state with scope s_0 taken from the last pre-scope channel.
    static MaskState start(NdArray<double> pre_scope, std::size_t slots);

    std::size_t height() const { return scope.dim(0); }
    std::size_t width() const { return scope.dim(1); }
};

struct PreScope {
    NdArray<double> special;  // (K'-1) x H1 x W1
    NdArray<double> scope;    // s_0, H1 x W1
    NdArray<double> all;      // K' x H1 x W1
};

/// Channel softmax over H1 x W1 x K' logits; the last channel is s_0.
PreScope pre_scope(const NdArray<double>& logits);

/// alpha(i,j) = exp(-|zeta(i,j) - seed|^2 / (2 sigma^2)).
NdArray<double> gaussian_alpha(const EmbeddingGrid& embeddings, const std::vector<double>& seed,
                               double sigma, Exec exec = Exec::Parallel);

/// m_k = s_{k-1} * alpha, s_k = s_{k-1} * (1 - alpha). Returns the updated state.
MaskState sbp_step(MaskState state, const NdArray<double>& alpha);

struct SeedChoice {
    std::size_t row = 0;
    std::size_t col = 0;
    std::vector<double> embedding;
};

/// Seed at argmax(scope * u), u drawn row-major from the tape; the first
/// maximum in row-major order wins.
SeedChoice select_seed(const MaskState& state, const EmbeddingGrid& embeddings, RandomTape& tape);

/// Samples Bernoulli(scope) at every pixel (one draw each, row-major);
/// true means every sample was zero and the slot goes idle.
bool check_termination(const MaskState& state, RandomTape& tape);

struct DecomposeOptions {
    std::size_t slots = kDefaultSlots;
    double bandwidth = kDefaultKernelBandwidth;
    Exec exec = Exec::Parallel;
};

/// Full per-frame IC-SBP. Without `seeds_in` (first frame) every slot runs a
/// termination check, then a seeded step; with `seeds_in` the stored seed
/// vectors are reused in slot order, idle slots stay idle and the tape is
/// untouched. The scope left after the last slot is kept as remaining_scope.
MaskState decompose_frame(const EmbeddingGrid& embeddings, const NdArray<double>& pre_scope_logits,
                          RandomTape& tape, const DecomposeOptions& options = {},
                          const std::optional<std::vector<std::optional<ClusterSeed>>>& seeds_in =
                              std::nullopt);

}  // namespace canopose
