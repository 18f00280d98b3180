#pragma once

#include <span>
#include <string>
#include <vector>

#include "canopose/geometry.hpp"
#include "canopose/ndarray.hpp"

namespace canopose {

inline constexpr double kLogFloor = 1e-12;
inline constexpr double kDefaultColourStd = 0.1;

struct GaussianParams {
    std::vector<double> mean;
    std::vector<double> std;
};

struct LossBreakdown {
    double colour = 0;
    double depth = 0;
    double kl = 0;
    double where = 0;
    double att = 0;
    double scope = 0;
    double total = 0;
};

/// Product of per-channel normal densities N(x; mean, std).
double rgb_density(const Vec3& x, const Vec3& mean, double std);

/// -log(sum_k N(observed; c_k, std) * sigma_hat_k / sigma_max), log floored.
double colour_loss(const Vec3& observed, std::span<const Vec3> colours,
                   std::span<const double> sigma_hat_surface, double sigma_std, double sigma_max);

/// -log(sigma_surface) + sigma_air / rho_air.
double depth_loss(double sigma_surface, double sigma_air, double rho_air);

/// KL(q || p) for diagonal Gaussians.
double kl_diag_gaussian(const GaussianParams& q, const GaussianParams& p);

/// Sum over active slots of |T_hat_k - T_shape_k|^2.
double where_loss(std::span<const Vec3> t_hat, std::span<const Vec3> t_shape,
                  const std::vector<bool>& active);

/// Surface evaluations for the attention term. All arrays index
/// [component][pixel]; colours are K x P x 3, observed is P x 3.
struct SurfaceEvaluations {
    NdArray<double> masks;       // K x P
    NdArray<double> colours;     // K x P x 3
    NdArray<double> sigma_hat;   // K x P
    NdArray<double> observed;    // P x 3
};

/// Mask-weighted colour likelihood plus mask-weighted occupancy, both
/// under -log, summed over the P surface pixels.
double attention_loss(const SurfaceEvaluations& eval, double sigma_std, double sigma_max);

/// Sum of the remaining scope.
double scope_loss(const NdArray<double>& remaining_scope);

LossBreakdown total_loss(double colour, double depth, double kl, double where, double att,
                         double scope);

std::string to_json(const LossBreakdown& losses);

}  // namespace canopose
