#include "canopose/losses.hpp"

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "canopose/error.hpp"

namespace canopose {

double rgb_density(const Vec3& x, const Vec3& mean, double std) {
    const double norm = 1.0 / (std * std::sqrt(2.0 * std::numbers::pi));
    double out = 1.0;
    for (int c = 0; c < 3; ++c) {
        const double z = (x[c] - mean[c]) / std;
        out *= norm * std::exp(-0.5 * z * z);
    }
    return out;
}

double colour_loss(const Vec3& observed, std::span<const Vec3> colours,
                   std::span<const double> sigma_hat_surface, double sigma_std, double sigma_max) {
    if (colours.size() != sigma_hat_surface.size()) {
        throw Error(ErrorKind::DimMismatch, "one density per component colour required");
    }
    if (!(sigma_std > 0) || !(sigma_max > 0)) {
        throw Error(ErrorKind::InvalidArgument, "sigma_std and sigma_max must be positive");
    }
    double mix = 0;
    for (std::size_t k = 0; k < colours.size(); ++k) {
        mix += rgb_density(observed, colours[k], sigma_std) * sigma_hat_surface[k] / sigma_max;
    }
    return -std::log(std::max(mix, kLogFloor));
}

double depth_loss(double sigma_surface, double sigma_air, double rho_air) {
    if (!(rho_air > 0)) {
        throw Error(ErrorKind::InvalidArgument, "air sampling density must be positive");
    }
    return -std::log(std::max(sigma_surface, kLogFloor)) + sigma_air / rho_air;
}

double kl_diag_gaussian(const GaussianParams& q, const GaussianParams& p) {
    const std::size_t d = q.mean.size();
    if (q.std.size() != d || p.mean.size() != d || p.std.size() != d) {
        throw Error(ErrorKind::DimMismatch, "Gaussian parameter dimensions differ");
    }
    double kl = 0;
    for (std::size_t i = 0; i < d; ++i) {
        if (!(q.std[i] > 0) || !(p.std[i] > 0)) {
            throw Error(ErrorKind::InvalidArgument, "standard deviations must be positive");
        }
        const double dm = q.mean[i] - p.mean[i];
        kl += std::log(p.std[i] / q.std[i]) +
              (q.std[i] * q.std[i] + dm * dm) / (2.0 * p.std[i] * p.std[i]) - 0.5;
    }
    return kl;
}

double where_loss(std::span<const Vec3> t_hat, std::span<const Vec3> t_shape,
                  const std::vector<bool>& active) {
    if (t_hat.size() != t_shape.size() || t_hat.size() != active.size()) {
        throw Error(ErrorKind::DimMismatch, "where loss inputs differ in length");
    }
    double sum = 0;
    for (std::size_t k = 0; k < t_hat.size(); ++k) {
        if (active[k]) sum += (t_hat[k] - t_shape[k]).squaredNorm();
    }
    return sum;
}

double attention_loss(const SurfaceEvaluations& eval, double sigma_std, double sigma_max) {
    if (eval.masks.ndim() != 2) {
        throw Error(ErrorKind::ShapeMismatch, "masks must be K x P");
    }
    const std::size_t k_count = eval.masks.dim(0);
    const std::size_t p_count = eval.masks.dim(1);
    if (eval.sigma_hat.shape() != eval.masks.shape() ||
        eval.colours.shape() != std::vector<std::size_t>{k_count, p_count, 3} ||
        eval.observed.shape() != std::vector<std::size_t>{p_count, 3}) {
        throw Error(ErrorKind::ShapeMismatch, "attention loss inputs disagree in shape");
    }
    double total = 0;
    for (std::size_t p = 0; p < p_count; ++p) {
        const Vec3 obs(eval.observed.at(p, 0), eval.observed.at(p, 1), eval.observed.at(p, 2));
        double colour_term = 0;
        double density_term = 0;
        for (std::size_t k = 0; k < k_count; ++k) {
            const Vec3 c(eval.colours.at(k, p, 0), eval.colours.at(k, p, 1), eval.colours.at(k, p, 2));
            const double w = eval.masks.at(k, p) * eval.sigma_hat.at(k, p) / sigma_max;
            colour_term += w * rgb_density(obs, c, sigma_std);
            density_term += w;
        }
        total -= std::log(std::max(colour_term, kLogFloor)) + std::log(std::max(density_term, kLogFloor));
    }
    return total;
}

double scope_loss(const NdArray<double>& remaining_scope) {
    double sum = 0;
    for (double v : remaining_scope.values()) sum += v;
    return sum;
}

LossBreakdown total_loss(double colour, double depth, double kl, double where, double att,
                         double scope) {
    return {colour, depth, kl, where, att, scope, colour + depth + kl + where + att + scope};
}

std::string to_json(const LossBreakdown& l) {
    nlohmann::ordered_json j;
    j["colour"] = l.colour;
    j["depth"] = l.depth;
    j["kl"] = l.kl;
    j["where"] = l.where;
    j["att"] = l.att;
    j["scope"] = l.scope;
    j["total"] = l.total;
    return j.dump();
}

}  // namespace canopose
