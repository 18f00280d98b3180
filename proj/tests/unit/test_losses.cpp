#include <doctest.h>

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "canopose/error.hpp"
#include "canopose/losses.hpp"
#include "../support.hpp"

using namespace canopose;
using canopose::testing::uniform;

namespace {

// Direct per-channel normal pdf, written independently of rgb_density.
double pdf(double x, double mu, double sd) {
    return std::exp(-(x - mu) * (x - mu) / (2 * sd * sd)) / (sd * std::sqrt(2 * std::numbers::pi));
}

double perfect_value() { return -3.0 * std::log(pdf(0.0, 0.0, 0.1)); }

}  // namespace

TEST_CASE("colour loss perfect reconstruction") {
    const Vec3 obs(0.2, 0.5, 0.9);
    const std::vector<Vec3> c{obs};
    const std::vector<double> s{10.0};
    CHECK(std::abs(colour_loss(obs, c, s, 0.1, 10.0) - perfect_value()) < 1e-9);
    CHECK(perfect_value() == doctest::Approx(-4.150939679368119).epsilon(1e-12));
}

TEST_CASE("colour loss floors and mixture linearity") {
    const Vec3 obs(0.2, 0.5, 0.9);
    const std::vector<Vec3> c1{obs};
    const std::vector<double> zero{0.0};
    CHECK(colour_loss(obs, c1, zero, 0.1, 10.0) == doctest::Approx(-std::log(kLogFloor)));
    const Vec3 col(0.3, 0.4, 0.8);
    const std::vector<Vec3> one{col}, two{col, col};
    const std::vector<double> full{7.0}, split{3.5, 3.5};
    CHECK(colour_loss(obs, one, full, 0.1, 10.0) == doctest::Approx(colour_loss(obs, two, split, 0.1, 10.0)).epsilon(1e-14));
    CHECK_THROWS_AS(colour_loss(obs, two, full, 0.1, 10.0), Error);
}

TEST_CASE("colour loss is minimised at the observed colour") {
    RandomTape tape = RandomTape::seeded(19);
    for (int t = 0; t < 100; ++t) {
        const Vec3 obs(tape.next(), tape.next(), tape.next());
        const std::vector<double> s{uniform(tape, 1, 10)};
        for (int ch = 0; ch < 3; ++ch) {
            const double h = 1e-3;
            for (double offset : {-0.05, 0.05}) {
                Vec3 c = obs;
                c[ch] += offset;
                Vec3 cp = c, cm = c;
                cp[ch] += h;
                cm[ch] -= h;
                const std::vector<Vec3> vp{cp}, vm{cm};
                const double grad = (colour_loss(obs, vp, s, 0.1, 10) - colour_loss(obs, vm, s, 0.1, 10)) / (2 * h);
                // gradient points away from the observed value
                CHECK((offset > 0 ? grad > 0 : grad < 0));
            }
        }
    }
}

TEST_CASE("depth loss") {
    CHECK(std::abs(depth_loss(10, 0, 1) + std::log(10.0)) < 1e-12);
    CHECK(depth_loss(1, 1, 1) == doctest::Approx(1.0));
    CHECK(depth_loss(1, 2, 1) > depth_loss(1, 1, 1));
    CHECK(std::isfinite(depth_loss(0, 0, 1)));
    CHECK_THROWS_AS(depth_loss(1, 1, 0), Error);
}

TEST_CASE("kl closed forms") {
    const GaussianParams n01{{0}, {1}};
    CHECK(std::abs(kl_diag_gaussian(n01, n01)) < 1e-9);
    CHECK(std::abs(kl_diag_gaussian({{1}, {1}}, n01) - 0.5) < 1e-9);
    CHECK(std::abs(kl_diag_gaussian({{0}, {2}}, n01) - (std::log(0.5) + 1.5)) < 1e-9);
    CHECK(std::abs(kl_diag_gaussian({{0}, {2}}, n01) - 0.80685) < 1e-5);
    CHECK_THROWS_AS(kl_diag_gaussian({{0, 1}, {1, 1}}, n01), Error);
}

TEST_CASE("kl is nonnegative") {
    RandomTape tape = RandomTape::seeded(23);
    for (int t = 0; t < 1000; ++t) {
        GaussianParams q, p;
        for (int d = 0; d < 4; ++d) {
            q.mean.push_back(tape.normal());
            p.mean.push_back(tape.normal());
            q.std.push_back(uniform(tape, 0.1, 3));
            p.std.push_back(uniform(tape, 0.1, 3));
        }
        CHECK(kl_diag_gaussian(q, p) >= 0);
        CHECK(std::abs(kl_diag_gaussian(q, q)) < 1e-9);
    }
}

TEST_CASE("where loss") {
    const std::vector<Vec3> a{{0, 0, 0}, {5, 5, 5}}, b{{1, 0, 0}, {0, 0, 0}};
    CHECK(where_loss(a, a, {true, true}) == 0.0);
    CHECK(where_loss(a, b, {true, false}) == 1.0);
    CHECK_THROWS_AS(where_loss(a, b, {true}), Error);
}

TEST_CASE("attention loss") {
    const Vec3 obs(0.1, 0.6, 0.3);
    auto make = [&](double m0, double m1, double s0, double s1) {
        SurfaceEvaluations e{NdArray<double>({2, 1}), NdArray<double>({2, 1, 3}), NdArray<double>({2, 1}),
                             NdArray<double>({1, 3})};
        e.masks.at(0, 0) = m0;
        e.masks.at(1, 0) = m1;
        e.sigma_hat.at(0, 0) = s0;
        e.sigma_hat.at(1, 0) = s1;
        for (int c = 0; c < 3; ++c) {
            e.colours.at(0, 0, c) = obs[c];
            e.colours.at(1, 0, c) = obs[c];
            e.observed.at(0, c) = obs[c];
        }
        return e;
    };
    CHECK(std::abs(attention_loss(make(1, 0, 10, 0), 0.1, 10) - perfect_value()) < 1e-9);
    CHECK(attention_loss(make(0, 0, 10, 0), 0.1, 10) == doctest::Approx(-2 * std::log(kLogFloor)));
    CHECK(attention_loss(make(0, 1, 10, 0), 0.1, 10) > attention_loss(make(1, 0, 10, 0), 0.1, 10));
    SurfaceEvaluations bad = make(1, 0, 10, 0);
    bad.observed = NdArray<double>({2, 3});
    CHECK_THROWS_AS(attention_loss(bad, 0.1, 10), Error);
}

TEST_CASE("scope loss") {
    CHECK(scope_loss(NdArray<double>({3, 3}, 0.0)) == 0.0);
    CHECK(scope_loss(NdArray<double>({2, 2}, 0.5)) == 2.0);
    CHECK(scope_loss(NdArray<double>({4, 5}, 1.0)) == 20.0);
}

TEST_CASE("total loss additivity") {
    const LossBreakdown z = total_loss(0, 0, 0, 0, 0, 0);
    CHECK(z.total == 0.0);
    const LossBreakdown b = total_loss(1, 2, 3, 4, 5, 6);
    CHECK(b.total == 21.0);
    CHECK(b.colour == 1);
    CHECK(b.scope == 6);
    RandomTape tape = RandomTape::seeded(1);
    for (int t = 0; t < 100; ++t) {
        const double p[6] = {tape.normal(), tape.normal(), tape.next(), tape.next(), tape.normal(), tape.next()};
        const LossBreakdown l = total_loss(p[0], p[1], p[2], p[3], p[4], p[5]);
        CHECK(l.total == l.colour + l.depth + l.kl + l.where + l.att + l.scope);
    }
    const auto j = nlohmann::json::parse(to_json(b));
    CHECK(j.at("total").get<double>() == 21.0);
    CHECK(j.size() == 7);
}
