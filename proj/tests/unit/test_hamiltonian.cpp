#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "hjbkit/errors.hpp"
#include "hjbkit/finance.hpp"
#include "hjbkit/hamiltonian.hpp"
#include "hjbkit/rng.hpp"

using namespace fixtures;
using hjbkit::eval_H;

namespace {

double H(const hjbkit::ControlModel& m, double y, double u, double p) {
    return eval_H(m, {&y, 1}, u, {&p, 1}).value;
}

double term(const hjbkit::ControlModel& m, double y, double u, double p, const hjbkit::Control& d) {
    return m.drift1(y, d) * p + m.discount_rate1(y, d) * u + m.running_reward1(y, d);
}

} // namespace

TEST_CASE("eval_H examples") {
    const json drift{{"kind", "affine"}, {"control", {1.0}}};
    const auto m = model(drift, constant(-1), constant(0), constant(0), controls({-1, 1}));
    const double y = 0.3, p = 3.0;
    const auto r = eval_H(m, {&y, 1}, 2.0, {&p, 1});
    CHECK(r.value == doctest::Approx(1.0));
    CHECK(r.argmax == hjbkit::Control{1.0});
    CHECK(r.argmax_index == 1);
    CHECK(r.runner_up_gap == doctest::Approx(6.0));

    const auto single = model(affine(0.5, -2), affine(-1, 0.1), affine(1, 1), constant(0),
                              controls({0.7}));
    const auto s = eval_H(single, {&y, 1}, 2.0, {&p, 1});
    CHECK(s.value == doctest::Approx(term(single, y, 2.0, p, {0.7})));
    CHECK(s.argmax == hjbkit::Control{0.7});
    CHECK(s.runner_up_gap == std::numeric_limits<double>::infinity());

    // ties go to the lowest index
    const double zero = 0.0;
    const auto tie = eval_H(m, {&y, 1}, 2.0, {&zero, 1});
    CHECK(tie.argmax_index == 0);
    CHECK(tie.runner_up_gap == 0.0);
}

TEST_CASE("eval_H errors") {
    const json reciprocal{{"kind", "polynomial"},
                          {"terms", {{{"coef", 1.0}, {"state_powers", {-1}}, {"control_powers", {0}}}}}};
    const auto m = model(affine(0, -1), constant(-1), reciprocal, constant(0), controls({2.5}));
    const double y = 0.0, p = 1.0;
    try {
        eval_H(m, {&y, 1}, 1.0, {&p, 1});
        FAIL("expected EvaluationError");
    } catch (const hjbkit::EvaluationError& e) {
        CHECK(std::string(e.what()).find("2.5") != std::string::npos);
    }
    const std::vector<double> p2{1.0, 2.0};
    CHECK_THROWS_AS(eval_H(m, {&p, 1}, 1.0, p2), hjbkit::ParameterError);
}

TEST_CASE("Hamiltonian properties on random samples") {
    const json h{{"kind", "polynomial"},
                 {"terms", {{{"coef", 0.3}, {"state_powers", {1}}, {"control_powers", {0}}},
                            {{"coef", -0.5}, {"state_powers", {0}}, {"control_powers", {2}}}}}};
    const json f{{"kind", "sum"},
                 {"terms", {{{"kind", "sin"}}, {{"kind", "affine"}, {"control", {0.2}}}}}};
    const auto m = model(affine(0.1, -1, {1.0}), h, f, constant(0), controls({-1, -0.5, 0, 0.5, 1}));
    auto shifted_doc = model_doc(affine(0.1, -1, {1.0}), h,
                                 {{"kind", "sum"}, {"terms", {f, constant(0.75)}}}, constant(0),
                                 controls({-1, -0.5, 0, 0.5, 1}));
    const auto shifted = hjbkit::ControlModel::from_json(shifted_doc);

    hjbkit::PathStream rng(11, 0);
    std::vector<std::vector<double>> states;
    for (int s = 0; s < 1000; ++s) {
        states.push_back({-4.0 + 8.0 * rng.uniform()});
    }
    const auto K = hjbkit::empirical_constants(m, states);
    CHECK(K.monotone_u > 0.0);
    for (const auto& st : states) {
        const double y = st[0];
        const double u = -5.0 + 10.0 * rng.uniform();
        const double du = 3.0 * rng.uniform();
        const double p = -5.0 + 10.0 * rng.uniform();
        const double q = -5.0 + 10.0 * rng.uniform();
        const double base = H(m, y, u, p);
        CHECK(H(m, y, u + du, p) - base <= K.monotone_u * du + 1e-12);
        CHECK(std::abs(base - H(m, y, u, q)) <=
              K.lipschitz_p * (1.0 + std::abs(y)) * std::abs(p - q) + 1e-12);
        for (const auto& d : m.controls()) {
            CHECK(base >= term(m, y, u, p, d) - 1e-12 * (1.0 + std::abs(base)));
        }
        const auto a = eval_H(m, {&y, 1}, u, {&p, 1});
        const auto b = eval_H(shifted, {&y, 1}, u, {&p, 1});
        CHECK(a.argmax_index == b.argmax_index);
        CHECK(b.value - a.value == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(a.runner_up_gap >= 0.0);
        const auto up = hjbkit::eval_H_upwind(m, y, u, p, p);
        CHECK(up.value == doctest::Approx(a.value).epsilon(1e-12));
        CHECK(up.argmax_index == a.argmax_index);
    }
}

TEST_CASE("reduced finance Hamiltonian against a refined control grid") {
    const auto market = hjbkit::finance::MarketModel::from_json(kMertonMarket);
    const auto coarse = hjbkit::finance::to_control_model(market, 61, 41);
    const auto fine = hjbkit::finance::to_control_model(market, 601, 401);
    hjbkit::PathStream rng(5, 0);
    for (int s = 0; s < 20; ++s) {
        const double y = -3.0 + 6.0 * rng.uniform();
        const double u = 0.5 + 3.0 * rng.uniform();
        const double p = -1.0 + 2.0 * rng.uniform();
        const auto hc = eval_H(coarse, {&y, 1}, u, {&p, 1});
        const auto hf = eval_H(fine, {&y, 1}, u, {&p, 1});
        // the coarse grid is a subset of the fine grid
        CHECK(hc.value <= hf.value + 1e-12);
        // resolution gap: the fine maximizer against its nearest coarse neighbours
        const double dpi = 2.0 * market.R() / 60.0, dc = market.m() / 40.0;
        double nearest = -std::numeric_limits<double>::infinity();
        for (double a : {std::floor(hf.argmax[0] / dpi), std::ceil(hf.argmax[0] / dpi)}) {
            for (double b : {std::floor(hf.argmax[1] / dc), std::ceil(hf.argmax[1] / dc)}) {
                nearest = std::max(nearest, term(fine, y, u, p, {a * dpi, b * dc}));
            }
        }
        CHECK(hf.value - hc.value <= hf.value - nearest + 1e-12);
    }
}
