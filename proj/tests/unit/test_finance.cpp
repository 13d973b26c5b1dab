#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "hjbkit/errors.hpp"
#include "hjbkit/finance.hpp"
#include "hjbkit/hamiltonian.hpp"
#include "hjbkit/pde.hpp"
#include "hjbkit/rng.hpp"

using namespace fixtures;
using namespace hjbkit::finance;

namespace {

MarketModel market_with(std::initializer_list<std::pair<const char*, json>> changes) {
    json doc = kMertonMarket;
    for (const auto& [k, v] : changes) {
        doc[k] = v;
    }
    return MarketModel::from_json(doc);
}

/// Reduced Hamiltonian term for one continuous control, upwinded on the drift sign.
double reduced_term(const MarketModel& m, double y, double u, double pf, double pb, double pi,
                    double c) {
    const double g = m.gamma();
    const double s = m.sigma(y);
    const double drift = m.i(y) + m.rho() * pi * s;
    const double h = g * (m.r(y) + m.b(y) * pi - 0.5 * (1.0 - g) * s * s * pi * pi - c) - m.w();
    return drift * (drift >= 0.0 ? pf : pb) + h * u + std::pow(c, g);
}

} // namespace

TEST_CASE("market validation") {
    CHECK_THROWS_AS(market_with({{"risk_aversion", 1.0}}), hjbkit::ParameterError);
    CHECK_THROWS_AS(market_with({{"correlation", 1.5}}), hjbkit::ParameterError);
    CHECK_THROWS_AS(market_with({{"volatility", 0.0}}), hjbkit::ParameterError);
    CHECK_THROWS_AS(market_with({{"discount", -1.0}}), hjbkit::ParameterError);
    json doc = kMertonMarket;
    doc.erase("short_rate");
    CHECK_THROWS_AS(MarketModel::from_json(doc), hjbkit::ParameterError);
    const auto m = MarketModel::from_json(kMertonMarket);
    CHECK(MarketModel::from_json(m.to_json()).to_json() == m.to_json());
}

TEST_CASE("reduced model coefficients") {
    const auto market = MarketModel::from_json(kMertonMarket);
    const auto m = to_control_model(market, 7, 5);
    CHECK(m.control_count() == 35);
    CHECK(m.control_dim() == 2);
    CHECK(m.lip_L2() == -1.0);
    const std::vector<double> d{1.0, 0.5};
    // γ [r + bπ − ½(1−γ)σ²π² − c] − w
    const double h = 0.5 * (0.02 + 0.04 - 0.25 * 0.04 - 0.5) - 0.1;
    CHECK(m.discount_rate1(0.3, d) == doctest::Approx(h).epsilon(1e-14));
    CHECK(m.drift1(0.3, d) == doctest::Approx(-0.3 - 0.5 * 0.2).epsilon(1e-14));
    CHECK(m.running_reward1(0.3, d) == doctest::Approx(std::sqrt(0.5)));
    CHECK(m.terminal_reward1(0.3) == 1.0);
    const std::vector<double> zero{0.0, 0.0};
    CHECK(m.discount_rate1(0.3, zero) == doctest::Approx(0.5 * 0.02 - 0.1));
    CHECK(m.running_reward1(0.3, zero) == 0.0);

    const auto uncorrelated = to_control_model(market_with({{"correlation", 0.0}}), 7, 5);
    CHECK(uncorrelated.drift1(0.3, d) == doctest::Approx(-0.3));
    CHECK_THROWS_AS(to_control_model(market, 1, 5), hjbkit::ParameterError);

    // an expanding factor is flagged
    json doc = kMertonMarket;
    doc.erase("L2");
    doc["factor_drift"] = {{"kind", "affine"}, {"state", {0.5}}};
    const auto flagged = to_control_model(MarketModel::from_json(doc), 3, 3);
    CHECK(flagged.lip_L2() == doctest::Approx(0.5));
    REQUIRE(flagged.warnings().size() == 1);
    CHECK(flagged.warnings()[0].find("L2") != std::string::npos);
}

TEST_CASE("closed-form controls") {
    const auto market = MarketModel::from_json(kMertonMarket);
    const auto a = closed_form_controls(0.0, 1.0, 0.0, market);
    CHECK(a.pi == doctest::Approx(2.0));
    CHECK(a.c == doctest::Approx(1.0));

    // against a π scan of the π-dependent part
    const double u = 2.0, uy = 0.3, y = 0.1;
    const auto b = closed_form_controls(y, u, uy, market);
    double best = -std::numeric_limits<double>::infinity(), arg = 0.0;
    for (int k = 0; k <= 10000; ++k) {
        const double pi = -3.0 + 6.0 * k / 10000.0;
        const double v = market.rho() * pi * 0.2 * uy +
                         0.5 * u * (0.04 * pi - 0.25 * 0.04 * pi * pi);
        if (v > best) {
            best = v;
            arg = pi;
        }
    }
    CHECK(std::abs(b.pi - arg) <= 6e-4);
    CHECK(b.c == doctest::Approx(0.25));

    CHECK(closed_form_controls(0.0, 0.5, 0.0, market).c == 1.0);
    const auto flat = market_with({{"excess_drift", 0.0}, {"correlation", 0.0}});
    CHECK(closed_form_controls(0.0, 1.0, 5.0, flat).pi == 0.0);
    const auto capped = closed_form_controls(0.0, 1.0, 0.0, market_with({{"position_cap", 1.0}}));
    CHECK(capped.pi == 1.0);
    CHECK_THROWS_AS(closed_form_controls(0.0, 0.0, 0.0, market), hjbkit::DomainError);
    CHECK_THROWS_AS(closed_form_controls(0.0, -1.0, 0.0, market), hjbkit::DomainError);
}

TEST_CASE("upwind maximizer against a fine control scan") {
    const auto market = market_with({{"correlation", -0.8}});
    hjbkit::PathStream rng(13, 0);
    for (int s = 0; s < 40; ++s) {
        const double y = -2.0 + 4.0 * rng.uniform();
        const double u = -1.0 + 4.0 * rng.uniform();
        const double pf = -3.0 + 6.0 * rng.uniform();
        const double pb = -3.0 + 6.0 * rng.uniform();
        Controls best;
        const double value = maximize_upwind(market, y, u, pf, pb, best);
        CHECK(value == doctest::Approx(reduced_term(market, y, u, pf, pb, best.pi, best.c))
                           .epsilon(1e-12));
        double scan = -std::numeric_limits<double>::infinity();
        for (int a = 0; a <= 600; ++a) {
            for (int b = 0; b <= 100; ++b) {
                scan = std::max(scan, reduced_term(market, y, u, pf, pb, -3.0 + a / 100.0, b / 100.0));
            }
        }
        CHECK(value >= scan - 1e-12);
        CHECK(value - scan <= 1e-3);
    }
}

TEST_CASE("Merton benchmark") {
    const auto market = MarketModel::from_json(kMertonMarket);
    const auto b = merton_benchmark(market);
    CHECK(b.A == doctest::Approx(-0.07).epsilon(1e-12));
    CHECK(b.u == doctest::Approx(std::sqrt(0.5 / 0.07)).epsilon(1e-12));
    // bisection on A u + (1−γ) u^{γ/(γ−1)} with A from the market parameters
    const double A = 0.5 * 0.02 - 0.1 + 0.5 * 0.04 * 0.04 / (2.0 * 0.5 * 0.04);
    double lo = 1e-3, hi = 1e3;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (A * mid + 0.5 / mid > 0.0 ? lo : hi) = mid;
    }
    CHECK(b.u == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-12));
    CHECK(b.A * b.u + 0.5 * std::pow(b.u, -1.0) == doctest::Approx(0.0));
    CHECK(b.pi_star == doctest::Approx(2.0));
    CHECK(b.c_star == doctest::Approx(0.14));
    CHECK_FALSE(b.pi_clipped);
    CHECK_FALSE(b.c_clipped);

    const auto zero = merton_benchmark(market_with({{"short_rate", 0.0}, {"excess_drift", 0.0}}));
    CHECK(zero.u == doctest::Approx(std::sqrt(5.0)));
    CHECK(zero.pi_star == 0.0);

    CHECK_THROWS_AS(merton_benchmark(market_with({{"discount", 0.01}})), hjbkit::DomainError);
    CHECK_THROWS_AS(
        merton_benchmark(market_with({{"short_rate", {{"kind", "affine"}, {"state", {0.01}}}}})),
        hjbkit::ParameterError);
    CHECK(merton_benchmark(market_with({{"position_cap", 1.0}})).pi_clipped);
}

TEST_CASE("Merton value from the infinite-horizon solver") {
    const auto market = MarketModel::from_json(kMertonMarket);
    const auto m = to_control_model(market, 3, 3);
    const hjbkit::pde::Grid1D grid(-2.0, 2.0, 41);
    hjbkit::pde::SolverOptions opts;
    opts.control_override = make_control_override(market);
    const double dt = 0.9 * hjbkit::pde::max_stable_dt(m, grid);
    const auto sol = hjbkit::pde::solve_infinite_horizon(m, grid, dt, 1e-8, 400.0, opts);
    REQUIRE(sol.report.converged);
    const double u = merton_benchmark(market).u;
    for (double v : sol.value.earliest()) {
        CHECK(std::abs(v - u) <= 1e-3 * u);
    }
    REQUIRE(sol.policy.control_names.size() == 2);
    CHECK(sol.policy.control_names[0] == "pi_star");
    CHECK(sol.policy.at(0, 20)[0] == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(sol.policy.at(0, 20)[1] == doctest::Approx(0.14).epsilon(1e-3));
}

TEST_CASE("discount admissibility") {
    const auto base = market_with({{"excess_drift", 0.0}, {"correlation", 0.0}});
    const auto ok = discount_admissible(base, 1.0, 0.0, 0.09, 0.0);
    CHECK(ok.preconditions_hold);
    CHECK(ok.witnesses.empty());
    CHECK(ok.psi_max == doctest::Approx(-0.1));
    CHECK(ok.linear_rate == doctest::Approx(-0.045));
    CHECK(ok.martingale_correction == 0.0);
    CHECK(ok.total_rate == doctest::Approx(-0.145));
    CHECK(ok.admissible);

    const auto violated = discount_admissible(base, 1.0, 0.0, 1.0, 0.0);
    CHECK_FALSE(violated.preconditions_hold);
    REQUIRE_FALSE(violated.witnesses.empty());
    CHECK(violated.witnesses[0].condition.find("gamma r") != std::string::npos);

    // a large Q pushes the martingale correction past the discount
    const auto loose = discount_admissible(base, 1.0, 0.0, 0.0, 2.0);
    CHECK(loose.martingale_correction == doctest::Approx(0.5));
    CHECK_FALSE(loose.admissible);

    // ψ with b ≠ 0: π at b/((1−γ)σ²) = 2, value γ b π − ½ γ(1−γ)σ²π² − w
    const auto merton = discount_admissible(MarketModel::from_json(kMertonMarket), 1.0, 0.0, 0.09, 0.0);
    CHECK(merton.psi_max == doctest::Approx(0.5 * 0.04 * 2.0 - 0.5 * 0.25 * 0.04 * 4.0 - 0.1));
    CHECK_THROWS_AS(discount_admissible(base, 0.0, 0.0, 0.0, 0.0), hjbkit::ParameterError);
}

TEST_CASE("wealth value") {
    const auto market = MarketModel::from_json(kMertonMarket);
    CHECK(wealth_value(1.0, market, 3.0) == doctest::Approx(6.0));
    CHECK(wealth_value(4.0, market, 1.0) == doctest::Approx(4.0));
    // homogeneous of degree γ in wealth
    hjbkit::PathStream rng(2, 0);
    for (int s = 0; s < 50; ++s) {
        const double x = 0.1 + 10.0 * rng.uniform();
        const double k = 0.1 + 10.0 * rng.uniform();
        CHECK(wealth_value(k * x, market, 2.0) ==
              doctest::Approx(std::sqrt(k) * wealth_value(x, market, 2.0)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(wealth_value(0.0, market, 1.0), hjbkit::DomainError);
}
