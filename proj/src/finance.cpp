#include "hjbkit/finance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hjbkit/errors.hpp"

namespace hjbkit::finance {
namespace {

using nlohmann::json;

json normalize(const json& d) {
    if (d.is_number()) {
        return {{"kind", "constant"}, {"value", d.get<double>()}};
    }
    return d;
}

json constant(double v) { return {{"kind", "constant"}, {"value", v}}; }

constexpr std::size_t kScreenPoints = 401;

std::vector<double> box_points(const MarketModel& market, std::size_t count) {
    std::vector<double> ys(count);
    const double lo = market.box_lower();
    const double hi = market.box_upper();
    for (std::size_t j = 0; j < count; ++j) {
        ys[j] = count == 1 ? lo
                           : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(count - 1);
    }
    return ys;
}

json reduced_document(const MarketModel& market, std::size_t n_pi, std::size_t n_c, double L1,
                      double L2) {
    const double g = market.gamma();
    json controls = json::array();
    for (std::size_t a = 0; a < n_pi; ++a) {
        const double pi = -market.R() + 2.0 * market.R() * static_cast<double>(a) /
                                            static_cast<double>(n_pi - 1);
        for (std::size_t b = 0; b < n_c; ++b) {
            const double c = market.m() * static_cast<double>(b) / static_cast<double>(n_c - 1);
            controls.push_back({pi, c});
        }
    }
    const json& r = market.descriptor("short_rate");
    const json& bx = market.descriptor("excess_drift");
    const json& sigma = market.descriptor("volatility");
    const json& i = market.descriptor("factor_drift");
    json drift{{"kind", "sum"},
               {"terms",
                {i, {{"kind", "product"},
                     {"factors", {{{"kind", "affine"}, {"control", {market.rho(), 0.0}}}, sigma}}}}}};
    json quadratic{{"kind", "polynomial"},
                   {"terms", {{{"coef", -0.5 * g * (1.0 - g)}, {"control_powers", {2.0, 0.0}}}}}};
    json discount{
        {"kind", "sum"},
        {"terms",
         {{{"kind", "product"}, {"factors", {constant(g), r}}},
          {{"kind", "product"}, {"factors", {{{"kind", "affine"}, {"control", {g, 0.0}}}, bx}}},
          {{"kind", "product"}, {"factors", {quadratic, sigma, sigma}}},
          {{"kind", "affine"}, {"offset", -market.w()}, {"control", {0.0, -g}}}}}};
    json reward{{"kind", "polynomial"},
                {"terms", {{{"coef", 1.0}, {"control_powers", {0.0, g}}}}}};
    return {
        {"dim", 1},
        {"controls", controls},
        {"drift", drift},
        {"discount_rate", discount},
        {"running_reward", reward},
        {"terminal_reward", constant(1.0)},
        {"L1", L1},
        {"L2", L2},
        {"domain_box", {{"lower", {market.box_lower()}}, {"upper", {market.box_upper()}}}},
    };
}

/// π maximizing the upwinded π-dependent part; returns the part's value.
double best_pi(const MarketModel& market, double y, double u, double pf, double pb, double& pi) {
    const double g = market.gamma();
    const double s = market.sigma(y);
    const double ib = market.i(y);
    const double bb = market.b(y);
    const double R = market.R();
    const double rs = market.rho() * s;
    const auto objective = [&](double p_) {
        const double drift = ib + rs * p_;
        const double p = drift >= 0.0 ? pf : pb;
        return drift * p + g * u * (bb * p_ - 0.5 * (1.0 - g) * s * s * p_ * p_);
    };
    double candidates[5];
    std::size_t count = 0;
    candidates[count++] = -R;
    candidates[count++] = R;
    if (u > 0.0) {
        const double curvature = (g - g * g) * s * s * u;
        candidates[count++] = std::clamp((rs * pf + g * bb * u) / curvature, -R, R);
        candidates[count++] = std::clamp((rs * pb + g * bb * u) / curvature, -R, R);
    }
    if (rs != 0.0) {
        candidates[count++] = std::clamp(-ib / rs, -R, R);
    }
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < count; ++k) {
        const double v = objective(candidates[k]);
        if (v > best) {
            best = v;
            pi = candidates[k];
        }
    }
    return best;
}

} // namespace

MarketModel MarketModel::from_json(const json& doc) {
    MarketModel m;
    try {
        m.document_ = json::object();
        for (const char* key : {"short_rate", "excess_drift", "volatility", "factor_drift"}) {
            m.document_[key] = normalize(doc.at(key));
        }
        m.rho_ = doc.at("correlation").get<double>();
        m.gamma_ = doc.at("risk_aversion").get<double>();
        m.w_ = doc.at("discount").get<double>();
        m.R_ = doc.at("position_cap").get<double>();
        m.m_ = doc.at("consumption_cap").get<double>();
        if (doc.contains("L1")) {
            m.L1_ = doc.at("L1").get<double>();
        }
        if (doc.contains("L2")) {
            m.L2_ = doc.at("L2").get<double>();
        }
        if (doc.contains("working_box")) {
            const auto box = doc.at("working_box").get<std::vector<double>>();
            if (box.size() != 2) {
                throw ParameterError("working_box must be [lower, upper]");
            }
            m.box_lo_ = box[0];
            m.box_hi_ = box[1];
        }
    } catch (const json::exception& e) {
        throw ParameterError(std::string("malformed market document: ") + e.what());
    }
    if (!(m.gamma_ > 0.0 && m.gamma_ < 1.0)) {
        throw ParameterError("risk_aversion must lie strictly inside (0, 1)");
    }
    if (!(m.rho_ >= -1.0 && m.rho_ <= 1.0)) {
        throw ParameterError("correlation must lie in [-1, 1]");
    }
    if (!(m.w_ > 0.0) || !(m.R_ > 0.0) || !(m.m_ > 0.0)) {
        throw ParameterError("discount, position_cap and consumption_cap must be positive");
    }
    if (!(m.box_lo_ < m.box_hi_)) {
        throw ParameterError("working_box needs lower < upper");
    }
    m.r_ = compile_terminal(m.document_["short_rate"], 1);
    m.b_ = compile_terminal(m.document_["excess_drift"], 1);
    m.sigma_ = compile_terminal(m.document_["volatility"], 1);
    m.i_ = compile_terminal(m.document_["factor_drift"], 1);
    for (double y : box_points(m, kScreenPoints)) {
        if (!(m.sigma(y) > 0.0)) {
            std::ostringstream os;
            os << "volatility must be positive on the working box (sigma(" << y
               << ") = " << m.sigma(y) << ")";
            throw ParameterError(os.str());
        }
    }
    m.document_["correlation"] = m.rho_;
    m.document_["risk_aversion"] = m.gamma_;
    m.document_["discount"] = m.w_;
    m.document_["position_cap"] = m.R_;
    m.document_["consumption_cap"] = m.m_;
    m.document_["working_box"] = {m.box_lo_, m.box_hi_};
    if (m.L1_) {
        m.document_["L1"] = *m.L1_;
    }
    if (m.L2_) {
        m.document_["L2"] = *m.L2_;
    }
    return m;
}

MarketModel MarketModel::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParameterError("cannot open market file " + path.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParameterError("cannot parse market file " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

ControlModel to_control_model(const MarketModel& market, std::size_t n_pi, std::size_t n_c) {
    if (n_pi < 2 || n_c < 2) {
        throw ParameterError("control resolutions must be at least 2");
    }
    double L1 = market.L1().value_or(1.0);
    double L2 = market.L2().value_or(-1.0);
    std::vector<std::string> warnings;
    if (!market.L1() || !market.L2()) {
        const auto probe = ControlModel::from_json(reduced_document(market, n_pi, n_c, 1.0, -1.0));
        const auto ys = box_points(market, kScreenPoints);
        double lip = 0.0;
        double one_sided = -std::numeric_limits<double>::infinity();
        for (const auto& d : probe.controls()) {
            for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
                const double dy = ys[j + 1] - ys[j];
                const double di = probe.drift1(ys[j + 1], d) - probe.drift1(ys[j], d);
                const double dh = probe.discount_rate1(ys[j + 1], d) - probe.discount_rate1(ys[j], d);
                const double df = probe.running_reward1(ys[j + 1], d) - probe.running_reward1(ys[j], d);
                lip = std::max({lip, std::abs(di) / dy, std::abs(dh) / dy, std::abs(df) / dy});
                one_sided = std::max(one_sided, di / dy);
            }
        }
        if (!market.L1()) {
            L1 = std::max(lip, 1e-12);
        }
        if (!market.L2()) {
            L2 = one_sided != 0.0 ? one_sided : 1e-12;
        }
    }
    if (!(L2 < 0.0)) {
        std::ostringstream os;
        os << "factor screen: one-sided Lipschitz constant L2 = " << L2
           << " is not negative on the working box";
        warnings.push_back(os.str());
    }
    auto model = ControlModel::from_json(reduced_document(market, n_pi, n_c, L1, L2));
    for (auto& w : warnings) {
        model.add_warning(std::move(w));
    }
    return model;
}

Controls closed_form_controls(double y, double u, double u_y, const MarketModel& market) {
    if (!(u > 0.0)) {
        throw DomainError("closed-form controls need u > 0");
    }
    const double g = market.gamma();
    const double s = market.sigma(y);
    Controls out;
    out.pi = std::clamp((market.rho() * s * u_y + g * market.b(y) * u) / ((g - g * g) * s * s * u),
                        -market.R(), market.R());
    out.c = std::clamp(std::pow(u, 1.0 / (g - 1.0)), 0.0, market.m());
    return out;
}

double maximize_upwind(const MarketModel& market, double y, double u, double p_forward,
                       double p_backward, Controls& best) {
    const double g = market.gamma();
    best.c = u > 0.0 ? std::clamp(std::pow(u, 1.0 / (g - 1.0)), 0.0, market.m()) : market.m();
    const double consumption = -g * best.c * u + std::pow(best.c, g);
    const double portfolio = best_pi(market, y, u, p_forward, p_backward, best.pi);
    return portfolio + consumption + (g * market.r(y) - market.w()) * u;
}

pde::ControlOverride make_control_override(const MarketModel& market) {
    pde::ControlOverride o;
    o.control_names = {"pi_star", "c_star"};
    o.choose = [market](double y, double u, double pf, double pb, std::span<double> control) {
        Controls best;
        const double value = maximize_upwind(market, y, u, pf, pb, best);
        control[0] = best.pi;
        control[1] = best.c;
        return value;
    };
    return o;
}

MertonBenchmark merton_benchmark(const MarketModel& market) {
    const double lo = market.box_lower();
    const double r = market.r(lo);
    const double b = market.b(lo);
    const double s = market.sigma(lo);
    for (double y : box_points(market, 11)) {
        const auto same = [](double a, double c) {
            return std::abs(a - c) <= 1e-12 * std::max(1.0, std::abs(c));
        };
        if (!same(market.r(y), r) || !same(market.b(y), b) || !same(market.sigma(y), s)) {
            throw ParameterError("merton_benchmark needs r, b and sigma constant in y");
        }
    }
    const double g = market.gamma();
    MertonBenchmark out;
    out.A = g * r - market.w() + g * b * b / (2.0 * (1.0 - g) * s * s);
    if (!(out.A < 0.0)) {
        std::ostringstream os;
        os << "discount too small for finite value (A = " << out.A << " >= 0)";
        throw DomainError(os.str());
    }
    out.u = std::pow((1.0 - g) / -out.A, 1.0 - g);
    const double pi_raw = b / ((1.0 - g) * s * s);
    const double c_raw = std::pow(out.u, 1.0 / (g - 1.0));
    out.pi_clipped = std::abs(pi_raw) >= market.R();
    out.c_clipped = c_raw >= market.m();
    out.pi_star = std::clamp(pi_raw, -market.R(), market.R());
    out.c_star = std::min(c_raw, market.m());
    return out;
}

AdmissibilityReport discount_admissible(const MarketModel& market, double alpha, double beta,
                                        double P, double Q, std::size_t samples) {
    if (!(alpha > 0.0)) {
        throw ParameterError("discount_admissible needs alpha > 0");
    }
    if (samples < 2) {
        throw ParameterError("discount_admissible needs at least 2 samples");
    }
    const double g = market.gamma();
    AdmissibilityReport rep;
    rep.linear_rate = g * Q * beta / alpha - g * P;
    rep.prefactor_coefficient = g * Q / alpha;
    rep.martingale_correction = 0.5 * (g * Q / alpha) * (g * Q / alpha);
    rep.psi_max = -std::numeric_limits<double>::infinity();
    constexpr std::size_t kMaxWitnesses = 16;
    for (double y : box_points(market, samples)) {
        const double drift_excess = market.i(y) - (-alpha * y + beta);
        if (drift_excess > 1e-12) {
            rep.preconditions_hold = false;
            if (rep.witnesses.size() < kMaxWitnesses) {
                rep.witnesses.push_back({y, "factor_drift <= -alpha y + beta", drift_excess});
            }
        }
        const double rate_excess = g * market.r(y) - market.w() - (-P + Q * y);
        if (rate_excess > 1e-12) {
            rep.preconditions_hold = false;
            if (rep.witnesses.size() < kMaxWitnesses) {
                rep.witnesses.push_back({y, "gamma r - w <= -P + Q y", rate_excess});
            }
        }
        // ψ is a max of affine functions of θ, hence convex: the endpoints suffice.
        const double s = market.sigma(y);
        const double q = (g - g * g) * s * s;
        for (double theta : {0.0, 1.0}) {
            const double a = g * Q * market.rho() * theta * s / alpha + g * market.b(y);
            const double pi = std::clamp(a / q, -market.R(), market.R());
            const double psi = a * pi - 0.5 * q * pi * pi - market.w();
            if (psi > rep.psi_max) {
                rep.psi_max = psi;
                rep.psi_argmax_y = y;
                rep.psi_argmax_theta = theta;
            }
        }
    }
    rep.total_rate = rep.linear_rate + rep.psi_max + rep.martingale_correction;
    rep.admissible = rep.total_rate < 0.0;
    return rep;
}

double wealth_value(double x, const MarketModel& market, double u) {
    if (!(x > 0.0)) {
        throw DomainError("wealth must be positive");
    }
    return std::pow(x, market.gamma()) / market.gamma() * u;
}

nlohmann::json to_json(const MertonBenchmark& b) {
    return {{"u", b.u},
            {"A", b.A},
            {"pi_star", b.pi_star},
            {"c_star", b.c_star},
            {"pi_clipped", b.pi_clipped},
            {"c_clipped", b.c_clipped}};
}

nlohmann::json to_json(const AdmissibilityReport& r) {
    json witnesses = json::array();
    for (const auto& w : r.witnesses) {
        witnesses.push_back({{"y", w.y}, {"condition", w.condition}, {"excess", w.excess}});
    }
    return {{"linear_rate", r.linear_rate},
            {"prefactor_coefficient", r.prefactor_coefficient},
            {"psi_max", r.psi_max},
            {"psi_argmax_y", r.psi_argmax_y},
            {"psi_argmax_theta", r.psi_argmax_theta},
            {"martingale_correction", r.martingale_correction},
            {"total_rate", r.total_rate},
            {"preconditions_hold", r.preconditions_hold},
            {"admissible", r.admissible},
            {"witnesses", witnesses}};
}

} // namespace hjbkit::finance
