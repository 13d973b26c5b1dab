#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "hjbkit/model.hpp"

namespace fixtures {

using nlohmann::json;

inline json constant(double v) { return {{"kind", "constant"}, {"value", v}}; }

/// offset + slope * y (scalar state), plus control coefficients when given.
inline json affine(double offset, double slope, std::vector<double> control = {}) {
    json d{{"kind", "affine"}, {"offset", offset}, {"state", {slope}}};
    if (!control.empty()) {
        d["control"] = control;
    }
    return d;
}

inline json controls(std::vector<double> points) {
    json out = json::array();
    for (double p : points) {
        out.push_back(json::array({p}));
    }
    return out;
}

inline json model_doc(json drift, json h, json f, json g, json ctrl = controls({0.0}),
                      double L1 = 1.0, double L2 = -1.0) {
    return {{"dim", 1},          {"controls", ctrl}, {"drift", drift},
            {"discount_rate", h}, {"running_reward", f}, {"terminal_reward", g},
            {"L1", L1},          {"L2", L2}};
}

inline hjbkit::ControlModel model(json drift, json h, json f, json g, json ctrl = controls({0.0}),
                                  double L1 = 1.0, double L2 = -1.0) {
    return hjbkit::ControlModel::from_json(model_doc(drift, h, f, g, ctrl, L1, L2));
}

/// f ≡ f0, h ≡ h0, g ≡ g0, drift −y.
inline hjbkit::ControlModel constant_rate(double f0, double h0, double g0) {
    return model(affine(0, -1), constant(h0), constant(f0), constant(g0));
}

inline const nlohmann::json kMertonMarket{
    {"short_rate", 0.02},  {"excess_drift", 0.04},   {"volatility", 0.2},
    {"factor_drift", {{"kind", "affine"}, {"state", {-1.0}}}},
    {"correlation", -0.5}, {"risk_aversion", 0.5},   {"discount", 0.1},
    {"position_cap", 3.0}, {"consumption_cap", 1.0}, {"L1", 1.0},
    {"L2", -1.0}};

} // namespace fixtures
