#include "hjbkit/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "hjbkit/errors.hpp"

namespace hjbkit {
namespace {

using nlohmann::json;

std::vector<double> read_array(const json& d, const char* key, std::size_t expected,
                               const std::string& kind) {
    if (!d.contains(key)) {
        return std::vector<double>(expected, 0.0);
    }
    auto values = d.at(key).get<std::vector<double>>();
    if (values.size() != expected) {
        throw ParameterError(kind + " descriptor: '" + key + "' has " +
                             std::to_string(values.size()) + " entries, expected " +
                             std::to_string(expected));
    }
    return values;
}

double read_number(const json& d, const char* key, double fallback) {
    return d.contains(key) ? d.at(key).get<double>() : fallback;
}

std::size_t read_axis(const json& d, std::size_t dim, const std::string& kind) {
    const auto axis = d.contains("axis") ? d.at("axis").get<std::size_t>() : 0;
    if (axis >= dim) {
        throw ParameterError(kind + " descriptor: axis " + std::to_string(axis) +
                             " out of range for dimension " + std::to_string(dim));
    }
    return axis;
}

// Integer exponents use repeated multiplication so that negative bases stay finite.
double power(double base, double exponent) {
    if (exponent == 1.0) {
        return base;
    }
    if (exponent == 2.0) {
        return base * base;
    }
    const double rounded = std::round(exponent);
    if (rounded == exponent && std::abs(exponent) <= 64.0) {
        auto n = static_cast<int>(std::abs(rounded));
        double result = 1.0;
        double b = base;
        while (n > 0) {
            if (n & 1) {
                result *= b;
            }
            b *= b;
            n >>= 1;
        }
        return exponent < 0 ? 1.0 / result : result;
    }
    return std::pow(base, exponent);
}

struct Factor {
    std::size_t index;
    double exponent;
};

/// Polynomial term with the zero exponents dropped.
struct Term {
    double coef;
    std::vector<Factor> state;
    std::vector<Factor> control;
};

std::vector<Factor> nonzero(const std::vector<double>& powers) {
    std::vector<Factor> out;
    for (std::size_t i = 0; i < powers.size(); ++i) {
        if (powers[i] != 0.0) {
            out.push_back({i, powers[i]});
        }
    }
    return out;
}

ScalarMap compile(const json& d, std::size_t dim, std::size_t control_dim, bool allow_control) {
    if (!d.is_object() || !d.contains("kind")) {
        throw ParameterError("coefficient descriptor must be an object with a 'kind' field");
    }
    const auto kind = d.at("kind").get<std::string>();

    if (kind == "constant") {
        const double value = d.at("value").get<double>();
        return [value](StateView, ControlView) { return value; };
    }
    if (kind == "affine") {
        const double offset = read_number(d, "offset", 0.0);
        auto state = read_array(d, "state", dim, kind);
        auto control = read_array(d, "control", control_dim, kind);
        if (!allow_control && std::any_of(control.begin(), control.end(),
                                          [](double c) { return c != 0.0; })) {
            throw ParameterError("terminal descriptor may not depend on the control");
        }
        return [offset, state = std::move(state), control = std::move(control)](StateView y,
                                                                                ControlView u) {
            double value = offset;
            for (std::size_t i = 0; i < state.size(); ++i) {
                value += state[i] * y[i];
            }
            for (std::size_t j = 0; j < control.size() && j < u.size(); ++j) {
                value += control[j] * u[j];
            }
            return value;
        };
    }
    if (kind == "polynomial") {
        std::vector<Term> terms;
        for (const auto& t : d.at("terms")) {
            Term term{t.at("coef").get<double>(), nonzero(read_array(t, "state_powers", dim, kind)),
                      nonzero(read_array(t, "control_powers", control_dim, kind))};
            if (!allow_control && !term.control.empty()) {
                throw ParameterError("terminal descriptor may not depend on the control");
            }
            terms.push_back(std::move(term));
        }
        return [terms = std::move(terms)](StateView y, ControlView u) {
            double value = 0.0;
            for (const auto& term : terms) {
                double product = term.coef;
                for (const auto& f : term.state) {
                    product *= power(y[f.index], f.exponent);
                }
                for (const auto& f : term.control) {
                    if (f.index < u.size()) {
                        product *= power(u[f.index], f.exponent);
                    }
                }
                value += product;
            }
            return value;
        };
    }
    if (kind == "radial") {
        const double offset = read_number(d, "offset", 0.0);
        const double scale = read_number(d, "scale", 1.0);
        return [offset, scale](StateView y, ControlView) {
            double sq = 0.0;
            for (double v : y) {
                sq += v * v;
            }
            return offset + scale * std::sqrt(sq);
        };
    }
    if (kind == "sin") {
        const double amplitude = read_number(d, "amplitude", 1.0);
        const double frequency = read_number(d, "frequency", 1.0);
        const double phase = read_number(d, "phase", 0.0);
        const auto axis = read_axis(d, dim, kind);
        return [=](StateView y, ControlView) {
            return amplitude * std::sin(frequency * y[axis] + phase);
        };
    }
    if (kind == "tabulated") {
        auto nodes = d.at("nodes").get<std::vector<double>>();
        auto values = d.at("values").get<std::vector<double>>();
        const auto axis = read_axis(d, dim, kind);
        if (nodes.size() < 2 || nodes.size() != values.size()) {
            throw ParameterError("tabulated descriptor needs >= 2 nodes and matching values");
        }
        if (!std::is_sorted(nodes.begin(), nodes.end()) ||
            std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end()) {
            throw ParameterError("tabulated descriptor nodes must be strictly increasing");
        }
        return [nodes = std::move(nodes), values = std::move(values), axis](StateView y,
                                                                           ControlView) {
            const double x = y[axis];
            if (x <= nodes.front()) {
                return values.front();
            }
            if (x >= nodes.back()) {
                return values.back();
            }
            const auto hi = static_cast<std::size_t>(
                std::upper_bound(nodes.begin(), nodes.end(), x) - nodes.begin());
            const auto lo = hi - 1;
            const double w = (x - nodes[lo]) / (nodes[hi] - nodes[lo]);
            return (1.0 - w) * values[lo] + w * values[hi];
        };
    }
    if (kind == "sum" || kind == "product") {
        const char* key = kind == "sum" ? "terms" : "factors";
        std::vector<ScalarMap> parts;
        for (const auto& part : d.at(key)) {
            parts.push_back(compile(part, dim, control_dim, allow_control));
        }
        if (parts.empty()) {
            throw ParameterError(kind + " descriptor has no " + key);
        }
        if (kind == "sum") {
            return [parts = std::move(parts)](StateView y, ControlView u) {
                double value = 0.0;
                for (const auto& p : parts) {
                    value += p(y, u);
                }
                return value;
            };
        }
        return [parts = std::move(parts)](StateView y, ControlView u) {
            double value = 1.0;
            for (const auto& p : parts) {
                value *= p(y, u);
            }
            return value;
        };
    }
    throw ParameterError("unknown coefficient kind '" + kind + "'");
}

} // namespace

ScalarMap compile_scalar(const nlohmann::json& descriptor, std::size_t dim,
                         std::size_t control_dim) {
    return compile(descriptor, dim, control_dim, true);
}

TerminalMap compile_terminal(const nlohmann::json& descriptor, std::size_t dim) {
    auto map = compile(descriptor, dim, 0, false);
    return [map = std::move(map)](StateView y) { return map(y, ControlView{}); };
}

DriftMap compile_drift(const nlohmann::json& descriptor, std::size_t dim,
                       std::size_t control_dim) {
    std::vector<ScalarMap> components;
    if (descriptor.is_array()) {
        if (descriptor.size() != dim) {
            throw ParameterError("drift descriptor array has " +
                                 std::to_string(descriptor.size()) + " components, expected " +
                                 std::to_string(dim));
        }
        for (const auto& c : descriptor) {
            components.push_back(compile_scalar(c, dim, control_dim));
        }
    } else {
        if (dim != 1) {
            throw ParameterError("drift for dimension > 1 must be an array of descriptors");
        }
        components.push_back(compile_scalar(descriptor, dim, control_dim));
    }
    return [components = std::move(components)](StateView y, ControlView u, std::span<double> out) {
        for (std::size_t i = 0; i < components.size(); ++i) {
            out[i] = components[i](y, u);
        }
    };
}

} // namespace hjbkit
