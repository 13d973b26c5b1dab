#include "hjbkit/hamiltonian.hpp"

#include <cmath>
#include <sstream>

#include "hjbkit/errors.hpp"

namespace hjbkit {
namespace {

[[noreturn]] void non_finite(const Control& d, double y0) {
    std::ostringstream os;
    os.precision(17);
    os << "Hamiltonian term is not finite for control (";
    for (std::size_t j = 0; j < d.size(); ++j) {
        os << (j ? ", " : "") << d[j];
    }
    os << ") at y[0] = " << y0;
    throw EvaluationError(os.str());
}

HamiltonianValue finish(const ControlModel& model, const ScanResult& scan) {
    return {scan.value, scan.index, model.controls()[scan.index], scan.gap};
}

} // namespace

HamiltonianValue eval_H(const ControlModel& model, StateView y, double u,
                        std::span<const double> p) {
    if (y.size() != model.dim() || p.size() != model.dim()) {
        throw ParameterError("eval_H: y and p must have length dim()");
    }
    std::vector<double> drift(model.dim());
    const auto scan = scan_max(model.control_count(), [&](std::size_t c) {
        const auto& d = model.controls()[c];
        model.drift(y, d, drift);
        double value = model.discount_rate(y, d) * u + model.running_reward(y, d);
        for (std::size_t i = 0; i < drift.size(); ++i) {
            value += drift[i] * p[i];
        }
        if (!std::isfinite(value)) {
            non_finite(d, y[0]);
        }
        return value;
    });
    return finish(model, scan);
}

HamiltonianValue eval_H_upwind(const ControlModel& model, double y, double u, double p_forward,
                               double p_backward) {
    if (model.dim() != 1) {
        throw ParameterError("eval_H_upwind requires a one-dimensional model");
    }
    const auto scan = scan_max(model.control_count(), [&](std::size_t c) {
        const auto& d = model.controls()[c];
        const double drift = model.drift1(y, d);
        const double p = drift >= 0.0 ? p_forward : p_backward;
        const double value = drift * p + model.discount_rate1(y, d) * u + model.running_reward1(y, d);
        if (!std::isfinite(value)) {
            non_finite(d, y);
        }
        return value;
    });
    return finish(model, scan);
}

HamiltonianConstants empirical_constants(const ControlModel& model,
                                         std::span<const std::vector<double>> states) {
    HamiltonianConstants k;
    std::vector<double> drift(model.dim());
    for (const auto& y : states) {
        const double growth = 1.0 + norm(y);
        for (const auto& d : model.controls()) {
            k.monotone_u = std::max(k.monotone_u, model.discount_rate(y, d));
            model.drift(y, d, drift);
            k.lipschitz_p = std::max(k.lipschitz_p, norm(drift) / growth);
        }
    }
    return k;
}

} // namespace hjbkit
