#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "hjbkit/model.hpp"

namespace hjbkit {

/// H(y, u, p) = max over δ of i(y,δ)·p + h(y,δ) u + f(y,δ), with its maximizer.
struct HamiltonianValue {
    double value = 0.0;
    std::size_t argmax_index = 0;
    Control argmax;
    /// Margin to the second-best control; +inf for a singleton control list.
    double runner_up_gap = std::numeric_limits<double>::infinity();
};

/// Result of a finite scan: best index, best value, gap to runner-up.
struct ScanResult {
    std::size_t index = 0;
    double value = -std::numeric_limits<double>::infinity();
    double gap = std::numeric_limits<double>::infinity();
};

/// Exact scan over `count` candidates; ties go to the lowest index.
template <typename Objective>
ScanResult scan_max(std::size_t count, Objective&& objective) {
    ScanResult best;
    double second = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < count; ++c) {
        const double v = objective(c);
        if (v > best.value) {
            second = best.value;
            best.value = v;
            best.index = c;
        } else if (v > second) {
            second = v;
        }
    }
    best.gap = count > 1 ? best.value - second : std::numeric_limits<double>::infinity();
    return best;
}

/// Exact scan over the model's control list. Throws EvaluationError naming the
/// control point if a coefficient is non-finite, ParameterError on size mismatch.
HamiltonianValue eval_H(const ControlModel& model, StateView y, double u,
                        std::span<const double> p);

/// One-dimensional variant with per-control upwinding: the gradient used for
/// control δ is `p_forward` when i(y,δ) >= 0 and `p_backward` otherwise.
/// eval_H is the special case p_forward == p_backward.
HamiltonianValue eval_H_upwind(const ControlModel& model, double y, double u, double p_forward,
                               double p_backward);

/// Empirical constants for the Hamiltonian growth bounds on a sample of states:
///   monotone_u  = max h⁺(y,δ)                (H(y,u,p) − H(y,ū,p) <= K (u − ū))
///   lipschitz_p = max |i(y,δ)| / (1 + |y|)   (|H(y,u,p) − H(y,u,p̄)| <= K (1+|y|) |p − p̄|)
struct HamiltonianConstants {
    double monotone_u = 0.0;
    double lipschitz_p = 0.0;
};

HamiltonianConstants empirical_constants(const ControlModel& model,
                                         std::span<const std::vector<double>> states);

} // namespace hjbkit
