#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include <nlohmann/json.hpp>

namespace hjbkit {

using StateView = std::span<const double>;
using ControlView = std::span<const double>;

/// ζ(y, δ) -> scalar (discount rate h, running reward f).
using ScalarMap = std::function<double(StateView, ControlView)>;
/// g(y) -> scalar.
using TerminalMap = std::function<double(StateView)>;
/// i(y, δ) -> R^N, written into `out`.
using DriftMap = std::function<void(StateView, ControlView, std::span<double>)>;

/// Compile a coefficient descriptor into an evaluator.
///
/// Descriptors are JSON objects with a `kind` field:
///
///   constant    {"value": c}
///   affine      {"offset": c, "state": [a_1..a_N], "control": [b_1..b_k]}
///                 c + a·y + b·δ; missing arrays are zero
///   polynomial  {"terms": [{"coef": c, "state_powers": [..], "control_powers": [..]}]}
///                 sum of c Π y_i^p_i Π δ_j^q_j; real exponents allowed
///   radial      {"offset": c, "scale": s}        c + s |y|
///   sin         {"amplitude": a, "frequency": w, "phase": φ, "axis": j}
///                 a sin(w y_j + φ)
///   tabulated   {"nodes": [..], "values": [..], "axis": j}
///                 piecewise linear in y_j, constant beyond the end nodes
///   sum         {"terms": [descriptor, ...]}
///   product     {"factors": [descriptor, ...]}
///
/// Throws ParameterError on malformed descriptors.
ScalarMap compile_scalar(const nlohmann::json& descriptor, std::size_t dim,
                         std::size_t control_dim);

/// Terminal descriptors use the same grammar; control references are rejected.
TerminalMap compile_terminal(const nlohmann::json& descriptor, std::size_t dim);

/// A drift descriptor is either one scalar descriptor (dim == 1) or an
/// array of `dim` scalar descriptors, one per state component.
DriftMap compile_drift(const nlohmann::json& descriptor, std::size_t dim,
                       std::size_t control_dim);

} // namespace hjbkit
