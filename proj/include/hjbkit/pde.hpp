#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hjbkit/model.hpp"

namespace hjbkit {
struct KappaTable;
}

namespace hjbkit::pde {

/// Treatment of the two artificial boundary nodes.
///   one_sided             the boundary node evolves with one-sided first and
///                         second differences taken from the inward neighbours
///   linear_extrapolation  u_0 = 2u_1 − u_2 (zero second derivative) after each step
enum class Boundary { one_sided, linear_extrapolation };

std::string to_string(Boundary boundary);
Boundary boundary_from_string(const std::string& name);

class Grid1D {
public:
    Grid1D(double y_min, double y_max, std::size_t nodes,
           Boundary boundary = Boundary::one_sided);

    double y_min() const noexcept { return y_min_; }
    double y_max() const noexcept { return y_max_; }
    std::size_t nodes() const noexcept { return nodes_; }
    double spacing() const noexcept { return spacing_; }
    Boundary boundary() const noexcept { return boundary_; }
    double y(std::size_t j) const noexcept;
    std::vector<double> points() const;

private:
    double y_min_;
    double y_max_;
    std::size_t nodes_;
    double spacing_;
    Boundary boundary_;
};

struct TimeGrid {
    double horizon;
    std::size_t steps;

    TimeGrid(double horizon, std::size_t steps);
    double dt() const noexcept { return horizon / static_cast<double>(steps); }
};

/// Value samples u(y, t) on a grid; layers are sorted by increasing time stamp.
struct ValueField {
    Grid1D grid;
    /// Horizon T of the problem the field belongs to (t_final for infinite-horizon fields).
    double horizon = 0.0;
    std::vector<double> time_stamps;
    std::vector<std::vector<double>> layers;

    const std::vector<double>& earliest() const { return layers.front(); }
    /// Linear interpolation in y on one layer; clamps to the end nodes.
    double interpolate(double y, std::size_t layer = 0) const;
};

/// Maximizing control at every node of every retained slice.
struct PolicyField {
    Grid1D grid;
    std::size_t control_dim = 0;
    std::vector<double> time_stamps;
    /// controls[s][j * control_dim + c]
    std::vector<std::vector<double>> controls;
    /// Index into the model's control list, or npos when a control override chose the point.
    std::vector<std::vector<std::size_t>> control_indices;
    /// True when controls come from a closed-form override (may lie between grid points).
    bool continuous = false;
    std::vector<std::string> control_names;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::span<const double> at(std::size_t slice, std::size_t node) const {
        return {controls[slice].data() + node * control_dim, control_dim};
    }
};

/// Replaces the finite control scan at a node. Receives the state, the value and
/// the forward/backward differences; writes the chosen control into `control`
/// and returns max over its candidates of the upwinded i·p + h u + f.
struct ControlOverride {
    std::function<double(double y, double u, double p_forward, double p_backward,
                         std::span<double> control)>
        choose;
    std::vector<std::string> control_names;
};

struct SolverOptions {
    /// Retain every `retain_stride`-th time layer in addition to t = 0 (0: t = 0 only).
    std::size_t retain_stride = 0;
    /// Terminal layer on the grid in place of g (finite horizon only).
    std::optional<std::vector<double>> terminal_values;
    std::optional<ControlOverride> control_override;
    /// Sup-norm of the value beyond which a solve is reported as divergent.
    double overflow_guard = 1e12;
};

struct SolveReport {
    std::string scheme = "explicit-euler/upwind";
    Boundary boundary = Boundary::one_sided;
    double dt = 0.0;
    double dy = 0.0;
    std::size_t steps = 0;
    /// dt · (1/dy² + max|i|/dy + max|h|); <= 1 by construction.
    double cfl_ratio = 0.0;
    /// Max interior |residual| of the returned earliest layer (upwind stencil).
    double residual_norm = 0.0;
    /// Same with centered first differences.
    double centered_residual_norm = 0.0;
    /// Sup-norm over interior nodes of the last discrete time derivative.
    double time_derivative_norm = 0.0;
    bool converged = true;
    double t_final = 0.0;
    double wall_time_seconds = 0.0;
    /// Discrete time-derivative sup-norm after every step.
    std::vector<double> time_derivative_history;
};

struct Solution {
    ValueField value;
    PolicyField policy;
    SolveReport report;
};

/// Largest stable time step for the explicit scheme on this grid.
double max_stable_dt(const ControlModel& model, const Grid1D& grid);
/// Fewest steps over `horizon` satisfying the stability bound.
std::size_t min_stable_steps(const ControlModel& model, const Grid1D& grid, double horizon);

/// Backward sweep from u(·,T) = g (or options.terminal_values) to t = 0.
/// Throws StabilityError (carrying the minimal step count) if the step is too
/// large, DivergenceError on a non-finite update.
Solution solve_finite_horizon(const ControlModel& model, const Grid1D& grid,
                              const TimeGrid& time, const SolverOptions& options = {});

/// Forward march of v_t = ½ v_yy + max_δ(i v_y + h v + f) from v = 0 until the
/// interior sup-norm of v_t drops below tol_dt or t_max is reached
/// (report.converged = false). Throws DivergenceError past the overflow guard.
Solution solve_infinite_horizon(const ControlModel& model, const Grid1D& grid, double dt,
                                double tol_dt, double t_max, const SolverOptions& options = {});

enum class Stencil { centered, upwind };

struct ResidualField {
    std::vector<double> y;
    std::vector<double> values;
    double max_abs = 0.0;
};

/// ½ v_yy + H(y, v, v_y) at interior nodes of a single-layer field.
ResidualField residual(const ControlModel& model, const ValueField& field,
                       Stencil stencil = Stencil::centered,
                       const std::optional<ControlOverride>& control_override = std::nullopt);

struct BoundCheckReport {
    /// "met" or "inconclusive" (the κ table is a sampled lower envelope).
    std::string status;
    double worst_value_slack = 0.0;
    double worst_gradient_slack = 0.0;
    double value_bound_at_worst = 0.0;
    double gradient_bound_at_worst = 0.0;
    double worst_value_y = 0.0;
    double worst_value_t = 0.0;
    double worst_gradient_y = 0.0;
    double worst_gradient_t = 0.0;
    std::size_t nodes_checked = 0;
};

/// Node-by-node check, inside B(0, n), of
///   |u(y,t)|   <= ∫_0^{T−t} κ ds + p(T−t)
///   |∇u(y,t)|  <= (L1 + L1/|L2|) (∫_0^{T−t} max{1, e^{L2 s}} κ ds + max{1, e^{L2 (T−t)}} p(T−t))
/// with κ, p interpolated linearly from the table (which must start at t = 0).
BoundCheckReport gradient_bound_check(const ValueField& field, const KappaTable& kappa,
                                      double L1, double L2);

nlohmann::json to_json(const SolveReport& report, bool include_timing = false);
nlohmann::json to_json(const BoundCheckReport& report);

} // namespace hjbkit::pde
