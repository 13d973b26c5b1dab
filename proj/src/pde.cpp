#include "hjbkit/pde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "hjbkit/errors.hpp"
#include "hjbkit/hamiltonian.hpp"
#include "hjbkit/kappa.hpp"

namespace hjbkit::pde {
namespace {

constexpr double kCflSlack = 1e-12;

void require_scalar_model(const ControlModel& model) {
    if (model.dim() != 1) {
        throw ParameterError("the grid solver supports one-dimensional models only");
    }
}

/// Coefficients tabulated on grid × controls, plus the stencil evaluation.
class Operator {
public:
    Operator(const ControlModel& model, const Grid1D& grid,
             const std::optional<ControlOverride>& control_override)
        : model_(model), grid_(grid), override_(control_override), nodes_(grid.nodes()),
          controls_(model.control_count()) {
        require_scalar_model(model);
        drift_.resize(nodes_ * controls_);
        rate_.resize(nodes_ * controls_);
        reward_.resize(nodes_ * controls_);
        for (std::size_t j = 0; j < nodes_; ++j) {
            const double y = grid.y(j);
            for (std::size_t c = 0; c < controls_; ++c) {
                const auto& d = model.controls()[c];
                const std::size_t at = j * controls_ + c;
                drift_[at] = model.drift1(y, d);
                rate_[at] = model.discount_rate1(y, d);
                reward_[at] = model.running_reward1(y, d);
                if (!std::isfinite(drift_[at]) || !std::isfinite(rate_[at]) ||
                    !std::isfinite(reward_[at])) {
                    std::ostringstream os;
                    os.precision(17);
                    os << "coefficient is not finite at node " << j << " (y = " << y
                       << "), control index " << c;
                    throw EvaluationError(os.str());
                }
                max_drift_ = std::max(max_drift_, std::abs(drift_[at]));
                max_rate_ = std::max(max_rate_, std::abs(rate_[at]));
            }
        }
    }

    double stability_bound() const {
        const double dy = grid_.spacing();
        return 1.0 / (dy * dy) + max_drift_ / dy + max_rate_;
    }

    std::size_t control_dim() const {
        return override_ ? override_->control_names.size() : model_.control_dim();
    }

    /// rhs = ½ u_yy + H(y, u, u_y) at every node; returns the interior sup-norm.
    /// When `controls` is given, the maximizer at every node is written there.
    double apply(std::span<const double> u, std::span<double> rhs, Stencil stencil,
                 std::vector<double>* controls = nullptr,
                 std::vector<std::size_t>* indices = nullptr) const {
        const double dy = grid_.spacing();
        const double inv_dy2 = 1.0 / (dy * dy);
        const std::size_t k = control_dim();
        if (controls) {
            controls->assign(nodes_ * k, 0.0);
        }
        if (indices) {
            indices->assign(nodes_, PolicyField::npos);
        }
        std::vector<double> chosen(k);
        double sup = 0.0;
        for (std::size_t j = 0; j < nodes_; ++j) {
            double uyy;
            double pf;
            double pb;
            if (j == 0) {
                uyy = (u[0] - 2.0 * u[1] + u[2]) * inv_dy2;
                pf = pb = (u[1] - u[0]) / dy;
            } else if (j + 1 == nodes_) {
                uyy = (u[j] - 2.0 * u[j - 1] + u[j - 2]) * inv_dy2;
                pf = pb = (u[j] - u[j - 1]) / dy;
            } else {
                uyy = (u[j + 1] - 2.0 * u[j] + u[j - 1]) * inv_dy2;
                if (stencil == Stencil::centered) {
                    pf = pb = (u[j + 1] - u[j - 1]) / (2.0 * dy);
                } else {
                    pf = (u[j + 1] - u[j]) / dy;
                    pb = (u[j] - u[j - 1]) / dy;
                }
            }
            double h_value;
            if (override_) {
                h_value = override_->choose(grid_.y(j), u[j], pf, pb, chosen);
                if (!std::isfinite(h_value)) {
                    std::ostringstream os;
                    os.precision(17);
                    os << "control override returned a non-finite value at node " << j
                       << " (y = " << grid_.y(j) << ")";
                    throw EvaluationError(os.str());
                }
                if (controls) {
                    std::copy(chosen.begin(), chosen.end(), controls->begin() + j * k);
                }
            } else {
                const double* drift = drift_.data() + j * controls_;
                const double* rate = rate_.data() + j * controls_;
                const double* reward = reward_.data() + j * controls_;
                const auto scan = scan_max(controls_, [&](std::size_t c) {
                    const double p = drift[c] >= 0.0 ? pf : pb;
                    return drift[c] * p + rate[c] * u[j] + reward[c];
                });
                h_value = scan.value;
                if (controls) {
                    const auto& d = model_.controls()[scan.index];
                    std::copy(d.begin(), d.end(), controls->begin() + j * k);
                }
                if (indices) {
                    (*indices)[j] = scan.index;
                }
            }
            rhs[j] = 0.5 * uyy + h_value;
            if (j > 0 && j + 1 < nodes_) {
                sup = std::max(sup, std::abs(rhs[j]));
            }
        }
        return sup;
    }

private:
    const ControlModel& model_;
    const Grid1D& grid_;
    const std::optional<ControlOverride>& override_;
    std::size_t nodes_;
    std::size_t controls_;
    std::vector<double> drift_;
    std::vector<double> rate_;
    std::vector<double> reward_;
    double max_drift_ = 0.0;
    double max_rate_ = 0.0;
};

void extrapolate(std::vector<double>& u) {
    const std::size_t n = u.size();
    u[0] = 2.0 * u[1] - u[2];
    u[n - 1] = 2.0 * u[n - 2] - u[n - 3];
}

/// Explicit update; throws DivergenceError naming the first bad node.
void step(std::vector<double>& u, std::span<const double> rhs, double dt, Boundary boundary,
          std::size_t step_index) {
    for (std::size_t j = 0; j < u.size(); ++j) {
        u[j] += dt * rhs[j];
        if (!std::isfinite(u[j])) {
            std::ostringstream os;
            os << "non-finite update at node " << j << ", step " << step_index;
            throw DivergenceError(os.str());
        }
    }
    if (boundary == Boundary::linear_extrapolation) {
        extrapolate(u);
    }
}

double sup_norm(std::span<const double> u) {
    double m = 0.0;
    for (double x : u) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

std::vector<std::string> policy_names(const ControlModel& model,
                                      const std::optional<ControlOverride>& control_override) {
    if (control_override) {
        return control_override->control_names;
    }
    std::vector<std::string> names;
    for (std::size_t c = 0; c < model.control_dim(); ++c) {
        names.push_back(model.control_dim() == 1 ? "delta_star"
                                                 : "delta_star_" + std::to_string(c));
    }
    return names;
}

double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void check_stability(double dt, double bound, double horizon_for_steps) {
    if (dt * bound > 1.0 + kCflSlack) {
        const auto min_steps = static_cast<long long>(std::ceil(horizon_for_steps * bound));
        std::ostringstream os;
        os.precision(6);
        os << "time step " << dt << " violates the stability bound (dt * " << bound
           << " = " << dt * bound << " > 1); at least " << min_steps << " steps are required";
        throw StabilityError(os.str(), min_steps);
    }
}

} // namespace

std::string to_string(Boundary boundary) {
    return boundary == Boundary::one_sided ? "one_sided" : "linear_extrapolation";
}

Boundary boundary_from_string(const std::string& name) {
    if (name == "one_sided") {
        return Boundary::one_sided;
    }
    if (name == "linear_extrapolation") {
        return Boundary::linear_extrapolation;
    }
    throw ParameterError("unknown boundary '" + name +
                         "' (expected one_sided or linear_extrapolation)");
}

Grid1D::Grid1D(double y_min, double y_max, std::size_t nodes, Boundary boundary)
    : y_min_(y_min), y_max_(y_max), nodes_(nodes), spacing_(0.0), boundary_(boundary) {
    if (!std::isfinite(y_min) || !std::isfinite(y_max) || !(y_min < y_max)) {
        throw ParameterError("grid requires finite y_min < y_max");
    }
    if (nodes < 3) {
        throw ParameterError("grid requires at least 3 nodes");
    }
    spacing_ = (y_max - y_min) / static_cast<double>(nodes - 1);
}

double Grid1D::y(std::size_t j) const noexcept {
    if (j + 1 == nodes_) {
        return y_max_;
    }
    return y_min_ + static_cast<double>(j) * spacing_;
}

std::vector<double> Grid1D::points() const {
    std::vector<double> out(nodes_);
    for (std::size_t j = 0; j < nodes_; ++j) {
        out[j] = y(j);
    }
    return out;
}

TimeGrid::TimeGrid(double horizon_, std::size_t steps_) : horizon(horizon_), steps(steps_) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw ParameterError("time grid requires a positive horizon");
    }
    if (steps < 1) {
        throw ParameterError("time grid requires at least one step");
    }
}

double ValueField::interpolate(double y, std::size_t layer) const {
    const auto& u = layers.at(layer);
    if (y <= grid.y_min()) {
        return u.front();
    }
    if (y >= grid.y_max()) {
        return u.back();
    }
    const double s = (y - grid.y_min()) / grid.spacing();
    auto j = static_cast<std::size_t>(s);
    j = std::min(j, grid.nodes() - 2);
    const double w = s - static_cast<double>(j);
    return (1.0 - w) * u[j] + w * u[j + 1];
}

double max_stable_dt(const ControlModel& model, const Grid1D& grid) {
    const std::optional<ControlOverride> none;
    return 1.0 / Operator(model, grid, none).stability_bound();
}

std::size_t min_stable_steps(const ControlModel& model, const Grid1D& grid, double horizon) {
    if (!(horizon > 0.0)) {
        throw ParameterError("horizon must be positive");
    }
    const std::optional<ControlOverride> none;
    const double bound = Operator(model, grid, none).stability_bound();
    auto steps = static_cast<std::size_t>(std::ceil(horizon * bound));
    steps = std::max<std::size_t>(steps, 1);
    while (horizon / static_cast<double>(steps) * bound > 1.0 + kCflSlack) {
        ++steps;
    }
    return steps;
}

Solution solve_finite_horizon(const ControlModel& model, const Grid1D& grid,
                              const TimeGrid& time, const SolverOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const Operator op(model, grid, options.control_override);
    const double dt = time.dt();
    const double bound = op.stability_bound();
    check_stability(dt, bound, time.horizon);

    const std::size_t n = grid.nodes();
    std::vector<double> u(n);
    if (options.terminal_values) {
        if (options.terminal_values->size() != n) {
            throw ParameterError("terminal_values must have one entry per grid node");
        }
        u = *options.terminal_values;
    } else {
        for (std::size_t j = 0; j < n; ++j) {
            u[j] = model.terminal_reward1(grid.y(j));
            if (!std::isfinite(u[j])) {
                throw EvaluationError("terminal reward is not finite at node " +
                                      std::to_string(j));
            }
        }
    }

    Solution sol{ValueField{grid, time.horizon, {}, {}}, PolicyField{grid}, SolveReport{}};
    sol.policy.control_dim = op.control_dim();
    sol.policy.continuous = options.control_override.has_value();
    sol.policy.control_names = policy_names(model, options.control_override);

    std::vector<double> rhs(n);
    std::vector<double> controls;
    std::vector<std::size_t> indices;
    auto& report = sol.report;
    report.time_derivative_history.reserve(time.steps);

    // Layer k sits at t_k = k dt; the sweep runs k = steps, ..., 1.
    for (std::size_t s = 0; s < time.steps; ++s) {
        const std::size_t k = time.steps - s;
        const bool retain = options.retain_stride > 0 && s % options.retain_stride == 0;
        const double norm = op.apply(u, rhs, Stencil::upwind, retain ? &controls : nullptr,
                                     retain ? &indices : nullptr);
        report.time_derivative_history.push_back(norm);
        if (retain) {
            const double t = k == time.steps ? time.horizon : static_cast<double>(k) * dt;
            sol.value.time_stamps.push_back(t);
            sol.value.layers.push_back(u);
            sol.policy.time_stamps.push_back(t);
            sol.policy.controls.push_back(controls);
            sol.policy.control_indices.push_back(indices);
        }
        step(u, rhs, dt, grid.boundary(), s);
    }

    const double residual_norm = op.apply(u, rhs, Stencil::upwind, &controls, &indices);
    sol.value.time_stamps.push_back(0.0);
    sol.value.layers.push_back(u);
    sol.policy.time_stamps.push_back(0.0);
    sol.policy.controls.push_back(controls);
    sol.policy.control_indices.push_back(indices);

    std::reverse(sol.value.time_stamps.begin(), sol.value.time_stamps.end());
    std::reverse(sol.value.layers.begin(), sol.value.layers.end());
    std::reverse(sol.policy.time_stamps.begin(), sol.policy.time_stamps.end());
    std::reverse(sol.policy.controls.begin(), sol.policy.controls.end());
    std::reverse(sol.policy.control_indices.begin(), sol.policy.control_indices.end());

    report.boundary = grid.boundary();
    report.dt = dt;
    report.dy = grid.spacing();
    report.steps = time.steps;
    report.cfl_ratio = dt * bound;
    report.residual_norm = residual_norm;
    report.centered_residual_norm = op.apply(u, rhs, Stencil::centered);
    report.time_derivative_norm = report.time_derivative_history.back();
    report.converged = true;
    report.t_final = time.horizon;
    report.wall_time_seconds = elapsed(start);
    return sol;
}

Solution solve_infinite_horizon(const ControlModel& model, const Grid1D& grid, double dt,
                                double tol_dt, double t_max, const SolverOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    if (!(dt > 0.0) || !(tol_dt > 0.0) || !(t_max > 0.0)) {
        throw ParameterError("infinite-horizon solve requires dt, tol_dt, t_max > 0");
    }
    const Operator op(model, grid, options.control_override);
    const double bound = op.stability_bound();
    check_stability(dt, bound, t_max);

    const std::size_t n = grid.nodes();
    std::vector<double> v(n, 0.0);
    std::vector<double> rhs(n);
    SolveReport report;
    std::size_t steps = 0;
    bool converged = false;
    double norm = 0.0;
    for (;;) {
        norm = op.apply(v, rhs, Stencil::upwind);
        report.time_derivative_history.push_back(norm);
        if (norm < tol_dt) {
            converged = true;
            break;
        }
        if (static_cast<double>(steps + 1) * dt > t_max * (1.0 + 1e-12)) {
            break;
        }
        step(v, rhs, dt, grid.boundary(), steps);
        ++steps;
        if (sup_norm(v) > options.overflow_guard) {
            std::ostringstream os;
            os << "value exceeded the overflow guard " << options.overflow_guard << " at t = "
               << static_cast<double>(steps) * dt
               << "; the discounted reward moments are likely not integrable for this model";
            throw DivergenceError(os.str());
        }
    }

    Solution sol{ValueField{grid, static_cast<double>(steps) * dt, {0.0}, {v}},
                 PolicyField{grid}, SolveReport{}};
    sol.policy.control_dim = op.control_dim();
    sol.policy.continuous = options.control_override.has_value();
    sol.policy.control_names = policy_names(model, options.control_override);
    std::vector<double> controls;
    std::vector<std::size_t> indices;
    report.residual_norm = op.apply(v, rhs, Stencil::upwind, &controls, &indices);
    sol.policy.time_stamps = {0.0};
    sol.policy.controls = {controls};
    sol.policy.control_indices = {indices};

    report.boundary = grid.boundary();
    report.dt = dt;
    report.dy = grid.spacing();
    report.steps = steps;
    report.cfl_ratio = dt * bound;
    report.centered_residual_norm = op.apply(v, rhs, Stencil::centered);
    report.time_derivative_norm = norm;
    report.converged = converged;
    report.t_final = static_cast<double>(steps) * dt;
    report.wall_time_seconds = elapsed(start);
    sol.report = std::move(report);
    return sol;
}

ResidualField residual(const ControlModel& model, const ValueField& field, Stencil stencil,
                       const std::optional<ControlOverride>& control_override) {
    if (field.layers.size() != 1) {
        throw ParameterError("residual expects a single-layer (stationary) field");
    }
    const Operator op(model, field.grid, control_override);
    const auto& v = field.layers.front();
    std::vector<double> rhs(v.size());
    ResidualField out;
    out.max_abs = op.apply(v, rhs, stencil);
    for (std::size_t j = 1; j + 1 < v.size(); ++j) {
        out.y.push_back(field.grid.y(j));
        out.values.push_back(rhs[j]);
    }
    return out;
}

BoundCheckReport gradient_bound_check(const ValueField& field, const KappaTable& kappa, double L1,
                                      double L2) {
    if (kappa.t.empty() || kappa.t.front() != 0.0) {
        throw ParameterError("the kappa table must start at t = 0");
    }
    if (!(L1 > 0.0) || L2 == 0.0) {
        throw ParameterError("gradient_bound_check requires L1 > 0 and L2 != 0");
    }
    const double t_end = kappa.t.back();
    const auto& grid = field.grid;
    BoundCheckReport rep;
    rep.worst_value_slack = std::numeric_limits<double>::infinity();
    rep.worst_gradient_slack = std::numeric_limits<double>::infinity();
    const double gradient_factor = L1 + L1 / std::abs(L2);
    const double growth = std::max(L2, 0.0);
    for (std::size_t l = 0; l < field.layers.size(); ++l) {
        const double t = field.time_stamps[l];
        const double tau = field.horizon - t;
        if (tau > t_end * (1.0 + 1e-12)) {
            throw ParameterError("the kappa table does not cover the field's horizon");
        }
        const double tail = std::min(tau, t_end);
        const double value_bound = kappa.integrate_kappa(0.0, tail) + kappa.p_at(tail);
        const double gradient_bound =
            gradient_factor * (kappa.integrate_kappa(0.0, tail, L2) +
                               std::exp(growth * tail) * kappa.p_at(tail));
        const auto& u = field.layers[l];
        for (std::size_t j = 0; j < grid.nodes(); ++j) {
            const double y = grid.y(j);
            if (std::abs(y) > kappa.radius) {
                continue;
            }
            ++rep.nodes_checked;
            const double value_slack = value_bound - std::abs(u[j]);
            if (value_slack < rep.worst_value_slack) {
                rep.worst_value_slack = value_slack;
                rep.value_bound_at_worst = value_bound;
                rep.worst_value_y = y;
                rep.worst_value_t = t;
            }
            if (j == 0 || j + 1 == grid.nodes()) {
                continue;
            }
            const double gradient = (u[j + 1] - u[j - 1]) / (2.0 * grid.spacing());
            const double gradient_slack = gradient_bound - std::abs(gradient);
            if (gradient_slack < rep.worst_gradient_slack) {
                rep.worst_gradient_slack = gradient_slack;
                rep.gradient_bound_at_worst = gradient_bound;
                rep.worst_gradient_y = y;
                rep.worst_gradient_t = t;
            }
        }
    }
    if (rep.nodes_checked == 0) {
        throw ParameterError("no grid node lies inside the kappa table's ball");
    }
    const auto met = [](double slack, double bound) {
        return slack >= -1e-9 * std::max(1.0, std::abs(bound));
    };
    const bool ok = met(rep.worst_value_slack, rep.value_bound_at_worst) &&
                    (std::isinf(rep.worst_gradient_slack) ||
                     met(rep.worst_gradient_slack, rep.gradient_bound_at_worst));
    rep.status = ok ? "met" : "inconclusive";
    return rep;
}

nlohmann::json to_json(const SolveReport& report, bool include_timing) {
    nlohmann::json j{
        {"scheme", report.scheme},
        {"boundary", to_string(report.boundary)},
        {"dt", report.dt},
        {"dy", report.dy},
        {"steps", report.steps},
        {"cfl_ratio", report.cfl_ratio},
        {"residual_norm", report.residual_norm},
        {"centered_residual_norm", report.centered_residual_norm},
        {"time_derivative_norm", report.time_derivative_norm},
        {"converged", report.converged},
        {"t_final", report.t_final},
    };
    if (include_timing) {
        j["wall_time_seconds"] = report.wall_time_seconds;
    }
    return j;
}

nlohmann::json to_json(const BoundCheckReport& report) {
    return {
        {"status", report.status},
        {"worst_value_slack", report.worst_value_slack},
        {"worst_gradient_slack",
         std::isinf(report.worst_gradient_slack) ? nlohmann::json(nullptr)
                                                 : nlohmann::json(report.worst_gradient_slack)},
        {"value_bound_at_worst", report.value_bound_at_worst},
        {"gradient_bound_at_worst", report.gradient_bound_at_worst},
        {"worst_value_y", report.worst_value_y},
        {"worst_value_t", report.worst_value_t},
        {"worst_gradient_y", report.worst_gradient_y},
        {"worst_gradient_t", report.worst_gradient_t},
        {"nodes_checked", report.nodes_checked},
    };
}

} // namespace hjbkit::pde
