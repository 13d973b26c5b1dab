#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "hjbkit/model.hpp"
#include "hjbkit/pde.hpp"

namespace hjbkit {
struct KappaTable;
}

namespace hjbkit::mc {

struct MonteCarloConfig {
    std::size_t paths = 10000;
    /// Euler step; the horizon is split into round(T / dt) equal steps.
    double dt = 1e-3;
    std::uint64_t seed = 0;
    /// Pair path 2m+1 with path 2m using negated increments.
    bool antithetic = false;
    /// Worker threads; results do not depend on this value.
    std::size_t threads = 1;
    /// Keep ∫h per path in EstimatorResult (diagnostics).
    bool keep_path_log = false;
    /// Fraction of excluded (non-finite) paths above which a run fails.
    double exclusion_budget = 1e-3;

    void validate() const;
};

/// Feedback control δ(y, t), written into `control` (length model.control_dim()).
using FeedbackPolicy = std::function<void(StateView y, double t, std::span<double> control)>;

FeedbackPolicy constant_policy(Control control);

/// Policy read from a solved PolicyField: at time t the slice with the smallest
/// time stamp >= t is used (the slice the explicit scheme applied over that
/// step); in y, linear interpolation when the field is continuous, else the
/// nearest node so that the control stays in the model's list.
FeedbackPolicy field_policy(const pde::PolicyField& field);

/// Per-path observations at the requested record times.
struct PathBatch {
    std::size_t paths = 0;
    std::size_t dim = 0;
    std::size_t control_dim = 0;
    std::size_t steps = 0;
    double dt = 0.0;
    double t0 = 0.0;
    std::vector<double> record_times;
    /// [(path * R + r) * dim + i]
    std::vector<double> states;
    /// policy(Y_t, t) at each record time: [(path * R + r) * control_dim + c]
    std::vector<double> controls;
    /// ∫_{t0}^{t} h ds  [path * R + r]
    std::vector<double> log_discount;
    /// ∫_{t0}^{t} e^{∫h} f ds  [path * R + r]
    std::vector<double> reward;
    std::vector<std::uint8_t> excluded;
    std::size_t exclusions = 0;

    std::size_t records() const noexcept { return record_times.size(); }
    std::span<const double> state(std::size_t path, std::size_t r) const {
        return {states.data() + (path * records() + r) * dim, dim};
    }
    std::span<const double> control(std::size_t path, std::size_t r) const {
        return {controls.data() + (path * records() + r) * control_dim, control_dim};
    }
};

/// Euler–Maruyama with unit diffusion from (t0, y0) to T. Left-endpoint
/// quadrature for ∫h and ∫e^{∫h} f. Record times must lie on the step lattice
/// (defaults to {T}). Bit-reproducible for fixed (seed, paths, dt) regardless
/// of thread count. Throws ExclusionError past the exclusion budget.
PathBatch simulate_paths(const ControlModel& model, const FeedbackPolicy& policy, StateView y0,
                         double T, const MonteCarloConfig& mc,
                         std::span<const double> record_times = {}, double t0 = 0.0);

struct EstimatorResult {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t paths = 0;
    std::size_t exclusions = 0;
    std::uint64_t seed = 0;
    double horizon = 0.0;
    std::vector<double> path_log_discount;
};

/// Mean and standard error of per-path samples with a deterministic pairwise
/// reduction; antithetic pairs are averaged before the variance is taken.
EstimatorResult summarize(std::span<const double> samples, std::span<const std::uint8_t> excluded,
                          bool antithetic);

/// E_{y0,t}[∫_t^T e^{∫h} f ds + e^{∫h} g(Y_T)].
EstimatorResult estimate_value(const ControlModel& model, const FeedbackPolicy& policy,
                               StateView y0, double t, double T, const MonteCarloConfig& mc);

/// Coupled starts driven by the same increments.
struct ContractionStats {
    std::vector<double> times;
    /// max over paths of |Y_t(y0) − Y_t(ȳ0)| / (|y0 − ȳ0| e^{L2 t})
    std::vector<double> max_ratio;
    /// Same against the Euler analogue (1 + L2 dt)^n of e^{L2 t}.
    std::vector<double> max_ratio_discrete;
    std::vector<double> max_distance;
    double worst_ratio = 0.0;
    double worst_ratio_discrete = 0.0;
    std::size_t paths = 0;
    std::size_t exclusions = 0;
};

ContractionStats coupled_contraction(const ControlModel& model, const FeedbackPolicy& policy,
                                     StateView y0, StateView y0_bar, double T,
                                     const MonteCarloConfig& mc);

/// E e^{∫h} <= e^{Q y⁺/α} e^{(−P + Qβ/α + Q²/(2α²)) t}  (N = 1).
struct GaussianDiscountBound {
    double alpha;
    double beta;
    double P;
    double Q;
};
/// E e^{∫h} f(Y_t) <= L1 e^{−w t} (1 + |y| e^{L2 t}).
/// With ito_corrected, |y| e^{L2 t} becomes sqrt(|y|² e^{2 L2 t} + N (1 − e^{2 L2 t}) / (−2 L2)),
/// the second-moment bound including the diffusion term.
struct NegativeDiscountBound {
    double w;
    double L1;
    double L2;
    bool ito_corrected = false;
};
/// E e^{∫h} φ <= K e^{M |y|} for φ ∈ {|f|, |g|, 1}, each tested separately.
struct ExponentialEnvelopeBound {
    double K;
    double M;
};
using BoundSpec = std::variant<GaussianDiscountBound, NegativeDiscountBound, ExponentialEnvelopeBound>;

std::string bound_name(const BoundSpec& spec);
/// Right-hand side at (y0, t).
double bound_value(const BoundSpec& spec, StateView y0, double t);

struct BoundPoint {
    std::size_t control_index = 0;
    double t = 0.0;
    std::string factor;
    double estimate = 0.0;
    double standard_error = 0.0;
    double bound = 0.0;
    /// (bound · (1 + 3 SE/|estimate|) − estimate) / bound; negative when violated.
    double margin = 0.0;
    bool met = true;
};

struct BoundReport {
    std::string bound;
    std::vector<double> y0;
    std::vector<BoundPoint> points;
    double worst_margin = 0.0;
    bool met = true;
};

/// Estimate the left-hand side under each constant control at every time in
/// `times`, and check estimate <= bound · (1 + 3 · relative SE).
BoundReport verify_bounds(const ControlModel& model, const BoundSpec& spec, StateView y0,
                          std::span<const double> times, const MonteCarloConfig& mc);

struct HorizonConvergenceReport {
    std::vector<double> horizons;
    std::vector<EstimatorResult> estimates;
    /// est(T_{j+1}) − est(T_j), and the standard error of the per-path difference.
    std::vector<double> differences;
    std::vector<double> difference_se;
    /// |differences| strictly decreasing.
    bool shrinking = false;
    std::optional<double> kappa_tail;
    bool final_within_tail = true;
    bool converged = false;
};

/// Running-reward estimates ∫_0^{T_j} e^{∫h} f ds for increasing horizons from
/// one set of paths (common random numbers). With a κ table, the last
/// difference is compared against ∫_{T_{m−1}}^{T_m} κ dt + 3 SE.
HorizonConvergenceReport horizon_convergence(const ControlModel& model,
                                             const FeedbackPolicy& policy, StateView y0,
                                             std::span<const double> horizons,
                                             const MonteCarloConfig& mc,
                                             const KappaTable* kappa = nullptr);

nlohmann::json to_json(const EstimatorResult& result);
nlohmann::json to_json(const ContractionStats& stats);
nlohmann::json to_json(const BoundReport& report);
nlohmann::json to_json(const HorizonConvergenceReport& report);

/// Number of equal Euler steps used over `span`: round(span/dt) when that is
/// within 1e-9 relative of an integer, else ceil(span/dt).
std::size_t lattice_steps(double span, double dt);

/// Deterministic pairwise sum.
double pairwise_sum(std::span<const double> values) noexcept;

} // namespace hjbkit::mc
