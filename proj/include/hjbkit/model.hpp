#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hjbkit/coefficients.hpp"

namespace hjbkit {

/// A control point δ ∈ R^k.
using Control = std::vector<double>;

/// Axis-aligned box [lower, upper] in R^N.
struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t dim() const noexcept { return lower.size(); }
    /// Throws ParameterError unless lower < upper componentwise and sizes agree.
    void validate(std::size_t expected_dim) const;
};

/// Euclidean norm |y|.
double norm(StateView y) noexcept;

/// Discounted-reward control problem with dynamics dY = i(Y, δ) dt + dW.
///
/// The control set is a finite, duplicate-free point list. Coefficient maps are
/// immutable after construction; a model is safe to share across threads.
class ControlModel {
public:
    struct Maps {
        DriftMap drift;
        ScalarMap discount_rate;
        ScalarMap running_reward;
        TerminalMap terminal_reward;
    };

    ControlModel(std::size_t dim, std::vector<Control> controls, Maps maps, double lip_L1,
                 double lip_L2);

    /// Build from a model document (see README for the schema).
    static ControlModel from_json(const nlohmann::json& doc);
    static ControlModel from_file(const std::filesystem::path& path);

    /// Model document; throws ParameterError if the model was not built from descriptors.
    nlohmann::json to_json() const;
    bool has_descriptor() const noexcept { return descriptor_.has_value(); }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t control_dim() const noexcept { return control_dim_; }
    const std::vector<Control>& controls() const noexcept { return controls_; }
    std::size_t control_count() const noexcept { return controls_.size(); }

    double lip_L1() const noexcept { return lip_L1_; }
    double lip_L2() const noexcept { return lip_L2_; }

    void drift(StateView y, ControlView d, std::span<double> out) const { maps_.drift(y, d, out); }
    double discount_rate(StateView y, ControlView d) const { return maps_.discount_rate(y, d); }
    double running_reward(StateView y, ControlView d) const { return maps_.running_reward(y, d); }
    double terminal_reward(StateView y) const { return maps_.terminal_reward(y); }

    /// Scalar-state shorthands for dim() == 1.
    double drift1(double y, ControlView d) const;
    double discount_rate1(double y, ControlView d) const { return discount_rate({&y, 1}, d); }
    double running_reward1(double y, ControlView d) const { return running_reward({&y, 1}, d); }
    double terminal_reward1(double y) const { return terminal_reward({&y, 1}); }

    const Maps& maps() const noexcept { return maps_; }

    const std::optional<Box>& domain_box() const noexcept { return domain_box_; }
    ControlModel& set_domain_box(Box box);

    /// Non-fatal screen failures attached at construction (e.g. by finance::to_control_model).
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    ControlModel& add_warning(std::string warning);

    ControlModel& set_descriptor(nlohmann::json descriptor);

private:
    friend ControlModel truncate(const ControlModel& model, double k);

    std::size_t dim_;
    std::size_t control_dim_;
    std::vector<Control> controls_;
    Maps maps_;
    double lip_L1_;
    double lip_L2_;
    std::optional<Box> domain_box_;
    std::vector<std::string> warnings_;
    std::optional<nlohmann::json> descriptor_;
};

/// Pair of points achieving a worst observed ratio.
struct AssumptionWitness {
    std::vector<double> y;
    std::vector<double> y_bar;
    std::size_t control_index = 0;
    std::string coefficient;
    double ratio = 0.0;
};

/// Result of the sampled Lipschitz / one-sided Lipschitz screen.
///
/// The Lipschitz ratio is |ζ(y,δ) − ζ(ȳ,δ)| / (L1 |y − ȳ|) for ζ ∈ {f, h, i, g}.
/// The drift ratio is 1 + (s − L2 q) / (|L2| q) with s = (y − ȳ)·(i(y,δ) − i(ȳ,δ)),
/// q = |y − ȳ|²; it equals 1 exactly when the one-sided bound is tight.
struct AssumptionReport {
    bool passed = true;
    double worst_lipschitz_ratio = 0.0;
    double worst_drift_ratio = 0.0;
    AssumptionWitness lipschitz_witness;
    AssumptionWitness drift_witness;
    std::size_t pairs_checked = 0;
    double tolerance = 1e-9;

    double worst_ratio() const noexcept {
        return std::max(worst_lipschitz_ratio, worst_drift_ratio);
    }
};

/// Evaluate the Lipschitz and one-sided drift inequalities on `samples` random
/// pairs in `box` plus all pairs of box corners, for every control point.
/// Deterministic for a fixed seed. Throws EvaluationError on non-finite values.
AssumptionReport check_assumption1(const ControlModel& model, const Box& box,
                                   std::size_t samples, std::uint64_t seed,
                                   double tolerance = 1e-9);

/// Truncated model: h, f, g agree with the original on |y| <= k, taper linearly
/// on k <= |y| <= 2k (only h⁺ tapers for the discount rate), and vanish
/// (h -> −h⁻) beyond 2k. L1 becomes 2 L1 (1 + 1/k). Throws ParameterError if k <= 0.
ControlModel truncate(const ControlModel& model, double k);

/// Scalar taper factor used by truncate: 1 on |y| <= k, 2 − |y|/k on the ramp, 0 beyond 2k.
double taper(double radius, double k) noexcept;

nlohmann::json to_json(const AssumptionReport& report);

} // namespace hjbkit
