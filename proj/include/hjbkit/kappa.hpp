#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hjbkit/model.hpp"
#include "hjbkit/simulate.hpp"

namespace hjbkit {

struct NamedPolicy {
    std::string name;
    mc::FeedbackPolicy policy;
};

/// Constant policies at every point of the model's control list.
std::vector<NamedPolicy> constant_policy_family(const ControlModel& model);

/// Empirical envelopes of the discounted reward moments over B(0, n):
///   κ(t,n) >= E_y e^{∫_0^t h} max{|f(Y_t, δ_t)|, 1}
///   p(t,n) >= E_y e^{∫_0^t h} max{|g(Y_t)|, 1}
/// maximized over a finite policy family and a mesh of the ball. This is a
/// lower envelope of the true κ, which takes the supremum over all controls.
struct KappaTable {
    double radius = 0.0;
    std::vector<double> t;
    std::vector<double> kappa;
    std::vector<double> kappa_se;
    std::vector<double> p;
    std::vector<double> p_se;
    /// Index into the probed family of the policy attaining κ (resp. p) at each t.
    std::vector<std::size_t> kappa_policy;
    std::vector<std::size_t> p_policy;
    std::vector<std::string> policy_names;
    std::string policies_probed;

    /// Envelope K e^{M|y|} fitted over the mesh (M >= 0, K raised to dominate every sample).
    double envelope_K = 0.0;
    double envelope_M = 0.0;

    /// Tail-extrapolated ∫_0^∞ κ dt and ∫_0^∞ e^{L2 t} κ dt; infinite when the
    /// fitted tail rate does not decay.
    double integral_kappa = 0.0;
    double integral_weighted_kappa = 0.0;
    double tail_rate = 0.0;
    bool integrable = false;

    /// Set when an estimate exceeded the overflow guard or lost too many paths.
    struct Divergence {
        double t;
        std::size_t policy;
        std::string reason;
    };
    std::optional<Divergence> divergence;

    double kappa_at(double s) const;
    double p_at(double s) const;
    /// ∫_a^b e^{max(rate,0) s} κ(s) ds with κ linear between table points (b <= t.back()).
    double integrate_kappa(double a, double b, double rate = 0.0) const;
};

struct KappaOptions {
    /// Uniform time points on [0, horizon] including both ends.
    std::size_t time_points = 11;
    /// Mesh points per axis on [−n, n]; points outside the ball are dropped.
    std::size_t mesh_points = 5;
    double overflow_guard = 1e100;
};

/// Throws ParameterError for horizon <= 0 or an empty family. Divergence is
/// reported in the table (integrable = false), not thrown.
KappaTable estimate_kappa(const ControlModel& model, double radius, double horizon,
                          const std::vector<NamedPolicy>& family, const mc::MonteCarloConfig& mc,
                          const KappaOptions& options = {});

nlohmann::json to_json(const KappaTable& table);
/// CSV with columns t,kappa,p,policy_id.
std::string to_csv(const KappaTable& table);

} // namespace hjbkit
