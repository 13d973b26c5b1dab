#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hjbkit/model.hpp"
#include "hjbkit/pde.hpp"

namespace hjbkit::finance {

/// Market with one factor Y: short rate r(Y), excess drift b(Y), volatility
/// σ(Y) of the risky asset, factor drift i(Y), correlation ρ between the asset
/// and factor noises, power utility with γ ∈ (0,1), discount w, and control
/// bounds π ∈ [−R, R], c ∈ [0, m].
///
/// Market document fields: short_rate, excess_drift, volatility, factor_drift
/// (coefficient descriptors over y, or plain numbers for constants),
/// correlation, risk_aversion, discount, position_cap, consumption_cap, and
/// optionally L1, L2 and working_box [lo, hi].
class MarketModel {
public:
    static MarketModel from_json(const nlohmann::json& doc);
    static MarketModel from_file(const std::filesystem::path& path);
    nlohmann::json to_json() const { return document_; }

    double r(double y) const { return r_({&y, 1}); }
    double b(double y) const { return b_({&y, 1}); }
    double sigma(double y) const { return sigma_({&y, 1}); }
    double i(double y) const { return i_({&y, 1}); }

    double rho() const noexcept { return rho_; }
    double gamma() const noexcept { return gamma_; }
    double w() const noexcept { return w_; }
    double R() const noexcept { return R_; }
    double m() const noexcept { return m_; }
    const std::optional<double>& L1() const noexcept { return L1_; }
    const std::optional<double>& L2() const noexcept { return L2_; }
    double box_lower() const noexcept { return box_lo_; }
    double box_upper() const noexcept { return box_hi_; }

    /// Descriptors (numbers normalized to constant descriptors).
    const nlohmann::json& descriptor(const std::string& name) const { return document_.at(name); }

private:
    MarketModel() = default;

    nlohmann::json document_;
    TerminalMap r_, b_, sigma_, i_;
    double rho_ = 0.0;
    double gamma_ = 0.5;
    double w_ = 0.0;
    double R_ = 0.0;
    double m_ = 0.0;
    std::optional<double> L1_;
    std::optional<double> L2_;
    double box_lo_ = -5.0;
    double box_hi_ = 5.0;
};

/// Reduced one-factor model on the control grid {−R..R} × {0..m}:
///   drift    i(y) + ρ π σ(y)
///   discount γ [r(y) + b(y) π − ½ (1−γ) σ²(y) π² − c] − w
///   reward   c^γ,   terminal 1.
/// L1/L2 come from the market document or are estimated on the working box by
/// difference quotients; a non-negative L2 is attached as a warning.
ControlModel to_control_model(const MarketModel& market, std::size_t n_pi, std::size_t n_c);

struct Controls {
    double pi = 0.0;
    double c = 0.0;
};

/// Vertex of the concave quadratic in π and the consumption stationary point,
/// each clipped to its interval. Throws DomainError for u <= 0.
Controls closed_form_controls(double y, double u, double u_y, const MarketModel& market);

/// Exact maximizer of the upwinded reduced Hamiltonian over the continuous
/// control box, for any sign of u. Returns the Hamiltonian value.
double maximize_upwind(const MarketModel& market, double y, double u, double p_forward,
                       double p_backward, Controls& best);

/// Solver override using maximize_upwind; control columns pi_star, c_star.
pde::ControlOverride make_control_override(const MarketModel& market);

struct MertonBenchmark {
    double u = 0.0;
    double A = 0.0;
    double pi_star = 0.0;
    double c_star = 0.0;
    bool pi_clipped = false;
    bool c_clipped = false;
};

/// Constant solution of A u + (1−γ) u^{γ/(γ−1)} = 0 with
/// A = γ r − w + γ b² / (2 (1−γ) σ²). Requires y-constant r, b, σ on the
/// working box; throws DomainError when A >= 0.
MertonBenchmark merton_benchmark(const MarketModel& market);

struct AdmissibilityWitness {
    double y = 0.0;
    std::string condition;
    double excess = 0.0;
};

/// Decomposition of the exponential rate bounding E e^{∫h}:
///   linear_rate            γ Q β / α − γ P
///   prefactor_coefficient  γ Q / α          (prefactor e^{coef · y⁺})
///   psi_max                sup over the box and θ ∈ [0,1] of
///                          max_{|π|<=R} [(γ Q ρ θ / α) σ π + γ b π − ½ (γ−γ²) σ² π² − w]
///   martingale_correction  ½ (γ Q / α)²
///   total_rate             sum of the rate terms; admissible when negative.
struct AdmissibilityReport {
    double linear_rate = 0.0;
    double prefactor_coefficient = 0.0;
    double psi_max = 0.0;
    double psi_argmax_y = 0.0;
    double psi_argmax_theta = 0.0;
    double martingale_correction = 0.0;
    double total_rate = 0.0;
    bool preconditions_hold = true;
    bool admissible = false;
    std::vector<AdmissibilityWitness> witnesses;
};

/// Preconditions i(y) <= −α y + β and γ r(y) − w <= −P + Q y are checked on
/// `samples` evenly spaced points of the working box.
AdmissibilityReport discount_admissible(const MarketModel& market, double alpha, double beta,
                                        double P, double Q, std::size_t samples = 1001);

/// x^γ / γ · u. Throws DomainError for x <= 0.
double wealth_value(double x, const MarketModel& market, double u);

nlohmann::json to_json(const MertonBenchmark& benchmark);
nlohmann::json to_json(const AdmissibilityReport& report);

} // namespace hjbkit::finance
