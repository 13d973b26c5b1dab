#include "hjbkit/kappa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hjbkit/errors.hpp"
#include "hjbkit/io.hpp"
#include "hjbkit/rng.hpp"

namespace hjbkit {
namespace {

double interpolate(const std::vector<double>& t, const std::vector<double>& v, double s) {
    if (s <= t.front()) {
        return v.front();
    }
    if (s >= t.back()) {
        return v.back();
    }
    const auto it = std::upper_bound(t.begin(), t.end(), s);
    const std::size_t j = static_cast<std::size_t>(it - t.begin()) - 1;
    const double w = (s - t[j]) / (t[j + 1] - t[j]);
    return (1.0 - w) * v[j] + w * v[j + 1];
}

/// ∫_{s0}^{s1} (k0 + c (s − s0)) e^{r s} ds.
double linear_exp_integral(double s0, double s1, double k0, double k1, double r) {
    const double len = s1 - s0;
    if (len <= 0.0) {
        return 0.0;
    }
    if (r * len < 1e-8) {
        return 0.5 * (k0 + k1) * len * std::exp(r * 0.5 * (s0 + s1));
    }
    const double c = (k1 - k0) / len;
    const auto F = [&](double s) {
        return std::exp(r * s) * ((k0 + c * (s - s0)) / r - c / (r * r));
    };
    return F(s1) - F(s0);
}

/// Mesh of [−n, n]^N restricted to the closed ball.
std::vector<std::vector<double>> ball_mesh(std::size_t dim, double radius, std::size_t per_axis) {
    if (radius == 0.0 || per_axis <= 1) {
        return {std::vector<double>(dim, 0.0)};
    }
    std::vector<double> axis(per_axis);
    for (std::size_t i = 0; i < per_axis; ++i) {
        axis[i] = -radius + 2.0 * radius * static_cast<double>(i) /
                                static_cast<double>(per_axis - 1);
    }
    std::vector<std::vector<double>> out;
    std::vector<std::size_t> idx(dim, 0);
    for (;;) {
        std::vector<double> y(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            y[d] = axis[idx[d]];
        }
        if (norm(y) <= radius * (1.0 + 1e-12)) {
            out.push_back(std::move(y));
        }
        std::size_t d = 0;
        while (d < dim && ++idx[d] == per_axis) {
            idx[d] = 0;
            ++d;
        }
        if (d == dim) {
            break;
        }
    }
    return out;
}

/// Least-squares slope of v against x.
double slope(const std::vector<double>& x, const std::vector<double>& v) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0;
    double mv = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        mv += v[i];
    }
    mx /= n;
    mv /= n;
    double sxx = 0.0;
    double sxv = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxv += (x[i] - mx) * (v[i] - mv);
    }
    return sxx > 0.0 ? sxv / sxx : 0.0;
}

} // namespace

std::vector<NamedPolicy> constant_policy_family(const ControlModel& model) {
    std::vector<NamedPolicy> family;
    for (std::size_t c = 0; c < model.control_count(); ++c) {
        std::ostringstream name;
        name.precision(17);
        name << "constant(";
        const auto& d = model.controls()[c];
        for (std::size_t j = 0; j < d.size(); ++j) {
            name << (j ? "," : "") << d[j];
        }
        name << ")";
        family.push_back({name.str(), mc::constant_policy(d)});
    }
    return family;
}

double KappaTable::kappa_at(double s) const { return interpolate(t, kappa, s); }

double KappaTable::p_at(double s) const { return interpolate(t, p, s); }

double KappaTable::integrate_kappa(double a, double b, double rate) const {
    if (b < a) {
        throw ParameterError("integrate_kappa needs a <= b");
    }
    if (b > t.back() * (1.0 + 1e-12) || a < t.front()) {
        throw ParameterError("integration range exceeds the kappa table");
    }
    const double r = std::max(rate, 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < t.size(); ++j) {
        const double lo = std::max(a, t[j]);
        const double hi = std::min(b, t[j + 1]);
        if (hi <= lo) {
            continue;
        }
        total += linear_exp_integral(lo, hi, kappa_at(lo), kappa_at(hi), r);
    }
    return total;
}

KappaTable estimate_kappa(const ControlModel& model, double radius, double horizon,
                          const std::vector<NamedPolicy>& family, const mc::MonteCarloConfig& mc,
                          const KappaOptions& options) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw ParameterError("kappa horizon must be positive");
    }
    if (family.empty()) {
        throw ParameterError("kappa estimation needs a nonempty policy family");
    }
    if (!(radius >= 0.0)) {
        throw ParameterError("kappa radius must be non-negative");
    }
    if (options.time_points < 2) {
        throw ParameterError("kappa needs at least two time points");
    }
    mc.validate();
    const std::size_t steps = mc::lattice_steps(horizon, mc.dt);
    const std::size_t J = options.time_points;
    if (steps < J - 1) {
        throw ParameterError("kappa time grid is finer than the simulation step");
    }
    const double dt = horizon / static_cast<double>(steps);

    KappaTable out;
    out.radius = radius;
    for (std::size_t i = 0; i < J; ++i) {
        const auto s = static_cast<std::size_t>(std::llround(static_cast<double>(i * steps) /
                                                             static_cast<double>(J - 1)));
        out.t.push_back(s == steps ? horizon : static_cast<double>(s) * dt);
    }
    const std::vector<double> record(out.t.begin() + 1, out.t.end());
    const auto mesh = ball_mesh(model.dim(), radius, options.mesh_points);

    const double neg_inf = -std::numeric_limits<double>::infinity();
    out.kappa.assign(J, neg_inf);
    out.p.assign(J, neg_inf);
    out.kappa_se.assign(J, 0.0);
    out.p_se.assign(J, 0.0);
    out.kappa_policy.assign(J, 0);
    out.p_policy.assign(J, 0);
    std::vector<double> mesh_moment(mesh.size(), 0.0);

    const auto flag = [&](double t, std::size_t q, std::string reason) {
        if (!out.divergence) {
            out.divergence = KappaTable::Divergence{t, q, std::move(reason)};
        }
    };
    const auto take = [&](std::size_t i, double mean, double se, std::size_t q, bool is_kappa,
                          std::size_t cell) {
        if (!std::isfinite(mean) || mean > options.overflow_guard) {
            flag(out.t[i], q, "estimate exceeded the overflow guard");
            return;
        }
        auto& value = is_kappa ? out.kappa : out.p;
        if (mean > value[i]) {
            value[i] = mean;
            (is_kappa ? out.kappa_se : out.p_se)[i] = se;
            (is_kappa ? out.kappa_policy : out.p_policy)[i] = q;
        }
        mesh_moment[cell] = std::max(mesh_moment[cell], mean);
    };

    std::vector<double> control(model.control_dim());
    for (std::size_t q = 0; q < family.size(); ++q) {
        out.policy_names.push_back(family[q].name);
        for (std::size_t m = 0; m < mesh.size(); ++m) {
            const auto& y = mesh[m];
            family[q].policy(y, 0.0, control);
            take(0, std::max(std::abs(model.running_reward(y, control)), 1.0), 0.0, q, true, m);
            take(0, std::max(std::abs(model.terminal_reward(y)), 1.0), 0.0, q, false, m);

            auto cell_mc = mc;
            cell_mc.seed = derive_seed(mc.seed, q * mesh.size() + m);
            std::optional<mc::PathBatch> batch;
            try {
                batch = mc::simulate_paths(model, family[q].policy, y, horizon, cell_mc, record);
            } catch (const ExclusionError& e) {
                flag(horizon, q, e.what());
                continue;
            }
            const std::size_t R = record.size();
            std::vector<double> fk(batch->paths);
            std::vector<double> gk(batch->paths);
            for (std::size_t r = 0; r < R; ++r) {
                for (std::size_t p = 0; p < batch->paths; ++p) {
                    if (batch->excluded[p]) {
                        fk[p] = gk[p] = 0.0;
                        continue;
                    }
                    const auto state = batch->state(p, r);
                    const double discount = std::exp(batch->log_discount[p * R + r]);
                    fk[p] = discount *
                            std::max(std::abs(model.running_reward(state, batch->control(p, r))), 1.0);
                    gk[p] = discount * std::max(std::abs(model.terminal_reward(state)), 1.0);
                }
                const auto ek = mc::summarize(fk, batch->excluded, cell_mc.antithetic);
                const auto eg = mc::summarize(gk, batch->excluded, cell_mc.antithetic);
                take(r + 1, ek.mean, ek.standard_error, q, true, m);
                take(r + 1, eg.mean, eg.standard_error, q, false, m);
            }
        }
    }

    std::ostringstream probed;
    probed << "lower envelope of the true kappa; " << family.size() << " policies x "
           << mesh.size() << " start points: ";
    for (std::size_t q = 0; q < family.size(); ++q) {
        probed << (q ? ", " : "") << family[q].name;
    }
    out.policies_probed = probed.str();

    if (out.divergence) {
        for (std::size_t i = 0; i < J; ++i) {
            if (!std::isfinite(out.kappa[i])) {
                out.kappa[i] = std::numeric_limits<double>::infinity();
            }
            if (!std::isfinite(out.p[i])) {
                out.p[i] = std::numeric_limits<double>::infinity();
            }
        }
        out.integral_kappa = std::numeric_limits<double>::infinity();
        out.integral_weighted_kappa = std::numeric_limits<double>::infinity();
        out.integrable = false;
        return out;
    }

    // Envelope K e^{M|y|} dominating every mesh moment.
    std::vector<double> radii;
    std::vector<double> logs;
    for (std::size_t m = 0; m < mesh.size(); ++m) {
        radii.push_back(norm(mesh[m]));
        logs.push_back(std::log(mesh_moment[m]));
    }
    out.envelope_M = std::max(0.0, slope(radii, logs));
    for (std::size_t m = 0; m < mesh.size(); ++m) {
        out.envelope_K = std::max(out.envelope_K, mesh_moment[m] * std::exp(-out.envelope_M * radii[m]));
    }

    // Exponential tail fitted on the second half of the table.
    std::vector<double> tail_t;
    std::vector<double> tail_log;
    for (std::size_t i = J / 2; i < J; ++i) {
        tail_t.push_back(out.t[i]);
        tail_log.push_back(std::log(out.kappa[i]));
    }
    if (tail_t.size() < 2) {
        tail_t = {out.t[J - 2], out.t[J - 1]};
        tail_log = {std::log(out.kappa[J - 2]), std::log(out.kappa[J - 1])};
    }
    out.tail_rate = -slope(tail_t, tail_log);
    const double L2 = model.lip_L2();
    const double kJ = out.kappa.back();
    const double tJ = out.t.back();
    const double inf = std::numeric_limits<double>::infinity();
    out.integral_kappa =
        out.tail_rate > 0.0 ? out.integrate_kappa(0.0, tJ) + kJ / out.tail_rate : inf;
    double weighted = 0.0;
    for (std::size_t j = 0; j + 1 < J; ++j) {
        if (L2 >= 0.0) {
            weighted += linear_exp_integral(out.t[j], out.t[j + 1], out.kappa[j], out.kappa[j + 1], L2);
        } else {
            // Trapezoid on e^{L2 t} κ; the closed form only covers r >= 0 here.
            weighted += 0.5 * (out.t[j + 1] - out.t[j]) *
                        (std::exp(L2 * out.t[j]) * out.kappa[j] + std::exp(L2 * out.t[j + 1]) * out.kappa[j + 1]);
        }
    }
    out.integral_weighted_kappa = out.tail_rate > L2
                                      ? weighted + kJ * std::exp(L2 * tJ) / (out.tail_rate - L2)
                                      : inf;
    out.integrable = std::isfinite(out.integral_kappa) && std::isfinite(out.integral_weighted_kappa);
    return out;
}

nlohmann::json to_json(const KappaTable& table) {
    const auto number = [](double x) {
        return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
    };
    nlohmann::json kappa = nlohmann::json::array();
    nlohmann::json p = nlohmann::json::array();
    for (std::size_t i = 0; i < table.t.size(); ++i) {
        kappa.push_back(number(table.kappa[i]));
        p.push_back(number(table.p[i]));
    }
    nlohmann::json j{
        {"radius", table.radius},
        {"t", table.t},
        {"kappa", kappa},
        {"kappa_se", table.kappa_se},
        {"p", p},
        {"p_se", table.p_se},
        {"kappa_policy", table.kappa_policy},
        {"p_policy", table.p_policy},
        {"policy_names", table.policy_names},
        {"policies_probed", table.policies_probed},
        {"envelope_K", table.envelope_K},
        {"envelope_M", table.envelope_M},
        {"integral_kappa", number(table.integral_kappa)},
        {"integral_weighted_kappa", number(table.integral_weighted_kappa)},
        {"tail_rate", table.tail_rate},
        {"integrable", table.integrable},
    };
    if (table.divergence) {
        j["divergence"] = {{"t", table.divergence->t},
                           {"policy", table.divergence->policy},
                           {"reason", table.divergence->reason}};
    } else {
        j["divergence"] = nullptr;
    }
    return j;
}

std::string to_csv(const KappaTable& table) {
    std::string out = "t,kappa,p,policy_id\n";
    for (std::size_t i = 0; i < table.t.size(); ++i) {
        out += io::format_number(table.t[i]) + "," + io::format_number(table.kappa[i]) + "," +
               io::format_number(table.p[i]) + "," + std::to_string(table.kappa_policy[i]) + "\n";
    }
    return out;
}

} // namespace hjbkit
