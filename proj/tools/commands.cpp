#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include <nlohmann/json.hpp>

#include "hjbkit/errors.hpp"
#include "hjbkit/finance.hpp"
#include "hjbkit/io.hpp"
#include "hjbkit/kappa.hpp"
#include "hjbkit/model.hpp"
#include "hjbkit/pde.hpp"
#include "hjbkit/rng.hpp"
#include "hjbkit/simulate.hpp"

namespace hjbkit::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json optional_json(const auto& v) { return v ? json(*v) : json(); }

json path_digest(const std::optional<fs::path>& p) {
    return p ? json(io::digest(io::read_text(*p))) : json();
}

/// Effective parameters with file references replaced by content digests, so
/// that the digest depends on what was run rather than where files live.
json effective_config(const RunConfig& c) {
    return {
        {"command", c.command},
        {"model", path_digest(c.model)},
        {"market", path_digest(c.market)},
        {"field", path_digest(c.field)},
        {"scenario", path_digest(c.scenario)},
        {"seed", c.seed},
        {"grid_min", c.grid_min},
        {"grid_max", c.grid_max},
        {"grid_nodes", c.grid_nodes},
        {"boundary", c.boundary},
        {"horizon", optional_json(c.horizon)},
        {"steps", optional_json(c.steps)},
        {"infinite", c.infinite},
        {"pde_dt", optional_json(c.pde_dt)},
        {"cfl_fraction", c.cfl_fraction},
        {"tol_dt", c.tol_dt},
        {"t_max", c.t_max},
        {"stride", c.stride},
        {"paths", c.paths},
        {"dt", c.dt},
        {"antithetic", c.antithetic},
        {"n_pi", c.n_pi},
        {"n_c", c.n_c},
        {"closed_form", c.closed_form},
        {"samples", c.samples},
        {"box_min", optional_json(c.box_min)},
        {"box_max", optional_json(c.box_max)},
        {"radius", c.radius},
        {"kappa_horizon", optional_json(c.kappa_horizon)},
        {"time_points", c.time_points},
        {"mesh_points", c.mesh_points},
        {"probes", c.probes},
        {"tolerance", c.tolerance},
        {"admissibility", c.admissibility},
    };
}

io::Provenance provenance(const RunConfig& c) {
    return {io::digest(effective_config(c).dump()), c.seed};
}

json provenance_json(const RunConfig& c) {
    const auto p = provenance(c);
    return {{"command", c.command}, {"config_digest", p.config_digest}, {"seed", p.seed}};
}

void write_json(const RunConfig& c, const std::string& name, json doc) {
    doc["provenance"] = provenance_json(c);
    fs::create_directories(c.out);
    io::write_text(c.out / name, io::dump_json(doc));
}

void write_csv(const RunConfig& c, const std::string& name, const std::string& body) {
    const auto p = provenance(c);
    fs::create_directories(c.out);
    std::string text = body;
    if (text.rfind("# ", 0) != 0) {
        text = "# config_digest=" + p.config_digest + " seed=" + std::to_string(p.seed) + "\n" + text;
    }
    io::write_text(c.out / name, text);
}

std::optional<finance::MarketModel> load_market(const RunConfig& c) {
    if (c.market) {
        return finance::MarketModel::from_file(*c.market);
    }
    return std::nullopt;
}

ControlModel load_model(const RunConfig& c, const std::optional<finance::MarketModel>& market) {
    if (c.model && c.market) {
        throw ParameterError("give either --model or --market, not both");
    }
    if (c.model) {
        return ControlModel::from_file(*c.model);
    }
    if (market) {
        return finance::to_control_model(*market, c.n_pi, c.n_c);
    }
    throw ParameterError("a model (--model) or market (--market) file is required");
}

mc::MonteCarloConfig mc_config(const RunConfig& c) {
    mc::MonteCarloConfig m;
    m.paths = c.paths;
    m.dt = c.dt;
    m.seed = c.seed;
    m.antithetic = c.antithetic;
    m.threads = c.threads;
    return m;
}

pde::Grid1D grid_of(const RunConfig& c) {
    return pde::Grid1D(c.grid_min, c.grid_max, c.grid_nodes, pde::boundary_from_string(c.boundary));
}

json model_summary(const ControlModel& m) {
    return {{"dim", m.dim()},
            {"controls", m.control_count()},
            {"L1", m.lip_L1()},
            {"L2", m.lip_L2()},
            {"warnings", m.warnings()}};
}

/// Keeps at most `keep` evenly spread entries of a per-step series.
json thin(const std::vector<double>& v, std::size_t keep) {
    json out = json::array();
    if (v.empty()) {
        return out;
    }
    const std::size_t stride = std::max<std::size_t>(1, (v.size() - 1) / (keep - 1));
    for (std::size_t i = 0; i < v.size(); i += stride) {
        out.push_back(v[i]);
    }
    if ((v.size() - 1) % stride != 0) {
        out.push_back(v.back());
    }
    return out;
}

std::vector<double> as_state(const json& j) {
    if (j.is_number()) {
        return {j.get<double>()};
    }
    return j.get<std::vector<double>>();
}

ControlModel scenario_model(const json& scenario, const fs::path& dir, const RunConfig& c,
                            const std::optional<finance::MarketModel>& market) {
    if (!scenario.contains("model")) {
        return load_model(c, market);
    }
    const auto& m = scenario.at("model");
    if (m.is_string()) {
        const fs::path p = m.get<std::string>();
        return ControlModel::from_file(p.is_absolute() ? p : dir / p);
    }
    return ControlModel::from_json(m);
}

mc::BoundSpec bound_spec(const json& b) {
    const auto type = b.at("type").get<std::string>();
    if (type == "gaussian_discount") {
        return mc::GaussianDiscountBound{b.at("alpha").get<double>(), b.at("beta").get<double>(),
                                         b.at("P").get<double>(), b.at("Q").get<double>()};
    }
    if (type == "negative_discount") {
        return mc::NegativeDiscountBound{b.at("w").get<double>(), b.value("L1", 1.0),
                                         b.at("L2").get<double>(), b.value("ito_corrected", false)};
    }
    if (type == "exponential_envelope") {
        return mc::ExponentialEnvelopeBound{b.at("K").get<double>(), b.at("M").get<double>()};
    }
    throw ParameterError("unknown bound type '" + type + "'");
}

struct VerifyOutcome {
    json report;
    bool passed = false;
};

VerifyOutcome verify_field(const RunConfig& c, const ControlModel& model, const fs::path& field_path,
                           std::vector<double> probes, std::optional<double> horizon) {
    const auto file = io::field_from_csv(io::read_text(field_path));
    if (!file.policy) {
        throw ParameterError("field file has no policy columns to simulate with");
    }
    const auto& grid = file.value.grid;
    if (probes.empty()) {
        for (int i = 0; i < 5; ++i) {
            probes.push_back(0.5 * (grid.y_min() + grid.y_max()) +
                             0.25 * (grid.y_max() - grid.y_min()) * (i - 2) / 2.0);
        }
    }
    const double t0 = file.value.time_stamps.front();
    const double T = horizon.value_or(file.value.horizon);
    const auto policy = mc::field_policy(*file.policy);
    VerifyOutcome out;
    out.passed = true;
    json rows = json::array();
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const double y = probes[i];
        if (!(y > grid.y_min() && y < grid.y_max())) {
            throw ParameterError("probe lies outside the field's interior");
        }
        auto cfg = mc_config(c);
        cfg.seed = derive_seed(c.seed, i);
        const std::vector<double> y0{y};
        const auto est = mc::estimate_value(model, policy, y0, t0, T, cfg);
        const double pde = file.value.interpolate(y, 0);
        const double band = 3.0 * est.standard_error + c.tolerance;
        const bool ok = std::abs(pde - est.mean) <= band;
        out.passed = out.passed && ok;
        rows.push_back({{"y", y},
                        {"pde", pde},
                        {"mc", to_json(est)},
                        {"difference", pde - est.mean},
                        {"band", band},
                        {"within", ok}});
    }
    out.report = {{"kind", "field"}, {"t", t0}, {"horizon", T}, {"probes", rows}};
    return out;
}

VerifyOutcome verify_scenario(const RunConfig& c, const std::optional<finance::MarketModel>& market) {
    const auto text = io::read_text(*c.scenario);
    json s;
    try {
        s = json::parse(text);
    } catch (const json::exception& e) {
        throw ParameterError(std::string("cannot parse scenario: ") + e.what());
    }
    const fs::path dir = c.scenario->parent_path();
    try {
        const auto kind = s.at("kind").get<std::string>();
        auto cfg = mc_config(c);
        VerifyOutcome out;
        if (kind == "field") {
            const fs::path fp = s.at("field").get<std::string>();
            auto model = scenario_model(s, dir, c, market);
            std::vector<double> probes = s.value("probes", c.probes);
            std::optional<double> horizon = c.horizon;
            if (s.contains("horizon")) {
                horizon = s.at("horizon").get<double>();
            }
            return verify_field(c, model, fp.is_absolute() ? fp : dir / fp, probes, horizon);
        }
        const auto model = scenario_model(s, dir, c, market);
        if (kind == "bound") {
            const auto spec = bound_spec(s.at("bound"));
            const auto times = s.at("times").get<std::vector<double>>();
            json reports = json::array();
            out.passed = true;
            double worst = std::numeric_limits<double>::infinity();
            std::size_t index = 0;
            for (const auto& start : s.at("starts")) {
                const auto y0 = as_state(start);
                cfg.seed = derive_seed(c.seed, index++);
                const auto rep = mc::verify_bounds(model, spec, y0, times, cfg);
                out.passed = out.passed && rep.met;
                worst = std::min(worst, rep.worst_margin);
                reports.push_back(to_json(rep));
            }
            out.report = {{"kind", "bound"}, {"bound", mc::bound_name(spec)},
                          {"worst_margin", worst}, {"reports", reports},
                          {"status", out.passed ? "met" : "violated"}};
            return out;
        }
        if (kind == "coupling") {
            const auto y0 = as_state(s.at("y0"));
            const auto y0_bar = as_state(s.at("y0_bar"));
            const double T = s.at("horizon").get<double>();
            const auto control = s.value("control", std::size_t{0});
            const auto stats = mc::coupled_contraction(
                model, mc::constant_policy(model.controls().at(control)), y0, y0_bar, T, cfg);
            const double limit = s.value("max_ratio", 1.0 + 10.0 * c.dt);
            out.passed = stats.worst_ratio <= limit;
            out.report = {{"kind", "coupling"},
                          {"worst_ratio", stats.worst_ratio},
                          {"worst_ratio_discrete", stats.worst_ratio_discrete},
                          {"max_ratio_allowed", limit},
                          {"paths", stats.paths},
                          {"exclusions", stats.exclusions},
                          {"times", thin(stats.times, 101)},
                          {"max_ratio", thin(stats.max_ratio, 101)},
                          {"max_ratio_discrete", thin(stats.max_ratio_discrete, 101)}};
            return out;
        }
        if (kind == "horizon_convergence") {
            const auto y0 = as_state(s.at("y0"));
            const auto horizons = s.at("horizons").get<std::vector<double>>();
            const auto control = s.value("control", std::size_t{0});
            const auto policy = mc::constant_policy(model.controls().at(control));
            std::optional<KappaTable> table;
            if (s.contains("kappa")) {
                const auto& k = s.at("kappa");
                KappaOptions opt;
                opt.time_points = k.value("time_points", std::size_t{17});
                opt.mesh_points = k.value("mesh_points", std::size_t{1});
                auto kcfg = cfg;
                kcfg.seed = derive_seed(c.seed, 1000);
                table = estimate_kappa(model, k.value("radius", 0.0),
                                       k.value("horizon", horizons.back()),
                                       constant_policy_family(model), kcfg, opt);
            }
            const auto rep = mc::horizon_convergence(model, policy, y0, horizons, cfg,
                                                     table ? &*table : nullptr);
            out.passed = rep.converged;
            out.report = to_json(rep);
            out.report["kind"] = "horizon_convergence";
            return out;
        }
        throw ParameterError("unknown scenario kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw ParameterError(std::string("malformed scenario: ") + e.what());
    }
}

} // namespace

int cmd_check(const RunConfig& c) {
    const auto market = load_market(c);
    const auto model = load_model(c, market);
    Box box;
    if (c.box_min || c.box_max) {
        box.lower.assign(model.dim(), c.box_min.value_or(c.grid_min));
        box.upper.assign(model.dim(), c.box_max.value_or(c.grid_max));
    } else if (model.domain_box()) {
        box = *model.domain_box();
    } else {
        box.lower.assign(model.dim(), c.grid_min);
        box.upper.assign(model.dim(), c.grid_max);
    }
    const auto report = check_assumption1(model, box, c.samples, c.seed);
    json doc{{"assumption1", to_json(report)}, {"model", model_summary(model)}};
    bool ok = report.passed;
    if (c.kappa_horizon) {
        KappaOptions opt;
        opt.time_points = c.time_points;
        opt.mesh_points = c.mesh_points;
        const auto table = estimate_kappa(model, c.radius, *c.kappa_horizon,
                                          constant_policy_family(model), mc_config(c), opt);
        doc["kappa"] = to_json(table);
        write_csv(c, "kappa.csv", to_csv(table));
        ok = ok && table.integrable;
    }
    doc["status"] = ok ? "passed" : "failed";
    write_json(c, "check_report.json", doc);
    std::cout << "check: " << (ok ? "passed" : "failed") << " (worst ratio "
              << report.worst_ratio() << ")\n";
    return ok ? kExitOk : kExitFailed;
}

int cmd_solve(const RunConfig& c) {
    const auto market = load_market(c);
    const auto model = load_model(c, market);
    const auto grid = grid_of(c);
    pde::SolverOptions options;
    options.retain_stride = c.stride;
    if (c.closed_form) {
        if (!market) {
            throw ParameterError("--closed-form needs a --market file");
        }
        options.control_override = finance::make_control_override(*market);
    }
    pde::Solution sol = [&] {
        if (c.infinite) {
            const double dt = c.pde_dt.value_or(c.cfl_fraction * pde::max_stable_dt(model, grid));
            return pde::solve_infinite_horizon(model, grid, dt, c.tol_dt, c.t_max, options);
        }
        if (!c.horizon) {
            throw ParameterError("finite-horizon solve needs --horizon (or --infinite)");
        }
        const std::size_t steps = c.steps.value_or(static_cast<std::size_t>(std::ceil(
            static_cast<double>(pde::min_stable_steps(model, grid, *c.horizon)) / c.cfl_fraction)));
        return pde::solve_finite_horizon(model, grid, pde::TimeGrid(*c.horizon, steps), options);
    }();
    write_csv(c, "value.csv", io::field_to_csv(sol.value, &sol.policy, provenance(c)));
    write_json(c, "solve_report.json",
               {{"report", to_json(sol.report)},
                {"mode", c.infinite ? "infinite" : "finite"},
                {"model", model_summary(model)}});
    std::cout << "solve: " << (sol.report.converged ? "converged" : "not converged") << " after "
              << sol.report.steps << " steps, residual " << sol.report.residual_norm << "\n";
    return sol.report.converged ? kExitOk : kExitFailed;
}

int cmd_verify(const RunConfig& c) {
    const auto market = load_market(c);
    VerifyOutcome outcome;
    if (c.scenario) {
        outcome = verify_scenario(c, market);
    } else if (c.field) {
        const auto model = load_model(c, market);
        outcome = verify_field(c, model, *c.field, c.probes, c.horizon);
    } else {
        throw ParameterError("verify needs --scenario or --field");
    }
    outcome.report["status"] = outcome.passed ? "passed" : "failed";
    write_json(c, "verify_report.json", outcome.report);
    std::cout << "verify: " << (outcome.passed ? "passed" : "failed") << "\n";
    return outcome.passed ? kExitOk : kExitFailed;
}

int cmd_merton(const RunConfig& c) {
    if (!c.market) {
        throw ParameterError("merton needs a --market file");
    }
    const auto market = finance::MarketModel::from_file(*c.market);
    const auto reduced = finance::to_control_model(market, c.n_pi, c.n_c);
    auto reduced_doc = reduced.to_json();
    reduced_doc["warnings"] = reduced.warnings();
    write_json(c, "reduced_model.json", reduced_doc);
    json doc{{"market", market.to_json()}};
    if (!c.admissibility.empty()) {
        if (c.admissibility.size() != 4) {
            throw ParameterError("--admissibility takes alpha beta P Q");
        }
        const auto& a = c.admissibility;
        doc["admissibility"] = to_json(finance::discount_admissible(market, a[0], a[1], a[2], a[3]));
    }
    int code = kExitOk;
    try {
        const auto bm = finance::merton_benchmark(market);
        doc["benchmark"] = to_json(bm);
        doc["wealth_value_unit_wealth"] = finance::wealth_value(1.0, market, bm.u);
        std::cout << "merton: u = " << bm.u << "\n";
    } catch (const DomainError& e) {
        doc["benchmark"] = nullptr;
        doc["error"] = e.what();
        std::cerr << "merton: " << e.what() << "\n";
        code = kExitFailed;
    }
    write_json(c, "merton.json", doc);
    return code;
}

int cmd_kappa(const RunConfig& c) {
    const auto market = load_market(c);
    const auto model = load_model(c, market);
    const auto horizon = c.kappa_horizon ? c.kappa_horizon : c.horizon;
    if (!horizon) {
        throw ParameterError("kappa needs --kappa-horizon (or --horizon)");
    }
    KappaOptions opt;
    opt.time_points = c.time_points;
    opt.mesh_points = c.mesh_points;
    const auto table =
        estimate_kappa(model, c.radius, *horizon, constant_policy_family(model), mc_config(c), opt);
    write_csv(c, "kappa.csv", to_csv(table));
    write_json(c, "kappa.json", to_json(table));
    std::cout << "kappa: " << (table.integrable ? "integrable" : "not integrable") << "\n";
    return table.integrable ? kExitOk : kExitFailed;
}

} // namespace hjbkit::cli
