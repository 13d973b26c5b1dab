#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "hjbkit/errors.hpp"

namespace {

using hjbkit::cli::RunConfig;
using nlohmann::json;
namespace fs = std::filesystem;

const std::set<std::string> kPathKeys{"model", "market", "field", "scenario", "out"};

void add_run_options(CLI::App& app, RunConfig& c) {
    app.add_option("--config", "JSON document of flag values (keys are flag names)");

    app.add_option("--model", c.model, "Model file (JSON)");
    app.add_option("--market", c.market, "Market file (JSON)");
    app.add_option("--out", c.out, "Output directory")->capture_default_str();
    app.add_option("--seed", c.seed, "Global seed")->capture_default_str();

    app.add_option("--grid-min", c.grid_min, "Lower grid end")->capture_default_str();
    app.add_option("--grid-max", c.grid_max, "Upper grid end")->capture_default_str();
    app.add_option("--grid-nodes", c.grid_nodes, "Grid nodes")->capture_default_str();
    app.add_option("--boundary", c.boundary, "Boundary rule")
        ->check(CLI::IsMember({"one_sided", "linear_extrapolation"}))
        ->capture_default_str();

    app.add_option("--box-min", c.box_min, "Assumption screen box, lower end");
    app.add_option("--box-max", c.box_max, "Assumption screen box, upper end");
    app.add_option("--samples", c.samples, "Random pairs in the assumption screen")
        ->capture_default_str();

    app.add_option("--horizon", c.horizon, "Finite horizon T");
    app.add_option("--steps", c.steps, "PDE time steps over the horizon");
    app.add_flag("--infinite", c.infinite, "Solve the infinite-horizon equation");
    app.add_option("--pde-dt", c.pde_dt, "PDE step for the infinite-horizon march");
    app.add_option("--cfl-fraction", c.cfl_fraction,
                   "Fraction of the stability limit used when no step is given")
        ->capture_default_str();
    app.add_option("--tol-dt", c.tol_dt, "Stop when sup |v_t| < tol")->capture_default_str();
    app.add_option("--t-max", c.t_max, "Give up the march at this time")->capture_default_str();
    app.add_option("--stride", c.stride, "Keep every stride-th PDE layer (0: first only)")
        ->capture_default_str();
    app.add_option("--n-pi", c.n_pi, "Investment grid points in the reduced model")
        ->capture_default_str();
    app.add_option("--n-c", c.n_c, "Consumption grid points in the reduced model")
        ->capture_default_str();
    app.add_flag("--closed-form", c.closed_form, "Use the market's closed-form maximizer");

    app.add_option("--paths", c.paths, "Monte Carlo paths")->capture_default_str();
    app.add_option("--dt", c.dt, "Euler-Maruyama step")->capture_default_str();
    app.add_flag("--antithetic", c.antithetic, "Antithetic path pairs");
    app.add_option("--threads", c.threads, "Worker threads (results do not depend on it)")
        ->capture_default_str();

    app.add_option("--radius", c.radius, "Ball radius of the kappa table")->capture_default_str();
    app.add_option("--kappa-horizon", c.kappa_horizon, "Horizon of the kappa table");
    app.add_option("--time-points", c.time_points, "Kappa time points")->capture_default_str();
    app.add_option("--mesh-points", c.mesh_points, "Kappa starting points per time")
        ->capture_default_str();

    app.add_option("--field", c.field, "Field CSV written by solve");
    app.add_option("--scenario", c.scenario, "Verification scenario (JSON)");
    app.add_option("--probes", c.probes, "Probe states")->delimiter(',');
    app.add_option("--tolerance", c.tolerance, "Absolute tolerance added to 3 SE")
        ->capture_default_str();
    app.add_option("--admissibility", c.admissibility, "alpha,beta,P,Q")
        ->delimiter(',')
        ->expected(4);
}

std::string flag_name(std::string key) {
    for (auto& ch : key) {
        if (ch == '_') {
            ch = '-';
        }
    }
    return "--" + key;
}

bool on_command_line(const std::vector<std::string>& args, const std::string& flag) {
    for (const auto& a : args) {
        if (a == flag || a.rfind(flag + "=", 0) == 0) {
            return true;
        }
    }
    return false;
}

std::string scalar_text(const json& v) {
    if (v.is_string()) {
        return v.get<std::string>();
    }
    return v.dump();
}

/// Turns a --config document into extra arguments for the chosen subcommand.
/// Flags given on the command line win over the document.
std::vector<std::string> config_arguments(const fs::path& path, const CLI::App& sub,
                                          const std::vector<std::string>& args) {
    std::ifstream in(path);
    if (!in) {
        throw hjbkit::ParameterError("cannot open config " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw hjbkit::ParameterError("cannot parse config " + path.string() + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw hjbkit::ParameterError("config must be a JSON object");
    }
    const fs::path base = path.parent_path();
    std::vector<std::string> out;
    for (const auto& [key, value] : doc.items()) {
        const std::string flag = flag_name(key);
        std::string canonical = key;
        std::replace(canonical.begin(), canonical.end(), '-', '_');
        if (canonical == "config" || canonical == "command") {
            continue;
        }
        if (sub.get_option_no_throw(flag) == nullptr) {
            std::cerr << "warning: config key '" << key << "' is not a " << sub.get_name()
                      << " flag; ignored\n";
            continue;
        }
        if (on_command_line(args, flag) || value.is_null()) {
            continue;
        }
        if (value.is_boolean()) {
            if (value.get<bool>()) {
                out.push_back(flag);
            }
            continue;
        }
        std::string text;
        if (value.is_array()) {
            for (const auto& x : value) {
                text += (text.empty() ? "" : ",") + scalar_text(x);
            }
        } else {
            text = scalar_text(value);
        }
        if (kPathKeys.count(canonical) && value.is_string()) {
            const fs::path p = text;
            text = (p.is_absolute() ? p : base / p).string();
        }
        out.push_back(flag + "=" + text);
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    RunConfig config;
    CLI::App app{"hjbkit: HJB solvers and Monte Carlo verifiers for discounted control problems"};
    app.require_subcommand(1);
    const std::vector<std::pair<std::string, std::string>> commands{
        {"check", "Screen model assumptions, optionally estimate the kappa table"},
        {"solve", "Finite- or infinite-horizon HJB solve; writes value.csv and solve_report.json"},
        {"verify", "Monte Carlo verification of a solved field or a scenario"},
        {"merton", "Merton benchmark, reduced model and discount admissibility for a market"},
        {"kappa", "Estimate the kappa table over constant controls"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        add_run_options(*sub, config);
        subs.push_back(sub);
    }

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        // Locate the subcommand and any --config before the real parse.
        CLI::App* chosen = nullptr;
        std::optional<fs::path> config_path;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (!chosen) {
                for (auto* s : subs) {
                    if (args[i] == s->get_name()) {
                        chosen = s;
                    }
                }
            }
            if (args[i] == "--config" && i + 1 < args.size()) {
                config_path = args[i + 1];
            } else if (args[i].rfind("--config=", 0) == 0) {
                config_path = args[i].substr(9);
            }
        }
        if (config_path && chosen) {
            const auto extra = config_arguments(*config_path, *chosen, args);
            args.insert(args.end(), extra.begin(), extra.end());
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? hjbkit::cli::kExitOk : hjbkit::cli::kExitUsage;
    } catch (const hjbkit::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hjbkit::cli::kExitUsage;
    }

    try {
        for (auto* s : subs) {
            if (s->parsed()) {
                config.command = s->get_name();
            }
        }
        if (config.command == "check") {
            return hjbkit::cli::cmd_check(config);
        }
        if (config.command == "solve") {
            return hjbkit::cli::cmd_solve(config);
        }
        if (config.command == "verify") {
            return hjbkit::cli::cmd_verify(config);
        }
        if (config.command == "merton") {
            return hjbkit::cli::cmd_merton(config);
        }
        if (config.command == "kappa") {
            return hjbkit::cli::cmd_kappa(config);
        }
        return hjbkit::cli::kExitUsage;
    } catch (const hjbkit::StabilityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hjbkit::cli::kExitFailed;
    } catch (const hjbkit::ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hjbkit::cli::kExitUsage;
    } catch (const hjbkit::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hjbkit::cli::kExitFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hjbkit::cli::kExitFailed;
    }
}
