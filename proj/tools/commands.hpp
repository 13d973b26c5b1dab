#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hjbkit::cli {

/// Resolved parameters of one run. Every field maps to a long flag of the same
/// name (underscores as dashes) and to the same key in a --config document.
struct RunConfig {
    std::string command;

    std::optional<std::filesystem::path> model;
    std::optional<std::filesystem::path> market;
    std::optional<std::filesystem::path> field;
    std::optional<std::filesystem::path> scenario;
    std::filesystem::path out = ".";
    std::uint64_t seed = 0;

    double grid_min = -5.0;
    double grid_max = 5.0;
    std::size_t grid_nodes = 201;
    std::string boundary = "one_sided";

    std::optional<double> horizon;
    std::optional<std::size_t> steps;
    bool infinite = false;
    std::optional<double> pde_dt;
    double cfl_fraction = 0.9;
    double tol_dt = 1e-6;
    double t_max = 1000.0;
    std::size_t stride = 0;

    std::size_t paths = 10000;
    double dt = 1e-3;
    bool antithetic = false;
    std::size_t threads = 1;

    std::size_t n_pi = 61;
    std::size_t n_c = 41;
    bool closed_form = false;

    std::size_t samples = 1000;
    std::optional<double> box_min;
    std::optional<double> box_max;

    double radius = 1.0;
    std::optional<double> kappa_horizon;
    std::size_t time_points = 11;
    std::size_t mesh_points = 5;

    std::vector<double> probes;
    double tolerance = 5e-3;

    std::vector<double> admissibility;
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitUsage = 2;

int cmd_check(const RunConfig& config);
int cmd_solve(const RunConfig& config);
int cmd_verify(const RunConfig& config);
int cmd_merton(const RunConfig& config);
int cmd_kappa(const RunConfig& config);

} // namespace hjbkit::cli
