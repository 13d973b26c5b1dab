#include "hjbkit/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <thread>

#include "hjbkit/errors.hpp"
#include "hjbkit/kappa.hpp"
#include "hjbkit/rng.hpp"

namespace hjbkit::mc {
namespace {

constexpr double kLatticeTol = 1e-9;

/// Equal steps covering `span`; round(span/dt) steps when dt divides span.
std::size_t step_count(double span, double dt) {
    const double ratio = span / dt;
    const double nearest = std::round(ratio);
    if (nearest >= 1.0 && std::abs(ratio - nearest) <= kLatticeTol * nearest) {
        return static_cast<std::size_t>(nearest);
    }
    return static_cast<std::size_t>(std::max(1.0, std::ceil(ratio)));
}

struct Lattice {
    std::size_t steps = 0;
    double dt = 0.0;
    std::vector<std::size_t> record_steps;
};

Lattice make_lattice(double t0, double T, double dt, std::span<const double> record_times) {
    if (!(T > t0) || !std::isfinite(T) || !std::isfinite(t0)) {
        throw ParameterError("simulation horizon must satisfy T > t");
    }
    Lattice lat;
    lat.steps = step_count(T - t0, dt);
    lat.dt = (T - t0) / static_cast<double>(lat.steps);
    double previous = -std::numeric_limits<double>::infinity();
    for (double r : record_times) {
        if (!(r > previous)) {
            throw ParameterError("record times must be strictly increasing");
        }
        previous = r;
        const double pos = (r - t0) / lat.dt;
        const double nearest = std::round(pos);
        if (nearest < 0.0 || nearest > static_cast<double>(lat.steps) ||
            std::abs(pos - nearest) > kLatticeTol * std::max(1.0, nearest)) {
            std::ostringstream os;
            os.precision(17);
            os << "record time " << r << " is not on the simulation lattice (t0 = " << t0
               << ", dt = " << lat.dt << ")";
            throw ParameterError(os.str());
        }
        lat.record_steps.push_back(static_cast<std::size_t>(nearest));
    }
    if (lat.record_steps.empty()) {
        lat.record_steps.push_back(lat.steps);
    }
    return lat;
}

/// Runs fn(begin, end) over [0, count) in contiguous chunks.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = std::min(threads, std::max<std::size_t>(count, 1));
    if (threads <= 1) {
        fn(std::size_t{0}, count);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (count + threads - 1) / threads;
    for (std::size_t w = 0; w < threads; ++w) {
        const std::size_t begin = std::min(count, w * chunk);
        const std::size_t end = std::min(count, begin + chunk);
        pool.emplace_back([&, w, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_exclusions(std::size_t exclusions, std::size_t paths, double budget) {
    if (static_cast<double>(exclusions) > budget * static_cast<double>(paths)) {
        std::ostringstream os;
        os << exclusions << " of " << paths
           << " paths produced non-finite values (budget " << budget * 100.0 << "%)";
        throw ExclusionError(os.str());
    }
}

/// Stream index and sign of the Gaussian increments for a path.
std::pair<std::uint64_t, double> stream_of(std::size_t path, bool antithetic) {
    if (antithetic) {
        return {path / 2, (path % 2 == 0) ? 1.0 : -1.0};
    }
    return {path, 1.0};
}

double relative_allowance(double estimate, double se) {
    return estimate != 0.0 ? 3.0 * se / std::abs(estimate) : 0.0;
}

} // namespace

std::size_t lattice_steps(double span, double dt) { return step_count(span, dt); }

void MonteCarloConfig::validate() const {
    if (paths < 1) {
        throw ParameterError("Monte Carlo needs at least one path");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ParameterError("Monte Carlo step dt must be positive");
    }
    if (antithetic && paths % 2 != 0) {
        throw ParameterError("antithetic sampling needs an even path count");
    }
    if (!(exclusion_budget >= 0.0)) {
        throw ParameterError("exclusion budget must be non-negative");
    }
}

FeedbackPolicy constant_policy(Control control) {
    return [control = std::move(control)](StateView, double, std::span<double> out) {
        std::copy(control.begin(), control.end(), out.begin());
    };
}

FeedbackPolicy field_policy(const pde::PolicyField& field) {
    if (field.time_stamps.empty() || field.controls.size() != field.time_stamps.size()) {
        throw ParameterError("policy field has no slices");
    }
    auto shared = std::make_shared<const pde::PolicyField>(field);
    return [shared](StateView y, double t, std::span<double> out) {
        const auto& field = *shared;
        const auto& stamps = field.time_stamps;
        auto it = std::upper_bound(stamps.begin(), stamps.end(), t);
        const std::size_t slice =
            it == stamps.end() ? stamps.size() - 1 : static_cast<std::size_t>(it - stamps.begin());
        const auto& grid = field.grid;
        const std::size_t k = field.control_dim;
        const double pos = (y[0] - grid.y_min()) / grid.spacing();
        const double last = static_cast<double>(grid.nodes() - 1);
        if (!(pos > 0.0)) {
            const auto c = field.at(slice, 0);
            std::copy(c.begin(), c.end(), out.begin());
            return;
        }
        if (pos >= last) {
            const auto c = field.at(slice, grid.nodes() - 1);
            std::copy(c.begin(), c.end(), out.begin());
            return;
        }
        auto j = static_cast<std::size_t>(pos);
        const double w = pos - static_cast<double>(j);
        if (field.continuous) {
            const auto a = field.at(slice, j);
            const auto b = field.at(slice, j + 1);
            for (std::size_t c = 0; c < k; ++c) {
                out[c] = (1.0 - w) * a[c] + w * b[c];
            }
        } else {
            const auto c = field.at(slice, w > 0.5 ? j + 1 : j);
            std::copy(c.begin(), c.end(), out.begin());
        }
    };
}

PathBatch simulate_paths(const ControlModel& model, const FeedbackPolicy& policy, StateView y0,
                         double T, const MonteCarloConfig& mc,
                         std::span<const double> record_times, double t0) {
    mc.validate();
    if (y0.size() != model.dim()) {
        throw ParameterError("initial state has the wrong dimension");
    }
    const Lattice lat = make_lattice(t0, T, mc.dt, record_times);
    const std::size_t N = model.dim();
    const std::size_t K = model.control_dim();
    const std::size_t R = lat.record_steps.size();

    PathBatch batch;
    batch.paths = mc.paths;
    batch.dim = N;
    batch.control_dim = K;
    batch.steps = lat.steps;
    batch.dt = lat.dt;
    batch.t0 = t0;
    for (std::size_t s : lat.record_steps) {
        batch.record_times.push_back(s == lat.steps ? T : t0 + static_cast<double>(s) * lat.dt);
    }
    batch.states.assign(mc.paths * R * N, std::numeric_limits<double>::quiet_NaN());
    batch.controls.assign(mc.paths * R * K, std::numeric_limits<double>::quiet_NaN());
    batch.log_discount.assign(mc.paths * R, std::numeric_limits<double>::quiet_NaN());
    batch.reward.assign(mc.paths * R, std::numeric_limits<double>::quiet_NaN());
    batch.excluded.assign(mc.paths, 0);

    const double dt = lat.dt;
    const double sqrt_dt = std::sqrt(dt);
    parallel_for(mc.paths, mc.threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> y(N);
        std::vector<double> control(K);
        std::vector<double> drift(N);
        for (std::size_t p = begin; p < end; ++p) {
            const auto [stream, sign] = stream_of(p, mc.antithetic);
            PathStream rng(mc.seed, stream);
            std::copy(y0.begin(), y0.end(), y.begin());
            double log_discount = 0.0;
            double reward = 0.0;
            std::size_t r = 0;
            bool bad = false;
            for (std::size_t n = 0;; ++n) {
                const double t = n == lat.steps ? T : t0 + static_cast<double>(n) * dt;
                policy(y, t, control);
                while (r < R && lat.record_steps[r] == n) {
                    const std::size_t at = p * R + r;
                    std::copy(y.begin(), y.end(), batch.states.begin() + at * N);
                    std::copy(control.begin(), control.end(), batch.controls.begin() + at * K);
                    batch.log_discount[at] = log_discount;
                    batch.reward[at] = reward;
                    ++r;
                }
                if (n == lat.steps) {
                    break;
                }
                const double f = model.running_reward(y, control);
                const double h = model.discount_rate(y, control);
                model.drift(y, control, drift);
                reward += std::exp(log_discount) * f * dt;
                log_discount += h * dt;
                for (std::size_t i = 0; i < N; ++i) {
                    y[i] += drift[i] * dt + sign * sqrt_dt * rng.normal();
                }
                if (!all_finite(y) || !std::isfinite(log_discount) || !std::isfinite(reward)) {
                    bad = true;
                    break;
                }
            }
            if (bad) {
                batch.excluded[p] = 1;
                for (std::size_t q = 0; q < R; ++q) {
                    batch.log_discount[p * R + q] = std::numeric_limits<double>::quiet_NaN();
                    batch.reward[p * R + q] = std::numeric_limits<double>::quiet_NaN();
                }
            }
        }
    });
    batch.exclusions = static_cast<std::size_t>(
        std::count(batch.excluded.begin(), batch.excluded.end(), std::uint8_t{1}));
    check_exclusions(batch.exclusions, mc.paths, mc.exclusion_budget);
    return batch;
}

double pairwise_sum(std::span<const double> values) noexcept {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) {
            s += v;
        }
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

EstimatorResult summarize(std::span<const double> samples, std::span<const std::uint8_t> excluded,
                          bool antithetic) {
    std::vector<double> units;
    std::size_t exclusions = 0;
    std::size_t contributing = 0;
    if (antithetic) {
        for (std::size_t m = 0; m + 1 < samples.size(); m += 2) {
            if (excluded[m] || excluded[m + 1]) {
                exclusions += excluded[m] + excluded[m + 1];
                continue;
            }
            units.push_back(0.5 * (samples[m] + samples[m + 1]));
            contributing += 2;
        }
    } else {
        for (std::size_t p = 0; p < samples.size(); ++p) {
            if (excluded[p]) {
                ++exclusions;
                continue;
            }
            units.push_back(samples[p]);
            ++contributing;
        }
    }
    EstimatorResult out;
    out.paths = contributing;
    out.exclusions = exclusions;
    if (units.empty()) {
        out.mean = std::numeric_limits<double>::quiet_NaN();
        out.standard_error = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const auto m = static_cast<double>(units.size());
    out.mean = pairwise_sum(units) / m;
    if (units.size() > 1) {
        std::vector<double> sq(units.size());
        for (std::size_t i = 0; i < units.size(); ++i) {
            const double d = units[i] - out.mean;
            sq[i] = d * d;
        }
        out.standard_error = std::sqrt(pairwise_sum(sq) / (m - 1.0) / m);
    }
    return out;
}

EstimatorResult estimate_value(const ControlModel& model, const FeedbackPolicy& policy,
                               StateView y0, double t, double T, const MonteCarloConfig& mc) {
    const auto batch = simulate_paths(model, policy, y0, T, mc, {}, t);
    std::vector<double> samples(batch.paths);
    for (std::size_t p = 0; p < batch.paths; ++p) {
        if (batch.excluded[p]) {
            samples[p] = 0.0;
            continue;
        }
        const double g = model.terminal_reward(batch.state(p, 0));
        samples[p] = batch.reward[p] + std::exp(batch.log_discount[p]) * g;
    }
    auto out = summarize(samples, batch.excluded, mc.antithetic);
    out.seed = mc.seed;
    out.horizon = T;
    if (mc.keep_path_log) {
        out.path_log_discount = batch.log_discount;
    }
    return out;
}

ContractionStats coupled_contraction(const ControlModel& model, const FeedbackPolicy& policy,
                                     StateView y0, StateView y0_bar, double T,
                                     const MonteCarloConfig& mc) {
    mc.validate();
    const std::size_t N = model.dim();
    const std::size_t K = model.control_dim();
    if (y0.size() != N || y0_bar.size() != N) {
        throw ParameterError("initial states have the wrong dimension");
    }
    const Lattice lat = make_lattice(0.0, T, mc.dt, {});
    const double dt = lat.dt;
    const double sqrt_dt = std::sqrt(dt);
    const double L2 = model.lip_L2();
    const double one_step = 1.0 + L2 * dt;
    if (!(one_step > 0.0)) {
        throw ParameterError("coupled_contraction needs 1 + L2 dt > 0");
    }
    double d0 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        d0 += (y0[i] - y0_bar[i]) * (y0[i] - y0_bar[i]);
    }
    d0 = std::sqrt(d0);

    const std::size_t S = lat.steps + 1;
    std::size_t workers = mc.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                          : mc.threads;
    workers = std::min(workers, mc.paths);
    const std::size_t chunk = (mc.paths + workers - 1) / workers;
    std::vector<std::vector<double>> max_dist(workers, std::vector<double>(S, 0.0));
    std::vector<std::uint8_t> excluded(mc.paths, 0);

    parallel_for(workers, workers, [&](std::size_t wb, std::size_t we) {
        for (std::size_t w = wb; w < we; ++w) {
            auto& local = max_dist[w];
            std::vector<double> a(N), b(N), ca(K), cb(K), da(N), db(N), z(N);
            const std::size_t begin = std::min(mc.paths, w * chunk);
            const std::size_t end = std::min(mc.paths, begin + chunk);
            std::vector<double> dist(S);
            for (std::size_t p = begin; p < end; ++p) {
                const auto [stream, sign] = stream_of(p, mc.antithetic);
                PathStream rng(mc.seed, stream);
                std::copy(y0.begin(), y0.end(), a.begin());
                std::copy(y0_bar.begin(), y0_bar.end(), b.begin());
                bool bad = false;
                for (std::size_t n = 0; n < S; ++n) {
                    double d = 0.0;
                    for (std::size_t i = 0; i < N; ++i) {
                        d += (a[i] - b[i]) * (a[i] - b[i]);
                    }
                    dist[n] = std::sqrt(d);
                    if (n + 1 == S) {
                        break;
                    }
                    const double t = static_cast<double>(n) * dt;
                    policy(a, t, ca);
                    policy(b, t, cb);
                    model.drift(a, ca, da);
                    model.drift(b, cb, db);
                    for (std::size_t i = 0; i < N; ++i) {
                        z[i] = sign * sqrt_dt * rng.normal();
                        a[i] += da[i] * dt + z[i];
                        b[i] += db[i] * dt + z[i];
                    }
                    if (!all_finite(a) || !all_finite(b)) {
                        bad = true;
                        break;
                    }
                }
                if (bad) {
                    excluded[p] = 1;
                    continue;
                }
                for (std::size_t n = 0; n < S; ++n) {
                    local[n] = std::max(local[n], dist[n]);
                }
            }
        }
    });

    ContractionStats out;
    out.paths = mc.paths;
    out.exclusions = static_cast<std::size_t>(
        std::count(excluded.begin(), excluded.end(), std::uint8_t{1}));
    check_exclusions(out.exclusions, mc.paths, mc.exclusion_budget);
    double discrete = 1.0;
    for (std::size_t n = 0; n < S; ++n) {
        double m = 0.0;
        for (const auto& local : max_dist) {
            m = std::max(m, local[n]);
        }
        const double t = n + 1 == S ? T : static_cast<double>(n) * dt;
        out.times.push_back(t);
        out.max_distance.push_back(m);
        const double ratio = d0 > 0.0 ? m / (d0 * std::exp(L2 * t)) : 0.0;
        const double ratio_discrete = d0 > 0.0 ? m / (d0 * discrete) : 0.0;
        out.max_ratio.push_back(ratio);
        out.max_ratio_discrete.push_back(ratio_discrete);
        out.worst_ratio = std::max(out.worst_ratio, ratio);
        out.worst_ratio_discrete = std::max(out.worst_ratio_discrete, ratio_discrete);
        discrete *= one_step;
    }
    return out;
}

std::string bound_name(const BoundSpec& spec) {
    struct {
        std::string operator()(const GaussianDiscountBound&) const { return "gaussian_discount"; }
        std::string operator()(const NegativeDiscountBound& b) const {
            return b.ito_corrected ? "negative_discount_ito" : "negative_discount";
        }
        std::string operator()(const ExponentialEnvelopeBound&) const {
            return "exponential_envelope";
        }
    } visitor;
    return std::visit(visitor, spec);
}

double bound_value(const BoundSpec& spec, StateView y0, double t) {
    const double r = norm(y0);
    struct Visitor {
        StateView y0;
        double r;
        double t;
        double operator()(const GaussianDiscountBound& b) const {
            const double y_plus = std::max(y0[0], 0.0);
            const double rate = -b.P + b.Q * b.beta / b.alpha +
                                b.Q * b.Q / (2.0 * b.alpha * b.alpha);
            return std::exp(b.Q * y_plus / b.alpha) * std::exp(rate * t);
        }
        double operator()(const NegativeDiscountBound& b) const {
            double moment = r * std::exp(b.L2 * t);
            if (b.ito_corrected) {
                // E|Y_t| <= sqrt(E|Y_t|^2) with the Itô term N dt kept.
                const double n = static_cast<double>(y0.size());
                const double decay = std::exp(2.0 * b.L2 * t);
                moment = std::sqrt(r * r * decay + n * (decay - 1.0) / (2.0 * b.L2));
            }
            return b.L1 * std::exp(-b.w * t) * (1.0 + moment);
        }
        double operator()(const ExponentialEnvelopeBound& b) const {
            return b.K * std::exp(b.M * r);
        }
    };
    return std::visit(Visitor{y0, r, t}, spec);
}

BoundReport verify_bounds(const ControlModel& model, const BoundSpec& spec, StateView y0,
                          std::span<const double> times, const MonteCarloConfig& mc) {
    if (times.empty()) {
        throw ParameterError("verify_bounds needs at least one time");
    }
    if (const auto* g = std::get_if<GaussianDiscountBound>(&spec)) {
        if (model.dim() != 1) {
            throw ParameterError("the gaussian discount bound is one-dimensional");
        }
        if (!(g->alpha > 0.0)) {
            throw ParameterError("the gaussian discount bound needs alpha > 0");
        }
    }
    std::vector<double> sorted(times.begin(), times.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    // t = 0 is deterministic; record it via a separate point without simulation.
    std::vector<double> record;
    for (double t : sorted) {
        if (t > 0.0) {
            record.push_back(t);
        }
    }
    BoundReport rep;
    rep.bound = bound_name(spec);
    rep.y0.assign(y0.begin(), y0.end());
    rep.worst_margin = std::numeric_limits<double>::infinity();

    std::vector<std::string> factors;
    if (std::holds_alternative<GaussianDiscountBound>(spec)) {
        factors = {"discount"};
    } else if (std::holds_alternative<NegativeDiscountBound>(spec)) {
        factors = {"f"};
    } else {
        factors = {"abs_f", "abs_g", "one"};
    }

    for (std::size_t c = 0; c < model.control_count(); ++c) {
        const auto& d = model.controls()[c];
        std::optional<PathBatch> batch;
        if (!record.empty()) {
            batch = simulate_paths(model, constant_policy(d), y0, record.back(), mc, record);
        }
        for (double t : sorted) {
            const auto r_it = std::find(record.begin(), record.end(), t);
            const std::size_t r = static_cast<std::size_t>(r_it - record.begin());
            for (const auto& factor : factors) {
                const auto weight = [&](StateView y, double log_discount) {
                    const double discount = std::exp(log_discount);
                    if (factor == "discount" || factor == "one") {
                        return discount;
                    }
                    if (factor == "f") {
                        return discount * model.running_reward(y, d);
                    }
                    if (factor == "abs_f") {
                        return discount * std::abs(model.running_reward(y, d));
                    }
                    return discount * std::abs(model.terminal_reward(y));
                };
                EstimatorResult est;
                if (t <= 0.0) {
                    est.mean = weight(y0, 0.0);
                    est.paths = mc.paths;
                } else {
                    std::vector<double> samples(batch->paths, 0.0);
                    for (std::size_t p = 0; p < batch->paths; ++p) {
                        if (!batch->excluded[p]) {
                            samples[p] =
                                weight(batch->state(p, r), batch->log_discount[p * record.size() + r]);
                        }
                    }
                    est = summarize(samples, batch->excluded, mc.antithetic);
                }
                BoundPoint pt;
                pt.control_index = c;
                pt.t = t;
                pt.factor = factor;
                pt.estimate = est.mean;
                pt.standard_error = est.standard_error;
                pt.bound = bound_value(spec, y0, t);
                const double allowed =
                    pt.bound * (1.0 + relative_allowance(est.mean, est.standard_error)) +
                    1e-12 * std::abs(pt.bound);
                pt.met = est.mean <= allowed;
                pt.margin = pt.bound != 0.0 ? (allowed - est.mean) / std::abs(pt.bound)
                                            : allowed - est.mean;
                rep.worst_margin = std::min(rep.worst_margin, pt.margin);
                rep.met = rep.met && pt.met;
                rep.points.push_back(pt);
            }
        }
    }
    return rep;
}

HorizonConvergenceReport horizon_convergence(const ControlModel& model,
                                             const FeedbackPolicy& policy, StateView y0,
                                             std::span<const double> horizons,
                                             const MonteCarloConfig& mc,
                                             const KappaTable* kappa) {
    if (horizons.size() < 2) {
        throw ParameterError("horizon_convergence needs at least two horizons");
    }
    if (!(horizons.front() > 0.0)) {
        throw ParameterError("horizons must be positive");
    }
    const auto batch = simulate_paths(model, policy, y0, horizons.back(), mc, horizons);
    const std::size_t R = horizons.size();
    HorizonConvergenceReport rep;
    rep.horizons.assign(horizons.begin(), horizons.end());
    std::vector<double> samples(batch.paths);
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t p = 0; p < batch.paths; ++p) {
            samples[p] = batch.excluded[p] ? 0.0 : batch.reward[p * R + r];
        }
        auto est = summarize(samples, batch.excluded, mc.antithetic);
        est.seed = mc.seed;
        est.horizon = horizons[r];
        rep.estimates.push_back(std::move(est));
    }
    for (std::size_t r = 0; r + 1 < R; ++r) {
        for (std::size_t p = 0; p < batch.paths; ++p) {
            samples[p] =
                batch.excluded[p] ? 0.0 : batch.reward[p * R + r + 1] - batch.reward[p * R + r];
        }
        const auto diff = summarize(samples, batch.excluded, mc.antithetic);
        rep.differences.push_back(diff.mean);
        rep.difference_se.push_back(diff.standard_error);
    }
    rep.shrinking = true;
    for (std::size_t j = 0; j + 1 < rep.differences.size(); ++j) {
        if (!(std::abs(rep.differences[j + 1]) < std::abs(rep.differences[j]))) {
            rep.shrinking = false;
        }
    }
    if (kappa) {
        const double tail = kappa->integrate_kappa(horizons[R - 2], horizons[R - 1]);
        rep.kappa_tail = tail;
        rep.final_within_tail =
            std::abs(rep.differences.back()) <= tail + 3.0 * rep.difference_se.back();
    }
    rep.converged = rep.shrinking && rep.final_within_tail;
    return rep;
}

nlohmann::json to_json(const EstimatorResult& result) {
    return {
        {"mean", result.mean},
        {"standard_error", result.standard_error},
        {"paths", result.paths},
        {"exclusions", result.exclusions},
        {"seed", result.seed},
        {"horizon", result.horizon},
    };
}

nlohmann::json to_json(const ContractionStats& stats) {
    return {
        {"times", stats.times},
        {"max_ratio", stats.max_ratio},
        {"max_ratio_discrete", stats.max_ratio_discrete},
        {"max_distance", stats.max_distance},
        {"worst_ratio", stats.worst_ratio},
        {"worst_ratio_discrete", stats.worst_ratio_discrete},
        {"paths", stats.paths},
        {"exclusions", stats.exclusions},
    };
}

nlohmann::json to_json(const BoundReport& report) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : report.points) {
        points.push_back({
            {"control_index", p.control_index},
            {"t", p.t},
            {"factor", p.factor},
            {"estimate", p.estimate},
            {"standard_error", p.standard_error},
            {"bound", p.bound},
            {"margin", p.margin},
            {"met", p.met},
        });
    }
    return {
        {"bound", report.bound},
        {"y0", report.y0},
        {"status", report.met ? "met" : "violated"},
        {"worst_margin", report.worst_margin},
        {"points", points},
    };
}

nlohmann::json to_json(const HorizonConvergenceReport& report) {
    nlohmann::json estimates = nlohmann::json::array();
    for (const auto& e : report.estimates) {
        estimates.push_back(to_json(e));
    }
    nlohmann::json j{
        {"horizons", report.horizons},
        {"estimates", estimates},
        {"differences", report.differences},
        {"difference_se", report.difference_se},
        {"shrinking", report.shrinking},
        {"final_within_tail", report.final_within_tail},
        {"converged", report.converged},
    };
    j["kappa_tail"] = report.kappa_tail ? nlohmann::json(*report.kappa_tail) : nlohmann::json();
    return j;
}

} // namespace hjbkit::mc
