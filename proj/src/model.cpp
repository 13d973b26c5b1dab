#include "hjbkit/model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hjbkit/errors.hpp"
#include "hjbkit/rng.hpp"

namespace hjbkit {
namespace {

std::string format_point(StateView y) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (std::size_t i = 0; i < y.size(); ++i) {
        os << (i ? ", " : "") << y[i];
    }
    os << ')';
    return os.str();
}

double checked(double value, const char* coefficient, StateView y, ControlView d) {
    if (!std::isfinite(value)) {
        throw EvaluationError(std::string("coefficient ") + coefficient +
                              " is not finite at y = " + format_point(y) +
                              ", delta = " + format_point(d));
    }
    return value;
}

} // namespace

void Box::validate(std::size_t expected_dim) const {
    if (lower.size() != expected_dim || upper.size() != expected_dim) {
        throw ParameterError("domain box dimension does not match model dimension " +
                             std::to_string(expected_dim));
    }
    for (std::size_t i = 0; i < lower.size(); ++i) {
        if (!(lower[i] < upper[i]) || !std::isfinite(lower[i]) || !std::isfinite(upper[i])) {
            throw ParameterError("domain box must be bounded with lower < upper on every axis");
        }
    }
}

double norm(StateView y) noexcept {
    double sq = 0.0;
    for (double v : y) {
        sq += v * v;
    }
    return std::sqrt(sq);
}

ControlModel::ControlModel(std::size_t dim, std::vector<Control> controls, Maps maps,
                           double lip_L1, double lip_L2)
    : dim_(dim), control_dim_(0), controls_(std::move(controls)), maps_(std::move(maps)),
      lip_L1_(lip_L1), lip_L2_(lip_L2) {
    if (dim_ == 0) {
        throw ParameterError("state dimension must be positive");
    }
    if (controls_.empty()) {
        throw ParameterError("control list must be nonempty");
    }
    control_dim_ = controls_.front().size();
    std::set<Control> seen;
    for (const auto& c : controls_) {
        if (c.size() != control_dim_) {
            throw ParameterError("all control points must have the same dimension");
        }
        if (!seen.insert(c).second) {
            throw ParameterError("duplicate control point " + format_point(c));
        }
    }
    if (!maps_.drift || !maps_.discount_rate || !maps_.running_reward || !maps_.terminal_reward) {
        throw ParameterError("all coefficient maps must be provided");
    }
    if (!(lip_L1_ > 0.0) || !std::isfinite(lip_L1_)) {
        throw ParameterError("L1 must be positive");
    }
    if (lip_L2_ == 0.0 || !std::isfinite(lip_L2_)) {
        throw ParameterError("L2 must be nonzero");
    }
}

double ControlModel::drift1(double y, ControlView d) const {
    double out = 0.0;
    maps_.drift({&y, 1}, d, {&out, 1});
    return out;
}

ControlModel& ControlModel::set_domain_box(Box box) {
    box.validate(dim_);
    domain_box_ = std::move(box);
    if (descriptor_) {
        (*descriptor_)["domain_box"] = {{"lower", domain_box_->lower},
                                        {"upper", domain_box_->upper}};
    }
    return *this;
}

ControlModel& ControlModel::add_warning(std::string warning) {
    warnings_.push_back(std::move(warning));
    return *this;
}

ControlModel& ControlModel::set_descriptor(nlohmann::json descriptor) {
    descriptor_ = std::move(descriptor);
    return *this;
}

ControlModel ControlModel::from_json(const nlohmann::json& doc) {
    try {
        const auto dim = doc.at("dim").get<std::size_t>();
        auto controls = doc.at("controls").get<std::vector<Control>>();
        if (controls.empty()) {
            throw ParameterError("control list must be nonempty");
        }
        const auto k = controls.front().size();
        Maps maps{compile_drift(doc.at("drift"), dim, k),
                  compile_scalar(doc.at("discount_rate"), dim, k),
                  compile_scalar(doc.at("running_reward"), dim, k),
                  compile_terminal(doc.at("terminal_reward"), dim)};
        ControlModel model(dim, std::move(controls), std::move(maps), doc.at("L1").get<double>(),
                           doc.at("L2").get<double>());
        auto base = doc;
        base.erase("truncations");
        model.set_descriptor(base);
        if (doc.contains("domain_box")) {
            const auto& box = doc.at("domain_box");
            model.set_domain_box(Box{box.at("lower").get<std::vector<double>>(),
                                     box.at("upper").get<std::vector<double>>()});
        }
        if (doc.contains("truncations")) {
            for (double level : doc.at("truncations").get<std::vector<double>>()) {
                model = truncate(model, level);
            }
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("malformed model document: ") + e.what());
    }
}

ControlModel ControlModel::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParameterError("cannot open model file " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError("cannot parse model file " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

nlohmann::json ControlModel::to_json() const {
    if (!descriptor_) {
        throw ParameterError("model was built from closures and has no document form");
    }
    return *descriptor_;
}

double taper(double radius, double k) noexcept {
    if (radius <= k) {
        return 1.0;
    }
    if (radius >= 2.0 * k) {
        return 0.0;
    }
    return 2.0 - radius / k;
}

ControlModel truncate(const ControlModel& model, double k) {
    if (!(k > 0.0) || !std::isfinite(k)) {
        throw ParameterError("truncation level k must be positive");
    }
    const auto& base = model.maps();
    ControlModel::Maps maps;
    maps.drift = base.drift;
    maps.discount_rate = [h = base.discount_rate, k](StateView y, ControlView d) {
        const double value = h(y, d);
        const double r = norm(y);
        if (r <= k) {
            return value;
        }
        const double positive = std::max(value, 0.0);
        const double negative = std::max(-value, 0.0);
        return positive * taper(r, k) - negative;
    };
    maps.running_reward = [f = base.running_reward, k](StateView y, ControlView d) {
        const double r = norm(y);
        return r <= k ? f(y, d) : f(y, d) * taper(r, k);
    };
    maps.terminal_reward = [g = base.terminal_reward, k](StateView y) {
        const double r = norm(y);
        return r <= k ? g(y) : g(y) * taper(r, k);
    };
    ControlModel out(model.dim(), model.controls(), std::move(maps),
                     2.0 * model.lip_L1() * (1.0 + 1.0 / k), model.lip_L2());
    out.domain_box_ = model.domain_box_;
    out.warnings_ = model.warnings_;
    if (model.descriptor_) {
        auto doc = *model.descriptor_;
        if (!doc.contains("truncations")) {
            doc["truncations"] = nlohmann::json::array();
        }
        doc["truncations"].push_back(k);
        // The stored L1 is the untruncated constant; from_json re-derives the truncated one.
        out.descriptor_ = std::move(doc);
    }
    return out;
}

AssumptionReport check_assumption1(const ControlModel& model, const Box& box,
                                   std::size_t samples, std::uint64_t seed, double tolerance) {
    box.validate(model.dim());
    if (samples < 2) {
        throw ParameterError("check_assumption1 needs at least 2 samples");
    }
    const auto n = model.dim();
    const double L1 = model.lip_L1();
    const double L2 = model.lip_L2();

    std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
    pairs.reserve(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        PathStream stream(seed, s);
        std::vector<double> y(n), y_bar(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = box.lower[i] + (box.upper[i] - box.lower[i]) * stream.uniform();
            y_bar[i] = box.lower[i] + (box.upper[i] - box.lower[i]) * stream.uniform();
        }
        pairs.emplace_back(std::move(y), std::move(y_bar));
    }
    if (n <= 16) {
        const std::size_t corners = std::size_t{1} << n;
        auto corner = [&](std::size_t mask) {
            std::vector<double> c(n);
            for (std::size_t i = 0; i < n; ++i) {
                c[i] = (mask >> i) & 1 ? box.upper[i] : box.lower[i];
            }
            return c;
        };
        for (std::size_t a = 0; a < corners; ++a) {
            for (std::size_t b = a + 1; b < corners; ++b) {
                pairs.emplace_back(corner(a), corner(b));
            }
        }
    }

    AssumptionReport report;
    report.tolerance = tolerance;
    report.pairs_checked = pairs.size();
    std::vector<double> drift_a(n), drift_b(n);

    auto consider_lipschitz = [&](double ratio, const char* name, const auto& pr,
                                  std::size_t ci) {
        if (ratio > report.worst_lipschitz_ratio) {
            report.worst_lipschitz_ratio = ratio;
            report.lipschitz_witness = {pr.first, pr.second, ci, name, ratio};
        }
    };

    for (const auto& pr : pairs) {
        const auto& [y, y_bar] = pr;
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sq += (y[i] - y_bar[i]) * (y[i] - y_bar[i]);
        }
        if (sq == 0.0) {
            continue;
        }
        const double dist = std::sqrt(sq);
        const double ga = checked(model.terminal_reward(y), "g", y, {});
        const double gb = checked(model.terminal_reward(y_bar), "g", y_bar, {});
        consider_lipschitz(std::abs(ga - gb) / (L1 * dist), "g", pr, 0);

        for (std::size_t ci = 0; ci < model.control_count(); ++ci) {
            const auto& d = model.controls()[ci];
            const double fa = checked(model.running_reward(y, d), "f", y, d);
            const double fb = checked(model.running_reward(y_bar, d), "f", y_bar, d);
            consider_lipschitz(std::abs(fa - fb) / (L1 * dist), "f", pr, ci);
            const double ha = checked(model.discount_rate(y, d), "h", y, d);
            const double hb = checked(model.discount_rate(y_bar, d), "h", y_bar, d);
            consider_lipschitz(std::abs(ha - hb) / (L1 * dist), "h", pr, ci);

            model.drift(y, d, drift_a);
            model.drift(y_bar, d, drift_b);
            double diff_sq = 0.0;
            double inner = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                checked(drift_a[i], "i", y, d);
                checked(drift_b[i], "i", y_bar, d);
                const double di = drift_a[i] - drift_b[i];
                diff_sq += di * di;
                inner += (y[i] - y_bar[i]) * di;
            }
            consider_lipschitz(std::sqrt(diff_sq) / (L1 * dist), "i", pr, ci);
            const double drift_ratio = 1.0 + (inner - L2 * sq) / (std::abs(L2) * sq);
            if (drift_ratio > report.worst_drift_ratio) {
                report.worst_drift_ratio = drift_ratio;
                report.drift_witness = {y, y_bar, ci, "i (one-sided)", drift_ratio};
            }
        }
    }
    report.passed = report.worst_ratio() <= 1.0 + tolerance;
    return report;
}

nlohmann::json to_json(const AssumptionReport& report) {
    auto witness = [](const AssumptionWitness& w) {
        return nlohmann::json{{"y", w.y},
                              {"y_bar", w.y_bar},
                              {"control_index", w.control_index},
                              {"coefficient", w.coefficient},
                              {"ratio", w.ratio}};
    };
    return {{"passed", report.passed},
            {"worst_ratio", report.worst_ratio()},
            {"worst_lipschitz_ratio", report.worst_lipschitz_ratio},
            {"worst_drift_ratio", report.worst_drift_ratio},
            {"lipschitz_witness", witness(report.lipschitz_witness)},
            {"drift_witness", witness(report.drift_witness)},
            {"pairs_checked", report.pairs_checked},
            {"tolerance", report.tolerance}};
}

} // namespace hjbkit
