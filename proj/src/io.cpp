#include "hjbkit/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <fstream>
#include <map>
#include <sstream>

#include "hjbkit/errors.hpp"

namespace hjbkit::io {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

double parse_number(const std::string& s) {
    if (s == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (s == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (s == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) {
        throw ParameterError("cannot parse number '" + s + "'");
    }
    return v;
}

} // namespace

std::string format_number(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, res.ptr};
}

std::string digest(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParameterError("cannot open " + path.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ParameterError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw ParameterError("write failed for " + path.string());
    }
}

std::string dump_json(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

std::string field_to_csv(const pde::ValueField& value, const pde::PolicyField* policy,
                         const Provenance& provenance) {
    if (policy && policy->time_stamps != value.time_stamps) {
        policy = nullptr;
    }
    std::string out = "# config_digest=" + provenance.config_digest +
                      " seed=" + std::to_string(provenance.seed) +
                      " horizon=" + format_number(value.horizon) +
                      " boundary=" + pde::to_string(value.grid.boundary());
    if (policy) {
        out += policy->continuous ? " policy=continuous" : " policy=grid";
    }
    out += "\n";
    out += "y,t,u";
    if (policy) {
        for (const auto& name : policy->control_names) {
            out += "," + name;
        }
    }
    out += "\n";
    for (std::size_t s = 0; s < value.layers.size(); ++s) {
        const std::string t = format_number(value.time_stamps[s]);
        for (std::size_t j = 0; j < value.grid.nodes(); ++j) {
            out += format_number(value.grid.y(j));
            out += ",";
            out += t;
            out += ",";
            out += format_number(value.layers[s][j]);
            if (policy) {
                for (double c : policy->at(s, j)) {
                    out += ",";
                    out += format_number(c);
                }
            }
            out += "\n";
        }
    }
    return out;
}

FieldFile field_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::map<std::string, std::string> meta;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            std::istringstream words(line.substr(1));
            std::string word;
            while (words >> word) {
                const auto eq = word.find('=');
                if (eq != std::string::npos) {
                    meta[word.substr(0, eq)] = word.substr(eq + 1);
                }
            }
            continue;
        }
        auto cells = split(line, ',');
        if (header.empty()) {
            header = std::move(cells);
            if (header.size() < 3 || header[0] != "y" || header[1] != "t" || header[2] != "u") {
                throw ParameterError("field CSV must start with columns y,t,u");
            }
            continue;
        }
        if (cells.size() != header.size()) {
            throw ParameterError("field CSV row has " + std::to_string(cells.size()) +
                                 " cells, expected " + std::to_string(header.size()));
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            row.push_back(parse_number(c));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw ParameterError("field CSV has no rows");
    }
    // Nodes of the first slice define the grid.
    std::vector<double> ys;
    for (const auto& r : rows) {
        if (r[1] != rows.front()[1]) {
            break;
        }
        ys.push_back(r[0]);
    }
    if (ys.size() < 3 || rows.size() % ys.size() != 0) {
        throw ParameterError("field CSV does not describe a rectangular grid");
    }
    const double dy = (ys.back() - ys.front()) / static_cast<double>(ys.size() - 1);
    for (std::size_t j = 0; j < ys.size(); ++j) {
        const double expect = ys.front() + dy * static_cast<double>(j);
        if (std::abs(ys[j] - expect) > 1e-9 * std::max(1.0, std::abs(dy) * ys.size())) {
            throw ParameterError("field CSV grid is not uniform");
        }
    }
    const auto boundary = meta.count("boundary") ? pde::boundary_from_string(meta["boundary"])
                                                 : pde::Boundary::one_sided;
    pde::Grid1D grid(ys.front(), ys.back(), ys.size(), boundary);
    FieldFile f{pde::ValueField{grid, 0.0, {}, {}}, std::nullopt, meta["config_digest"], 0};
    if (meta.count("seed")) {
        f.seed = std::stoull(meta["seed"]);
    }
    const std::size_t k = header.size() - 3;
    if (k > 0) {
        f.policy = pde::PolicyField{grid};
        f.policy->control_dim = k;
        f.policy->control_names.assign(header.begin() + 3, header.end());
        f.policy->continuous = meta["policy"] == "continuous";
    }
    const std::size_t n = ys.size();
    for (std::size_t s = 0; s * n < rows.size(); ++s) {
        std::vector<double> layer(n);
        std::vector<double> controls(n * k);
        const double t = rows[s * n][1];
        for (std::size_t j = 0; j < n; ++j) {
            const auto& r = rows[s * n + j];
            if (r[1] != t || std::abs(r[0] - ys[j]) > 1e-12 * std::max(1.0, std::abs(ys[j]))) {
                throw ParameterError("field CSV slices do not share one grid");
            }
            layer[j] = r[2];
            for (std::size_t c = 0; c < k; ++c) {
                controls[j * k + c] = r[3 + c];
            }
        }
        f.value.time_stamps.push_back(t);
        f.value.layers.push_back(std::move(layer));
        if (f.policy) {
            f.policy->time_stamps.push_back(t);
            f.policy->controls.push_back(std::move(controls));
            f.policy->control_indices.emplace_back(n, pde::PolicyField::npos);
        }
    }
    f.value.horizon = meta.count("horizon") ? parse_number(meta["horizon"])
                                            : f.value.time_stamps.back();
    return f;
}

} // namespace hjbkit::io
