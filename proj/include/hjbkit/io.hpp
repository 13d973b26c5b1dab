#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "hjbkit/pde.hpp"

namespace hjbkit::io {

/// Shortest round-trip decimal form ("nan", "inf", "-inf" for non-finite values).
std::string format_number(double x);

/// FNV-1a 64-bit hash, as 16 lowercase hex digits.
std::string digest(std::string_view text);

/// Provenance stamped into every artifact.
struct Provenance {
    std::string config_digest;
    std::uint64_t seed = 0;
};

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Pretty JSON with a trailing newline; keys are sorted (nlohmann default), so
/// output depends only on content.
std::string dump_json(const nlohmann::json& doc);

/// CSV export of a field: one '#' provenance line, then columns
/// y,t,u followed by the policy's control names when a policy is given.
/// Rows run over time slices in increasing order, then nodes.
std::string field_to_csv(const pde::ValueField& value, const pde::PolicyField* policy,
                         const Provenance& provenance);

struct FieldFile {
    pde::ValueField value;
    std::optional<pde::PolicyField> policy;
    std::string config_digest;
    std::uint64_t seed = 0;
};

/// Parse field_to_csv output. The grid is rebuilt from the y column and must
/// be uniform; throws ParameterError otherwise.
FieldFile field_from_csv(const std::string& text);

} // namespace hjbkit::io
