#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

namespace moa {

/// Lowercase hex SHA-256 of raw bytes.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of the compact, key-sorted serialization of `value`.
std::string json_digest(const nlohmann::json& value);

}  // namespace moa
