#pragma once

#include <filesystem>

#include "json.hpp"

namespace graphon {

/// Parses a JSON file. Syntax errors become ParseError carrying
/// "<path>:<line>:<column>".
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Pretty-prints with two-space indent and a trailing newline.
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace graphon
