#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

namespace stratlearn::io {

// FNV-1a 64 over the compact JSON dump; used for the "# config-hash:"
// comment header on emitted tables.
std::string config_hash_hex(const nlohmann::json& config);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace stratlearn::io
