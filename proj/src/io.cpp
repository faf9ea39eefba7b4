#include "stratlearn/io.hpp"

#include <fstream>
#include <sstream>

#include "stratlearn/common.hpp"
#include "stratlearn/rng.hpp"

namespace stratlearn::io {

std::string config_hash_hex(const nlohmann::json& config) {
  const std::uint64_t h = fnv1a64(config.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << text;
}

}  // namespace stratlearn::io
