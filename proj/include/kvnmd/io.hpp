#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace kvnmd {

inline constexpr const char* kVersion = "1.0.0";

// Flat key=value configuration.  '#' starts a comment, blank lines are
// skipped, whitespace around keys and values is trimmed.
using Config = std::map<std::string, std::string>;

Config parse_config_text(const std::string& text);
Config parse_config_file(const std::string& path);

// Apply "key=value" strings on top of an existing configuration.
void apply_overrides(Config& cfg, const std::vector<std::string>& overrides);

double cfg_double(const Config& cfg, const std::string& key, double fallback);
long long cfg_int(const Config& cfg, const std::string& key, long long fallback);
std::string cfg_str(const Config& cfg, const std::string& key, const std::string& fallback);
bool cfg_bool(const Config& cfg, const std::string& key, bool fallback);

// FNV-1a over the canonical "key=value\n" serialization (keys sorted), so
// equal configurations hash equally regardless of input order.
std::uint64_t config_hash(const Config& cfg);

// Shortest representation that round-trips a double exactly.
std::string format_g17(double v);

// Numeric CSV with round-trip precision; creates parent directories.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Whole-file helpers.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace kvnmd
