#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "kvnmd/io.hpp"

namespace kvnmd {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

void insert_pair(Config& cfg, const std::string& entry, const std::string& where) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument(where + ": expected key=value, got '" + entry + "'");
    const std::string key = trim(entry.substr(0, eq));
    if (key.empty()) throw std::invalid_argument(where + ": empty key in '" + entry + "'");
    cfg[key] = trim(entry.substr(eq + 1));
}

}  // namespace

Config parse_config_text(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        insert_pair(cfg, line, "config line " + std::to_string(lineno));
    }
    return cfg;
}

Config parse_config_file(const std::string& path) {
    return parse_config_text(read_text_file(path));
}

void apply_overrides(Config& cfg, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) insert_pair(cfg, o, "override");
}

double cfg_double(const Config& cfg, const std::string& key, double fallback) {
    const auto it = cfg.find(key);
    if (it == cfg.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not a number: '" + it->second +
                                    "'");
    }
}

long long cfg_int(const Config& cfg, const std::string& key, long long fallback) {
    const auto it = cfg.find(key);
    if (it == cfg.end()) return fallback;
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not an integer: '" + it->second +
                                    "'");
    }
}

std::string cfg_str(const Config& cfg, const std::string& key, const std::string& fallback) {
    const auto it = cfg.find(key);
    return it == cfg.end() ? fallback : it->second;
}

bool cfg_bool(const Config& cfg, const std::string& key, bool fallback) {
    const auto it = cfg.find(key);
    if (it == cfg.end()) return fallback;
    const std::string& v = it->second;
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw std::invalid_argument("config key '" + key + "': not a boolean: '" + v + "'");
}

std::uint64_t config_hash(const Config& cfg) {
    std::uint64_t h = 14695981039346656037ULL;
    auto feed = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [k, v] : cfg) {
        feed(k);
        feed("=");
        feed(v);
        feed("\n");
    }
    return h;
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "");
    out << "\n";
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw std::invalid_argument("write_csv: row width differs from header");
        for (std::size_t i = 0; i < row.size(); ++i)
            out << format_g17(row[i]) << (i + 1 < row.size() ? "," : "");
        out << "\n";
    }
    if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

void write_text_file(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw std::runtime_error("write_text_file: cannot open " + path);
    out << text;
    if (!out) throw std::runtime_error("write_text_file: write failed for " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_text_file: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace kvnmd
