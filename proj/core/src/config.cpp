#include "etd/config.hpp"

#include "etd/errors.hpp"

#include <cctype>
#include <fstream>

namespace etd {
namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string parse_value(const std::string& raw, const std::string& where) {
    std::string v = trim(raw);
    if (!v.empty() && v.front() == '"') {
        size_t close = v.find('"', 1);
        if (close == std::string::npos) throw ConfigError(where + ": unterminated string");
        return v.substr(1, close - 1);
    }
    // strip trailing comments on unquoted values
    size_t hash = v.find('#');
    if (hash != std::string::npos) v = trim(v.substr(0, hash));
    if (v.empty()) throw ConfigError(where + ": empty value");
    return v;
}

} // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);

    Config cfg;
    std::string line;
    std::string section;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        const std::string where = path + ":" + std::to_string(lineno);
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(where + ": malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty()) throw ConfigError(where + ": empty section name");
            continue;
        }
        size_t eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (!section.empty()) key = section + "." + key;
        cfg.values_[key] = parse_value(s.substr(eq + 1), where);
    }
    return cfg;
}

void Config::set_entry(const std::string& assignment) {
    size_t eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    std::string key = trim(assignment.substr(0, eq));
    if (key.empty()) throw ConfigError("override '" + assignment + "' has empty key");
    values_[key] = parse_value(assignment.substr(eq + 1), "override " + key);
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " is not a number: " + it->second);
    }
}

long long Config::get_int(const std::string& key, long long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        size_t pos = 0;
        long long v = std::stoll(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " is not an integer: " + it->second);
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config key " + key + " is not a boolean: " + it->second);
}

} // namespace etd
