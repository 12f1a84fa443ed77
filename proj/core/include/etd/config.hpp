#pragma once

#include <map>
#include <optional>
#include <string>

namespace etd {

// Flat key-value configuration in a TOML-style syntax:
//   # comment
//   [section]
//   key = value          -> "section.key"
//   name = "quoted text"
// Values are stored as strings and converted on access.
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);

    // "key=value" override, e.g. from the command line.
    void set_entry(const std::string& assignment);
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

} // namespace etd
