#pragma once

#include "weakid/identifiability.hpp"

#include <map>
#include <string>
#include <vector>

namespace weakid {

// Flat "section.key" -> value store validated against a fixed schema.
class Settings {
public:
    Settings();  // schema defaults

    static Settings from_file(const std::string& path);
    static Settings from_string(const std::string& text);

    // Throws ConfigError naming the key when it is not in the schema.
    void set(const std::string& key, const std::string& value);
    void apply_override(const std::string& assignment);  // "section.key=value"

    const std::string& get(const std::string& key) const;
    bool is_set(const std::string& key) const { return !get(key).empty(); }
    double get_double(const std::string& key) const;
    long long get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_list(const std::string& key) const;  // "a, b, c" or "start:stop:step"
    std::vector<int> get_int_list(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }
    static const std::vector<std::pair<std::string, std::string>>& schema();

private:
    std::map<std::string, std::string> values_;
};

std::vector<double> parse_list(const std::string& text);

Experiment experiment_from(const Settings& s);
SweepConfig sweep_config_from(const Settings& s);

}  // namespace weakid
