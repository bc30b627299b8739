#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace vad {

/// Reader for the flat TOML subset the config files use: [section] headers,
/// scalar key = value pairs (string, integer, float, bool) and single-line
/// arrays. Keys are addressed as "section.key".
class TomlTable {
  public:
    static TomlTable parse(const std::string& text);
    static TomlTable parse_file(const std::string& path);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<std::string> get_array(const std::string& key) const;

    std::string get_string_or(const std::string& key, const std::string& def) const;
    std::int64_t get_int_or(const std::string& key, std::int64_t def) const;
    double get_double_or(const std::string& key, double def) const;
    bool get_bool_or(const std::string& key, bool def) const;

    const std::map<std::string, std::string>& raw() const { return scalars_; }

  private:
    const std::string& raw_scalar(const std::string& key) const;
    std::map<std::string, std::string> scalars_;
    std::map<std::string, std::vector<std::string>> arrays_;
};

}  // namespace vad
