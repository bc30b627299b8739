#include "vad/toml_lite.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vad {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// strips a trailing comment that is not inside a quoted string
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& v, const std::string& key) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    if (!v.empty() && v.front() == '"')
        throw std::runtime_error("toml: unterminated string for key " + key);
    return v;
}

std::vector<std::string> split_array(const std::string& body, const std::string& key) {
    std::vector<std::string> items;
    std::string cur;
    bool quoted = false;
    for (char c : body) {
        if (c == '"') {
            quoted = !quoted;
            cur += c;
        } else if (c == ',' && !quoted) {
            items.push_back(unquote(trim(cur), key));
            cur.clear();
        } else {
            cur += c;
        }
    }
    const std::string last = trim(cur);
    if (!last.empty()) items.push_back(unquote(last, key));
    return items;
}

}  // namespace

TomlTable TomlTable::parse(const std::string& text) {
    TomlTable t;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("toml: malformed section at line " + std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("toml: expected key = value at line " + std::to_string(lineno));
        const std::string key =
            (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (value.empty())
            throw std::runtime_error("toml: empty value for key " + key);
        if (value.front() == '[') {
            if (value.back() != ']')
                throw std::runtime_error("toml: arrays must be single-line (key " + key + ")");
            t.arrays_[key] = split_array(value.substr(1, value.size() - 2), key);
        } else {
            t.scalars_[key] = unquote(value, key);
        }
    }
    return t;
}

TomlTable TomlTable::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

bool TomlTable::has(const std::string& key) const {
    return scalars_.count(key) > 0 || arrays_.count(key) > 0;
}

const std::string& TomlTable::raw_scalar(const std::string& key) const {
    const auto it = scalars_.find(key);
    if (it == scalars_.end()) throw std::runtime_error("config: missing key " + key);
    return it->second;
}

std::string TomlTable::get_string(const std::string& key) const { return raw_scalar(key); }

std::int64_t TomlTable::get_int(const std::string& key) const {
    const std::string& v = raw_scalar(key);
    try {
        std::size_t pos = 0;
        const std::int64_t r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw std::runtime_error("config: key " + key + " is not an integer: '" + v + "'");
    }
}

double TomlTable::get_double(const std::string& key) const {
    const std::string& v = raw_scalar(key);
    try {
        std::size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw std::runtime_error("config: key " + key + " is not a number: '" + v + "'");
    }
}

bool TomlTable::get_bool(const std::string& key) const {
    const std::string& v = raw_scalar(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw std::runtime_error("config: key " + key + " is not a boolean: '" + v + "'");
}

std::vector<std::string> TomlTable::get_array(const std::string& key) const {
    const auto it = arrays_.find(key);
    if (it == arrays_.end()) {
        if (scalars_.count(key))
            throw std::runtime_error("config: key " + key + " is a scalar, expected array");
        return {};
    }
    return it->second;
}

std::string TomlTable::get_string_or(const std::string& key, const std::string& def) const {
    return scalars_.count(key) ? get_string(key) : def;
}
std::int64_t TomlTable::get_int_or(const std::string& key, std::int64_t def) const {
    return scalars_.count(key) ? get_int(key) : def;
}
double TomlTable::get_double_or(const std::string& key, double def) const {
    return scalars_.count(key) ? get_double(key) : def;
}
bool TomlTable::get_bool_or(const std::string& key, bool def) const {
    return scalars_.count(key) ? get_bool(key) : def;
}

}  // namespace vad
