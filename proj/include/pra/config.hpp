#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pra {

// Flat `key = value` configuration with '#' comments. Units are carried in the
// key names (e.g. cell_radius_m, bandwidth_mhz); values are scalars or
// comma-separated lists.
class Config {
public:
    struct ParseError : std::runtime_error {
        ParseError(const std::string& msg, int line)
            : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line_no(line) {}
        int line_no;
    };

    static Config from_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("cannot open config file: " + path);
        std::stringstream ss;
        ss << is.rdbuf();
        Config c = from_string(ss.str());
        c.source_path_ = path;
        c.raw_bytes_ = ss.str();
        return c;
    }

    static Config from_string(const std::string& text) {
        Config c;
        c.raw_bytes_ = text;
        std::istringstream is(text);
        std::string line;
        int line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            const std::string s = strip(line);
            if (s.empty() || s[0] == '#') continue;
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ParseError("expected 'key = value': " + s, line_no);
            const std::string key = strip(s.substr(0, eq));
            const std::string value = strip(s.substr(eq + 1));
            if (key.empty()) throw ParseError("empty key", line_no);
            c.values_[key] = value;
        }
        return c;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw std::runtime_error("config: missing key '" + key + "'");
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key) const { return parse_double(get_string(key), key); }
    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    long get_int(const std::string& key) const {
        const double v = get_double(key);
        const long n = static_cast<long>(v);
        if (static_cast<double>(n) != v)
            throw std::runtime_error("config: key '" + key + "' is not an integer");
        return n;
    }
    long get_int(const std::string& key, long fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    std::vector<double> get_list(const std::string& key) const {
        std::vector<double> out;
        std::istringstream is(get_string(key));
        std::string item;
        while (std::getline(is, item, ',')) out.push_back(parse_double(strip(item), key));
        return out;
    }
    std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const {
        return has(key) ? get_list(key) : fallback;
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    const std::string& raw_bytes() const { return raw_bytes_; }
    const std::string& source_path() const { return source_path_; }
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static std::string strip(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static double parse_double(const std::string& s, const std::string& key) {
        double v = 0.0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            throw std::runtime_error("config: key '" + key + "' has non-numeric value '" + s + "'");
        return v;
    }

    std::map<std::string, std::string> values_;
    std::string raw_bytes_;
    std::string source_path_;
};

} // namespace pra
