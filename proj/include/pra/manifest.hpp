#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace pra {

inline constexpr const char* tool_version = "1.0.0";

// FNV-1a over raw bytes; recomputable from the config file alone.
inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

struct RunManifest {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version = tool_version;
    std::vector<std::string> outputs;

    static RunManifest for_config(const std::string& config_bytes, std::uint64_t seed) {
        RunManifest m;
        m.config_hash = hex64(fnv1a64(config_bytes));
        m.seed = seed;
        return m;
    }

    void write(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot write manifest: " + path);
        os << "config_hash = " << config_hash << "\n";
        os << "seed = " << seed << "\n";
        os << "tool_version = " << version << "\n";
        for (const auto& f : outputs) os << "output = " << f << "\n";
    }
};

} // namespace pra
