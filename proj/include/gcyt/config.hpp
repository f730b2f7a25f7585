#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gcyt {

/// Flat `key = value` configuration. Every lookup records the value actually
/// used (explicit or default) so reports can embed the fully resolved setup.
class Config {
public:
    Config() = default;

    /// Parses `key = value` lines; `#` starts a comment.
    static Config parse(const std::string& text);
    static Config load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::size_t get_count(const std::string& key, std::size_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma-separated list of reals.
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

    /// Values used so far, sorted by key.
    const std::map<std::string, std::string>& resolved() const noexcept { return resolved_; }
    std::string resolved_text() const;

private:
    std::string lookup(const std::string& key, const std::string& fallback) const;

    std::map<std::string, std::string> values_;
    mutable std::map<std::string, std::string> resolved_;
};

/// Shortest decimal form that round-trips.
std::string format_double(double v);

}  // namespace gcyt
