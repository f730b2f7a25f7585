#include "gcyt/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "gcyt/error.hpp"

namespace gcyt {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto t = trim(text);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw ParameterError("config key '" + key + "': not a number: " + text);
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParameterError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ParameterError("config line " + std::to_string(lineno) + ": empty key");
        cfg.values_[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config: " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

bool Config::has(const std::string& key) const {
    return values_.count(key) != 0;
}

std::string Config::lookup(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    const std::string v = it == values_.end() ? fallback : it->second;
    resolved_[key] = v;
    return v;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    return lookup(key, fallback);
}

double Config::get_double(const std::string& key, double fallback) const {
    return to_double(key, lookup(key, format_double(fallback)));
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    const std::string t = trim(lookup(key, std::to_string(fallback)));
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw ParameterError("config key '" + key + "': not an integer: " + t);
    return v;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    const std::string t = trim(lookup(key, std::to_string(fallback)));
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw ParameterError("config key '" + key + "': not an unsigned integer: " + t);
    return v;
}

std::size_t Config::get_count(const std::string& key, std::size_t fallback) const {
    const std::int64_t v = get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw ParameterError("config key '" + key + "' must be >= 0");
    return static_cast<std::size_t>(v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const std::string t = trim(lookup(key, fallback ? "true" : "false"));
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ParameterError("config key '" + key + "': not a boolean: " + t);
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    std::string def;
    for (std::size_t i = 0; i < fallback.size(); ++i) {
        if (i) def += ",";
        def += format_double(fallback[i]);
    }
    const std::string text = lookup(key, def);
    std::vector<double> out;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        if (trim(item).empty()) continue;
        out.push_back(to_double(key, item));
    }
    return out;
}

std::string Config::resolved_text() const {
    std::string out;
    for (const auto& [k, v] : resolved_) out += k + " = " + v + "\n";
    return out;
}

}  // namespace gcyt
