#include "wvsort/kv_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "wvsort/error.hpp"
#include "wvsort/seed.hpp"

namespace wvsort {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

std::string format_double(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view text) {
    text = trim(text);
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
    return value;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string_view origin) {
    KeyValueConfig cfg;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;

        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) +
                              ": expected `key = value`");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": empty key");
        }
        if (!cfg.entries_.emplace(key, value).second) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) +
                              ": duplicate key `" + key + "`");
        }
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file `" + path.string() + "`");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

void KeyValueConfig::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write config file `" + path.string() + "`");
    out << to_string();
}

std::string KeyValueConfig::to_string() const {
    std::string text;
    for (const auto& [key, value] : entries_) {
        text += key;
        text += " = ";
        text += value;
        text += '\n';
    }
    return text;
}

std::uint64_t KeyValueConfig::hash() const { return fnv1a64(to_string()); }

void KeyValueConfig::set(const std::string& key, double value) { entries_[key] = format_double(value); }

void KeyValueConfig::set(const std::string& key, std::int64_t value) {
    entries_[key] = std::to_string(value);
}

void KeyValueConfig::merge(const KeyValueConfig& other) {
    for (const auto& [key, value] : other.entries_) entries_[key] = value;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::string KeyValueConfig::require(const std::string& key) const {
    auto v = get(key);
    if (!v) throw ConfigError("missing required config key `" + key + "`");
    return *v;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    const auto parsed = parse_double(*v);
    if (!parsed) throw ConfigError("config key `" + key + "`: `" + *v + "` is not a number");
    return *parsed;
}

double KeyValueConfig::require_double(const std::string& key) const {
    require(key);
    return get_double(key, 0.0);
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    std::int64_t value = 0;
    const std::string_view s = trim(*v);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError("config key `" + key + "`: `" + *v + "` is not an integer");
    }
    return value;
}

std::int64_t KeyValueConfig::require_int(const std::string& key) const {
    require(key);
    return get_int(key, 0);
}

std::uint64_t KeyValueConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    std::uint64_t value = 0;
    const std::string_view s = trim(*v);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError("config key `" + key + "`: `" + *v + "` is not an unsigned integer");
    }
    return value;
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key) const {
    std::vector<double> out;
    const auto v = get(key);
    if (!v) return out;
    std::string_view rest = *v;
    while (true) {
        const auto comma = rest.find(',');
        const auto item = trim(rest.substr(0, comma));
        const auto parsed = parse_double(item);
        if (!parsed) {
            throw ConfigError("config key `" + key + "`: `" + std::string(item) + "` is not a number");
        }
        out.push_back(*parsed);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return out;
}

std::vector<std::string> KeyValueConfig::keys_with_prefix(std::string_view prefix) const {
    std::vector<std::string> keys;
    for (auto it = entries_.lower_bound(std::string(prefix)); it != entries_.end(); ++it) {
        if (it->first.compare(0, prefix.size(), prefix) != 0) break;
        keys.push_back(it->first);
    }
    return keys;
}

}  // namespace wvsort
