#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wvsort {

/// Flat `key = value` configuration file with dotted section prefixes
/// (`scenario.*`, `embed.*`, `mask.*`, `model.*`, `train.*`, `data.*`).
///
/// Lines starting with `#` are comments. Keys are unique. List values are
/// comma separated. Serialisation sorts keys so the text, and therefore
/// hash(), is canonical.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(std::string_view text, std::string_view origin = "<string>");
    static KeyValueConfig load(const std::filesystem::path& path);

    void save(const std::filesystem::path& path) const;
    std::string to_string() const;
    std::uint64_t hash() const;

    bool contains(const std::string& key) const { return entries_.count(key) != 0; }
    void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
    void set(const std::string& key, double value);
    void set(const std::string& key, std::int64_t value);
    void erase(const std::string& key) { entries_.erase(key); }
    /// Copies every entry of `other`, overriding existing keys.
    void merge(const KeyValueConfig& other);

    std::optional<std::string> get(const std::string& key) const;
    std::string require(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;

    double require_double(const std::string& key) const;
    std::int64_t require_int(const std::string& key) const;

    /// Keys that start with `prefix`, in sorted order.
    std::vector<std::string> keys_with_prefix(std::string_view prefix) const;
    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

/// Shortest round-trip decimal form of a double ("inf"/"-inf" for infinities).
std::string format_double(double value);
/// Parses a full-string double; accepts "inf", "+inf", "-inf".
std::optional<double> parse_double(std::string_view text);

}  // namespace wvsort
