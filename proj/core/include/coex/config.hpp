#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace coex {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key-value text format: "[section]" headers, "key = value" lines,
// '#' comments, blank lines ignored. Keys are addressed as "section.key".
// Entry order is preserved so an effective-config dump is byte-stable.
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<std::uint64_t> get_uint64_list(const std::string& key) const;

    // Inserts or overwrites; insertion order is kept for new keys.
    void set(const std::string& key, const std::string& value);

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    // Serializes back to the file format, grouping by section in first-seen
    // order. Regrouping can reorder entries across interleaved sections, but
    // dump is a fixed point: parse_string(dump()).dump() == dump().
    std::string dump() const;

  private:
    const std::string* find(const std::string& key) const;
    std::vector<std::pair<std::string, std::string>> entries_;  // "section.key" -> value
};

}  // namespace coex
