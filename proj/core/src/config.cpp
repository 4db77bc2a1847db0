#include "coex/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

namespace coex {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        if (comma == std::string::npos) {
            parts.push_back(trim(value.substr(start)));
            break;
        }
        parts.push_back(trim(value.substr(start, comma - start)));
        start = comma + 1;
    }
    return parts;
}

double parse_double(const std::string& key, const std::string& text) {
    std::string t = trim(text);
    if (t == "inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t pos = 0;
        double v = std::stod(t, &pos);
        if (pos != t.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config error: " + key + ": not a number: '" + t + "'");
    }
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config error: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config error: " + origin + ":" +
                                  std::to_string(lineno) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("config error: " + origin + ":" +
                                  std::to_string(lineno) + ": empty section name");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config error: " + origin + ":" + std::to_string(lineno) +
                              ": expected 'key = value': '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config error: " + origin + ":" + std::to_string(lineno) +
                              ": empty key");
        if (section.empty())
            throw ConfigError("config error: " + origin + ":" + std::to_string(lineno) +
                              ": key '" + key + "' outside any section");
        cfg.set(section + "." + key, value);
    }
    return cfg;
}

const std::string* Config::find(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return &v;
    return nullptr;
}

bool Config::has(const std::string& key) const { return find(key) != nullptr; }

std::string Config::get_string(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw ConfigError("config error: " + key + ": missing required key");
    return *v;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const std::string* v = find(key);
    return v ? *v : fallback;
}

double Config::get_double(const std::string& key) const {
    return parse_double(key, get_string(key));
}

double Config::get_double(const std::string& key, double fallback) const {
    const std::string* v = find(key);
    return v ? parse_double(key, *v) : fallback;
}

int Config::get_int(const std::string& key) const {
    double v = get_double(key);
    int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw ConfigError("config error: " + key + ": not an integer: '" + get_string(key) + "'");
    return i;
}

int Config::get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool(const std::string& key) const {
    std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config error: " + key + ": not a boolean: '" + v + "'");
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& part : split_list(get_string(key))) {
        if (part.empty())
            throw ConfigError("config error: " + key + ": empty list element");
        out.push_back(parse_double(key, part));
    }
    return out;
}

std::vector<std::uint64_t> Config::get_uint64_list(const std::string& key) const {
    std::vector<std::uint64_t> out;
    for (const std::string& part : split_list(get_string(key))) {
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (ec != std::errc() || ptr != part.data() + part.size())
            throw ConfigError("config error: " + key + ": not an unsigned integer: '" + part +
                              "'");
        out.push_back(v);
    }
    return out;
}

void Config::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

std::string Config::dump() const {
    std::string out;
    std::vector<std::string> sections;
    for (const auto& [k, v] : entries_) {
        std::string section = k.substr(0, k.find('.'));
        if (std::find(sections.begin(), sections.end(), section) == sections.end())
            sections.push_back(section);
    }
    for (const std::string& section : sections) {
        if (!out.empty()) out += "\n";
        out += "[" + section + "]\n";
        for (const auto& [k, v] : entries_) {
            std::size_t dot = k.find('.');
            if (k.compare(0, dot, section) == 0 && dot == section.size())
                out += k.substr(dot + 1) + " = " + v + "\n";
        }
    }
    return out;
}

}  // namespace coex
