#include "pcglab/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pcglab {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

bool ConfigSection::has(const std::string& key) const { return find(key) != nullptr; }

const std::string* ConfigSection::find(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return &v;
    return nullptr;
}

ConfigSection* ParsedConfig::find_section(const std::string& name) {
    for (auto& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

const ConfigSection* ParsedConfig::find_section(const std::string& name) const {
    for (const auto& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

std::vector<const ConfigSection*> ParsedConfig::sections_with_prefix(
    const std::string& prefix) const {
    std::vector<const ConfigSection*> out;
    for (const auto& s : sections)
        if (s.name == prefix || s.name.rfind(prefix + ".", 0) == 0) out.push_back(&s);
    return out;
}

void ParsedConfig::set(const std::string& dotted_key, const std::string& value) {
    const auto dot = dotted_key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == dotted_key.size())
        throw std::invalid_argument("override must look like section.key=value: " + dotted_key);
    const std::string sec_name = dotted_key.substr(0, dot);
    const std::string key = dotted_key.substr(dot + 1);
    ConfigSection* sec = find_section(sec_name);
    if (!sec) {
        sections.push_back({sec_name, {}});
        sec = &sections.back();
    }
    for (auto& [k, v] : sec->entries)
        if (k == key) {
            v = value;
            return;
        }
    sec->entries.emplace_back(key, value);
}

std::string ParsedConfig::serialize() const {
    std::ostringstream os;
    for (const auto& s : sections) {
        os << "[" << s.name << "]\n";
        for (const auto& [k, v] : s.entries) os << k << " = " << v << "\n";
        os << "\n";
    }
    return os.str();
}

ParsedConfig parse_config_text(const std::string& text, const std::string& origin) {
    ParsedConfig cfg;
    ConfigSection* current = nullptr;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                            ": malformed section header");
            const std::string name = trim(t.substr(1, t.size() - 2));
            if (name.empty())
                throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                            ": empty section name");
            cfg.sections.push_back({name, {}});
            current = &cfg.sections.back();
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": expected key = value");
        if (!current)
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": key outside any [section]");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": empty key");
        if (current->has(key))
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": duplicate key " +
                                        current->name + "." + key);
        current->entries.emplace_back(key, value);
    }
    return cfg;
}

ParsedConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config_text(buf.str(), path);
}

SectionReader::SectionReader(const ConfigSection& sec)
    : sec_(sec), used_(sec.entries.size(), false) {}

bool SectionReader::has(const std::string& key) const { return sec_.has(key); }

const std::string* SectionReader::raw(const std::string& key) {
    for (size_t i = 0; i < sec_.entries.size(); ++i)
        if (sec_.entries[i].first == key) {
            used_[i] = true;
            return &sec_.entries[i].second;
        }
    return nullptr;
}

std::string SectionReader::get_string(const std::string& key) {
    const std::string* v = raw(key);
    if (!v) throw std::invalid_argument(sec_.name + "." + key + ": required key missing");
    return *v;
}

std::string SectionReader::get_string(const std::string& key, const std::string& fallback) {
    const std::string* v = raw(key);
    return v ? *v : fallback;
}

int64_t SectionReader::get_int(const std::string& key) {
    const std::string s = get_string(key);
    try {
        size_t pos = 0;
        int64_t v = std::stoll(s, &pos, 0);
        if (pos != s.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument(sec_.name + "." + key + ": not an integer: " + s);
    }
}

int64_t SectionReader::get_int(const std::string& key, int64_t fallback) {
    return has(key) ? get_int(key) : fallback;
}

uint64_t SectionReader::get_u64(const std::string& key, uint64_t fallback) {
    if (!has(key)) return fallback;
    const std::string s = get_string(key);
    try {
        size_t pos = 0;
        uint64_t v = std::stoull(s, &pos, 0);
        if (pos != s.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument(sec_.name + "." + key + ": not an unsigned integer: " + s);
    }
}

double SectionReader::get_double(const std::string& key) {
    const std::string s = get_string(key);
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument(sec_.name + "." + key + ": not a number: " + s);
    }
}

double SectionReader::get_double(const std::string& key, double fallback) {
    return has(key) ? get_double(key) : fallback;
}

bool SectionReader::get_bool(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const std::string s = get_string(key);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::invalid_argument(sec_.name + "." + key + ": not a boolean: " + s);
}

void SectionReader::finish() const {
    std::string bad;
    for (size_t i = 0; i < used_.size(); ++i)
        if (!used_[i]) {
            if (!bad.empty()) bad += ", ";
            bad += sec_.name + "." + sec_.entries[i].first;
        }
    if (!bad.empty()) throw std::invalid_argument("unknown key(s): " + bad);
}

} // namespace pcglab
