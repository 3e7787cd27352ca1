#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pcglab {

// Flat key-value configuration with [section] blocks. Sections may repeat
// ([generator], [generator.2], ...); keys inside a section may not. Lines
// starting with '#' or ';' are comments.
struct ConfigSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    bool has(const std::string& key) const;
    const std::string* find(const std::string& key) const;
};

struct ParsedConfig {
    std::vector<ConfigSection> sections;

    ConfigSection* find_section(const std::string& name);
    const ConfigSection* find_section(const std::string& name) const;
    std::vector<const ConfigSection*> sections_with_prefix(const std::string& prefix) const;

    // "section.key=value"; creates the section or replaces the key.
    void set(const std::string& dotted_key, const std::string& value);
    std::string serialize() const;
};

ParsedConfig parse_config_text(const std::string& text, const std::string& origin = "<string>");
ParsedConfig parse_config_file(const std::string& path);

// Typed accessor with consumption tracking: after building a run config every
// key must have been read, otherwise the unread keys are reported as errors
// ("train.lerning_rate: unknown key").
class SectionReader {
public:
    SectionReader(const ConfigSection& sec);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key);
    std::string get_string(const std::string& key, const std::string& fallback);
    int64_t get_int(const std::string& key);
    int64_t get_int(const std::string& key, int64_t fallback);
    uint64_t get_u64(const std::string& key, uint64_t fallback);
    double get_double(const std::string& key);
    double get_double(const std::string& key, double fallback);
    bool get_bool(const std::string& key, bool fallback);

    // throws listing every unconsumed key with its section path
    void finish() const;

private:
    const std::string* raw(const std::string& key);
    const ConfigSection& sec_;
    std::vector<bool> used_;
};

} // namespace pcglab
