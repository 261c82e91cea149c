#ifndef EKMID_CONFIG_HPP
#define EKMID_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace ekmid::config {

// Flat key=value configuration; CLI flags are applied on top of a file.
class RunConfig {
public:
    void set(const std::string& key, const std::string& value);
    void load_file(const std::filesystem::path& path);
    void merge(const RunConfig& overrides);

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;  // throws ConfigError when missing
    std::string get_or(const std::string& key, const std::string& fallback) const;
    int64_t get_int(const std::string& key, int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;

    std::string serialize() const;  // stable key order
    static RunConfig parse(const std::string& text);

private:
    std::map<std::string, std::string> values_;
};

}  // namespace ekmid::config

#endif
