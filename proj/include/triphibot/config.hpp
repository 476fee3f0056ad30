#ifndef TRIPHIBOT_CONFIG_HPP
#define TRIPHIBOT_CONFIG_HPP

// Key = value configuration with [section] headers. Vector values are
// comma-separated. Lookup keys are "section.key".

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace triphibot {

class Config {
public:
    Config() = default;

    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback = "") const;
    bool get_bool(const std::string& key, bool fallback) const;
    Eigen::Vector3d get_vec3(const std::string& key, const Eigen::Vector3d& fallback) const;
    std::vector<double> get_list(const std::string& key) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace triphibot

#endif
