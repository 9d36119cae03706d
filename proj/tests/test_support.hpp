#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "genkube/rules.hpp"
#include "genkube/umi.hpp"

namespace testsupport {

inline std::string fixture_path(const std::string& rel) {
    return std::string(GENKUBE_FIXTURE_DIR) + "/" + rel;
}

inline std::string data_path(const std::string& rel) {
    return std::string(GENKUBE_DATA_DIR) + "/" + rel;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline const genkube::Umi& reference_umi() {
    static genkube::Umi umi = genkube::load_umi(data_path("umi_reference.json"));
    return umi;
}

inline const std::vector<genkube::Rule>& default_rules() {
    static std::vector<genkube::Rule> rules = genkube::load_rules(data_path("rules_default.json"));
    return rules;
}

// Every labeled fixture file (skips the deliberately unparseable ones).
inline std::vector<std::string> labeled_fixture_names() {
    std::vector<std::string> names;
    for (const auto& entry : std::filesystem::directory_iterator(fixture_path("kcfs"))) {
        const std::string name = entry.path().filename().string();
        if (name == "malformed.yaml" || name == "empty.yaml") continue;
        names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace testsupport
