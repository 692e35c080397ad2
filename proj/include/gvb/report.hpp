#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace gvb {

struct Check {
    std::string name;
    bool pass = true;
    std::optional<std::string> residual;
};

/// Outcome of a verification: one entry per identity checked, plus warnings.
struct Report {
    std::vector<Check> checks;
    std::vector<std::string> warnings;

    void add(std::string name, bool pass, std::optional<std::string> residual = std::nullopt) {
        checks.push_back({std::move(name), pass, std::move(residual)});
    }
    void pass(std::string name) { add(std::move(name), true); }
    void fail(std::string name, std::string residual) { add(std::move(name), false, std::move(residual)); }

    void append(const Report& other) {
        checks.insert(checks.end(), other.checks.begin(), other.checks.end());
        warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
    }

    bool ok() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
    }

    const Check* find(const std::string& name) const {
        for (auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

}  // namespace gvb
