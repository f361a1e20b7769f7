#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace pathsg {

// One measured quantity of a check: a residual or a difference with its standard error.
struct CheckItem {
    std::string name;
    double value = 0;       // residual or difference
    double se = 0;          // standard error, 0 for exact checks
    std::optional<double> z;
    double tolerance = 0;
    bool pass = true;
    std::optional<double> at;  // time of the worst residual, when meaningful
    std::string note;
};

struct CheckReport {
    std::string name;
    std::vector<CheckItem> items;

    bool pass() const {
        for (const auto& i : items)
            if (!i.pass) return false;
        return true;
    }
    const CheckItem* find(const std::string& n) const {
        for (const auto& i : items)
            if (i.name == n) return &i;
        return nullptr;
    }
};

// Residual item: passes iff value <= tol.
inline CheckItem residual_item(std::string name, double value, double tol, std::optional<double> at = std::nullopt) {
    CheckItem c;
    c.name = std::move(name);
    c.value = value;
    c.tolerance = tol;
    c.pass = value <= tol;
    c.at = at;
    return c;
}

// Difference item judged by |z| <= z_tol, where z = value / se. A zero
// difference with zero se counts as z = 0.
inline CheckItem z_item(std::string name, double value, double se, double z_tol) {
    CheckItem c;
    c.name = std::move(name);
    c.value = value;
    c.se = se;
    c.tolerance = z_tol;
    const double z = se > 0 ? value / se : (value == 0 ? 0.0 : (value > 0 ? 1e300 : -1e300));
    c.z = z;
    c.pass = std::abs(z) <= z_tol;
    return c;
}

} // namespace pathsg
