#include "pathsg/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "pathsg/errors.hpp"

namespace pathsg {

using nlohmann::json;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace {

// json has no inf/nan; write them as strings
json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

} // namespace

json path_to_json(const SampledPath& x) {
    json vals = json::array();
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto n = x.node(i);
        vals.push_back(std::vector<double>(n.begin(), n.end()));
    }
    return {{"kind", x.kind() == PathKind::Cadlag ? "cadlag" : "continuous"},
            {"t_min", x.t_min()},
            {"t_max", x.t_max()},
            {"dt", x.dt()},
            {"dim", x.dim()},
            {"values", std::move(vals)}};
}

SampledPath path_from_json(const json& j, const std::string& pointer) {
    auto fail = [&](const std::string& key, const std::string& msg) -> SampledPath {
        throw ConfigError(pointer + "/" + key, msg);
    };
    if (!j.is_object()) throw ConfigError(pointer, "path must be an object");
    for (const char* k : {"kind", "t_min", "dt", "values"})
        if (!j.contains(k)) fail(k, "missing field");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "kind" && it.key() != "t_min" && it.key() != "t_max" && it.key() != "dt" &&
            it.key() != "dim" && it.key() != "values")
            fail(it.key(), "unknown field");
    const std::string kind = j.at("kind").is_string() ? j.at("kind").get<std::string>() : "";
    if (kind != "cadlag" && kind != "continuous") fail("kind", "expected \"cadlag\" or \"continuous\"");
    if (!j.at("t_min").is_number()) fail("t_min", "expected a number");
    if (!j.at("dt").is_number() || !(j.at("dt").get<double>() > 0)) fail("dt", "expected a positive number");
    const double t_min = j.at("t_min").get<double>(), dt = j.at("dt").get<double>();
    const json& vals = j.at("values");
    if (!vals.is_array() || vals.size() < 2) fail("values", "expected at least two nodes");
    std::size_t dim = 0;
    std::vector<double> flat;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const json& row = vals[i];
        const std::string p = "values/" + std::to_string(i);
        if (row.is_number()) {
            if (dim == 0) dim = 1;
            if (dim != 1) fail(p, "node dimension differs");
            flat.push_back(row.get<double>());
            continue;
        }
        if (!row.is_array() || row.empty()) fail(p, "expected a number or an array of numbers");
        if (dim == 0) dim = row.size();
        if (row.size() != dim) fail(p, "node dimension differs");
        for (const auto& v : row) {
            if (!v.is_number()) fail(p, "expected numbers");
            flat.push_back(v.get<double>());
        }
    }
    if (j.contains("dim") && (!j.at("dim").is_number_unsigned() || j.at("dim").get<std::size_t>() != dim))
        fail("dim", "does not match the values");
    if (j.contains("t_max")) {
        if (!j.at("t_max").is_number()) fail("t_max", "expected a number");
        const double expect = t_min + static_cast<double>(vals.size() - 1) * dt;
        if (std::abs(j.at("t_max").get<double>() - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
            fail("t_max", "inconsistent with t_min, dt and the node count");
    }
    try {
        return SampledPath(kind == "cadlag" ? PathKind::Cadlag : PathKind::Continuous, t_min, dt, dim,
                           std::move(flat));
    } catch (const PathError& e) {
        throw ConfigError(pointer, e.what());
    }
}

SampledPath read_path_file(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("", "cannot open " + file);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("", file + ": " + e.what());
    }
    return path_from_json(j);
}

void write_path_csv(std::ostream& os, const SampledPath& x) {
    os << "time";
    for (std::size_t c = 0; c < x.dim(); ++c) os << ",coord_" << c;
    os << '\n';
    for (std::size_t i = 0; i < x.size(); ++i) {
        os << fmt_double(x.time(i));
        for (double v : x.node(i)) os << ',' << fmt_double(v);
        os << '\n';
    }
}

json metric_to_json(const MetricValue& m) {
    json knots = json::array();
    if (m.witness)
        for (std::size_t i = 0; i < m.witness->knots.size(); ++i)
            knots.push_back({m.witness->knots[i], m.witness->images[i]});
    return {{"value", num(m.value)},
            {"is_upper_bound", m.is_upper_bound},
            {"tail_error", num(m.tail_error)},
            {"witness_knots", std::move(knots)}};
}

json item_to_json(const CheckItem& c) {
    json j{{"name", c.name}, {"value", num(c.value)}, {"stderr", num(c.se)}, {"tolerance", num(c.tolerance)},
           {"pass", c.pass}};
    j["z"] = c.z ? num(*c.z) : json(nullptr);
    if (c.at) j["at"] = num(*c.at);
    if (!c.note.empty()) j["note"] = c.note;
    return j;
}

json report_to_json(const CheckReport& r) {
    json items = json::array();
    for (const auto& c : r.items) items.push_back(item_to_json(c));
    return {{"name", r.name}, {"pass", r.pass()}, {"items", std::move(items)}};
}

} // namespace pathsg
