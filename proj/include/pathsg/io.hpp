#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "json.hpp"
#include "pathsg/metrics.hpp"
#include "pathsg/path.hpp"
#include "pathsg/report.hpp"

namespace pathsg {

// %.17g, so that doubles round-trip through text
std::string fmt_double(double v);

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

// {kind, t_min, t_max, dt, dim, values: [[...], ...]}
nlohmann::json path_to_json(const SampledPath& x);
// Errors are ConfigError at `pointer`.
SampledPath path_from_json(const nlohmann::json& j, const std::string& pointer = "");
SampledPath read_path_file(const std::string& file);

// time,coord_0,...,coord_{d-1}
void write_path_csv(std::ostream& os, const SampledPath& x);

nlohmann::json metric_to_json(const MetricValue& m);
nlohmann::json item_to_json(const CheckItem& c);
nlohmann::json report_to_json(const CheckReport& r);

} // namespace pathsg
