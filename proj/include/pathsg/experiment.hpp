#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pathsg/dynamics.hpp"
#include "pathsg/observable.hpp"
#include "pathsg/report.hpp"
#include "pathsg/semigroup.hpp"

namespace pathsg {

// Sweep and command-line overrides applied on top of a config.
struct Overrides {
    std::optional<double> dt;
    std::optional<std::size_t> n_paths;
    std::optional<double> t;
};

struct Dynamics {
    std::string type;  // dde | sde | sdde | levy_delay
    DriftSpec drift;
    DiffusionSpec diffusion;
    LevySpec levy;
    double T = 1.0;
    std::string initial;  // name of a path, may be empty
    std::uint64_t seed = 0;
};

// Everything a config describes, built for one grid step.
struct Built {
    double dt = 0;
    std::uint64_t seed = 0;
    std::map<std::string, SampledPath> paths;
    std::map<std::string, Dynamics> dynamics;
    std::map<std::string, Observable> observables;
    std::optional<ExpectationSpec> spec;
};

struct CheckResult {
    std::string name;  // label, defaults to the check type
    std::string type;
    std::uint64_t inputs_digest = 0;
    CheckReport report;
    std::string error;  // set when the check threw
    bool pass() const { return error.empty() && report.pass(); }
};

struct RunReport {
    std::string name;
    std::uint64_t seed = 0;
    std::uint64_t config_digest = 0;
    std::vector<CheckResult> checks;
    double wall_time = 0;
    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass()) return false;
        return true;
    }
};

struct SweepRow {
    double axis_value = 0;
    std::string check;
    CheckItem item;
};

enum class SweepAxis { Dt, NPaths, T };
SweepAxis parse_axis(const std::string& s);
std::string axis_name(SweepAxis a);

// Flat experiment config. The constructor validates the whole document and
// resolves every name; ConfigError carries a JSON pointer.
class Experiment {
public:
    explicit Experiment(nlohmann::json cfg);
    static Experiment from_file(const std::string& file);

    const nlohmann::json& config() const { return cfg_; }
    std::string name() const;
    std::uint64_t seed() const;
    std::uint64_t digest() const;

    Built build(const Overrides& o = {}) const;
    RunReport run(const Overrides& o = {}) const;
    std::vector<SweepRow> sweep(SweepAxis axis, const std::vector<double>& values) const;

    // Single trajectories for the solve-dde and simulate commands.
    SampledPath solve_dde(const std::string& dynamics = "") const;
    SampledPath simulate(const std::string& dynamics = "", std::uint64_t trajectory = 0) const;

    std::optional<std::string> csv_output() const;
    std::optional<std::string> json_output() const;

private:
    nlohmann::json cfg_;
    const Dynamics& pick(const Built& b, const std::string& name, const char* what) const;
};

// Fixed CSV layouts.
std::string run_csv(const RunReport& r);
std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows);
nlohmann::json run_json(const RunReport& r);

} // namespace pathsg
