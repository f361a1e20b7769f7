#include "pathsg/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pathsg/errors.hpp"
#include "pathsg/experiment.hpp"
#include "pathsg/io.hpp"
#include "pathsg/metrics.hpp"

namespace pathsg {

namespace {

void write_file(const std::string& file, const std::string& text) {
    std::ofstream f(file, std::ios::binary);
    if (!f) throw ConfigError("/output", "cannot write " + file);
    f << text;
}

std::vector<double> parse_values(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            std::size_t used = 0;
            v.push_back(std::stod(tok, &used));
            if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("/values", "not a number: '" + tok + "'");
        }
    }
    return v;
}

} // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Path-space semigroup experiments"};
    app.require_subcommand(1);

    std::string config, csv_out, json_out, axis, values, file_a, file_b, dyn_name, path_out;
    double j1_a = 0, j1_b = 0;
    std::uint64_t trajectory = 0;
    bool as_json = false;

    auto* run = app.add_subcommand("run", "run every check in a config");
    run->add_option("config", config, "experiment JSON")->required();
    run->add_option("--csv", csv_out, "CSV output (default: config output.csv, else stdout)");
    run->add_option("--json", json_out, "JSON report output (default: config output.json)");

    auto* sweep = app.add_subcommand("sweep", "rerun the checks along one axis");
    sweep->add_option("config", config, "experiment JSON")->required();
    sweep->add_option("--axis", axis, "dt, n_paths or t")->required();
    sweep->add_option("--values", values, "comma separated values")->required();
    sweep->add_option("--csv", csv_out, "CSV output (default: stdout)");

    auto* j1 = app.add_subcommand("j1", "Skorokhod J1 distance between two path files");
    j1->add_option("path_a", file_a, "path JSON")->required();
    j1->add_option("path_b", file_b, "path JSON")->required();
    auto* opt_a = j1->add_option("--a", j1_a, "window start (with --b: d_ab instead of d_j1)");
    auto* opt_b = j1->add_option("--b", j1_b, "window end");

    auto* solve = app.add_subcommand("solve-dde", "solve the dde dynamics of a config");
    solve->add_option("config", config, "experiment JSON")->required();
    solve->add_option("--dynamics", dyn_name, "dynamics entry (default: the only dde)");
    solve->add_option("--out", path_out, "output file (default: stdout)");
    solve->add_flag("--json", as_json, "write path JSON instead of CSV");

    auto* sim = app.add_subcommand("simulate", "simulate one trajectory of stochastic dynamics");
    sim->add_option("config", config, "experiment JSON")->required();
    sim->add_option("--dynamics", dyn_name, "dynamics entry (default: the only stochastic one)");
    sim->add_option("--trajectory", trajectory, "trajectory index");
    sim->add_option("--out", path_out, "output file (default: stdout)");
    sim->add_flag("--json", as_json, "write path JSON instead of CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    auto emit = [&](const std::string& file, const std::string& text) {
        if (file.empty()) out << text;
        else write_file(file, text);
    };
    auto emit_path = [&](const SampledPath& p) {
        if (as_json) {
            emit(path_out, path_to_json(p).dump(1) + "\n");
        } else {
            std::ostringstream os;
            write_path_csv(os, p);
            emit(path_out, os.str());
        }
    };

    try {
        if (*run) {
            const Experiment ex = Experiment::from_file(config);
            const RunReport r = ex.run();
            emit(!csv_out.empty() ? csv_out : ex.csv_output().value_or(""), run_csv(r));
            const std::string jf = !json_out.empty() ? json_out : ex.json_output().value_or("");
            if (!jf.empty()) write_file(jf, run_json(r).dump(2) + "\n");
            for (const auto& c : r.checks)
                if (!c.error.empty()) err << "check '" << c.name << "': " << c.error << "\n";
            return r.pass() ? 0 : 1;
        }
        if (*sweep) {
            const Experiment ex = Experiment::from_file(config);
            const SweepAxis a = parse_axis(axis);
            const auto rows = ex.sweep(a, parse_values(values));
            emit(csv_out, sweep_csv(a, rows));
            for (const auto& r : rows)
                if (!r.item.pass) return 1;
            return 0;
        }
        if (*j1) {
            const SampledPath x = read_path_file(file_a), y = read_path_file(file_b);
            if (opt_a->count() != opt_b->count()) throw ConfigError("/b", "--a and --b go together");
            const MetricValue m = opt_a->count() ? d_ab_j1(x, y, j1_a, j1_b) : d_j1(x, y);
            out << metric_to_json(m).dump(2) << "\n";
            return 0;
        }
        if (*solve) {
            emit_path(Experiment::from_file(config).solve_dde(dyn_name));
            return 0;
        }
        if (*sim) {
            emit_path(Experiment::from_file(config).simulate(dyn_name, trajectory));
            return 0;
        }
    } catch (const ConfigError& e) {
        err << e.what() << "\n";
        return 2;
    } catch (const PathError& e) {
        err << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace pathsg
