#pragma once

#include "jdc/config.hpp"
#include "jdc/csv.hpp"
#include "jdc/estimator.hpp"
#include "jdc/inference.hpp"
#include "jdc/network.hpp"
#include "jdc/report.hpp"
#include "jdc/simulator.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace jdc::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_user_error = 1;
inline constexpr int exit_convergence = 2;

namespace detail {

/// Writes to the file at `path`, or to `fallback` when the path is empty.
inline void emit(const std::string &path, std::ostream &fallback, const std::string &content) {
    if (path.empty()) {
        fallback << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write '" + path + "'");
    }
    out << content;
}

inline std::string dump(const json &j) { return j.dump(2) + "\n"; }

struct Options {
    std::string config_path;
    std::string data_path;
    std::string out_path;
    std::string format;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n;
    std::optional<int> starts;
    std::optional<int> reps;
    std::string result_path;
    std::string measure = "mean";
    double llb = 0.0;
    double llr = 0.0;
    int k = 0;
    std::optional<std::size_t> n_obs;
    std::vector<double> levels;
    std::vector<double> critical;
    std::string rosters_path;
    std::vector<std::string> continuous;
    std::vector<std::string> categorical;
    std::vector<std::string> categories;
};

inline RunConfig base_config(const Options &o) {
    RunConfig rc = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
    if (!o.data_path.empty()) {
        rc.data_path = o.data_path;
    }
    if (!o.out_path.empty()) {
        rc.output_path = o.out_path;
    }
    if (!o.format.empty()) {
        rc.output_format = parse_format(o.format);
    }
    if (o.seed) {
        rc.spec.estimation.seed = *o.seed;
        if (rc.simulation) {
            rc.simulation->seed = *o.seed;
        }
    }
    if (o.starts) {
        rc.spec.estimation.starts = *o.starts;
    }
    if (o.n && rc.simulation) {
        rc.simulation->n_obs = *o.n;
    }
    if (o.reps) {
        rc.replications = *o.reps;
    }
    if (!o.levels.empty()) {
        rc.confidence_levels = o.levels;
    }
    rc.validate();
    return rc;
}

inline int cmd_estimate(const Options &o, std::ostream &out) {
    const RunConfig rc = base_config(o);
    if (rc.data_path.empty()) {
        throw ConfigError("estimate needs --data or a 'data' entry in the config");
    }
    const Dataset data = csv::load_csv(rc.data_path, rc.spec, csv::LoadOptions{rc.departure_origin});
    const EstimationResult res = estimate(data, rc.spec);
    const auto report = make_estimation_report(data, rc.spec, res, rc.confidence_levels);
    std::ostringstream os;
    if (rc.output_format == OutputFormat::json) {
        os << dump(to_json(report));
    } else {
        write_text(os, report);
    }
    emit(rc.output_path, out, os.str());
    return exit_ok;
}

inline int cmd_simulate(const Options &o, std::ostream &out) {
    const RunConfig rc = base_config(o);
    if (!rc.simulation) {
        throw ConfigError("simulate needs a 'simulation' block in the config");
    }
    const Dataset data = simulate_dataset(*rc.simulation);
    std::ostringstream os;
    csv::write_csv(os, data);
    emit(rc.output_path, out, os.str());
    return exit_ok;
}

inline int cmd_effects(const Options &o, std::ostream &out) {
    std::ifstream in(o.result_path);
    if (!in) {
        throw ConfigError("cannot open result '" + o.result_path + "'");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception &e) {
        throw ConfigError("result '" + o.result_path + "': " + e.what());
    }
    if (!j.contains("model") || !j.contains("result")) {
        throw ConfigError("result '" + o.result_path + "' is not a JSON estimation report");
    }
    ModelSpec spec;
    EstimationResult res;
    try {
        spec = model_spec_from_json(j.at("model"));
        res = estimation_result_from_json(j.at("result"));
    } catch (const json::exception &e) {
        throw ConfigError("result '" + o.result_path + "': " + e.what());
    }
    std::optional<double> origin;
    if (!o.config_path.empty()) {
        origin = load_run_config(o.config_path).departure_origin;
    }
    const Dataset data = csv::load_csv(o.data_path, spec, csv::LoadOptions{origin});
    if (data.duration_columns != res.duration_columns || data.ordinal_columns != res.ordinal_columns) {
        throw ConfigError("data columns do not match the estimation result");
    }
    DurationMeasure measure = DurationMeasure::mean;
    if (o.measure == "median") {
        measure = DurationMeasure::median;
    } else if (o.measure != "mean") {
        throw ConfigError("--measure must be mean or median");
    }
    const auto report = marginal_effects(data, res.theta_hat, measure);
    std::ostringstream os;
    if (!o.format.empty() && parse_format(o.format) == OutputFormat::json) {
        json jr = to_json(report);
        jr["report"] = "effects";
        os << dump(jr);
    } else {
        write_text(os, report);
    }
    emit(o.out_path, out, os.str());
    return exit_ok;
}

inline int cmd_gof(const Options &o, std::ostream &out) {
    const std::vector<double> levels = o.levels.empty() ? std::vector<double>{0.95, 0.99, 0.9999} : o.levels;
    const FitReport f = fit_report(o.llb, o.llr, o.k, o.n_obs, levels, o.critical);
    std::ostringstream os;
    if (!o.format.empty() && parse_format(o.format) == OutputFormat::json) {
        json j = to_json(f);
        j["report"] = "gof";
        os << dump(j);
    } else {
        write_text(os, f);
    }
    emit(o.out_path, out, os.str());
    return exit_ok;
}

inline int cmd_netmetrics(const Options &o, std::ostream &out) {
    const auto egos = csv::load_rosters(o.rosters_path);
    std::map<std::string, int> declared;
    for (const auto &c : o.categories) {
        const auto eq = c.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--categories expects attribute=count, got '" + c + "'");
        }
        try {
            declared[c.substr(0, eq)] = std::stoi(c.substr(eq + 1));
        } catch (const std::exception &) {
            throw ConfigError("--categories expects attribute=count, got '" + c + "'");
        }
    }
    std::vector<std::string> cont = o.continuous;
    std::vector<std::string> cat = o.categorical;
    if (cont.empty() && cat.empty()) {
        // Attributes whose every value parses as a number are continuous.
        std::map<std::string, bool> numeric;
        for (const auto &e : egos) {
            for (const auto &a : e.alters) {
                for (const auto &[k, v] : a) {
                    const bool num = v.empty() || jdc::detail::parse_number(v).has_value();
                    auto [it, ins] = numeric.emplace(k, num);
                    if (!ins) {
                        it->second = it->second && num;
                    }
                }
            }
        }
        for (const auto &[k, num] : numeric) {
            (num ? cont : cat).push_back(k);
        }
    }
    std::vector<EgoMetrics> rows;
    for (const auto &e : egos) {
        EgoMetrics m;
        m.ego_id = e.ego_id;
        m.size = network_size(e);
        for (const auto &a : cont) {
            m.heterogeneity.emplace_back(a, continuous_heterogeneity(e, a));
        }
        for (const auto &a : cat) {
            const auto it = declared.find(a);
            m.iqv.emplace_back(a, iqv(e, a, it == declared.end() ? std::nullopt : std::optional<int>(it->second)));
        }
        rows.push_back(std::move(m));
    }
    std::ostringstream os;
    if (!o.format.empty() && parse_format(o.format) == OutputFormat::json) {
        os << dump(to_json(rows));
    } else {
        write_text(os, rows);
    }
    emit(o.out_path, out, os.str());
    return exit_ok;
}

inline int cmd_recover(const Options &o, std::ostream &out) {
    const RunConfig rc = base_config(o);
    if (!rc.simulation) {
        throw ConfigError("recover needs a 'simulation' block in the config");
    }
    const auto rep = recovery_experiment(*rc.simulation, rc.replications, rc.spec.estimation);
    std::ostringstream os;
    if (rc.output_format == OutputFormat::json) {
        os << dump(to_json(rep));
    } else {
        write_text(os, rep);
    }
    emit(rc.output_path, out, os.str());
    return exit_ok;
}

} // namespace detail

/// Runs one subcommand. args[0] is the program name. Returns the process exit
/// code: 0 success, 1 user or data error, 2 convergence failure.
inline int run_command(const std::vector<std::string> &args, std::ostream &out = std::cout,
                       std::ostream &err = std::cerr) {
    CLI::App app{"Joint departure-time / travel-time model: estimation, simulation and diagnostics", "jdc"};
    app.require_subcommand(1);
    detail::Options o;

    auto *est = app.add_subcommand("estimate", "Fit the joint model to a CSV dataset");
    est->add_option("--data", o.data_path, "Input CSV");
    est->add_option("--config", o.config_path, "JSON run configuration");
    est->add_option("--out", o.out_path, "Report path (default: stdout)");
    est->add_option("--format", o.format, "text or json");
    est->add_option("--seed", o.seed, "Multi-start seed");
    est->add_option("--starts", o.starts, "Number of optimizer starts");
    est->add_option("--levels", o.levels, "Confidence levels for the LR test")->delimiter(',');

    auto *sim = app.add_subcommand("simulate", "Draw a synthetic dataset from known parameters");
    sim->add_option("--config", o.config_path, "JSON run configuration with a simulation block")->required();
    sim->add_option("--seed", o.seed, "Simulation seed");
    sim->add_option("--n", o.n, "Number of observations");
    sim->add_option("--out", o.out_path, "Output CSV (default: stdout)");

    auto *eff = app.add_subcommand("effects", "Average marginal effects from a saved JSON estimation report");
    eff->add_option("--result", o.result_path, "JSON report written by 'estimate --format json'")->required();
    eff->add_option("--data", o.data_path, "CSV the effects are averaged over")->required();
    eff->add_option("--config", o.config_path, "JSON run configuration (departure origin)");
    eff->add_option("--measure", o.measure, "Duration measure: mean or median");
    eff->add_option("--out", o.out_path, "Report path (default: stdout)");
    eff->add_option("--format", o.format, "text or json");

    auto *gof = app.add_subcommand("gof", "Likelihood ratio test and adjusted rho^2");
    gof->add_option("--llb", o.llb, "Log-likelihood at convergence")->required();
    gof->add_option("--llr", o.llr, "Restricted log-likelihood")->required();
    gof->add_option("--k", o.k, "Number of parameters for adjustment")->required();
    gof->add_option("--n", o.n_obs, "Number of observations");
    gof->add_option("--levels", o.levels, "Confidence levels, comma separated")->delimiter(',');
    gof->add_option("--critical", o.critical, "Explicit critical values, comma separated")->delimiter(',');
    gof->add_option("--out", o.out_path, "Report path (default: stdout)");
    gof->add_option("--format", o.format, "text or json");

    auto *net = app.add_subcommand("netmetrics", "Ego-network size, heterogeneity and IQV");
    net->add_option("--rosters", o.rosters_path, "Long-format roster CSV")->required();
    net->add_option("--continuous", o.continuous, "Continuous attributes")->delimiter(',');
    net->add_option("--categorical", o.categorical, "Categorical attributes")->delimiter(',');
    net->add_option("--categories", o.categories, "Declared category counts, attribute=count")->delimiter(',');
    net->add_option("--out", o.out_path, "Report path (default: stdout)");
    net->add_option("--format", o.format, "text or json");

    auto *rec = app.add_subcommand("recover", "Monte Carlo parameter recovery experiment");
    rec->add_option("--config", o.config_path, "JSON run configuration with a simulation block")->required();
    rec->add_option("--reps", o.reps, "Replications");
    rec->add_option("--seed", o.seed, "Base seed");
    rec->add_option("--n", o.n, "Observations per replication");
    rec->add_option("--out", o.out_path, "Report path (default: stdout)");
    rec->add_option("--format", o.format, "text or json");

    // CLI11 consumes its argument vector back to front.
    std::vector<std::string> rev;
    if (!args.empty()) {
        rev.assign(args.rbegin(), args.rend() - 1);
    }
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return exit_user_error;
    }

    try {
        if (est->parsed()) {
            return detail::cmd_estimate(o, out);
        }
        if (sim->parsed()) {
            return detail::cmd_simulate(o, out);
        }
        if (eff->parsed()) {
            return detail::cmd_effects(o, out);
        }
        if (gof->parsed()) {
            return detail::cmd_gof(o, out);
        }
        if (net->parsed()) {
            return detail::cmd_netmetrics(o, out);
        }
        if (rec->parsed()) {
            return detail::cmd_recover(o, out);
        }
    } catch (const ConvergenceError &e) {
        err << "convergence failure: " << e.what() << '\n';
        return exit_convergence;
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return exit_user_error;
    } catch (const json::exception &e) {
        err << "error: " << e.what() << '\n';
        return exit_user_error;
    }
    err << app.help();
    return exit_user_error;
}

} // namespace jdc::cli
