#pragma once

#include "jdc/errors.hpp"
#include "jdc/model_core.hpp"
#include "jdc/parameters.hpp"
#include "jdc/simulator.hpp"

#include "json.hpp"

#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace jdc {

using json = nlohmann::json;

enum class OutputFormat { text, json };

inline OutputFormat parse_format(const std::string &s) {
    if (s == "text") {
        return OutputFormat::text;
    }
    if (s == "json") {
        return OutputFormat::json;
    }
    throw ConfigError("unknown output format '" + s + "' (expected text or json)");
}

/// Everything a command needs; filled from the config file, then overridden by flags.
struct RunConfig {
    std::string data_path;
    std::string output_path; // empty: standard output
    OutputFormat output_format = OutputFormat::text;
    ModelSpec spec;
    std::optional<double> departure_origin;
    std::optional<SimulationConfig> simulation;
    int replications = 50;
    std::vector<double> confidence_levels{0.95, 0.99, 0.9999};

    void validate() const {
        spec.validate();
        if (replications < 1) {
            throw ConfigError("replications must be at least 1");
        }
    }
};

namespace detail {

template <class T>
T get_or(const json &j, const char *key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return fallback;
    }
    return j.at(key).get<T>();
}

inline Eigen::VectorXd coefficients_by_name(const json &j, const std::vector<std::string> &columns,
                                            const char *what) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
        if (!j.contains(columns[k])) {
            throw ConfigError(std::string("simulation.theta.") + what + " lacks a value for '" + columns[k] + "'");
        }
        v[static_cast<Eigen::Index>(k)] = j.at(columns[k]).get<double>();
    }
    if (j.size() != columns.size()) {
        throw ConfigError(std::string("simulation.theta.") + what + " names a column outside the model");
    }
    return v;
}

} // namespace detail

inline json to_json(const ModelSpec &spec) {
    json transforms = json::array();
    for (const auto &t : spec.transforms) {
        json jt{{"name", t.name}, {"inputs", t.inputs}};
        if (t.kind == TransformKind::interaction) {
            jt["op"] = "interaction";
        } else {
            jt["op"] = "threshold";
            jt["cutoff"] = t.cutoff;
        }
        transforms.push_back(jt);
    }
    const auto &e = spec.estimation;
    return json{{"duration_covariates", spec.duration_covariates},
                {"ordinal_covariates", spec.ordinal_covariates},
                {"include_duration_intercept", spec.include_duration_intercept},
                {"include_ordinal_intercept", spec.include_ordinal_intercept},
                {"category_bounds", spec.category_bounds},
                {"transforms", transforms},
                {"estimation",
                 {{"starts", e.starts},
                  {"seed", e.seed},
                  {"gradient_tolerance", e.gradient_tolerance},
                  {"relative_ll_tolerance", e.relative_ll_tolerance},
                  {"stall_iterations", e.stall_iterations},
                  {"max_iterations", e.max_iterations},
                  {"start_perturbation", e.start_perturbation}}}};
}

inline ModelSpec model_spec_from_json(const json &j) {
    ModelSpec spec;
    spec.duration_covariates = detail::get_or(j, "duration_covariates", std::vector<std::string>{});
    spec.ordinal_covariates = detail::get_or(j, "ordinal_covariates", std::vector<std::string>{});
    spec.include_duration_intercept = detail::get_or(j, "include_duration_intercept", true);
    spec.include_ordinal_intercept = detail::get_or(j, "include_ordinal_intercept", true);
    spec.category_bounds = detail::get_or(j, "category_bounds", std::vector<double>{1.0, 3.0});
    if (j.contains("transforms")) {
        for (const auto &jt : j.at("transforms")) {
            Transform t;
            t.name = jt.at("name").get<std::string>();
            const auto op = jt.at("op").get<std::string>();
            if (op == "interaction") {
                t.kind = TransformKind::interaction;
            } else if (op == "threshold") {
                t.kind = TransformKind::threshold;
                t.cutoff = jt.at("cutoff").get<double>();
            } else {
                throw ConfigError("transform '" + t.name + "': unknown op '" + op + "'");
            }
            t.inputs = jt.at("inputs").get<std::vector<std::string>>();
            spec.transforms.push_back(t);
        }
    }
    if (j.contains("estimation")) {
        const auto &je = j.at("estimation");
        auto &e = spec.estimation;
        e.starts = detail::get_or(je, "starts", e.starts);
        e.seed = detail::get_or(je, "seed", e.seed);
        e.gradient_tolerance = detail::get_or(je, "gradient_tolerance", e.gradient_tolerance);
        e.relative_ll_tolerance = detail::get_or(je, "relative_ll_tolerance", e.relative_ll_tolerance);
        e.stall_iterations = detail::get_or(je, "stall_iterations", e.stall_iterations);
        e.max_iterations = detail::get_or(je, "max_iterations", e.max_iterations);
        e.start_perturbation = detail::get_or(je, "start_perturbation", e.start_perturbation);
    }
    spec.validate();
    return spec;
}

inline CovariateGenerator generator_from_json(const json &j) {
    CovariateGenerator g;
    g.name = j.at("name").get<std::string>();
    const auto type = detail::get_or<std::string>(j, "type", "bernoulli");
    if (type == "bernoulli") {
        g.kind = GeneratorKind::bernoulli;
        g.p = j.at("p").get<double>();
    } else if (type == "binomial") {
        g.kind = GeneratorKind::binomial;
        g.trials = j.at("n").get<int>();
        g.p = j.at("p").get<double>();
    } else if (type == "uniform_int") {
        g.kind = GeneratorKind::uniform_int;
        g.low = j.at("low").get<int>();
        g.high = j.at("high").get<int>();
    } else if (type == "normal") {
        g.kind = GeneratorKind::normal;
        g.mean = detail::get_or(j, "mean", 0.0);
        g.sd = detail::get_or(j, "sd", 1.0);
    } else {
        throw ConfigError("generator '" + g.name + "': unknown type '" + type + "'");
    }
    g.validate();
    return g;
}

/// Simulation block; covariates and intercept flags come from the model spec.
inline SimulationConfig simulation_from_json(const json &j, const ModelSpec &spec) {
    SimulationConfig c;
    c.n_obs = detail::get_or<std::size_t>(j, "n_obs", 1000);
    c.seed = detail::get_or<std::uint64_t>(j, "seed", 1);
    c.duration_covariates = spec.duration_covariates;
    c.ordinal_covariates = spec.ordinal_covariates;
    c.include_duration_intercept = spec.include_duration_intercept;
    c.include_ordinal_intercept = spec.include_ordinal_intercept;
    c.category_bounds = spec.category_bounds;
    for (const auto &jg : j.at("generators")) {
        c.generators.push_back(generator_from_json(jg));
    }
    const auto &jt = j.at("theta");
    c.theta_true.gamma = detail::coefficients_by_name(jt.at("gamma"), spec.duration_columns(), "gamma");
    c.theta_true.beta = detail::coefficients_by_name(jt.at("beta"), spec.ordinal_columns(), "beta");
    c.theta_true.sigma = jt.at("sigma").get<double>();
    c.theta_true.mu1 = jt.at("mu1").get<double>();
    c.theta_true.rho = jt.at("rho").get<double>();
    c.validate();
    return c;
}

inline RunConfig run_config_from_json(const json &j) {
    RunConfig rc;
    rc.data_path = detail::get_or<std::string>(j, "data", "");
    rc.output_path = detail::get_or<std::string>(j, "output", "");
    rc.output_format = parse_format(detail::get_or<std::string>(j, "format", "text"));
    if (j.contains("departure_origin") && !j.at("departure_origin").is_null()) {
        rc.departure_origin = j.at("departure_origin").get<double>();
    }
    rc.spec = model_spec_from_json(j.value("model", json::object()));
    if (j.contains("simulation")) {
        rc.simulation = simulation_from_json(j.at("simulation"), rc.spec);
    }
    rc.replications = detail::get_or(j, "replications", rc.replications);
    rc.confidence_levels = detail::get_or(j, "confidence_levels", rc.confidence_levels);
    rc.validate();
    return rc;
}

inline RunConfig load_run_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config '" + path + "'");
    }
    try {
        return run_config_from_json(json::parse(in));
    } catch (const json::exception &e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
}

} // namespace jdc
