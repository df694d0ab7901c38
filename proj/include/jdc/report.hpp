#pragma once

#include "jdc/config.hpp"
#include "jdc/estimator.hpp"
#include "jdc/inference.hpp"
#include "jdc/network.hpp"
#include "jdc/simulator.hpp"

#include "json.hpp"

#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace jdc {

inline const std::string adjusted_rho2_note =
    "adjusted rho^2 = 1 - (LL(beta) - K) / LL(r), evaluated as written. The inputs LL(beta) = -1071.40, "
    "LL(r) = -1157.91, K = 13 give 0.0635; the value 0.1 quoted elsewhere for those inputs does not follow "
    "from this formula";

/// Six significant digits, the precision of every tabular report.
inline std::string fmt6(double v) {
    if (std::isnan(v)) {
        return "NA";
    }
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

inline std::string fmt6(const std::optional<double> &v) { return v ? fmt6(*v) : std::string("NA"); }

namespace detail {

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json number_or_null(const std::optional<double> &v) { return v ? number_or_null(*v) : json(nullptr); }

inline double number_or(const json &j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

inline json vector_json(const Eigen::VectorXd &v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Eigen::VectorXd vector_from_json(const json &j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::string pad(const std::string &s, std::size_t w) { return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' '); }

} // namespace detail

// ---------------------------------------------------------------------------
// Estimation result

inline json to_json(const ParameterVector &t) {
    return json{{"gamma", detail::vector_json(t.gamma)},
                {"beta", detail::vector_json(t.beta)},
                {"sigma", t.sigma},
                {"mu1", t.mu1},
                {"rho", t.rho}};
}

inline ParameterVector parameter_vector_from_json(const json &j) {
    ParameterVector t;
    t.gamma = detail::vector_from_json(j.at("gamma"));
    t.beta = detail::vector_from_json(j.at("beta"));
    t.sigma = j.at("sigma").get<double>();
    t.mu1 = j.at("mu1").get<double>();
    t.rho = j.at("rho").get<double>();
    t.validate();
    return t;
}

inline json to_json(const EstimationResult &r) {
    json starts = json::array();
    for (const auto &s : r.convergence.starts) {
        starts.push_back({{"index", s.index},
                          {"log_likelihood", detail::number_or_null(s.log_likelihood)},
                          {"iterations", s.iterations},
                          {"gradient_norm", detail::number_or_null(s.gradient_norm)},
                          {"status", s.status},
                          {"converged", s.converged}});
    }
    const auto labels = r.labels();
    const Eigen::VectorXd est = r.theta_hat.flatten();
    json coefficients = json::array();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        coefficients.push_back({{"parameter", labels[i]},
                                {"estimate", est[k]},
                                {"std_error", r.std_errors ? json((*r.std_errors)[k]) : json(nullptr)},
                                {"t_stat", r.t_stats ? json((*r.t_stats)[k]) : json(nullptr)}});
    }
    return json{{"duration_columns", r.duration_columns},
                {"ordinal_columns", r.ordinal_columns},
                {"theta_hat", to_json(r.theta_hat)},
                {"coefficients", coefficients},
                {"ll_converged", r.ll_converged},
                {"ll_restricted", detail::number_or_null(r.ll_restricted)},
                {"n_obs", r.n_obs},
                {"K", r.n_params_adjustment},
                {"convergence",
                 {{"status", r.convergence.status},
                  {"iterations", r.convergence.iterations},
                  {"gradient_norm", r.convergence.gradient_norm},
                  {"best_start", r.convergence.best_start},
                  {"starts", starts}}},
                {"diagnostics",
                 {{"underflow_count", r.diagnostics.underflow_count},
                  {"hessian_condition_number", detail::number_or_null(r.diagnostics.hessian_condition_number)},
                  {"hessian_min_eigenvalue", detail::number_or_null(r.diagnostics.hessian_min_eigenvalue)}}}};
}

inline EstimationResult estimation_result_from_json(const json &j) {
    EstimationResult r;
    r.duration_columns = j.at("duration_columns").get<std::vector<std::string>>();
    r.ordinal_columns = j.at("ordinal_columns").get<std::vector<std::string>>();
    r.theta_hat = parameter_vector_from_json(j.at("theta_hat"));
    const auto &coef = j.at("coefficients");
    const auto n = static_cast<Eigen::Index>(coef.size());
    if (n != r.theta_hat.size()) {
        throw DataError("result coefficients do not match theta_hat");
    }
    if (n > 0 && !coef[0].at("std_error").is_null()) {
        Eigen::VectorXd se(n);
        Eigen::VectorXd ts(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            se[k] = coef[static_cast<std::size_t>(k)].at("std_error").get<double>();
            ts[k] = coef[static_cast<std::size_t>(k)].at("t_stat").get<double>();
        }
        r.std_errors = se;
        r.t_stats = ts;
    }
    r.ll_converged = j.at("ll_converged").get<double>();
    r.ll_restricted = detail::number_or(j.at("ll_restricted"), std::numeric_limits<double>::quiet_NaN());
    r.n_obs = j.at("n_obs").get<std::size_t>();
    r.n_params_adjustment = j.at("K").get<int>();
    const auto &jc = j.at("convergence");
    r.convergence.status = jc.at("status").get<std::string>();
    r.convergence.iterations = jc.at("iterations").get<int>();
    r.convergence.gradient_norm = jc.at("gradient_norm").get<double>();
    r.convergence.best_start = jc.at("best_start").get<int>();
    for (const auto &s : jc.at("starts")) {
        StartTrace t;
        t.index = s.at("index").get<int>();
        t.log_likelihood = detail::number_or(s.at("log_likelihood"), -std::numeric_limits<double>::infinity());
        t.iterations = s.at("iterations").get<int>();
        t.gradient_norm = detail::number_or(s.at("gradient_norm"), std::numeric_limits<double>::infinity());
        t.status = s.at("status").get<std::string>();
        t.converged = s.at("converged").get<bool>();
        r.convergence.starts.push_back(t);
    }
    const auto &jd = j.at("diagnostics");
    r.diagnostics.underflow_count = jd.at("underflow_count").get<std::size_t>();
    r.diagnostics.hessian_condition_number =
        detail::number_or(jd.at("hessian_condition_number"), std::numeric_limits<double>::infinity());
    r.diagnostics.hessian_min_eigenvalue =
        detail::number_or(jd.at("hessian_min_eigenvalue"), std::numeric_limits<double>::quiet_NaN());
    return r;
}

// ---------------------------------------------------------------------------
// Fit, effects, descriptives

inline json to_json(const FitReport &f) {
    json cmp = json::array();
    for (const auto &c : f.lr.comparisons) {
        cmp.push_back({{"confidence", c.confidence ? json(*c.confidence) : json(nullptr)},
                       {"critical_value", c.critical_value},
                       {"exceeds", c.exceeds}});
    }
    return json{{"ll_converged", f.ll_converged},
                {"ll_restricted", f.ll_restricted},
                {"K", f.k},
                {"n_obs", f.n_obs ? json(*f.n_obs) : json(nullptr)},
                {"chi2", f.chi2},
                {"chi2_dof", f.chi2_dof},
                {"p_value", f.lr.p_value},
                {"critical_comparisons", cmp},
                {"adjusted_rho2", f.adjusted_rho2},
                {"note", adjusted_rho2_note}};
}

inline FitReport fit_report_from_json(const json &j) {
    FitReport f;
    f.ll_converged = j.at("ll_converged").get<double>();
    f.ll_restricted = j.at("ll_restricted").get<double>();
    f.k = j.at("K").get<int>();
    if (!j.at("n_obs").is_null()) {
        f.n_obs = j.at("n_obs").get<std::size_t>();
    }
    f.chi2 = j.at("chi2").get<double>();
    f.chi2_dof = j.at("chi2_dof").get<int>();
    f.adjusted_rho2 = j.at("adjusted_rho2").get<double>();
    f.lr.chi2 = f.chi2;
    f.lr.dof = f.chi2_dof;
    f.lr.p_value = j.at("p_value").get<double>();
    for (const auto &c : j.at("critical_comparisons")) {
        CriticalComparison cc;
        if (!c.at("confidence").is_null()) {
            cc.confidence = c.at("confidence").get<double>();
        }
        cc.critical_value = c.at("critical_value").get<double>();
        cc.exceeds = c.at("exceeds").get<bool>();
        f.lr.comparisons.push_back(cc);
    }
    return f;
}

inline json to_json(const MarginalEffectsReport &m) {
    json dur = json::array();
    for (const auto &e : m.duration_effects) {
        dur.push_back({{"covariate", e.covariate}, {"effect_hours", e.effect}, {"method", to_string(e.method)}});
    }
    json ord = json::array();
    for (const auto &e : m.ordinal_effects) {
        ord.push_back({{"covariate", e.covariate},
                       {"effect_cat1", e.effect[0]},
                       {"effect_cat2", e.effect[1]},
                       {"effect_cat3", e.effect[2]},
                       {"method", to_string(e.method)}});
    }
    return json{{"duration_measure", to_string(m.duration_measure)}, {"duration", dur}, {"ordinal", ord}};
}

inline json to_json(const std::vector<ColumnSummary> &stats) {
    json out = json::array();
    for (const auto &s : stats) {
        out.push_back({{"variable", s.name},
                       {"n", s.n},
                       {"mean", s.mean},
                       {"std_dev", s.std_dev},
                       {"min", s.min},
                       {"max", s.max}});
    }
    return out;
}

inline json to_json(const CorrelationMatrix &c) {
    json rows = json::array();
    for (const auto &r : c.values) {
        json row = json::array();
        for (const auto &v : r) {
            row.push_back(detail::number_or_null(v));
        }
        rows.push_back(row);
    }
    return json{{"variables", c.names}, {"matrix", rows}};
}

// ---------------------------------------------------------------------------
// Full estimation report

struct EstimationReport {
    ModelSpec spec;
    EstimationResult result;
    std::vector<std::size_t> dropped_lines;
    std::optional<FitReport> fit;
    MarginalEffectsReport effects;
    std::vector<ColumnSummary> descriptives;
    CorrelationMatrix duration_correlation;
    CorrelationMatrix ordinal_correlation;
};

inline EstimationReport make_estimation_report(const Dataset &data, const ModelSpec &spec,
                                               const EstimationResult &result,
                                               std::span<const double> confidence_levels = {}) {
    EstimationReport rep;
    rep.spec = spec;
    rep.result = result;
    rep.dropped_lines = data.dropped_lines;
    if (std::isfinite(result.ll_restricted) && result.n_params_adjustment > 0) {
        rep.fit = fit_report(result.ll_converged, result.ll_restricted, result.n_params_adjustment, result.n_obs,
                             confidence_levels);
    }
    rep.effects = marginal_effects(data, result.theta_hat);
    NamedColumns all = equation_columns(data, true);
    for (auto &c : equation_columns(data, false)) {
        if (std::none_of(all.begin(), all.end(), [&](const auto &a) { return a.first == c.first; })) {
            all.push_back(std::move(c));
        }
    }
    if (!all.empty()) {
        rep.descriptives = descriptive_stats(all);
    }
    if (data.size() >= 2) {
        rep.duration_correlation = correlation_matrix(equation_columns(data, true, "DepTim"));
        rep.ordinal_correlation = correlation_matrix(equation_columns(data, false, "TravTim"));
    }
    return rep;
}

inline json to_json(const EstimationReport &r) {
    json j{{"report", "estimation"},
           {"model", to_json(r.spec)},
           {"dropped_lines", r.dropped_lines},
           {"result", to_json(r.result)},
           {"marginal_effects", to_json(r.effects)},
           {"descriptive_statistics", to_json(r.descriptives)},
           {"correlations",
            {{"duration", to_json(r.duration_correlation)}, {"ordinal", to_json(r.ordinal_correlation)}}}};
    j["fit"] = r.fit ? to_json(*r.fit) : json(nullptr);
    return j;
}

inline void write_text(std::ostream &os, const FitReport &f) {
    os << "Goodness of fit\n";
    os << "  " << detail::pad("Log-likelihood at convergence LL(beta)", 44) << fmt6(f.ll_converged) << '\n';
    os << "  " << detail::pad("Restricted log-likelihood LL(r)", 44) << fmt6(f.ll_restricted) << '\n';
    os << "  " << detail::pad("Number of parameters for adjustment K", 44) << f.k << '\n';
    if (f.n_obs) {
        os << "  " << detail::pad("Number of observations", 44) << *f.n_obs << '\n';
    }
    os << "  " << detail::pad("Likelihood ratio statistic chi2", 44) << fmt6(f.chi2) << "  (dof " << f.chi2_dof
       << ", p = " << fmt6(f.lr.p_value) << ")\n";
    for (const auto &c : f.lr.comparisons) {
        os << "    vs " << (c.confidence ? fmt6(*c.confidence * 100.0) + "% quantile " : std::string("critical value "))
           << fmt6(c.critical_value) << ": " << (c.exceeds ? "exceeds" : "does not exceed") << '\n';
    }
    os << "  " << detail::pad("Adjusted rho^2 *", 44) << fmt6(f.adjusted_rho2) << '\n';
    os << "  * " << adjusted_rho2_note << '\n';
}

inline void write_text(std::ostream &os, const MarginalEffectsReport &m) {
    os << "Average marginal effects, duration equation (hours, " << to_string(m.duration_measure) << " duration)\n";
    for (const auto &e : m.duration_effects) {
        os << "  " << detail::pad(e.covariate, 24) << detail::pad(fmt6(e.effect), 14) << to_string(e.method) << '\n';
    }
    os << "Average marginal effects, ordinal equation (P(cat 1), P(cat 2), P(cat 3))\n";
    for (const auto &e : m.ordinal_effects) {
        os << "  " << detail::pad(e.covariate, 24) << detail::pad(fmt6(e.effect[0]), 14)
           << detail::pad(fmt6(e.effect[1]), 14) << detail::pad(fmt6(e.effect[2]), 14) << to_string(e.method) << '\n';
    }
}

inline void write_text(std::ostream &os, const CorrelationMatrix &c, const std::string &title) {
    os << title << '\n';
    os << "  " << detail::pad("", 22);
    for (const auto &n : c.names) {
        os << detail::pad(n.substr(0, 12), 13);
    }
    os << '\n';
    for (std::size_t i = 0; i < c.names.size(); ++i) {
        os << "  " << detail::pad(c.names[i], 22);
        for (std::size_t j = 0; j < c.names.size(); ++j) {
            os << detail::pad(fmt6(c.values[i][j]), 13);
        }
        os << '\n';
    }
}

inline void write_text(std::ostream &os, const EstimationReport &r) {
    const auto &res = r.result;
    const auto labels = res.labels();
    const Eigen::VectorXd est = res.theta_hat.flatten();
    auto row = [&](std::size_t i, const std::string &name) {
        const auto k = static_cast<Eigen::Index>(i);
        os << "  " << detail::pad(name, 34) << detail::pad(fmt6(est[k]), 14)
           << detail::pad(res.std_errors ? fmt6((*res.std_errors)[k]) : "NA", 14)
           << (res.t_stats ? fmt6((*res.t_stats)[k]) : "NA") << '\n';
    };
    const std::string head = "  " + detail::pad("Variable", 34) + detail::pad("Coefficient", 14) +
                             detail::pad("Std. error", 14) + "t-stat\n";
    const auto p = res.duration_columns.size();
    const auto q = res.ordinal_columns.size();

    os << "Observations: " << res.n_obs << " (dropped " << r.dropped_lines.size() << ")\n\n";
    os << "Departure time model (lognormal accelerated failure time)\n" << head;
    for (std::size_t i = 0; i < p; ++i) {
        row(i, res.duration_columns[i]);
    }
    os << "\nTravel time model (ordered probit)\n" << head;
    for (std::size_t i = 0; i < q; ++i) {
        row(p + i, res.ordinal_columns[i]);
    }
    os << "\nAncillary parameters\n" << head;
    row(p + q, "Standard deviation (sigma)");
    row(p + q + 1, "Threshold (mu1)");
    row(p + q + 2, "Correlation coefficient (rho)");
    os << '\n';
    if (r.fit) {
        write_text(os, *r.fit);
    } else {
        os << "Goodness of fit\n  LL(beta) " << fmt6(res.ll_converged) << "; restricted model not evaluated\n";
    }
    os << '\n';
    write_text(os, r.effects);
    os << "\nDescriptive statistics\n  " << detail::pad("Variable", 24) << detail::pad("Mean", 13)
       << detail::pad("Std. dev.", 13) << detail::pad("Min", 13) << "Max\n";
    for (const auto &s : r.descriptives) {
        os << "  " << detail::pad(s.name, 24) << detail::pad(fmt6(s.mean), 13) << detail::pad(fmt6(s.std_dev), 13)
           << detail::pad(fmt6(s.min), 13) << fmt6(s.max) << '\n';
    }
    os << '\n';
    write_text(os, r.duration_correlation, "Correlation matrix, departure time model");
    os << '\n';
    write_text(os, r.ordinal_correlation, "Correlation matrix, travel time model");
    os << "\nConvergence: " << res.convergence.status << " after " << res.convergence.iterations
       << " iterations, |grad|inf = " << fmt6(res.convergence.gradient_norm) << ", best start "
       << res.convergence.best_start << " of " << res.convergence.starts.size() << '\n';
    for (const auto &s : res.convergence.starts) {
        os << "  start " << s.index << ": " << detail::pad(s.status, 28) << "LL " << fmt6(s.log_likelihood) << '\n';
    }
    os << "Diagnostics: underflows " << res.diagnostics.underflow_count << ", Hessian condition number "
       << fmt6(res.diagnostics.hessian_condition_number) << ", smallest eigenvalue "
       << fmt6(res.diagnostics.hessian_min_eigenvalue);
    if (!res.std_errors) {
        os << " (not positive definite; standard errors unavailable)";
    }
    os << '\n';
}

// ---------------------------------------------------------------------------
// Recovery and network metrics

inline json to_json(const RecoveryReport &r) {
    json params = json::array();
    for (const auto &p : r.parameters) {
        params.push_back({{"parameter", p.label},
                          {"truth", p.truth},
                          {"mean_estimate", p.mean_estimate},
                          {"bias", p.bias},
                          {"rmse", p.rmse},
                          {"empirical_sd", p.empirical_sd},
                          {"mean_reported_se", p.mean_reported_se},
                          {"se_ratio", p.se_ratio},
                          {"covered_95", p.covered},
                          {"with_se", p.with_se}});
    }
    return json{{"report", "recovery"},
                {"replications", r.replications},
                {"failures", r.failures},
                {"failure_messages", r.failure_messages},
                {"n_obs", r.n_obs},
                {"seed", r.seed},
                {"parameters", params}};
}

inline void write_text(std::ostream &os, const RecoveryReport &r) {
    os << "Parameter recovery: " << r.replications << " replications of N = " << r.n_obs << ", seed " << r.seed
       << ", failures " << r.failures << "\n";
    os << "  " << detail::pad("Parameter", 30) << detail::pad("Truth", 11) << detail::pad("Bias", 13)
       << detail::pad("RMSE", 13) << detail::pad("Emp. SD", 13) << detail::pad("Mean SE", 13)
       << detail::pad("SD/SE", 10) << "Cover95\n";
    for (const auto &p : r.parameters) {
        os << "  " << detail::pad(p.label, 30) << detail::pad(fmt6(p.truth), 11) << detail::pad(fmt6(p.bias), 13)
           << detail::pad(fmt6(p.rmse), 13) << detail::pad(fmt6(p.empirical_sd), 13)
           << detail::pad(fmt6(p.mean_reported_se), 13) << detail::pad(fmt6(p.se_ratio), 10) << p.covered << '/'
           << p.with_se << '\n';
    }
    for (const auto &m : r.failure_messages) {
        os << "  " << m << '\n';
    }
}

struct EgoMetrics {
    std::string ego_id;
    std::size_t size = 0;
    std::vector<std::pair<std::string, MetricValue>> heterogeneity; // continuous attributes
    std::vector<std::pair<std::string, MetricValue>> iqv;           // categorical attributes
};

inline json to_json(const std::vector<EgoMetrics> &rows) {
    json out = json::array();
    for (const auto &m : rows) {
        json j{{"ego_id", m.ego_id}, {"network_size", m.size}};
        for (const auto &[attr, v] : m.heterogeneity) {
            j["heterogeneity"][attr] = detail::number_or_null(v.value);
        }
        for (const auto &[attr, v] : m.iqv) {
            j["iqv"][attr] = detail::number_or_null(v.value);
        }
        out.push_back(j);
    }
    return json{{"report", "netmetrics"}, {"egos", out}};
}

inline void write_text(std::ostream &os, const std::vector<EgoMetrics> &rows) {
    os << "ego_id,network_size";
    if (!rows.empty()) {
        for (const auto &[attr, v] : rows.front().heterogeneity) {
            os << ",heterogeneity_" << attr;
        }
        for (const auto &[attr, v] : rows.front().iqv) {
            os << ",iqv_" << attr;
        }
    }
    os << '\n';
    for (const auto &m : rows) {
        os << m.ego_id << ',' << m.size;
        for (const auto &[attr, v] : m.heterogeneity) {
            os << ',' << fmt6(v.value);
        }
        for (const auto &[attr, v] : m.iqv) {
            os << ',' << fmt6(v.value);
        }
        os << '\n';
    }
}

} // namespace jdc
