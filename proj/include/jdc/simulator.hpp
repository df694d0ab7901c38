#pragma once

#include "jdc/errors.hpp"
#include "jdc/estimator.hpp"
#include "jdc/model_core.hpp"
#include "jdc/parameters.hpp"
#include "jdc/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace jdc {

enum class GeneratorKind { bernoulli, binomial, uniform_int, normal };

/// Distribution of one simulated covariate column.
struct CovariateGenerator {
    std::string name;
    GeneratorKind kind = GeneratorKind::bernoulli;
    double p = 0.5;      // bernoulli / binomial success probability
    int trials = 1;      // binomial
    int low = 0;         // uniform_int
    int high = 1;        // uniform_int, inclusive
    double mean = 0.0;   // normal
    double sd = 1.0;     // normal

    void validate() const {
        switch (kind) {
        case GeneratorKind::bernoulli:
        case GeneratorKind::binomial:
            if (!(p >= 0.0 && p <= 1.0) || trials < 1) {
                throw ConfigError("generator '" + name + "': p must be in [0, 1] and trials >= 1");
            }
            break;
        case GeneratorKind::uniform_int:
            if (high < low) {
                throw ConfigError("generator '" + name + "': high < low");
            }
            break;
        case GeneratorKind::normal:
            if (!(sd >= 0.0) || !std::isfinite(mean)) {
                throw ConfigError("generator '" + name + "': invalid normal parameters");
            }
            break;
        }
    }

    double draw(Rng &rng) const {
        switch (kind) {
        case GeneratorKind::bernoulli:
            return rng.bernoulli(p) ? 1.0 : 0.0;
        case GeneratorKind::binomial: {
            int k = 0;
            for (int t = 0; t < trials; ++t) {
                k += rng.bernoulli(p) ? 1 : 0;
            }
            return k;
        }
        case GeneratorKind::uniform_int: {
            const auto span = static_cast<double>(high - low + 1);
            return low + std::floor(rng.uniform() * span);
        }
        case GeneratorKind::normal:
            return mean + sd * rng.normal();
        }
        return 0.0;
    }
};

struct SimulationConfig {
    ParameterVector theta_true;
    std::size_t n_obs = 1000;
    std::vector<CovariateGenerator> generators;
    std::vector<std::string> duration_covariates;
    std::vector<std::string> ordinal_covariates;
    bool include_duration_intercept = true;
    bool include_ordinal_intercept = true;
    std::vector<double> category_bounds{1.0, 3.0};
    std::uint64_t seed = 1;

    ModelSpec model_spec() const {
        ModelSpec spec;
        spec.duration_covariates = duration_covariates;
        spec.ordinal_covariates = ordinal_covariates;
        spec.include_duration_intercept = include_duration_intercept;
        spec.include_ordinal_intercept = include_ordinal_intercept;
        spec.category_bounds = category_bounds;
        return spec;
    }

    void validate() const {
        if (n_obs < 1) {
            throw ConfigError("n_obs must be at least 1");
        }
        theta_true.validate();
        std::map<std::string, int> known;
        for (const auto &g : generators) {
            g.validate();
            if (++known[g.name] > 1) {
                throw ConfigError("duplicate generator '" + g.name + "'");
            }
        }
        const auto spec = model_spec();
        spec.validate();
        for (const auto *list : {&duration_covariates, &ordinal_covariates}) {
            for (const auto &c : *list) {
                if (!known.count(c)) {
                    throw ConfigError("no generator for covariate '" + c + "'");
                }
            }
        }
        if (static_cast<std::size_t>(theta_true.p()) != spec.duration_columns().size() ||
            static_cast<std::size_t>(theta_true.q()) != spec.ordinal_columns().size()) {
            throw ConfigError("theta_true dimensions do not match the declared covariates");
        }
    }
};

/// n draws of (alpha_std, eps), standard bivariate normal with correlation rho:
/// eps = rho * alpha_std + sqrt(1 - rho^2) * w.
inline std::vector<std::pair<double, double>> draw_correlated_errors(std::size_t n, double rho, std::uint64_t seed) {
    if (!(std::abs(rho) < 1.0)) {
        throw DomainError("rho must lie strictly inside (-1, 1)");
    }
    Rng rng(seed);
    const double s = std::sqrt(1.0 - rho * rho);
    std::vector<std::pair<double, double>> out(n);
    for (auto &e : out) {
        const double a = rng.normal();
        const double w = rng.normal();
        e = {a, rho * a + s * w};
    }
    return out;
}

/// Forward simulation of the joint model: ln d = gamma.y + sigma * alpha_std,
/// z = beta.x + eps, category by z against thresholds {0, mu1}.
inline Dataset simulate_dataset(const SimulationConfig &config) {
    config.validate();
    const auto spec = config.model_spec();
    const auto dur_cols = spec.duration_columns();
    const auto ord_cols = spec.ordinal_columns();
    const auto &theta = config.theta_true;
    const double s = std::sqrt(1.0 - theta.rho * theta.rho);

    Rng rng(config.seed);
    const auto n = static_cast<Eigen::Index>(config.n_obs);
    Dataset ds;
    ds.duration_columns = dur_cols;
    ds.ordinal_columns = ord_cols;
    ds.departure_hours.resize(n);
    ds.Y.resize(n, static_cast<Eigen::Index>(dur_cols.size()));
    ds.X.resize(n, static_cast<Eigen::Index>(ord_cols.size()));
    ds.ids.reserve(config.n_obs);
    ds.travel_category.reserve(config.n_obs);

    std::map<std::string, double> row;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (const auto &g : config.generators) {
            row[g.name] = g.draw(rng);
        }
        for (std::size_t j = 0; j < dur_cols.size(); ++j) {
            ds.Y(i, static_cast<Eigen::Index>(j)) = dur_cols[j] == intercept_name ? 1.0 : row.at(dur_cols[j]);
        }
        for (std::size_t j = 0; j < ord_cols.size(); ++j) {
            ds.X(i, static_cast<Eigen::Index>(j)) = ord_cols[j] == intercept_name ? 1.0 : row.at(ord_cols[j]);
        }
        const double alpha = rng.normal();
        const double eps = theta.rho * alpha + s * rng.normal();
        ds.departure_hours[i] = std::exp(ds.Y.row(i).dot(theta.gamma) + theta.sigma * alpha);
        const double latent = ds.X.row(i).dot(theta.beta) + eps;
        ds.travel_category.push_back(latent <= 0.0 ? 1 : (latent <= theta.mu1 ? 2 : 3));
        ds.ids.push_back(std::to_string(i + 1));
    }
    return ds;
}

/// Twelve binary/count covariates with realistic marginal shares and
/// coefficient magnitudes for an evacuation-timing application.
inline SimulationConfig reference_config(std::size_t n_obs, std::uint64_t seed) {
    SimulationConfig c;
    c.n_obs = n_obs;
    c.seed = seed;
    auto bern = [](std::string name, double p) {
        CovariateGenerator g;
        g.name = std::move(name);
        g.kind = GeneratorKind::bernoulli;
        g.p = p;
        return g;
    };
    CovariateGenerator np;
    np.name = "Np";
    np.kind = GeneratorKind::binomial;
    np.trials = 6;
    np.p = 1.23 / 6.0;
    c.generators = {bern("NJ", 0.58),       bern("Stormconcern", 0.86),        bern("Ordered&sufinfo", 0.44),
                    bern("Old&loctv", 0.55), bern("Household1&reco", 0.05),     bern("Agehet", 0.08),
                    bern("Loctv", 0.88),     bern("Widow", 0.12),               bern("Married&evacbefore", 0.23),
                    bern("Household1&concern", 0.23), np,                       bern("Sexhet", 0.14)};
    c.duration_covariates = {"NJ", "Stormconcern", "Ordered&sufinfo", "Old&loctv", "Household1&reco", "Agehet"};
    c.ordinal_covariates = {"Loctv", "Widow", "Married&evacbefore", "Household1&concern", "Np", "Sexhet"};
    c.theta_true.gamma.resize(7);
    c.theta_true.gamma << 4.36, -0.25, -0.29, -0.18, 0.16, -0.51, 0.22;
    c.theta_true.beta.resize(7);
    c.theta_true.beta << -0.95, 0.76, -0.70, -0.65, -0.58, 0.14, -0.64;
    c.theta_true.sigma = 0.49;
    c.theta_true.mu1 = 0.41;
    c.theta_true.rho = -0.24;
    return c;
}

struct ParameterRecovery {
    std::string label;
    double truth = 0.0;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    double empirical_sd = 0.0;
    double mean_reported_se = 0.0;
    double se_ratio = 0.0; // empirical_sd / mean_reported_se
    int covered = 0;       // replications whose 95% interval contains the truth
    int with_se = 0;       // replications with a usable standard error
};

struct RecoveryReport {
    int replications = 0;
    int failures = 0;
    std::size_t n_obs = 0;
    std::uint64_t seed = 0;
    std::vector<ParameterRecovery> parameters;
    std::vector<std::string> failure_messages;
};

/// Simulate-and-estimate loop summarizing bias, RMSE, SE calibration and 95%
/// interval coverage per parameter.
inline RecoveryReport recovery_experiment(const SimulationConfig &config, int replications,
                                          const EstimationSettings &settings = {}) {
    if (replications < 1) {
        throw ConfigError("replications must be at least 1");
    }
    config.validate();
    ModelSpec spec = config.model_spec();
    spec.estimation = settings;
    const Eigen::VectorXd truth = config.theta_true.flatten();
    const auto k = static_cast<std::size_t>(truth.size());
    const double z975 = 1.959963984540054;

    RecoveryReport rep;
    rep.replications = replications;
    rep.n_obs = config.n_obs;
    rep.seed = config.seed;
    const auto labels = ParameterVector::labels(spec.duration_columns(), spec.ordinal_columns());

    std::vector<Eigen::VectorXd> estimates;
    std::vector<std::optional<Eigen::VectorXd>> ses;
    for (int r = 0; r < replications; ++r) {
        SimulationConfig cfg = config;
        cfg.seed = derived_seed(config.seed, static_cast<std::uint64_t>(r));
        try {
            const Dataset data = simulate_dataset(cfg);
            const auto est = estimate(data, spec, EstimateOptions{.restricted = false, .standard_errors = true});
            estimates.push_back(est.theta_hat.flatten());
            ses.push_back(est.std_errors);
        } catch (const Error &e) {
            ++rep.failures;
            rep.failure_messages.push_back("replication " + std::to_string(r) + ": " + e.what());
        }
    }

    for (std::size_t j = 0; j < k; ++j) {
        ParameterRecovery pr;
        pr.label = labels[j];
        pr.truth = truth[static_cast<Eigen::Index>(j)];
        const auto m = static_cast<double>(estimates.size());
        if (estimates.empty()) {
            rep.parameters.push_back(pr);
            continue;
        }
        double sum = 0.0;
        double sq_err = 0.0;
        double se_sum = 0.0;
        for (std::size_t r = 0; r < estimates.size(); ++r) {
            const double e = estimates[r][static_cast<Eigen::Index>(j)];
            sum += e;
            sq_err += (e - pr.truth) * (e - pr.truth);
            if (ses[r]) {
                const double se = (*ses[r])[static_cast<Eigen::Index>(j)];
                se_sum += se;
                ++pr.with_se;
                if (std::abs(e - pr.truth) <= z975 * se) {
                    ++pr.covered;
                }
            }
        }
        pr.mean_estimate = sum / m;
        pr.bias = pr.mean_estimate - pr.truth;
        pr.rmse = std::sqrt(sq_err / m);
        double var = 0.0;
        for (const auto &e : estimates) {
            const double d = e[static_cast<Eigen::Index>(j)] - pr.mean_estimate;
            var += d * d;
        }
        pr.empirical_sd = estimates.size() > 1 ? std::sqrt(var / (m - 1.0)) : 0.0;
        pr.mean_reported_se = pr.with_se > 0 ? se_sum / pr.with_se : 0.0;
        pr.se_ratio = pr.mean_reported_se > 0.0 ? pr.empirical_sd / pr.mean_reported_se : 0.0;
        rep.parameters.push_back(pr);
    }
    return rep;
}

} // namespace jdc
