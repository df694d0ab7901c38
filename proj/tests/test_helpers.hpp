#pragma once

// Independent reference computations shared by the test suites. Nothing here
// calls into the likelihood kernel.

#include "jdc/model_core.hpp"
#include "jdc/parameters.hpp"
#include "jdc/simulator.hpp"

#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace jdc::testing {

inline double ref_cdf(double t) { return boost::math::cdf(boost::math::normal(), t); }

inline double ref_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

inline double ref_pdf(double t) { return std::exp(-t * t / 2.0) / std::sqrt(2.0 * std::numbers::pi); }

/// Standard bivariate normal density with correlation rho.
inline double bivariate_pdf(double a, double b, double rho) {
    const double det = 1.0 - rho * rho;
    return std::exp(-(a * a - 2.0 * rho * a * b + b * b) / (2.0 * det)) / (2.0 * std::numbers::pi * std::sqrt(det));
}

/// Joint density of (d, category) obtained by integrating the bivariate error
/// density over the latent interval of the category.
inline double joint_density_by_integration(double d, int category, double dur_index, double ord_index,
                                           double sigma, double mu1, double rho) {
    const double z = (std::log(d) - dur_index) / sigma;
    double lo = -ord_index - 40.0;
    double hi = ord_index + 40.0;
    if (category == 1) {
        hi = -ord_index;
    } else if (category == 2) {
        lo = -ord_index;
        hi = mu1 - ord_index;
    } else {
        lo = mu1 - ord_index;
        hi = lo + 40.0;
    }
    auto f = [&](double e) { return bivariate_pdf(z, e, rho); };
    const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 25, 1e-14);
    return mass / (d * sigma);
}

/// Standalone lognormal AFT log-likelihood.
inline double aft_log_likelihood(const Dataset &data, const Eigen::VectorXd &gamma, double sigma) {
    double ll = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const double d = data.departure_hours[r];
        const double mu = data.Y.row(r).dot(gamma);
        ll += std::log(boost::math::pdf(boost::math::lognormal(mu, sigma), d));
    }
    return ll;
}

/// Standalone ordered-probit log-likelihood with thresholds {0, mu1}.
inline double ordered_probit_log_likelihood(const Dataset &data, const Eigen::VectorXd &beta, double mu1) {
    double ll = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double xb = data.X.row(static_cast<Eigen::Index>(i)).dot(beta);
        double p = 0.0;
        switch (data.travel_category[i]) {
        case 1:
            p = ref_cdf(-xb);
            break;
        case 2:
            p = ref_cdf(mu1 - xb) - ref_cdf(-xb);
            break;
        default:
            p = 1.0 - ref_cdf(mu1 - xb);
            break;
        }
        ll += std::log(p);
    }
    return ll;
}

/// Small random dataset with an intercept and two covariates per equation.
inline Dataset random_dataset(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Dataset ds;
    ds.duration_columns = {"Constant", "a", "b"};
    ds.ordinal_columns = {"Constant", "c", "b"};
    const auto m = static_cast<Eigen::Index>(n);
    ds.Y.resize(m, 3);
    ds.X.resize(m, 3);
    ds.departure_hours.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double a = unif(gen) < 0.5 ? 1.0 : 0.0;
        const double b = gauss(gen);
        const double c = unif(gen) < 0.3 ? 1.0 : 0.0;
        ds.Y.row(i) << 1.0, a, b;
        ds.X.row(i) << 1.0, c, b;
        ds.departure_hours[i] = std::exp(1.0 + 0.8 * gauss(gen));
        ds.travel_category.push_back(1 + static_cast<int>(unif(gen) * 3.0));
        ds.ids.push_back(std::to_string(i));
    }
    return ds;
}

inline ParameterVector random_theta(std::mt19937_64 &gen, Eigen::Index p, Eigen::Index q, bool zero_rho = false) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ParameterVector t;
    t.gamma.resize(p);
    t.beta.resize(q);
    for (Eigen::Index i = 0; i < p; ++i) {
        t.gamma[i] = u(gen);
    }
    for (Eigen::Index i = 0; i < q; ++i) {
        t.beta[i] = u(gen);
    }
    t.sigma = 0.3 + 1.2 * (u(gen) + 1.0) / 2.0;
    t.mu1 = 0.1 + 1.5 * (u(gen) + 1.0) / 2.0;
    t.rho = zero_rho ? 0.0 : 0.9 * u(gen);
    return t;
}

/// Two duration and two ordinal covariates; cheap enough for repeated fits.
inline SimulationConfig small_config(std::size_t n, std::uint64_t seed, double rho = -0.3) {
    SimulationConfig c;
    c.n_obs = n;
    c.seed = seed;
    CovariateGenerator a{"a", GeneratorKind::bernoulli, 0.4};
    CovariateGenerator b{"b", GeneratorKind::normal};
    CovariateGenerator k{"k", GeneratorKind::binomial, 0.3, 4};
    c.generators = {a, b, k};
    c.duration_covariates = {"a", "b"};
    c.ordinal_covariates = {"a", "k"};
    c.theta_true.gamma = Eigen::Vector3d(1.2, -0.4, 0.3);
    c.theta_true.beta = Eigen::Vector3d(-0.3, 0.8, 0.25);
    c.theta_true.sigma = 0.6;
    c.theta_true.mu1 = 0.7;
    c.theta_true.rho = rho;
    return c;
}

/// Estimation settings whose relative-change stop only fires at rounding level.
inline EstimationSettings tight_settings(int starts = 2) {
    EstimationSettings s;
    s.starts = starts;
    s.relative_ll_tolerance = 1e-14;
    return s;
}

} // namespace jdc::testing
