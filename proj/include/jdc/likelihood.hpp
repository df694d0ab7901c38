#pragma once

#include "jdc/errors.hpp"
#include "jdc/model_core.hpp"
#include "jdc/normal.hpp"
#include "jdc/parameters.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace jdc {

/// Smallest probability admitted inside a logarithm.
inline constexpr double probability_floor = 1e-300;

struct LogDensity {
    double value = 0.0;
    bool floored = false; // category probability underflowed and was floored
};

struct LikelihoodValue {
    double log_likelihood = 0.0;
    Eigen::VectorXd per_observation;
    std::size_t underflow_count = 0;
};

namespace detail {

/// Neumaier compensated accumulator; the result depends only on the order of add() calls.
class CompensatedSum {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Everything the density and its score need for one observation.
struct KernelTerms {
    double log_density = 0.0;
    bool floored = false;
    double z = 0.0;       // standardized duration residual
    double s = 1.0;       // sqrt(1 - rho^2)
    double w_upper = 0.0; // phi(upper) / P
    double w_lower = 0.0; // phi(lower) / P
    double c_upper = 0.0; // numerator constant of the upper conditional argument
    double c_lower = 0.0;
    bool upper_is_mu = false;
    bool lower_is_mu = false;
};

inline KernelTerms kernel(double hours, int category, double duration_index, double ordinal_index, double sigma,
                          double mu1, double rho) {
    KernelTerms k;
    const double log_d = std::log(hours);
    k.z = (log_d - duration_index) / sigma;
    k.s = std::sqrt(1.0 - rho * rho);
    const double c1 = -ordinal_index;
    const double c2 = mu1 - ordinal_index;
    const double u1 = (c1 - rho * k.z) / k.s; // conditional argument at mu0 = 0
    const double u2 = (c2 - rho * k.z) / k.s; // conditional argument at mu1

    double prob = 0.0;
    switch (category) {
    case 1:
        prob = normal::cdf(u1);
        k.w_upper = normal::inverse_mills(u1);
        k.c_upper = c1;
        break;
    case 2: {
        prob = normal::interval(u1, u2);
        const double denom = std::max(prob, probability_floor);
        k.w_upper = normal::pdf(u2) / denom;
        k.w_lower = normal::pdf(u1) / denom;
        k.c_upper = c2;
        k.c_lower = c1;
        k.upper_is_mu = true;
        break;
    }
    case 3:
        // P(eps > mu1 | z) = Phi((beta x - mu1 + rho z) / s) = Phi(-u2)
        prob = normal::cdf(-u2);
        k.w_lower = normal::inverse_mills(-u2);
        k.c_lower = c2;
        k.lower_is_mu = true;
        break;
    default:
        throw DomainError("travel category must be 1, 2 or 3");
    }
    if (!(prob > probability_floor)) {
        prob = probability_floor;
        k.floored = true;
    }
    k.log_density = -log_d - std::log(sigma) + normal::log_pdf(k.z) + std::log(prob);
    return k;
}

inline void check_observation(std::size_t i, double hours) {
    if (!(hours > 0.0) || !std::isfinite(hours)) {
        throw DomainError("observation " + std::to_string(i) + ": departure_hours must be positive");
    }
}

} // namespace detail

/// Log of the joint density of (departure time, travel category) for one
/// observation, given its linear indices gamma.y and beta.x.
inline LogDensity joint_log_density(double hours, int category, double duration_index, double ordinal_index,
                                    const ParameterVector &theta) {
    theta.validate();
    detail::check_observation(0, hours);
    const auto k = detail::kernel(hours, category, duration_index, ordinal_index, theta.sigma, theta.mu1, theta.rho);
    return {k.log_density, k.floored};
}

inline LogDensity joint_log_density(const Observation &obs, const ParameterVector &theta,
                                    const Eigen::Ref<const Eigen::VectorXd> &y_row,
                                    const Eigen::Ref<const Eigen::VectorXd> &x_row) {
    if (y_row.size() != theta.p() || x_row.size() != theta.q()) {
        throw DomainError("covariate rows do not match parameter dimensions");
    }
    return joint_log_density(obs.departure_hours, obs.travel_category, y_row.dot(theta.gamma), x_row.dot(theta.beta),
                             theta);
}

inline void check_dimensions(const Dataset &data, const ParameterVector &theta) {
    if (data.Y.cols() != theta.p() || data.X.cols() != theta.q()) {
        throw DomainError("parameter dimensions do not match the design matrices");
    }
    if (data.size() == 0) {
        throw DataError("empty dataset");
    }
}

/// Sample log-likelihood, summed in observation order with compensation.
inline LikelihoodValue total_log_likelihood(const Dataset &data, const ParameterVector &theta) {
    theta.validate();
    check_dimensions(data, theta);
    const Eigen::VectorXd lin_y = data.Y * theta.gamma;
    const Eigen::VectorXd lin_x = data.X * theta.beta;

    LikelihoodValue out;
    out.per_observation.resize(static_cast<Eigen::Index>(data.size()));
    detail::CompensatedSum acc;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        detail::check_observation(i, data.departure_hours[r]);
        if (data.travel_category[i] < 1 || data.travel_category[i] > 3) {
            throw DomainError("observation " + std::to_string(i) + ": travel category out of range");
        }
        const auto k = detail::kernel(data.departure_hours[r], data.travel_category[i], lin_y[r], lin_x[r],
                                      theta.sigma, theta.mu1, theta.rho);
        out.per_observation[r] = k.log_density;
        out.underflow_count += k.floored ? 1 : 0;
        acc.add(k.log_density);
    }
    out.log_likelihood = acc.value();
    return out;
}

/// Analytic score of the log-likelihood in the original coordinates
/// (gamma, beta, sigma, mu1, rho).
inline Eigen::VectorXd score_original(const Dataset &data, const ParameterVector &theta) {
    theta.validate();
    check_dimensions(data, theta);
    const Eigen::Index p = theta.p();
    const Eigen::Index q = theta.q();
    const Eigen::VectorXd lin_y = data.Y * theta.gamma;
    const Eigen::VectorXd lin_x = data.X * theta.beta;
    const double sigma = theta.sigma;
    const double rho = theta.rho;

    // Per-observation weights, then two matrix-vector products for the slopes.
    Eigen::VectorXd wy(static_cast<Eigen::Index>(data.size()));
    Eigen::VectorXd wx(static_cast<Eigen::Index>(data.size()));
    double d_sigma = 0.0;
    double d_mu = 0.0;
    double d_rho = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        detail::check_observation(i, data.departure_hours[r]);
        const auto k = detail::kernel(data.departure_hours[r], data.travel_category[i], lin_y[r], lin_x[r], sigma,
                                      theta.mu1, rho);
        const double lambda = k.w_upper - k.w_lower;
        const double dz_term = k.z + rho * lambda / k.s;
        wy[r] = dz_term / sigma;
        wx[r] = -lambda / k.s;
        d_sigma += (-1.0 + k.z * dz_term) / sigma;
        d_mu += ((k.upper_is_mu ? k.w_upper : 0.0) - (k.lower_is_mu ? k.w_lower : 0.0)) / k.s;
        d_rho += (k.w_upper * (rho * k.c_upper - k.z) - k.w_lower * (rho * k.c_lower - k.z)) / (k.s * k.s * k.s);
    }
    Eigen::VectorXd g(theta.size());
    g.head(p) = data.Y.transpose() * wy;
    g.segment(p, q) = data.X.transpose() * wx;
    g[p + q] = d_sigma;
    g[p + q + 1] = d_mu;
    g[p + q + 2] = d_rho;
    return g;
}

/// Gradient of the log-likelihood in the unconstrained coordinates
/// (gamma, beta, ln sigma, ln mu1, atanh rho).
inline Eigen::VectorXd log_likelihood_gradient(const Dataset &data, const ParameterVector &theta) {
    return score_original(data, theta).cwiseProduct(reparameterization_jacobian(theta));
}

/// Central finite-difference gradient in the unconstrained coordinates with
/// step h_i = step_scale * max(1, |u_i|).
inline Eigen::VectorXd finite_difference_gradient(const Dataset &data, const ParameterVector &theta,
                                                  double step_scale = 1e-6) {
    const Eigen::VectorXd u = reparameterize(theta);
    const Eigen::Index p = theta.p();
    const Eigen::Index q = theta.q();
    Eigen::VectorXd g(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double h = step_scale * std::max(1.0, std::abs(u[i]));
        Eigen::VectorXd up = u;
        Eigen::VectorXd dn = u;
        up[i] += h;
        dn[i] -= h;
        const double f_up = total_log_likelihood(data, inverse_reparameterize(up, p, q)).log_likelihood;
        const double f_dn = total_log_likelihood(data, inverse_reparameterize(dn, p, q)).log_likelihood;
        g[i] = (f_up - f_dn) / (up[i] - dn[i]);
    }
    return g;
}

} // namespace jdc
