#pragma once

#include "jdc/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace jdc {

/// Joint model parameters: duration coefficients, ordinal coefficients,
/// duration error scale, upper threshold (lower threshold fixed at 0) and the
/// error correlation. Flattened order everywhere is (gamma, beta, sigma, mu1, rho).
struct ParameterVector {
    Eigen::VectorXd gamma;
    Eigen::VectorXd beta;
    double sigma = 1.0;
    double mu1 = 1.0;
    double rho = 0.0;

    Eigen::Index p() const { return gamma.size(); }
    Eigen::Index q() const { return beta.size(); }
    Eigen::Index size() const { return gamma.size() + beta.size() + 3; }

    bool valid() const {
        return std::isfinite(sigma) && sigma > 0.0 && std::isfinite(mu1) && mu1 > 0.0 && std::isfinite(rho) &&
               std::abs(rho) < 1.0 && gamma.allFinite() && beta.allFinite();
    }

    void validate() const {
        if (!(std::isfinite(sigma) && sigma > 0.0)) {
            throw DomainError("sigma must be positive");
        }
        if (!(std::isfinite(mu1) && mu1 > 0.0)) {
            throw DomainError("mu1 must exceed the fixed lower threshold 0");
        }
        if (!(std::isfinite(rho) && std::abs(rho) < 1.0)) {
            throw DomainError("rho must lie strictly inside (-1, 1)");
        }
        if (!gamma.allFinite() || !beta.allFinite()) {
            throw DomainError("coefficients must be finite");
        }
    }

    Eigen::VectorXd flatten() const {
        Eigen::VectorXd v(size());
        v << gamma, beta, sigma, mu1, rho;
        return v;
    }

    static ParameterVector unflatten(const Eigen::VectorXd &v, Eigen::Index p, Eigen::Index q) {
        if (v.size() != p + q + 3) {
            throw DomainError("parameter vector has wrong length");
        }
        ParameterVector t;
        t.gamma = v.head(p);
        t.beta = v.segment(p, q);
        t.sigma = v[p + q];
        t.mu1 = v[p + q + 1];
        t.rho = v[p + q + 2];
        return t;
    }

    /// Labels aligned with flatten(), e.g. "gamma:NJ".
    static std::vector<std::string> labels(const std::vector<std::string> &duration_columns,
                                           const std::vector<std::string> &ordinal_columns) {
        std::vector<std::string> out;
        for (const auto &c : duration_columns) {
            out.push_back("gamma:" + c);
        }
        for (const auto &c : ordinal_columns) {
            out.push_back("beta:" + c);
        }
        out.insert(out.end(), {"sigma", "mu1", "rho"});
        return out;
    }
};

/// Maps theta to (gamma, beta, ln sigma, ln mu1, atanh rho).
inline Eigen::VectorXd reparameterize(const ParameterVector &theta) {
    theta.validate();
    Eigen::VectorXd u = theta.flatten();
    const Eigen::Index k = theta.p() + theta.q();
    u[k] = std::log(theta.sigma);
    u[k + 1] = std::log(theta.mu1);
    u[k + 2] = std::atanh(theta.rho);
    return u;
}

inline ParameterVector inverse_reparameterize(const Eigen::VectorXd &u, Eigen::Index p, Eigen::Index q) {
    if (u.size() != p + q + 3 || !u.allFinite()) {
        throw DomainError("unconstrained vector has wrong length or non-finite entries");
    }
    ParameterVector t = ParameterVector::unflatten(u, p, q);
    t.sigma = std::exp(u[p + q]);
    t.mu1 = std::exp(u[p + q + 1]);
    t.rho = std::tanh(u[p + q + 2]);
    return t;
}

/// d theta / d u for the three transformed coordinates (identity elsewhere).
inline Eigen::VectorXd reparameterization_jacobian(const ParameterVector &theta) {
    Eigen::VectorXd j = Eigen::VectorXd::Ones(theta.size());
    const Eigen::Index k = theta.p() + theta.q();
    j[k] = theta.sigma;
    j[k + 1] = theta.mu1;
    j[k + 2] = 1.0 - theta.rho * theta.rho;
    return j;
}

} // namespace jdc
