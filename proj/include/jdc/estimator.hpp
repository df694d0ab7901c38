#pragma once

#include "jdc/bfgs.hpp"
#include "jdc/errors.hpp"
#include "jdc/likelihood.hpp"
#include "jdc/model_core.hpp"
#include "jdc/normal.hpp"
#include "jdc/parameters.hpp"
#include "jdc/rng.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace jdc {

struct StartTrace {
    int index = 0;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    double gradient_norm = 0.0;
    std::string status;
    bool converged = false;
};

struct ConvergenceInfo {
    std::string status;
    int iterations = 0;
    double gradient_norm = 0.0;
    int best_start = -1;
    std::vector<StartTrace> starts;
};

/// Curvature summary of the negative log-likelihood Hessian.
struct StandardErrorResult {
    std::optional<Eigen::VectorXd> std_errors;
    std::optional<Eigen::MatrixXd> covariance;
    Eigen::MatrixXd hessian; // of the negative log-likelihood
    double condition_number = std::numeric_limits<double>::infinity();
    double min_eigenvalue = 0.0;
};

struct EstimationDiagnostics {
    std::size_t underflow_count = 0;
    double hessian_condition_number = std::numeric_limits<double>::infinity();
    double hessian_min_eigenvalue = 0.0;
};

struct EstimationResult {
    ParameterVector theta_hat;
    std::optional<Eigen::VectorXd> std_errors;
    std::optional<Eigen::VectorXd> t_stats;
    double ll_converged = 0.0;
    double ll_restricted = 0.0;
    std::size_t n_obs = 0;
    int n_params_adjustment = 0;
    ConvergenceInfo convergence;
    EstimationDiagnostics diagnostics;
    std::vector<std::string> duration_columns;
    std::vector<std::string> ordinal_columns;

    std::vector<std::string> labels() const { return ParameterVector::labels(duration_columns, ordinal_columns); }
};

struct EstimateOptions {
    bool restricted = true;
    bool standard_errors = true;
};

/// Central-difference Hessian of f at x with step h_i = step_scale * max(1, |x_i|),
/// symmetrized.
inline Eigen::MatrixXd numerical_hessian(const std::function<double(const Eigen::VectorXd &)> &f,
                                         const Eigen::VectorXd &x, double step_scale = 1e-4) {
    const Eigen::Index n = x.size();
    Eigen::VectorXd h(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        h[i] = step_scale * std::max(1.0, std::abs(x[i]));
    }
    const double f0 = f(x);
    Eigen::MatrixXd H(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd xp = x;
        Eigen::VectorXd xm = x;
        xp[i] += h[i];
        xm[i] -= h[i];
        H(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (h[i] * h[i]);
        for (Eigen::Index j = 0; j < i; ++j) {
            Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
            pp[i] += h[i];
            pp[j] += h[j];
            pm[i] += h[i];
            pm[j] -= h[j];
            mp[i] -= h[i];
            mp[j] += h[j];
            mm[i] -= h[i];
            mm[j] -= h[j];
            H(i, j) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h[i] * h[j]);
            H(j, i) = H(i, j);
        }
    }
    return 0.5 * (H + H.transpose());
}

/// Standard errors from the inverse of the observed information, i.e. the
/// Hessian of -log_likelihood. A Hessian that is not positive definite yields
/// no standard errors, only the curvature diagnostics.
inline StandardErrorResult inverse_hessian_standard_errors(
    const std::function<double(const Eigen::VectorXd &)> &log_likelihood, const Eigen::VectorXd &x,
    double step_scale = 1e-4) {
    StandardErrorResult out;
    out.hessian = -numerical_hessian(log_likelihood, x, step_scale);
    if (!out.hessian.allFinite()) {
        out.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
        out.condition_number = std::numeric_limits<double>::infinity();
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.hessian);
    const Eigen::VectorXd ev = eig.eigenvalues();
    out.min_eigenvalue = ev.minCoeff();
    const double max_abs = ev.cwiseAbs().maxCoeff();
    const double min_abs = ev.cwiseAbs().minCoeff();
    out.condition_number = min_abs > 0.0 ? max_abs / min_abs : std::numeric_limits<double>::infinity();
    if (!(out.min_eigenvalue > 0.0)) {
        return out;
    }
    const Eigen::MatrixXd cov =
        eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    out.covariance = cov;
    out.std_errors = cov.diagonal().cwiseSqrt();
    return out;
}

/// Inverse-Hessian standard errors of theta_hat in the original coordinates
/// (gamma, beta, sigma, mu1, rho).
inline StandardErrorResult standard_errors(const Dataset &data, const ParameterVector &theta_hat) {
    theta_hat.validate();
    const Eigen::Index p = theta_hat.p();
    const Eigen::Index q = theta_hat.q();
    auto ll = [&](const Eigen::VectorXd &v) {
        const ParameterVector t = ParameterVector::unflatten(v, p, q);
        if (!t.valid()) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        return total_log_likelihood(data, t).log_likelihood;
    };
    return inverse_hessian_standard_errors(ll, theta_hat.flatten());
}

namespace detail {

inline std::optional<Eigen::Index> intercept_index(const std::vector<std::string> &columns) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j] == intercept_name) {
            return static_cast<Eigen::Index>(j);
        }
    }
    return std::nullopt;
}

inline double normal_quantile(double prob) {
    prob = std::clamp(prob, 1e-12, 1.0 - 1e-12);
    return boost::math::quantile(boost::math::normal(), prob);
}

/// Starting point: least squares of ln d on Y for gamma and sigma, ordinal
/// intercept and mu1 matched to the observed category shares, rho = 0.
inline ParameterVector heuristic_start(const Dataset &data) {
    const auto n = static_cast<double>(data.size());
    const Eigen::VectorXd log_d = data.departure_hours.array().log().matrix();
    ParameterVector t;
    t.gamma = Eigen::VectorXd::Zero(data.Y.cols());
    double rss = 0.0;
    if (data.Y.cols() > 0) {
        t.gamma = data.Y.colPivHouseholderQr().solve(log_d);
        rss = (log_d - data.Y * t.gamma).squaredNorm();
    } else {
        rss = log_d.squaredNorm();
    }
    const double dof = std::max(1.0, n - static_cast<double>(data.Y.cols()));
    t.sigma = std::max(1e-3, std::sqrt(rss / dof));

    const auto counts = data.category_counts();
    const double p1 = static_cast<double>(counts[0]) / n;
    const double p12 = static_cast<double>(counts[0] + counts[1]) / n;
    t.beta = Eigen::VectorXd::Zero(data.X.cols());
    double b0 = 0.0;
    if (auto j = intercept_index(data.ordinal_columns)) {
        b0 = -normal_quantile(p1);
        t.beta[*j] = b0;
    }
    t.mu1 = std::max(0.05, normal_quantile(p12) + b0);
    t.rho = 0.0;
    return t;
}

struct MaskedFit {
    optim::BfgsResult bfgs;
    Eigen::VectorXd u; // full unconstrained vector at the end
};

/// Maximizes LL over the unconstrained coordinates flagged in `free_mask`,
/// holding the others at their value in u0.
inline MaskedFit maximize(const Dataset &data, const Eigen::VectorXd &u0, const std::vector<bool> &free_mask,
                          Eigen::Index p, Eigen::Index q, const EstimationSettings &settings) {
    std::vector<Eigen::Index> free_idx;
    for (std::size_t i = 0; i < free_mask.size(); ++i) {
        if (free_mask[i]) {
            free_idx.push_back(static_cast<Eigen::Index>(i));
        }
    }
    const auto m = static_cast<Eigen::Index>(free_idx.size());
    auto expand = [&](const Eigen::VectorXd &v) {
        Eigen::VectorXd u = u0;
        for (Eigen::Index k = 0; k < m; ++k) {
            u[free_idx[static_cast<std::size_t>(k)]] = v[k];
        }
        return u;
    };
    auto objective = [&](const Eigen::VectorXd &v, Eigen::VectorXd &grad) {
        const Eigen::VectorXd u = expand(v);
        if (!u.allFinite()) {
            return std::numeric_limits<double>::infinity();
        }
        const ParameterVector t = inverse_reparameterize(u, p, q);
        if (!t.valid()) {
            return std::numeric_limits<double>::infinity();
        }
        const double ll = total_log_likelihood(data, t).log_likelihood;
        const Eigen::VectorXd g = log_likelihood_gradient(data, t);
        for (Eigen::Index k = 0; k < m; ++k) {
            grad[k] = -g[free_idx[static_cast<std::size_t>(k)]];
        }
        return -ll;
    };
    Eigen::VectorXd v0(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        v0[k] = u0[free_idx[static_cast<std::size_t>(k)]];
    }
    optim::BfgsOptions opt;
    opt.gradient_tolerance = settings.gradient_tolerance;
    opt.relative_tolerance = settings.relative_ll_tolerance;
    opt.stall_iterations = settings.stall_iterations;
    opt.max_iterations = settings.max_iterations;
    MaskedFit fit;
    fit.bfgs = optim::minimize_bfgs(objective, v0, opt);
    fit.u = expand(fit.bfgs.x);
    return fit;
}

} // namespace detail

/// Restricted log-likelihood: every slope and rho fixed at zero; intercepts,
/// sigma and mu1 free.
inline double restricted_log_likelihood(const Dataset &data, const EstimationSettings &settings = {}) {
    const Eigen::Index p = data.Y.cols();
    const Eigen::Index q = data.X.cols();
    ParameterVector start = detail::heuristic_start(data);
    const auto gi = detail::intercept_index(data.duration_columns);
    const auto bi = detail::intercept_index(data.ordinal_columns);
    // Intercept-only duration start: mean and MLE scale of ln d.
    const Eigen::VectorXd log_d = data.departure_hours.array().log().matrix();
    start.gamma.setZero();
    double centre = 0.0;
    if (gi) {
        centre = log_d.mean();
        start.gamma[*gi] = centre;
    }
    start.sigma = std::max(1e-3, std::sqrt((log_d.array() - centre).square().mean()));
    const double b0 = bi ? start.beta[*bi] : 0.0;
    start.beta.setZero();
    if (bi) {
        start.beta[*bi] = b0;
    }
    start.rho = 0.0;

    std::vector<bool> mask(static_cast<std::size_t>(p + q + 3), false);
    if (gi) {
        mask[static_cast<std::size_t>(*gi)] = true;
    }
    if (bi) {
        mask[static_cast<std::size_t>(p + *bi)] = true;
    }
    mask[static_cast<std::size_t>(p + q)] = true;
    mask[static_cast<std::size_t>(p + q + 1)] = true;
    const auto fit = detail::maximize(data, reparameterize(start), mask, p, q, settings);
    return total_log_likelihood(data, inverse_reparameterize(fit.u, p, q)).log_likelihood;
}

/// Number of parameters zeroed in the restricted model: all slopes plus rho.
inline int adjustment_parameter_count(const Dataset &data) {
    const auto slopes = [](const std::vector<std::string> &cols) {
        return static_cast<int>(std::count_if(cols.begin(), cols.end(), [](const auto &c) { return c != intercept_name; }));
    };
    return slopes(data.duration_columns) + slopes(data.ordinal_columns) + 1;
}

/// Full-information maximum likelihood fit from multiple starts.
inline EstimationResult estimate(const Dataset &data, const ModelSpec &spec, const EstimateOptions &options = {}) {
    spec.validate();
    const Eigen::Index p = data.Y.cols();
    const Eigen::Index q = data.X.cols();
    const auto n_params = static_cast<std::size_t>(p + q + 3);
    if (data.size() < n_params) {
        throw DataError("need at least " + std::to_string(n_params) + " observations, got " +
                        std::to_string(data.size()));
    }
    const auto counts = data.category_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) {
            throw DataError("travel category " + std::to_string(c + 1) + " has no observations");
        }
    }
    const auto &settings = spec.estimation;

    const Eigen::VectorXd u_start = reparameterize(detail::heuristic_start(data));
    const std::vector<bool> all_free(n_params, true);
    Rng rng(settings.seed);

    ConvergenceInfo conv;
    std::optional<detail::MaskedFit> best;
    for (int s = 0; s < settings.starts; ++s) {
        Eigen::VectorXd u0 = u_start;
        if (s > 0) {
            for (Eigen::Index i = 0; i < u0.size(); ++i) {
                u0[i] += settings.start_perturbation * rng.normal();
            }
        }
        auto fit = detail::maximize(data, u0, all_free, p, q, settings);
        StartTrace tr;
        tr.index = s;
        tr.log_likelihood = -fit.bfgs.value;
        tr.iterations = fit.bfgs.iterations;
        tr.gradient_norm = fit.bfgs.gradient_norm();
        tr.status = optim::to_string(fit.bfgs.status);
        tr.converged = fit.bfgs.converged();
        conv.starts.push_back(tr);
        if (tr.converged && (!best || tr.log_likelihood > -best->bfgs.value)) {
            best = std::move(fit);
            conv.best_start = s;
        }
    }
    if (!best) {
        std::ostringstream msg;
        msg << "no optimizer start converged:";
        for (const auto &tr : conv.starts) {
            msg << "\n  start " << tr.index << ": " << tr.status << ", LL=" << tr.log_likelihood
                << ", iterations=" << tr.iterations << ", |grad|=" << tr.gradient_norm;
        }
        throw ConvergenceError(msg.str());
    }
    conv.status = optim::to_string(best->bfgs.status);
    conv.iterations = best->bfgs.iterations;
    conv.gradient_norm = best->bfgs.gradient_norm();

    EstimationResult res;
    res.theta_hat = inverse_reparameterize(best->u, p, q);
    const auto ll = total_log_likelihood(data, res.theta_hat);
    res.ll_converged = ll.log_likelihood;
    res.diagnostics.underflow_count = ll.underflow_count;
    res.n_obs = data.size();
    res.n_params_adjustment = adjustment_parameter_count(data);
    res.duration_columns = data.duration_columns;
    res.ordinal_columns = data.ordinal_columns;
    res.convergence = std::move(conv);
    res.ll_restricted = options.restricted ? restricted_log_likelihood(data, settings)
                                           : std::numeric_limits<double>::quiet_NaN();

    if (options.standard_errors) {
        const auto se = standard_errors(data, res.theta_hat);
        res.diagnostics.hessian_condition_number = se.condition_number;
        res.diagnostics.hessian_min_eigenvalue = se.min_eigenvalue;
        if (se.std_errors) {
            res.std_errors = *se.std_errors;
            res.t_stats = res.theta_hat.flatten().cwiseQuotient(*se.std_errors);
        }
    }
    return res;
}

} // namespace jdc
