#pragma once

#include "jdc/errors.hpp"
#include "jdc/model_core.hpp"
#include "jdc/normal.hpp"
#include "jdc/parameters.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace jdc {

// ---------------------------------------------------------------------------
// Average marginal effects

/// Expected duration used by the duration effects: lognormal mean
/// exp(gamma.y + sigma^2/2), or the median exp(gamma.y).
enum class DurationMeasure { mean, median };

enum class EffectMethod { discrete_difference, derivative };

inline std::string to_string(EffectMethod m) {
    return m == EffectMethod::discrete_difference ? "discrete" : "derivative";
}

inline std::string to_string(DurationMeasure m) { return m == DurationMeasure::mean ? "mean" : "median"; }

struct DurationEffect {
    std::string covariate;
    double effect = 0.0; // hours
    EffectMethod method = EffectMethod::discrete_difference;
};

struct OrdinalEffect {
    std::string covariate;
    std::array<double, 3> effect{}; // on P(cat 1), P(cat 2), P(cat 3)
    EffectMethod method = EffectMethod::discrete_difference;
};

struct MarginalEffectsReport {
    DurationMeasure duration_measure = DurationMeasure::mean;
    std::vector<DurationEffect> duration_effects;
    std::vector<OrdinalEffect> ordinal_effects;
};

/// Unconditional ordered-probit probabilities for a linear index beta.x.
inline std::array<double, 3> ordinal_probabilities(double index, double mu1) {
    return {normal::cdf(-index), normal::interval(-index, mu1 - index), normal::cdf(index - mu1)};
}

namespace detail {

inline Eigen::Index column_index(const std::vector<std::string> &columns, const std::string &name,
                                 const char *equation) {
    if (name == intercept_name) {
        throw LookupError("the intercept has no marginal effect");
    }
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
        throw LookupError("covariate '" + name + "' is not in the " + equation + " equation");
    }
    return static_cast<Eigen::Index>(it - columns.begin());
}

inline bool binary_column(const Eigen::MatrixXd &m, Eigen::Index j) {
    const auto col = m.col(j);
    return (col.array() == 0.0 || col.array() == 1.0).all();
}

} // namespace detail

inline DurationEffect duration_marginal_effect(const Dataset &data, const ParameterVector &theta,
                                               const std::string &covariate,
                                               DurationMeasure measure = DurationMeasure::mean) {
    theta.validate();
    const Eigen::Index k = detail::column_index(data.duration_columns, covariate, "duration");
    const double shift = measure == DurationMeasure::mean ? 0.5 * theta.sigma * theta.sigma : 0.0;
    const double g = theta.gamma[k];
    const Eigen::VectorXd index = data.Y * theta.gamma;
    const auto n = static_cast<double>(data.size());

    DurationEffect out;
    out.covariate = covariate;
    double acc = 0.0;
    if (detail::binary_column(data.Y, k)) {
        out.method = EffectMethod::discrete_difference;
        for (Eigen::Index i = 0; i < index.size(); ++i) {
            const double base = index[i] - g * data.Y(i, k);
            acc += std::exp(base + g + shift) - std::exp(base + shift);
        }
    } else {
        out.method = EffectMethod::derivative;
        for (Eigen::Index i = 0; i < index.size(); ++i) {
            acc += g * std::exp(index[i] + shift);
        }
    }
    out.effect = acc / n;
    return out;
}

inline OrdinalEffect ordinal_marginal_effect(const Dataset &data, const ParameterVector &theta,
                                             const std::string &covariate) {
    theta.validate();
    const Eigen::Index k = detail::column_index(data.ordinal_columns, covariate, "ordinal");
    const double b = theta.beta[k];
    const Eigen::VectorXd index = data.X * theta.beta;
    const auto n = static_cast<double>(data.size());

    OrdinalEffect out;
    out.covariate = covariate;
    std::array<double, 3> acc{};
    if (detail::binary_column(data.X, k)) {
        out.method = EffectMethod::discrete_difference;
        for (Eigen::Index i = 0; i < index.size(); ++i) {
            const double base = index[i] - b * data.X(i, k);
            const auto on = ordinal_probabilities(base + b, theta.mu1);
            const auto off = ordinal_probabilities(base, theta.mu1);
            for (std::size_t c = 0; c < 3; ++c) {
                acc[c] += on[c] - off[c];
            }
        }
    } else {
        out.method = EffectMethod::derivative;
        for (Eigen::Index i = 0; i < index.size(); ++i) {
            const double lo = normal::pdf(-index[i]);
            const double hi = normal::pdf(theta.mu1 - index[i]);
            acc[0] += -lo * b;
            acc[1] += (lo - hi) * b;
            acc[2] += hi * b;
        }
    }
    for (std::size_t c = 0; c < 3; ++c) {
        out.effect[c] = acc[c] / n;
    }
    return out;
}

inline std::vector<DurationEffect> duration_marginal_effects(const Dataset &data, const ParameterVector &theta,
                                                             DurationMeasure measure = DurationMeasure::mean) {
    std::vector<DurationEffect> out;
    for (const auto &c : data.duration_columns) {
        if (c != intercept_name) {
            out.push_back(duration_marginal_effect(data, theta, c, measure));
        }
    }
    return out;
}

inline std::vector<OrdinalEffect> ordinal_marginal_effects(const Dataset &data, const ParameterVector &theta) {
    std::vector<OrdinalEffect> out;
    for (const auto &c : data.ordinal_columns) {
        if (c != intercept_name) {
            out.push_back(ordinal_marginal_effect(data, theta, c));
        }
    }
    return out;
}

inline MarginalEffectsReport marginal_effects(const Dataset &data, const ParameterVector &theta,
                                              DurationMeasure measure = DurationMeasure::mean) {
    return {measure, duration_marginal_effects(data, theta, measure), ordinal_marginal_effects(data, theta)};
}

// ---------------------------------------------------------------------------
// Goodness of fit

struct CriticalComparison {
    std::optional<double> confidence; // absent for caller-supplied critical values
    double critical_value = 0.0;
    bool exceeds = false;
};

struct LikelihoodRatioTest {
    double chi2 = 0.0;
    int dof = 0;
    double p_value = 1.0;
    std::vector<CriticalComparison> comparisons;
};

inline double chi_squared_quantile(double confidence, int dof) {
    if (dof < 1 || !(confidence > 0.0 && confidence < 1.0)) {
        throw DomainError("chi-square quantile needs dof >= 1 and confidence in (0, 1)");
    }
    return boost::math::quantile(boost::math::chi_squared(dof), confidence);
}

/// chi2 = -2 (LL(r) - LL(beta)), compared against chi-square quantiles at the
/// requested confidence levels and against any explicit critical values.
inline LikelihoodRatioTest likelihood_ratio_test(double ll_converged, double ll_restricted, int dof,
                                                 std::span<const double> confidence_levels = {},
                                                 std::span<const double> critical_values = {}) {
    if (dof < 1) {
        throw DomainError("likelihood ratio test needs at least one degree of freedom");
    }
    double chi2 = -2.0 * (ll_restricted - ll_converged);
    if (chi2 < -1e-8) {
        throw OrderingError("restricted log-likelihood exceeds the converged one");
    }
    chi2 = std::max(chi2, 0.0);
    LikelihoodRatioTest out;
    out.chi2 = chi2;
    out.dof = dof;
    out.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), chi2));
    for (double c : confidence_levels) {
        const double crit = chi_squared_quantile(c, dof);
        out.comparisons.push_back({c, crit, chi2 > crit});
    }
    for (double crit : critical_values) {
        out.comparisons.push_back({std::nullopt, crit, chi2 > crit});
    }
    return out;
}

/// 1 - (LL(beta) - K) / LL(r).
inline double adjusted_rho_squared(double ll_converged, double ll_restricted, int k) {
    if (!(ll_restricted < 0.0)) {
        throw DomainError("adjusted rho^2 requires a negative restricted log-likelihood");
    }
    return 1.0 - (ll_converged - k) / ll_restricted;
}

struct FitReport {
    double ll_converged = 0.0;
    double ll_restricted = 0.0;
    int k = 0;
    std::optional<std::size_t> n_obs;
    double chi2 = 0.0;
    int chi2_dof = 0;
    double adjusted_rho2 = 0.0;
    LikelihoodRatioTest lr;
};

inline FitReport fit_report(double ll_converged, double ll_restricted, int k, std::optional<std::size_t> n_obs = {},
                            std::span<const double> confidence_levels = {},
                            std::span<const double> critical_values = {}) {
    FitReport r;
    r.ll_converged = ll_converged;
    r.ll_restricted = ll_restricted;
    r.k = k;
    r.n_obs = n_obs;
    r.lr = likelihood_ratio_test(ll_converged, ll_restricted, k, confidence_levels, critical_values);
    r.chi2 = r.lr.chi2;
    r.chi2_dof = k;
    r.adjusted_rho2 = adjusted_rho_squared(ll_converged, ll_restricted, k);
    return r;
}

// ---------------------------------------------------------------------------
// Descriptive statistics and correlations

using NamedColumns = std::vector<std::pair<std::string, std::vector<double>>>;

struct ColumnSummary {
    std::string name;
    std::size_t n = 0;
    double mean = 0.0;
    double std_dev = 0.0; // sample (n - 1); 0 for a single value
    double min = 0.0;
    double max = 0.0;
};

inline std::vector<ColumnSummary> descriptive_stats(const NamedColumns &columns) {
    std::vector<ColumnSummary> out;
    for (const auto &[name, v] : columns) {
        if (v.empty()) {
            throw DataError("column '" + name + "' is empty");
        }
        ColumnSummary s;
        s.name = name;
        s.n = v.size();
        double sum = 0.0;
        for (double x : v) {
            sum += x;
        }
        s.mean = sum / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) {
            ss += (x - s.mean) * (x - s.mean);
        }
        s.std_dev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        s.min = *lo;
        s.max = *hi;
        out.push_back(s);
    }
    return out;
}

struct CorrelationMatrix {
    std::vector<std::string> names;
    /// Undefined entries (a constant column) are empty.
    std::vector<std::vector<std::optional<double>>> values;

    std::optional<double> at(std::size_t i, std::size_t j) const { return values[i][j]; }
};

/// Pairwise Pearson correlations.
inline CorrelationMatrix correlation_matrix(const NamedColumns &columns) {
    const std::size_t k = columns.size();
    CorrelationMatrix out;
    if (k == 0) {
        return out;
    }
    const std::size_t n = columns.front().second.size();
    if (n < 2) {
        throw DataError("correlation needs at least two rows");
    }
    std::vector<std::vector<double>> centered(k);
    std::vector<double> norm(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        const auto &v = columns[j].second;
        if (v.size() != n) {
            throw DataError("column '" + columns[j].first + "' has a different length");
        }
        out.names.push_back(columns[j].first);
        double mean = 0.0;
        for (double x : v) {
            mean += x;
        }
        mean /= static_cast<double>(n);
        centered[j].resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            centered[j][i] = v[i] - mean;
            norm[j] += centered[j][i] * centered[j][i];
        }
        norm[j] = std::sqrt(norm[j]);
    }
    out.values.assign(k, std::vector<std::optional<double>>(k));
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b <= a; ++b) {
            std::optional<double> r;
            if (norm[a] > 0.0 && norm[b] > 0.0) {
                if (a == b) {
                    r = 1.0;
                } else {
                    double cross = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        cross += centered[a][i] * centered[b][i];
                    }
                    r = std::clamp(cross / (norm[a] * norm[b]), -1.0, 1.0);
                }
            }
            out.values[a][b] = r;
            out.values[b][a] = r;
        }
    }
    return out;
}

/// Covariate columns of one equation (intercept excluded), optionally followed
/// by the response under `response_name`.
inline NamedColumns equation_columns(const Dataset &data, bool duration_equation,
                                     const std::string &response_name = {}) {
    const auto &names = duration_equation ? data.duration_columns : data.ordinal_columns;
    const Eigen::MatrixXd &m = duration_equation ? data.Y : data.X;
    NamedColumns out;
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (names[j] == intercept_name) {
            continue;
        }
        const auto col = m.col(static_cast<Eigen::Index>(j));
        out.emplace_back(names[j], std::vector<double>(col.data(), col.data() + col.size()));
    }
    if (!response_name.empty()) {
        std::vector<double> resp(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            resp[i] = duration_equation ? data.departure_hours[static_cast<Eigen::Index>(i)]
                                        : static_cast<double>(data.travel_category[i]);
        }
        out.emplace_back(response_name, std::move(resp));
    }
    return out;
}

} // namespace jdc
