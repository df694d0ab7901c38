#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace jdc::optim {

struct BfgsOptions {
    double gradient_tolerance = 1e-6;   // on the infinity norm of the gradient
    double relative_tolerance = 1e-9;   // relative objective change per iteration
    int stall_iterations = 3;           // consecutive iterations below relative_tolerance
    int max_iterations = 2000;
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
};

enum class BfgsStatus { gradient_converged, stalled, max_iterations, line_search_failed, invalid_start };

inline std::string to_string(BfgsStatus s) {
    switch (s) {
    case BfgsStatus::gradient_converged:
        return "gradient_converged";
    case BfgsStatus::stalled:
        return "relative_change_converged";
    case BfgsStatus::max_iterations:
        return "max_iterations";
    case BfgsStatus::line_search_failed:
        return "line_search_failed";
    case BfgsStatus::invalid_start:
        return "invalid_start";
    }
    return "unknown";
}

struct BfgsResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    Eigen::VectorXd gradient;
    int iterations = 0;
    int evaluations = 0;
    BfgsStatus status = BfgsStatus::invalid_start;
    std::vector<double> trace; // objective after each accepted step

    bool converged() const { return status == BfgsStatus::gradient_converged || status == BfgsStatus::stalled; }
    double gradient_norm() const { return gradient.size() ? gradient.lpNorm<Eigen::Infinity>() : 0.0; }
};

namespace detail {

struct LinePoint {
    double alpha = 0.0;
    double value = 0.0;
    double slope = 0.0;
    Eigen::VectorXd x;
    Eigen::VectorXd gradient;
};

/// Strong Wolfe line search (bracketing then zoom). Non-finite objective
/// values are treated as points past the admissible step.
template <class Objective>
bool wolfe_search(Objective &f, const Eigen::VectorXd &x0, double f0, const Eigen::VectorXd &g0,
                  const Eigen::VectorXd &dir, double alpha_init, const BfgsOptions &opt, int &evals, LinePoint &out) {
    const double slope0 = g0.dot(dir);
    auto eval = [&](double a) {
        LinePoint pt;
        pt.alpha = a;
        pt.x = x0 + a * dir;
        pt.gradient.resize(x0.size());
        pt.value = f(pt.x, pt.gradient);
        ++evals;
        if (!std::isfinite(pt.value) || !pt.gradient.allFinite()) {
            pt.value = std::numeric_limits<double>::infinity();
            pt.slope = 0.0;
        } else {
            pt.slope = pt.gradient.dot(dir);
        }
        return pt;
    };
    auto armijo_fails = [&](const LinePoint &pt) { return pt.value > f0 + opt.wolfe_c1 * pt.alpha * slope0; };
    auto curvature_ok = [&](const LinePoint &pt) { return std::abs(pt.slope) <= -opt.wolfe_c2 * slope0; };

    auto zoom = [&](LinePoint lo, LinePoint hi) {
        for (int it = 0; it < 60; ++it) {
            const double width = hi.alpha - lo.alpha;
            double a = 0.5 * (lo.alpha + hi.alpha);
            if (std::isfinite(hi.value)) {
                const double denom = 2.0 * (hi.value - lo.value - lo.slope * width);
                if (denom > 0.0) {
                    const double aq = lo.alpha - lo.slope * width * width / denom;
                    const double left = std::min(lo.alpha, hi.alpha) + 0.1 * std::abs(width);
                    const double right = std::max(lo.alpha, hi.alpha) - 0.1 * std::abs(width);
                    if (aq >= left && aq <= right) {
                        a = aq;
                    }
                }
            }
            if (std::abs(width) < 1e-14 * std::max(1.0, std::abs(lo.alpha))) {
                break;
            }
            LinePoint pt = eval(a);
            if (armijo_fails(pt) || pt.value >= lo.value) {
                hi = std::move(pt);
            } else {
                if (curvature_ok(pt)) {
                    out = std::move(pt);
                    return true;
                }
                if (pt.slope * (hi.alpha - lo.alpha) >= 0.0) {
                    hi = lo;
                }
                lo = std::move(pt);
            }
        }
        // Accept a sufficient decrease even without the curvature condition.
        if (lo.alpha > 0.0 && lo.value < f0) {
            out = std::move(lo);
            return true;
        }
        return false;
    };

    LinePoint prev;
    prev.alpha = 0.0;
    prev.value = f0;
    prev.slope = slope0;
    prev.x = x0;
    prev.gradient = g0;
    double a = alpha_init;
    for (int i = 0; i < 40; ++i) {
        LinePoint pt = eval(a);
        if (armijo_fails(pt) || (i > 0 && pt.value >= prev.value)) {
            return zoom(std::move(prev), std::move(pt));
        }
        if (curvature_ok(pt)) {
            out = std::move(pt);
            return true;
        }
        if (pt.slope >= 0.0) {
            return zoom(std::move(pt), std::move(prev));
        }
        prev = std::move(pt);
        a *= 2.0;
    }
    out = std::move(prev);
    return out.alpha > 0.0;
}

} // namespace detail

/// Minimizes f with BFGS updates of the inverse Hessian. `f(x, grad)` returns
/// the objective and writes the gradient; it may return +inf for infeasible x.
template <class Objective>
BfgsResult minimize_bfgs(Objective &&f, const Eigen::VectorXd &x0, const BfgsOptions &opt = {}) {
    BfgsResult res;
    const Eigen::Index n = x0.size();
    res.x = x0;
    res.gradient.resize(n);
    res.value = f(res.x, res.gradient);
    res.evaluations = 1;
    if (!std::isfinite(res.value) || !res.gradient.allFinite()) {
        res.status = BfgsStatus::invalid_start;
        return res;
    }

    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
    bool scaled = false;
    int stalled = 0;
    bool reset_tried = false;

    for (int it = 0; it < opt.max_iterations; ++it) {
        res.iterations = it;
        if (res.gradient_norm() < opt.gradient_tolerance) {
            res.status = BfgsStatus::gradient_converged;
            return res;
        }
        Eigen::VectorXd dir = -h_inv * res.gradient;
        if (!(res.gradient.dot(dir) < 0.0)) {
            h_inv.setIdentity();
            scaled = false;
            dir = -res.gradient;
        }
        const double alpha0 = scaled ? 1.0 : std::min(1.0, 1.0 / std::max(1e-12, dir.lpNorm<Eigen::Infinity>()));

        detail::LinePoint next;
        if (!detail::wolfe_search(f, res.x, res.value, res.gradient, dir, alpha0, opt, res.evaluations, next)) {
            if (!reset_tried) {
                reset_tried = true;
                h_inv.setIdentity();
                scaled = false;
                continue;
            }
            res.status = BfgsStatus::line_search_failed;
            return res;
        }
        reset_tried = false;

        const Eigen::VectorXd s = next.x - res.x;
        const Eigen::VectorXd y = next.gradient - res.gradient;
        const double rel = std::abs(next.value - res.value) / std::max(1.0, std::abs(next.value));
        res.x = std::move(next.x);
        res.gradient = std::move(next.gradient);
        res.value = next.value;
        res.trace.push_back(res.value);

        stalled = rel < opt.relative_tolerance ? stalled + 1 : 0;
        if (stalled >= opt.stall_iterations) {
            res.iterations = it + 1;
            res.status = res.gradient_norm() < opt.gradient_tolerance ? BfgsStatus::gradient_converged
                                                                       : BfgsStatus::stalled;
            return res;
        }

        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (!scaled) {
                h_inv = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
                scaled = true;
            }
            const double r = 1.0 / sy;
            const Eigen::VectorXd hy = h_inv * y;
            // H+ = H - r (H y s' + s y' H) + (r^2 y'Hy + r) s s'
            h_inv -= r * (hy * s.transpose() + s * hy.transpose());
            h_inv += (r * r * y.dot(hy) + r) * (s * s.transpose());
        }
    }
    res.iterations = opt.max_iterations;
    res.status = res.gradient_norm() < opt.gradient_tolerance ? BfgsStatus::gradient_converged
                                                               : BfgsStatus::max_iterations;
    return res;
}

} // namespace jdc::optim
