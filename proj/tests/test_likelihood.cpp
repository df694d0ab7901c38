#include "jdc/likelihood.hpp"
#include "jdc/normal.hpp"
#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <algorithm>
#include <numeric>
#include <random>

using namespace jdc;
using jdc::testing::random_dataset;
using jdc::testing::random_theta;

namespace {

ParameterVector scalar_theta(double sigma, double mu1, double rho) {
    ParameterVector t;
    t.gamma = Eigen::VectorXd::Zero(1);
    t.beta = Eigen::VectorXd::Zero(1);
    t.sigma = sigma;
    t.mu1 = mu1;
    t.rho = rho;
    return t;
}

double quad_cdf(double t) {
    // 0.5 + integral of the density from 0 to t
    auto f = [](double x) { return jdc::testing::ref_pdf(x); };
    const double part = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, t, 20, 1e-15);
    return 0.5 + part;
}

} // namespace

TEST(NormalPdf, KnownValues) {
    EXPECT_NEAR(normal::pdf(0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
    // exp(-1/2)/sqrt(2 pi) to 17 digits
    EXPECT_NEAR(normal::pdf(1.0) / 0.24197072451914337, 1.0, 1e-12);
    for (double t : {0.3, 1.7, 4.2, 9.0}) {
        EXPECT_EQ(normal::pdf(t), normal::pdf(-t));
    }
}

TEST(NormalCdf, KnownValues) {
    EXPECT_DOUBLE_EQ(normal::cdf(0.0), 0.5);
    EXPECT_NEAR(normal::cdf(0.41), 0.6590970262276774, 1e-12);
    EXPECT_NEAR(normal::cdf(-0.76), 0.22362729243759938, 1e-12);
}

TEST(NormalCdf, MatchesQuadratureOverCentralRange) {
    for (double t = -8.0; t <= 8.0; t += 0.25) {
        EXPECT_NEAR(normal::cdf(t), quad_cdf(t), 1e-12) << "t=" << t;
    }
}

TEST(NormalCdf, MonotoneTails) {
    double prev = 0.0;
    for (double t = -40.0; t <= 40.0; t += 0.5) {
        const double c = normal::cdf(t);
        EXPECT_GE(c, prev);
        EXPECT_GE(c, 0.0);
        EXPECT_LE(c, 1.0);
        prev = c;
    }
}

TEST(JointLogDensity, IndependentCentre) {
    const auto t = scalar_theta(1.0, 1.0, 0.0);
    EXPECT_NEAR(joint_log_density(1.0, 1, 0.0, 0.0, t).value, std::log(0.3989422804014327 * 0.5), 1e-12);
}

TEST(JointLogDensity, CorrelatedCategoryOne) {
    const auto t = scalar_theta(1.0, 1.0, -0.24);
    const double got = joint_log_density(std::exp(1.0), 1, 0.0, 0.0, t).value;
    const double oracle = std::log(jdc::testing::joint_density_by_integration(std::exp(1.0), 1, 0.0, 0.0, 1.0, 1.0, -0.24));
    EXPECT_NEAR(got, oracle, 1e-10);
    EXPECT_NEAR(got, -2.9338, 5e-4);
}

TEST(JointLogDensity, MiddleCategory) {
    const auto t = scalar_theta(1.0, 0.41, 0.0);
    const double got = joint_log_density(1.0, 2, 0.0, 0.0, t).value;
    EXPECT_NEAR(got, std::log(jdc::testing::joint_density_by_integration(1.0, 2, 0.0, 0.0, 1.0, 0.41, 0.0)), 1e-10);
    EXPECT_NEAR(got, -2.7573, 5e-4);
}

TEST(JointLogDensity, AgreesWithBivariateIntegration) {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 30; ++k) {
        const double sigma = 0.3 + std::abs(u(gen));
        const double mu1 = 0.1 + 1.5 * std::abs(u(gen));
        const double rho = 0.9 * u(gen);
        const double gy = u(gen);
        const double bx = 1.5 * u(gen);
        const double d = std::exp(gy + sigma * 1.5 * u(gen));
        const auto t = scalar_theta(sigma, mu1, rho);
        for (int cat = 1; cat <= 3; ++cat) {
            const double oracle = jdc::testing::joint_density_by_integration(d, cat, gy, bx, sigma, mu1, rho);
            EXPECT_NEAR(joint_log_density(d, cat, gy, bx, t).value, std::log(oracle), 1e-8)
                << "k=" << k << " cat=" << cat;
        }
    }
}

TEST(JointLogDensity, ObservationOverload) {
    ParameterVector t;
    t.gamma = Eigen::Vector2d(0.5, -0.2);
    t.beta = Eigen::Vector2d(0.1, 0.3);
    t.sigma = 0.7;
    t.mu1 = 0.8;
    t.rho = 0.3;
    Observation obs{"a", 2.5, 3, {}};
    const Eigen::Vector2d y(1.0, 2.0);
    const Eigen::Vector2d x(1.0, -1.0);
    EXPECT_EQ(joint_log_density(obs, t, y, x).value, joint_log_density(2.5, 3, 0.1, -0.2, t).value);
    EXPECT_THROW(joint_log_density(obs, t, Eigen::Vector3d(1, 2, 3), x), DomainError);
}

TEST(JointLogDensity, ConditionalProbabilitiesPartitionUnity) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const auto t = scalar_theta(0.3 + std::abs(u(gen)), 0.05 + 2.0 * std::abs(u(gen)), 0.95 * u(gen));
        const double gy = u(gen);
        const double bx = 2.0 * u(gen);
        for (double zz : {-3.0, -1.0, 0.0, 0.5, 2.5}) {
            const double d = std::exp(gy + t.sigma * zz);
            const double fd = normal::pdf(zz) / (d * t.sigma);
            double total = 0.0;
            for (int cat = 1; cat <= 3; ++cat) {
                total += std::exp(joint_log_density(d, cat, gy, bx, t).value) / fd;
            }
            EXPECT_NEAR(total, 1.0, 1e-10);
        }
    }
}

TEST(JointLogDensity, FactorizesAtZeroCorrelation) {
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const auto t = scalar_theta(0.3 + std::abs(u(gen)), 0.05 + 2.0 * std::abs(u(gen)), 0.0);
        const double gy = u(gen);
        const double bx = 2.0 * u(gen);
        const double d = std::exp(gy + t.sigma * 2.0 * u(gen));
        const double marginal = boost::math::pdf(boost::math::lognormal(gy, t.sigma), d);
        const double p[3] = {jdc::testing::ref_cdf(-bx), jdc::testing::ref_cdf(t.mu1 - bx) - jdc::testing::ref_cdf(-bx),
                             1.0 - jdc::testing::ref_cdf(t.mu1 - bx)};
        for (int cat = 1; cat <= 3; ++cat) {
            EXPECT_NEAR(std::exp(joint_log_density(d, cat, gy, bx, t).value), marginal * p[cat - 1],
                        1e-12 * std::max(1.0, marginal));
        }
    }
}

TEST(JointLogDensity, NegativeCorrelationLowersLongTravelWithLaterDeparture) {
    const auto t = scalar_theta(0.6, 0.7, -0.5);
    const double gy = 1.0;
    const double bx = 0.2;
    double prev = 2.0;
    for (double ld = -1.0; ld <= 3.0; ld += 0.1) {
        const double d = std::exp(ld);
        const double z = (ld - gy) / t.sigma;
        const double fd = normal::pdf(z) / (d * t.sigma);
        const double p3 = std::exp(joint_log_density(d, 3, gy, bx, t).value) / fd;
        EXPECT_LE(p3, prev + 1e-15);
        prev = p3;
    }
}

TEST(JointLogDensity, ExtremeArgumentsAreFlooredNotNaN) {
    const auto t = scalar_theta(0.5, 0.5, 0.9);
    const auto r = joint_log_density(1.0, 3, 0.0, -80.0, t);
    EXPECT_TRUE(r.floored);
    EXPECT_FALSE(std::isnan(r.value));
    EXPECT_NEAR(r.value, std::log(normal::pdf(0.0) / 0.5) + std::log(1e-300), 1e-9);

    const auto fine = joint_log_density(1.0, 1, 0.0, -80.0, t);
    EXPECT_FALSE(fine.floored);
    EXPECT_NEAR(fine.value, std::log(normal::pdf(0.0) / 0.5), 1e-12);

    for (double d : {1e-200, 1e-10, 1e10, 1e200}) {
        for (int cat = 1; cat <= 3; ++cat) {
            EXPECT_FALSE(std::isnan(joint_log_density(d, cat, 0.0, 0.3, t).value));
        }
    }
}

TEST(JointLogDensity, MiddleCategoryFarInUpperTail) {
    // Both conditional arguments large and positive: the difference must not cancel to zero.
    const auto t = scalar_theta(1.0, 1.0, 0.0);
    const double v = joint_log_density(1.0, 2, 0.0, -9.0, t).value;
    const double p = jdc::testing::ref_cdf(-10.0) - jdc::testing::ref_cdf(-9.0); // negative, mirrored below
    EXPECT_NEAR(v, std::log(normal::pdf(0.0)) + std::log(-p), 1e-9);
}

TEST(JointLogDensity, InvalidParametersRejected) {
    EXPECT_THROW(joint_log_density(1.0, 1, 0, 0, scalar_theta(0.0, 1.0, 0.0)), DomainError);
    EXPECT_THROW(joint_log_density(1.0, 1, 0, 0, scalar_theta(1.0, 0.0, 0.0)), DomainError);
    EXPECT_THROW(joint_log_density(1.0, 1, 0, 0, scalar_theta(1.0, 1.0, 1.0)), DomainError);
    EXPECT_THROW(joint_log_density(1.0, 1, 0, 0, scalar_theta(1.0, 1.0, -1.0)), DomainError);
    EXPECT_THROW(joint_log_density(0.0, 1, 0, 0, scalar_theta(1.0, 1.0, 0.0)), DomainError);
}

TEST(TotalLogLikelihood, SingleObservation) {
    auto ds = random_dataset(1, 1);
    std::mt19937_64 gen(2);
    const auto t = random_theta(gen, 3, 3);
    const double direct = joint_log_density(ds.departure_hours[0], ds.travel_category[0], ds.Y.row(0).dot(t.gamma),
                                            ds.X.row(0).dot(t.beta), t)
                              .value;
    EXPECT_EQ(total_log_likelihood(ds, t).log_likelihood, direct);
}

TEST(TotalLogLikelihood, SumOfTermsAndAdditivity) {
    const auto ds = random_dataset(300, 3);
    std::mt19937_64 gen(4);
    for (int k = 0; k < 5; ++k) {
        const auto t = random_theta(gen, 3, 3);
        const auto v = total_log_likelihood(ds, t);
        EXPECT_NEAR(v.log_likelihood, v.per_observation.sum(), 1e-10 * 300);
        for (int rep : {2, 3, 5}) {
            EXPECT_NEAR(total_log_likelihood(ds.replicated(rep), t).log_likelihood, rep * v.log_likelihood, 1e-9);
        }
    }
}

TEST(TotalLogLikelihood, OrderIndependentAndReproducible) {
    const auto ds = random_dataset(500, 8);
    std::mt19937_64 gen(9);
    const auto t = random_theta(gen, 3, 3);
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), gen);
    const double a = total_log_likelihood(ds, t).log_likelihood;
    EXPECT_NEAR(total_log_likelihood(ds.permuted(order), t).log_likelihood, a, 1e-9);
    EXPECT_EQ(total_log_likelihood(ds, t).log_likelihood, a);
}

TEST(TotalLogLikelihood, FactorizationAtZeroCorrelation) {
    std::mt19937_64 gen(10);
    for (int k = 0; k < 10; ++k) {
        const auto ds = random_dataset(200, 100 + k);
        const auto t = random_theta(gen, 3, 3, true);
        const double oracle = jdc::testing::aft_log_likelihood(ds, t.gamma, t.sigma) +
                              jdc::testing::ordered_probit_log_likelihood(ds, t.beta, t.mu1);
        EXPECT_NEAR(total_log_likelihood(ds, t).log_likelihood, oracle, 1e-10 * 200);
    }
}

TEST(TotalLogLikelihood, ReportsOffendingObservation) {
    auto ds = random_dataset(10, 11);
    ds.departure_hours[6] = -1.0;
    std::mt19937_64 gen(1);
    try {
        total_log_likelihood(ds, random_theta(gen, 3, 3));
        FAIL() << "expected a domain error";
    } catch (const DomainError &e) {
        EXPECT_NE(std::string(e.what()).find("observation 6"), std::string::npos);
    }
}

TEST(TotalLogLikelihood, DimensionMismatch) {
    const auto ds = random_dataset(10, 11);
    std::mt19937_64 gen(1);
    EXPECT_THROW(total_log_likelihood(ds, random_theta(gen, 2, 3)), DomainError);
}

TEST(Gradient, MatchesFiniteDifferences) {
    const auto ds = random_dataset(200, 12);
    std::mt19937_64 gen(13);
    for (int k = 0; k < 10; ++k) {
        const auto t = random_theta(gen, 3, 3);
        const Eigen::VectorXd g = log_likelihood_gradient(ds, t);
        const Eigen::VectorXd fd = finite_difference_gradient(ds, t, 5e-7);
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            EXPECT_LE(std::abs(g[i] - fd[i]), 1e-4 * std::max(1.0, std::abs(fd[i]))) << "coord " << i;
        }
    }
}

TEST(Gradient, SymmetricDatasetGivesZeroCoordinate) {
    // Every observation appears once with s=+1 and once with s=-1, so the
    // likelihood is even in the coefficients of s.
    auto base = random_dataset(60, 14);
    Dataset ds;
    ds.duration_columns = {"Constant", "s"};
    ds.ordinal_columns = {"Constant", "s"};
    const Eigen::Index n = static_cast<Eigen::Index>(base.size());
    ds.Y.resize(2 * n, 2);
    ds.X.resize(2 * n, 2);
    ds.departure_hours.resize(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int sgn : {0, 1}) {
            const Eigen::Index r = 2 * i + sgn;
            const double s = sgn == 0 ? 1.0 : -1.0;
            ds.Y.row(r) << 1.0, s;
            ds.X.row(r) << 1.0, s;
            ds.departure_hours[r] = base.departure_hours[i];
            ds.travel_category.push_back(base.travel_category[static_cast<std::size_t>(i)]);
            ds.ids.push_back(std::to_string(r));
        }
    }
    ParameterVector t;
    t.gamma = Eigen::Vector2d(0.9, 0.0);
    t.beta = Eigen::Vector2d(-0.2, 0.0);
    t.sigma = 0.8;
    t.mu1 = 0.6;
    t.rho = -0.3;
    const Eigen::VectorXd g = log_likelihood_gradient(ds, t);
    EXPECT_NEAR(g[1], 0.0, 1e-6);
    EXPECT_NEAR(g[3], 0.0, 1e-6);
}

TEST(Gradient, BoundaryRejected) {
    const auto ds = random_dataset(20, 15);
    std::mt19937_64 gen(1);
    auto t = random_theta(gen, 3, 3);
    t.rho = 1.0;
    EXPECT_THROW(log_likelihood_gradient(ds, t), DomainError);
}
