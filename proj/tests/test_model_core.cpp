#include "jdc/model_core.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

namespace {

using jdc::categorize_travel_time;
using jdc::make_interaction;
using jdc::make_threshold_indicator;

const std::vector<double> kBounds{1.0, 3.0};

TEST(CategorizeTravelTime, BoundaryValuesBelongToLowerCategory) {
    EXPECT_EQ(categorize_travel_time(1.0, kBounds), 1);
    EXPECT_EQ(categorize_travel_time(3.0, kBounds), 2);
    EXPECT_EQ(categorize_travel_time(5.0, kBounds), 3);
    EXPECT_EQ(categorize_travel_time(0.25, kBounds), 1);
    EXPECT_EQ(categorize_travel_time(1.0000001, kBounds), 2);
    EXPECT_EQ(categorize_travel_time(3.0000001, kBounds), 3);
}

TEST(CategorizeTravelTime, RejectsNonPositiveHours) {
    EXPECT_THROW(categorize_travel_time(0.0, kBounds), jdc::DomainError);
    EXPECT_THROW(categorize_travel_time(-2.0, kBounds), jdc::DomainError);
    const std::vector<double> bad{3.0, 1.0};
    EXPECT_THROW(categorize_travel_time(2.0, bad), jdc::DomainError);
}

TEST(CategorizeTravelTime, MonotoneAndHistogramConsistent) {
    std::mt19937_64 gen(3);
    std::lognormal_distribution<double> dist(0.3, 1.0);
    std::vector<double> hours(5000);
    for (auto &h : hours) {
        h = dist(gen);
    }
    std::sort(hours.begin(), hours.end());
    int prev = 0;
    std::array<int, 3> counts{};
    for (double h : hours) {
        const int c = categorize_travel_time(h, kBounds);
        EXPECT_GE(c, prev);
        prev = c;
        ++counts[static_cast<std::size_t>(c - 1)];
    }
    // Histogram equals direct counting with the interval definition.
    std::array<int, 3> direct{};
    for (double h : hours) {
        ++direct[h <= 1.0 ? 0 : (h <= 3.0 ? 1 : 2)];
    }
    EXPECT_EQ(counts, direct);
}

TEST(MakeInteraction, LogicalAnd) {
    EXPECT_EQ(make_interaction(std::vector<double>{1, 0, 1}, std::vector<double>{1, 1, 0}),
              (std::vector<double>{1, 0, 0}));
    EXPECT_EQ(make_interaction(std::vector<double>{0, 0}, std::vector<double>{0, 0}), (std::vector<double>{0, 0}));
    EXPECT_EQ(make_interaction(std::vector<double>{1, 1}, std::vector<double>{1, 1}), (std::vector<double>{1, 1}));
}

TEST(MakeInteraction, Commutes) {
    std::mt19937_64 gen(11);
    std::bernoulli_distribution coin(0.4);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> a(20), b(20);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = coin(gen);
            b[i] = coin(gen);
        }
        EXPECT_EQ(make_interaction(a, b), make_interaction(b, a));
    }
}

TEST(MakeInteraction, RejectsNonBinary) {
    EXPECT_THROW(make_interaction(std::vector<double>{1, 2}, std::vector<double>{1, 1}), jdc::DomainError);
    EXPECT_THROW(make_interaction(std::vector<double>{1}, std::vector<double>{1, 0}), jdc::DomainError);
}

TEST(MakeThresholdIndicator, InclusiveCutoff) {
    EXPECT_EQ(make_threshold_indicator(std::vector<double>{14.9, 15.0, 20.0}, 15.0), (std::vector<double>{0, 1, 1}));
    EXPECT_EQ(make_threshold_indicator(std::vector<double>{0.89, 0.90}, 0.9), (std::vector<double>{0, 1}));
    EXPECT_TRUE(make_threshold_indicator(std::vector<double>{}, 15.0).empty());
    EXPECT_THROW(make_threshold_indicator(std::vector<double>{std::nan("")}, 1.0), jdc::DomainError);
}

jdc::RawTable two_rows() {
    jdc::RawTable t;
    t.ids = {"a", "b"};
    t.departure_hours = {5.0, 12.0};
    t.travel_category = {1, 3};
    t.columns["u"] = {1.0, 0.0};
    t.columns["v"] = {0.0, 1.0};
    t.source_lines = {2, 3};
    return t;
}

TEST(BuildDesignMatrices, ShapesWithIntercept) {
    jdc::ModelSpec spec;
    spec.duration_covariates = {"u"};
    spec.ordinal_covariates = {"v"};
    spec.include_ordinal_intercept = false;
    const auto ds = jdc::build_design_matrices(spec, two_rows());
    EXPECT_EQ(ds.Y.rows(), 2);
    EXPECT_EQ(ds.Y.cols(), 2);
    EXPECT_EQ(ds.X.rows(), 2);
    EXPECT_EQ(ds.X.cols(), 1);
    EXPECT_EQ(ds.Y(0, 0), 1.0);
    EXPECT_EQ(ds.Y(0, 1), 1.0);
    EXPECT_EQ(ds.X(1, 0), 1.0);
    EXPECT_EQ(ds.duration_columns, (std::vector<std::string>{"Constant", "u"}));
    EXPECT_FALSE(ds.Y.hasNaN());
    EXPECT_FALSE(ds.X.hasNaN());
}

TEST(BuildDesignMatrices, ListwiseDeletionCountsDroppedRows) {
    auto raw = two_rows();
    raw.columns["u"][1] = std::nullopt;
    jdc::ModelSpec spec;
    spec.duration_covariates = {"u"};
    spec.ordinal_covariates = {"v"};
    const auto ds = jdc::build_design_matrices(spec, raw);
    EXPECT_EQ(ds.size(), 1U);
    EXPECT_EQ(ds.dropped(), 1U);
    EXPECT_EQ(ds.dropped_lines, (std::vector<std::size_t>{3}));
    EXPECT_EQ(ds.ids.front(), "a");
}

TEST(BuildDesignMatrices, UnknownColumnIsConfigurationError) {
    jdc::ModelSpec spec;
    spec.duration_covariates = {"nope"};
    EXPECT_THROW(jdc::build_design_matrices(spec, two_rows()), jdc::ConfigError);
}

TEST(BuildDesignMatrices, NoRowsLeftIsDataError) {
    auto raw = two_rows();
    raw.departure_hours = {std::nullopt, std::nullopt};
    jdc::ModelSpec spec;
    EXPECT_THROW(jdc::build_design_matrices(spec, raw), jdc::DataError);
}

TEST(BuildDesignMatrices, DerivedColumnsFromTransforms) {
    auto raw = two_rows();
    raw.columns["age_sd"] = {16.0, 14.0};
    jdc::ModelSpec spec;
    spec.duration_covariates = {"uv", "agehet"};
    spec.transforms = {{"uv", jdc::TransformKind::interaction, {"u", "v"}, 0.0},
                       {"agehet", jdc::TransformKind::threshold, {"age_sd"}, 15.0}};
    const auto ds = jdc::build_design_matrices(spec, raw);
    EXPECT_EQ(ds.Y(0, 1), 0.0);
    EXPECT_EQ(ds.Y(1, 1), 0.0);
    EXPECT_EQ(ds.Y(0, 2), 1.0);
    EXPECT_EQ(ds.Y(1, 2), 0.0);
}

TEST(BuildDesignMatrices, RejectsInvalidValues) {
    jdc::ModelSpec spec;
    auto raw = two_rows();
    raw.departure_hours[0] = -1.0;
    EXPECT_THROW(jdc::build_design_matrices(spec, raw), jdc::DataError);
    raw = two_rows();
    raw.travel_category[1] = 4;
    EXPECT_THROW(jdc::build_design_matrices(spec, raw), jdc::DataError);
}

TEST(ModelSpec, Validation) {
    jdc::ModelSpec spec;
    spec.duration_covariates = {"a", "a"};
    EXPECT_THROW(spec.validate(), jdc::ConfigError);
    spec.duration_covariates = {"a"};
    spec.category_bounds = {3.0, 1.0};
    EXPECT_THROW(spec.validate(), jdc::ConfigError);
    spec.category_bounds = {1.0, 3.0};
    EXPECT_NO_THROW(spec.validate());
    EXPECT_EQ(spec.n_categories(), 3);
}

TEST(Dataset, ObservationViewRestoresCovariates) {
    jdc::ModelSpec spec;
    spec.duration_covariates = {"u"};
    spec.ordinal_covariates = {"v"};
    const auto ds = jdc::build_design_matrices(spec, two_rows());
    const auto o = ds.observation(1);
    EXPECT_EQ(o.id, "b");
    EXPECT_EQ(o.travel_category, 3);
    EXPECT_EQ(o.covariates.at("u"), 0.0);
    EXPECT_EQ(o.covariates.at("v"), 1.0);
    const auto rebuilt = jdc::build_design_matrices(spec, jdc::RawTable::from_observations({ds.observation(0), o}));
    EXPECT_EQ(rebuilt.Y, ds.Y);
    EXPECT_EQ(rebuilt.X, ds.X);
}

} // namespace
