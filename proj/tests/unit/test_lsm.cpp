#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "../oracles/normal_equations.hpp"
#include "rlnn/cos.hpp"
#include "rlnn/lsm.hpp"

using namespace rlnn;

namespace {

const MarketParams market{};

PathGrid toy_grid(std::vector<double> times, const std::vector<std::vector<double>>& rows) {
    PathGrid g;
    g.times = std::move(times);
    g.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(g.times.size()));
    for (std::size_t j = 0; j < rows.size(); ++j)
        for (std::size_t k = 0; k < rows[j].size(); ++k)
            g.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = rows[j][k];
    return g;
}

// Two exercise dates {0.5, 1} and three paths observed at {0.25, 0.5, 0.75, 1}.
struct Toy {
    BermudanSpec spec{1.0, OptionSide::put, {0.5, 1.0}};
    PathGrid paths = toy_grid({0.25, 0.5, 0.75, 1.0}, {{0.95, 0.90, 0.85, 0.80},
                                                       {1.02, 1.05, 1.10, 1.20},
                                                       {1.00, 0.97, 1.01, 0.96}});
    LsmResult result;

    Toy() {
        result.t0_price = 0.07;
        result.coeffs.scale = 1.0;
        result.coeffs.per_date = {{0.5, -0.4, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}};
        result.values.resize(3, 2);
        result.continuation.resize(3, 2);
        result.values << 0.10, 0.20, 0.01, 0.00, 0.09, 0.04;
        result.continuation << 0.08, 0.0, 0.01, 0.0, 0.09, 0.0;
    }
};

}  // namespace

TEST(FitLsm, SingleDateIsDiscountedMeanPayoff) {
    const auto spec = BermudanSpec::equally_spaced(1.0, OptionSide::put, 1.0, 1);
    const PathGrid g = simulate_gbm(market, std::nullopt, spec.exercise_times, 10000, 4);
    const LsmResult r = fit_lsm(g, spec, market);
    double mean = 0.0;
    for (Eigen::Index j = 0; j < g.n_paths(); ++j) mean += spec.payoff(g.values(j, 0));
    mean /= static_cast<double>(g.n_paths());
    EXPECT_NEAR(r.t0_price, std::max(0.0, std::exp(-0.06) * mean), 1e-14);
}

TEST(FitLsm, LinearValueWithoutVolatilityIsFittedExactly) {
    const MarketParams flat{1.0, 0.06, 0.0};
    const BermudanSpec spec{2.0, OptionSide::put, {0.5, 1.0}};
    PathGrid g = simulate_gbm(flat, std::nullopt, spec.exercise_times, 5, 1);
    // spread the spots so that the design is not degenerate; everything stays deep in the money
    for (Eigen::Index j = 0; j < 5; ++j) g.values.row(j) *= 0.8 + 0.1 * static_cast<double>(j);
    const LsmResult r = fit_lsm(g, spec, flat);
    const double df = std::exp(-0.03);
    for (Eigen::Index j = 0; j < 5; ++j)
        EXPECT_NEAR(r.continuation(j, 0), df * (2.0 - g.values(j, 1)), 1e-12);
}

TEST(FitLsm, DegenerateDesignFallsBack) {
    const MarketParams flat{1.0, 0.06, 0.0};
    const BermudanSpec spec{2.0, OptionSide::put, {0.5, 1.0}};
    const PathGrid g = simulate_gbm(flat, std::nullopt, spec.exercise_times, 50, 1);
    const LsmResult r = fit_lsm(g, spec, flat);
    for (double c : r.coeffs.per_date[0]) EXPECT_TRUE(std::isfinite(c));
    EXPECT_NEAR(r.continuation(0, 0), std::exp(-0.03) * (2.0 - std::exp(0.06)), 1e-12);
}

TEST(FitLsm, AtTheMoneyQuarterlyPutWithinOnePercentOfCos) {
    const auto spec = BermudanSpec::equally_spaced(1.0, OptionSide::put, 1.0, 4);
    const PathGrid g = simulate_gbm(market, std::nullopt, spec.exercise_times, 50000, 43);
    const double cos = price_cos(market, spec);
    EXPECT_NEAR(fit_lsm(g, spec, market).t0_price, cos, 0.01 * cos);
}

TEST(FitLsm, ClassicalVariantIsCloseToCos) {
    const auto spec = BermudanSpec::equally_spaced(1.0, OptionSide::put, 1.0, 4);
    const PathGrid g = simulate_gbm(market, std::nullopt, spec.exercise_times, 50000, 43);
    const double cos = price_cos(market, spec);
    const LsmResult r = fit_lsm(g, spec, market, LsmOptions{true});
    EXPECT_NEAR(r.t0_price, cos, 0.02 * cos);
    EXPECT_NE(r.t0_price, fit_lsm(g, spec, market).t0_price);
}

TEST(FitLsm, TerminalColumnIsPayoff) {
    const auto spec = BermudanSpec::equally_spaced(1.0, OptionSide::put, 1.0, 4);
    const PathGrid g = simulate_gbm(market, std::nullopt, spec.exercise_times, 1000, 5);
    const LsmResult r = fit_lsm(g, spec, market);
    for (Eigen::Index j = 0; j < g.n_paths(); ++j) {
        EXPECT_DOUBLE_EQ(r.values(j, 3), spec.payoff(g.values(j, 3)));
        for (Eigen::Index m = 0; m < 4; ++m) EXPECT_GE(r.values(j, m), spec.payoff(g.values(j, m)));
    }
}

TEST(FitLsm, ApplyOnTrainingPathsReproducesFit) {
    const auto spec = BermudanSpec::equally_spaced(1.0, OptionSide::put, 1.0, 4);
    const PathGrid g = simulate_gbm(market, std::nullopt, spec.exercise_times, 1000, 5);
    const LsmResult r = fit_lsm(g, spec, market);
    const LsmResult a = apply_lsm(r, g, spec);
    EXPECT_TRUE(a.values.isApprox(r.values, 1e-14));
    EXPECT_TRUE(a.continuation.isApprox(r.continuation, 1e-14));
}

TEST(FitLsmProperty, FarOutOfTheMoneyWithoutVolatilityIsWorthless) {
    const MarketParams flat{1.0, 0.06, 0.0};
    const auto spec = BermudanSpec::equally_spaced(0.5, OptionSide::put, 1.0, 4);
    const PathGrid g = simulate_gbm(flat, std::nullopt, spec.exercise_times, 100, 2);
    EXPECT_NEAR(fit_lsm(g, spec, flat).t0_price, 0.0, 1e-14);
}

TEST(InterpOptionValue, HandComputedToy) {
    const Toy toy;
    const Eigen::VectorXd first = interp_option_value(toy.result, toy.spec, toy.paths, 0.25);
    EXPECT_NEAR(first[0], 0.5 * (0.07 + 0.10), 1e-15);
    EXPECT_NEAR(first[1], 0.5 * (0.07 + 0.01), 1e-15);
    EXPECT_NEAR(first[2], 0.5 * (0.07 + 0.09), 1e-15);
    const Eigen::VectorXd last = interp_option_value(toy.result, toy.spec, toy.paths, 0.75);
    EXPECT_NEAR(last[0], 0.5 * (0.10 + 0.20), 1e-15);
    EXPECT_NEAR(last[1], 0.5 * (0.01 + 0.00), 1e-15);
    EXPECT_NEAR(last[2], 0.5 * (0.09 + 0.04), 1e-15);
}

TEST(InterpContinuationValue, HandComputedToy) {
    const Toy toy;
    const Eigen::VectorXd first = interp_continuation_value(toy.result, toy.spec, toy.paths, 0.25);
    EXPECT_NEAR(first[0], 0.5 * (0.07 + 0.08), 1e-15);
    EXPECT_NEAR(first[1], 0.5 * (0.07 + 0.01), 1e-15);
    EXPECT_NEAR(first[2], 0.5 * (0.07 + 0.09), 1e-15);
    const Eigen::VectorXd last = interp_continuation_value(toy.result, toy.spec, toy.paths, 0.75);
    EXPECT_NEAR(last[0], 0.5 * (0.08 + 0.20), 1e-15);
    EXPECT_NEAR(last[2], 0.5 * (0.09 + 0.04), 1e-15);
}

TEST(Interpolation, RejectsExerciseDatesAndOutsideTimes) {
    const Toy toy;
    EXPECT_THROW(interp_option_value(toy.result, toy.spec, toy.paths, 0.5), std::invalid_argument);
    EXPECT_THROW(interp_continuation_value(toy.result, toy.spec, toy.paths, 1.0), std::invalid_argument);
    EXPECT_THROW(interp_params(toy.result, toy.spec, toy.paths, 1.5), std::invalid_argument);
}

TEST(InterpParams, HandComputedTwoIntervalToy) {
    const Toy toy;
    // first interval: blend the constant t0_price with 0.5 - 0.4 x
    const Eigen::VectorXd first = interp_params(toy.result, toy.spec, toy.paths, 0.25);
    for (Eigen::Index j = 0; j < 3; ++j) {
        const double s = toy.paths.values(j, 0);
        EXPECT_NEAR(first[j], 0.5 * (0.07 + 0.5) - 0.5 * 0.4 * s, 1e-15);
    }
    // last interval: polynomial at S_t blended with the payoff at maturity
    const Eigen::VectorXd last = interp_params(toy.result, toy.spec, toy.paths, 0.75);
    const Eigen::VectorXd alt =
        interp_params(toy.result, toy.spec, toy.paths, 0.75, ParamsBoundary::intermediate_spot);
    for (Eigen::Index j = 0; j < 3; ++j) {
        const double s = toy.paths.values(j, 2), st = toy.paths.values(j, 3);
        EXPECT_NEAR(last[j], 0.5 * (0.5 - 0.4 * s) + 0.5 * std::max(1.0 - st, 0.0), 1e-15);
        EXPECT_NEAR(alt[j], 0.5 * (0.5 - 0.4 * s) + 0.5 * std::max(1.0 - s, 0.0), 1e-15);
    }
}

TEST(InterpParams, IdenticalCoefficientsGiveTimeIndependentValues) {
    const BermudanSpec spec{1.0, OptionSide::put, {0.3, 0.6, 0.9}};
    std::vector<double> times{0.3, 0.35, 0.45, 0.55, 0.6, 0.9};
    const PathGrid g = toy_grid(times, {{1.0, 0.9, 0.9, 0.9, 0.9, 0.9}, {1.0, 1.1, 1.1, 1.1, 1.1, 1.1}});
    LsmResult r;
    r.t0_price = 0.05;
    r.coeffs.per_date = {{0.2, -0.1, 0.03, 0.001}, {0.2, -0.1, 0.03, 0.001}, {}};
    r.values = Eigen::MatrixXd::Zero(2, 3);
    r.continuation = Eigen::MatrixXd::Zero(2, 3);
    const Eigen::VectorXd a = interp_params(r, spec, g, 0.35);
    const Eigen::VectorXd b = interp_params(r, spec, g, 0.45);
    const Eigen::VectorXd c = interp_params(r, spec, g, 0.55);
    EXPECT_NEAR(a[0], b[0], 1e-15);
    EXPECT_NEAR(b[1], c[1], 1e-15);
    EXPECT_NEAR(a[1], r.coeffs.evaluate(r.coeffs.per_date[0], 1.1), 1e-15);
}

TEST(InterpolationProperty, EndpointLimitsAndBounds) {
    const auto spec = BermudanSpec::equally_spaced(1.0, OptionSide::put, 1.0, 4);
    const double eps = 1e-9;
    std::vector<double> times;
    for (double t : spec.exercise_times) {
        times.push_back(t - eps);
        times.push_back(t - 0.1);
        times.push_back(t);
    }
    std::sort(times.begin(), times.end());
    const PathGrid g = simulate_gbm(market, std::nullopt, times, 2000, 12);
    const LsmResult r = fit_lsm(g, spec, market);
    for (std::size_t m = 0; m < 4; ++m) {
        const double tm = spec.exercise_times[m];
        const auto col = g.column_of(tm);
        const Eigen::VectorXd v = interp_option_value(r, spec, g, tm - eps);
        const Eigen::VectorXd q = interp_continuation_value(r, spec, g, tm - eps);
        const Eigen::VectorXd p = interp_params(r, spec, g, tm - eps);
        const Eigen::VectorXd mid = interp_option_value(r, spec, g, tm - 0.1);
        for (Eigen::Index j = 0; j < g.n_paths(); ++j) {
            const double right_v = m == 3 ? spec.payoff(g.values(j, col)) : r.values(j, static_cast<Eigen::Index>(m));
            const double right_q =
                m == 3 ? spec.payoff(g.values(j, col)) : r.continuation(j, static_cast<Eigen::Index>(m));
            EXPECT_NEAR(v[j], right_v, 1e-6);
            EXPECT_NEAR(q[j], right_q, 1e-6);
            if (m < 3)
                EXPECT_NEAR(p[j], r.coeffs.evaluate(r.coeffs.per_date[m], g.values(j, g.column_of(tm - eps))), 1e-6);
            else
                EXPECT_NEAR(p[j], spec.payoff(g.values(j, col)), 1e-6);
            const double left_v = m == 0 ? r.t0_price : r.values(j, static_cast<Eigen::Index>(m) - 1);
            EXPECT_GE(mid[j], std::min(left_v, right_v) - 1e-15);
            EXPECT_LE(mid[j], std::max(left_v, right_v) + 1e-15);
        }
    }
}

TEST(TrueFit, ConstantNextValue) {
    const Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(50, 0.7, 1.3);
    const Eigen::VectorXd next = Eigen::VectorXd::Constant(50, 0.3);
    const TrueFitResult f = true_fit(s, next, 0.4, 0.5, 0.06, 1.0);
    EXPECT_NEAR(f.coeffs[0], 0.3 * std::exp(-0.006), 1e-10);
    for (int k = 1; k < 4; ++k) EXPECT_NEAR(f.coeffs[static_cast<std::size_t>(k)], 0.0, 1e-9);
    for (Eigen::Index j = 0; j < 50; ++j) EXPECT_NEAR(f.values[j], 0.3 * std::exp(-0.006), 1e-10);
}

TEST(TrueFit, MatchesNormalEquations) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.6, 1.4), noise(-0.05, 0.05);
    const int n = 40;
    Eigen::VectorXd s(n), next(n);
    oracle::Matrix x;
    std::vector<double> y;
    const double scale = 1.0 / 1.1, df = std::exp(-0.06 * 0.2);
    for (int j = 0; j < n; ++j) {
        s[j] = u(rng);
        next[j] = std::max(1.1 - s[j], 0.0) + noise(rng);
        const double z = s[j] * scale;
        x.push_back({1.0, z, z * z, z * z * z});
        y.push_back(df * next[j]);
    }
    const auto ref = oracle::least_squares(x, y);
    const TrueFitResult f = true_fit(s, next, 0.3, 0.5, 0.06, scale);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(f.coeffs[k], ref[k], 1e-8);
}

TEST(TrueFit, ExerciseDateReproducesLsmRegression) {
    const auto spec = BermudanSpec::equally_spaced(1.0, OptionSide::put, 1.0, 4);
    const PathGrid g = simulate_gbm(market, std::nullopt, spec.exercise_times, 3000, 21);
    const LsmResult r = fit_lsm(g, spec, market);
    for (std::size_t m = 0; m + 1 < 4; ++m) {
        const TrueFitResult f = true_fit(r, spec, g, spec.exercise_times[m], market.r);
        for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(f.coeffs[k], r.coeffs.per_date[m][k], 1e-10);
    }
    EXPECT_THROW(true_fit(r, spec, g, 1.0, market.r), std::invalid_argument);
}

TEST(TrueFit, RejectsMismatchedSizes) {
    EXPECT_THROW(true_fit(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(4), 0.1, 0.2, 0.06, 1.0),
                 std::invalid_argument);
    EXPECT_THROW(true_fit(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(3), 0.3, 0.2, 0.06, 1.0),
                 std::invalid_argument);
}
