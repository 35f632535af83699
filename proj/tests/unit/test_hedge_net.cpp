#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "../oracles/normal_equations.hpp"
#include "../oracles/relu_loss.hpp"
#include "rlnn/errors.hpp"
#include "rlnn/hedge_net.hpp"

using namespace rlnn;

namespace {

HedgeLayer make_layer(std::vector<double> strikes, std::vector<double> weights, std::vector<int> cp) {
    HedgeLayer l;
    l.strikes = Eigen::Map<Eigen::VectorXd>(strikes.data(), static_cast<Eigen::Index>(strikes.size()));
    l.weights = Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
    l.cp = Eigen::Map<Eigen::VectorXi>(cp.data(), static_cast<Eigen::Index>(cp.size()));
    return l;
}

TrainingBatch uniform_batch(Eigen::Index n, std::uint64_t seed, double lo = 0.7, double hi = 1.3) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    TrainingBatch b;
    b.spots.resize(n);
    b.targets.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) b.spots[j] = u(rng);
    return b;
}

TrainingBatch put_value_batch(Eigen::Index n, std::uint64_t seed) {
    const std::vector<double> t{0.25};
    const PathGrid g = simulate_gbm({}, std::nullopt, t, n, seed);
    TrainingBatch b;
    b.spots = g.values.col(0);
    b.targets = b.spots.unaryExpr([](double s) { return black_scholes(s, 1.0, 0.06, 0.2, 0.75, OptionSide::put); });
    return b;
}

}  // namespace

TEST(PayoffMatrix, ReluDefinition) {
    const Eigen::VectorXd spots = (Eigen::VectorXd(2) << 1.0, 1.3).finished();
    const HedgeLayer l = make_layer({1.0, 1.0, 1.1, 1.1}, {1, 1, 1, 1}, {1, -1, 1, -1});
    const Eigen::MatrixXd x = payoff_matrix(spots, l);
    EXPECT_EQ(x(0, 0), 0.0);
    EXPECT_EQ(x(0, 1), 0.0);
    EXPECT_NEAR(x(1, 2), 0.2, 1e-15);
    EXPECT_EQ(x(1, 3), 0.0);
}

TEST(PayoffMatrix, RowSumsWithUnitWeightsArePortfolioPayoff) {
    TrainingBatch b = uniform_batch(50, 1);
    const HedgeLayer l = make_layer({0.9, 1.0, 1.1, 0.95}, {1, 1, 1, 1}, {1, -1, 1, -1});
    const Eigen::VectorXd sums = payoff_matrix(b.spots, l).rowwise().sum();
    for (Eigen::Index j = 0; j < b.size(); ++j) EXPECT_NEAR(sums[j], network_value(b.spots[j], l), 1e-15);
}

TEST(NetworkValue, Examples) {
    EXPECT_EQ(network_value(1.7, make_layer({1.0, 1.2}, {0.0, 0.0}, {1, -1})), 0.0);
    EXPECT_DOUBLE_EQ(network_value(1.5, make_layer({1.0}, {2.0}, {1})), 1.0);
}

TEST(NetworkValue, MatchesPayoffRowDotWeights) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    TrainingBatch b = uniform_batch(40, 2);
    HedgeLayer l = make_layer({0.85, 0.95, 1.05, 1.15, 0.9, 1.1}, {0, 0, 0, 0, 0, 0}, {1, 1, 1, -1, -1, -1});
    for (Eigen::Index i = 0; i < l.size(); ++i) l.weights[i] = n(rng);
    const Eigen::VectorXd direct = payoff_matrix(b.spots, l) * l.weights;
    for (Eigen::Index j = 0; j < b.size(); ++j) EXPECT_NEAR(network_value(b.spots[j], l), direct[j], 1e-14);
}

TEST(InitStrikes, EquidistantWithEndpoints) {
    TrainingConfig c;
    c.p_call = 3;
    c.p_put = 0;
    auto [b, cp] = init_strikes(c, 1.0);
    ASSERT_EQ(b.size(), 3);
    EXPECT_NEAR(b[0], 0.9, 1e-15);
    EXPECT_NEAR(b[1], 1.0, 1e-15);
    EXPECT_NEAR(b[2], 1.1, 1e-15);
    EXPECT_TRUE((cp.array() == 1).all());

    std::tie(b, cp) = init_strikes(c, 2.0);
    EXPECT_NEAR(b[0], 1.8, 1e-15);
    EXPECT_NEAR(b[1], 2.0, 1e-15);
    EXPECT_NEAR(b[2], 2.2, 1e-15);
}

TEST(InitStrikes, SingleNodeAtMidpointAndCallsFirst) {
    TrainingConfig c;
    c.p_call = 1;
    c.p_put = 2;
    const auto [b, cp] = init_strikes(c, 1.0);
    ASSERT_EQ(b.size(), 3);
    EXPECT_NEAR(b[0], 1.0, 1e-15);
    EXPECT_EQ(cp[0], 1);
    EXPECT_NEAR(b[1], 0.9, 1e-15);
    EXPECT_NEAR(b[2], 1.1, 1e-15);
    EXPECT_EQ(cp[1], -1);
    EXPECT_EQ(cp[2], -1);
}

TEST(InitStrikes, EmptyNodeSetThrows) {
    TrainingConfig c;
    c.p_call = 0;
    c.p_put = 0;
    EXPECT_THROW(init_strikes(c, 1.0), std::invalid_argument);
}

TEST(OlsWeights, RecoversExactPortfolio) {
    TrainingBatch b = uniform_batch(200, 4);
    const HedgeLayer gen = make_layer({0.9, 1.05, 0.95, 1.12}, {0.7, -1.3, 2.1, 0.4}, {1, 1, -1, -1});
    for (Eigen::Index j = 0; j < b.size(); ++j) b.targets[j] = network_value(b.spots[j], gen);
    const Eigen::VectorXd w = ols_weights(b, gen.strikes, gen.cp);
    for (Eigen::Index i = 0; i < w.size(); ++i) EXPECT_NEAR(w[i], gen.weights[i], 1e-10);
}

TEST(OlsWeights, ZeroTargetsGiveZeroWeights) {
    TrainingBatch b = uniform_batch(100, 5);
    b.targets.setZero();
    const HedgeLayer l = make_layer({0.9, 1.0, 1.0, 1.1}, {0, 0, 0, 0}, {1, 1, -1, -1});
    EXPECT_EQ(ols_weights(b, l.strikes, l.cp).cwiseAbs().maxCoeff(), 0.0);
}

TEST(OlsWeights, RankDeficientDesignDoesNotThrow) {
    TrainingBatch b = uniform_batch(100, 6);
    for (Eigen::Index j = 0; j < b.size(); ++j) b.targets[j] = std::max(1.0 - b.spots[j], 0.0);
    const HedgeLayer l = make_layer({1.0, 1.0, 1.0}, {0, 0, 0}, {-1, -1, 1});
    const Eigen::VectorXd w = ols_weights(b, l.strikes, l.cp);
    EXPECT_TRUE(w.allFinite());
    EXPECT_NEAR(w[0], w[1], 1e-10);  // minimum norm splits duplicate columns evenly
    EXPECT_NEAR(w[0] + w[1], 1.0, 1e-10);
}

TEST(OlsWeights, MatchesNormalEquationsOracle) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (int trial = 0; trial < 20; ++trial) {
        TrainingBatch b = uniform_batch(300, 100 + trial);
        for (Eigen::Index j = 0; j < b.size(); ++j) b.targets[j] = std::max(1.0 - b.spots[j], 0.0) + noise(rng);
        const HedgeLayer l = make_layer({0.85, 1.0, 1.12, 0.9, 1.03, 1.15}, {0, 0, 0, 0, 0, 0}, {1, 1, 1, -1, -1, -1});
        const Eigen::VectorXd w = ols_weights(b, l.strikes, l.cp);
        const Eigen::MatrixXd x = payoff_matrix(b.spots, l);
        oracle::Matrix xm(static_cast<std::size_t>(x.rows()), std::vector<double>(static_cast<std::size_t>(x.cols())));
        for (Eigen::Index j = 0; j < x.rows(); ++j)
            for (Eigen::Index i = 0; i < x.cols(); ++i) xm[j][i] = x(j, i);
        const auto ref = oracle::least_squares(xm, std::vector<double>(b.targets.data(), b.targets.data() + b.size()));
        for (Eigen::Index i = 0; i < w.size(); ++i) EXPECT_NEAR(w[i], ref[i], 1e-8 * (1.0 + std::abs(ref[i])));
        // residual orthogonal to every column
        const Eigen::VectorXd resid = b.targets - x * w;
        const Eigen::VectorXd proj = x.transpose() * resid;
        EXPECT_LT(proj.cwiseAbs().maxCoeff(), 1e-8 * x.norm() * b.targets.norm());
    }
}

TEST(OlsWeightsProperty, NoPerturbationImprovesTheFit) {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> n(0.0, 1.0);
    TrainingBatch b = put_value_batch(2000, 12);
    const HedgeLayer l = make_layer({0.9, 1.0, 1.1, 0.9, 1.0, 1.1}, {0, 0, 0, 0, 0, 0}, {1, 1, 1, -1, -1, -1});
    HedgeLayer fitted = l;
    fitted.weights = ols_weights(b, l.strikes, l.cp);
    const double best = mean_loss(b, fitted);
    for (int k = 0; k < 100; ++k) {
        Eigen::VectorXd delta(l.size());
        for (Eigen::Index i = 0; i < delta.size(); ++i) delta[i] = n(rng);
        HedgeLayer moved = fitted;
        moved.weights += 1e-3 * delta.normalized();
        EXPECT_LE(best, mean_loss(b, moved));
    }
}

TEST(GradStrikes, ZeroResidualGivesZeroGradient) {
    TrainingBatch b = uniform_batch(100, 13);
    const HedgeLayer l = make_layer({0.9, 1.1}, {1.0, 2.0}, {1, -1});
    for (Eigen::Index j = 0; j < b.size(); ++j) b.targets[j] = network_value(b.spots[j], l);
    EXPECT_EQ(grad_strikes(b, l).cwiseAbs().maxCoeff(), 0.0);
}

TEST(GradStrikes, InactiveNodeHasZeroGradient) {
    TrainingBatch b;
    b.spots = Eigen::VectorXd::Constant(1, 0.9);
    b.targets = Eigen::VectorXd::Constant(1, 0.5);
    const HedgeLayer l = make_layer({1.0}, {1.0}, {1});
    EXPECT_EQ(grad_strikes(b, l)[0], 0.0);
}

TEST(GradStrikes, MatchesFiniteDifferenceOfProfiledLoss) {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> ks(0.85, 1.15);
    std::normal_distribution<double> noise(0.0, 0.02);
    const double h = 1e-6;
    int checked = 0;
    for (int trial = 0; checked < 20 && trial < 100; ++trial) {
        TrainingBatch b = uniform_batch(60, 200 + trial);
        for (Eigen::Index j = 0; j < b.size(); ++j) b.targets[j] = std::max(1.0 - b.spots[j], 0.0) + noise(rng);
        HedgeLayer l = make_layer({ks(rng), ks(rng), ks(rng), ks(rng)}, {0, 0, 0, 0}, {1, 1, -1, -1});
        bool near_kink = false;
        for (Eigen::Index j = 0; j < b.size(); ++j)
            for (Eigen::Index i = 0; i < l.size(); ++i) near_kink |= std::abs(b.spots[j] - l.strikes[i]) < 10 * h;
        if (near_kink) continue;
        l.weights = ols_weights(b, l.strikes, l.cp);
        const Eigen::VectorXd g = grad_strikes(b, l) / static_cast<double>(b.size());
        const std::vector<double> spots(b.spots.data(), b.spots.data() + b.size());
        const std::vector<double> targets(b.targets.data(), b.targets.data() + b.size());
        const std::vector<double> strikes(l.strikes.data(), l.strikes.data() + l.size());
        const std::vector<int> cp(l.cp.data(), l.cp.data() + l.size());
        const auto fd = oracle::profiled_loss_gradient_fd(spots, targets, strikes, cp, h);
        double scale = 0.0;
        for (double v : fd) scale = std::max(scale, std::abs(v));
        for (Eigen::Index i = 0; i < l.size(); ++i) EXPECT_LE(std::abs(g[i] - fd[i]) / scale, 1e-4);
        ++checked;
    }
    EXPECT_EQ(checked, 20);
}

TEST(AdamStep, ZeroGradientLeavesStrikesUnchanged) {
    const TrainingConfig c;
    const Eigen::VectorXd b = (Eigen::VectorXd(2) << 0.9, 1.1).finished();
    const auto [next, state] = adam_step(b, Eigen::VectorXd::Zero(2), AdamState::zeros(2), c);
    EXPECT_TRUE(next == b);
    EXPECT_EQ(state.step, 1);
}

TEST(AdamStep, MatchesHandSteppedReference) {
    const TrainingConfig c;
    const double g1 = 0.37, g2 = -0.11;
    // hand-stepped scalar Adam
    double b = 1.0, m = 0.0, v = 0.0;
    for (auto [step, g] : {std::pair{1, g1}, std::pair{2, g2}}) {
        m = 0.9 * m + 0.1 * g;
        v = 0.99 * v + 0.01 * g * g;
        const double mh = m / (1.0 - std::pow(0.9, step));
        const double vh = v / (1.0 - std::pow(0.99, step));
        b -= 0.001 * mh / (std::sqrt(vh) + 1e-8);
    }
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.0);
    AdamState s = AdamState::zeros(1);
    std::tie(x, s) = adam_step(x, Eigen::VectorXd::Constant(1, g1), s, c);
    EXPECT_NEAR(x[0], 1.0 - 0.001 * g1 / (std::abs(g1) + 1e-8), 1e-15);
    std::tie(x, s) = adam_step(x, Eigen::VectorXd::Constant(1, g2), s, c);
    EXPECT_NEAR(x[0], b, 1e-15);
    EXPECT_EQ(s.step, 2);
}

TEST(AdamStep, StrikeFlooredAfterUpdate) {
    const TrainingConfig c;
    const Eigen::VectorXd b = Eigen::VectorXd::Constant(1, 1e-4);
    const auto [next, _] = adam_step(b, Eigen::VectorXd::Constant(1, 5.0), AdamState::zeros(1), c);
    EXPECT_EQ(next[0], 1e-8);
}

TEST(FitLayer, ZeroEpochsReturnsInitialisedLayer) {
    TrainingBatch b = put_value_batch(5000, 15);
    TrainingConfig c;
    c.epochs = 0;
    const FitResult f = fit_layer(b, 1.0, c, 1);
    const auto [b0, cp0] = init_strikes(c, 1.0);
    EXPECT_TRUE(f.layer.strikes == b0);
    EXPECT_TRUE(f.layer.cp == cp0);
    EXPECT_EQ(f.trace.rows.size(), 1u);
    const Eigen::VectorXd w = ols_weights(b, b0, cp0);
    EXPECT_NEAR((payoff_matrix(b.spots, f.layer) * (f.layer.weights - w)).norm(), 0.0, 1e-9);
}

TEST(FitLayer, RecoversSyntheticPortfolio) {
    TrainingBatch b = uniform_batch(20000, 16, 0.75, 1.25);
    const HedgeLayer gen = make_layer({0.95, 1.06, 0.93, 1.04}, {0.8, 1.5, 1.2, 0.6}, {1, 1, -1, -1});
    for (Eigen::Index j = 0; j < b.size(); ++j) b.targets[j] = network_value(b.spots[j], gen);
    TrainingConfig c;
    c.p_call = 2;
    c.p_put = 2;
    c.epochs = 60;
    c.stop_tol = 0.0;
    const FitResult f = fit_layer(b, 1.0, c, 17);
    TrainingBatch held = uniform_batch(5000, 18, 0.75, 1.25);
    double sse = 0.0;
    for (Eigen::Index j = 0; j < held.size(); ++j) {
        const double e = network_value(held.spots[j], f.layer) - network_value(held.spots[j], gen);
        sse += e * e;
    }
    EXPECT_LE(std::sqrt(sse / held.size()), 1e-4);
}

TEST(FitLayer, NanTargetsAbort) {
    TrainingBatch b = put_value_batch(100, 19);
    b.targets[3] = std::nan("");
    EXPECT_THROW(fit_layer(b, 1.0, TrainingConfig{}, 1), NumericalError);
}

TEST(FitLayer, TraceCsvSchema) {
    TrainingBatch b = put_value_batch(2000, 20);
    TrainingConfig c;
    c.epochs = 2;
    const FitResult f = fit_layer(b, 1.0, c, 2);
    std::ostringstream os;
    f.trace.write_csv(os);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "epoch,iteration,loss,wall_ms");
}

TEST(FitLayerProperty, StrikesStayAboveFloorAndRunsAreDeterministic) {
    TrainingBatch b = put_value_batch(4000, 21);
    TrainingConfig c;
    c.epochs = 5;
    c.lr = 0.05;  // aggressive steps push put strikes towards zero
    c.strike_floor = 1e-8;
    const FitResult a = fit_layer(b, 1.0, c, 33);
    const FitResult d = fit_layer(b, 1.0, c, 33);
    EXPECT_TRUE((a.layer.strikes.array() >= 1e-8).all());
    EXPECT_TRUE(a.layer.strikes == d.layer.strikes);
    EXPECT_TRUE(a.layer.weights == d.layer.weights);
}

TEST(FitLayerProperty, OlsStepNeverIncreasesLossAtFixedStrikes) {
    TrainingBatch b = put_value_batch(3000, 22);
    TrainingConfig c;
    auto [strikes, cp] = init_strikes(c, 1.0);
    HedgeLayer l;
    l.strikes = strikes;
    l.cp = cp;
    l.weights = ols_weights(b, strikes, cp);
    AdamState s = AdamState::zeros(l.size());
    for (int it = 0; it < 50; ++it) {
        std::tie(l.strikes, s) = adam_step(l.strikes, grad_strikes(b, l), s, c);
        const double stale = mean_loss(b, l);
        l.weights = ols_weights(b, l.strikes, l.cp);
        EXPECT_LE(mean_loss(b, l), stale * (1.0 + 1e-12));
    }
}

TEST(FitLayerProperty, HybridReachesLossThresholdNoLaterThanJoint) {
    TrainingBatch b = put_value_batch(20000, 23);
    TrainingConfig c;
    c.epochs = 15;
    c.stop_tol = 0.0;
    c.mode = TrainingMode::hybrid;
    const FitResult h = fit_layer(b, 1.0, c, 5);
    c.mode = TrainingMode::joint_adam;
    const FitResult j = fit_layer(b, 1.0, c, 5);
    const double threshold = j.trace.rows.back().loss;
    auto first_epoch = [&](const TrainingTrace& t) {
        for (const auto& r : t.rows)
            if (r.loss <= threshold) return r.epoch;
        return 1000;
    };
    EXPECT_LE(first_epoch(h.trace), first_epoch(j.trace));
}
