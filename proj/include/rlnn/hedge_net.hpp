#pragma once

// Shallow ReLU network read as a static hedge: hidden node i is a vanilla
// option with strike b_i (call when cp_i = +1, put when cp_i = -1) and the
// output weights are the portfolio holdings.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rlnn/detail/sorted_design.hpp"
#include "rlnn/errors.hpp"
#include "rlnn/market_model.hpp"

namespace rlnn {

struct HedgeLayer {
    Eigen::VectorXd strikes;
    Eigen::VectorXd weights;
    Eigen::VectorXi cp;
    double exercise_time = 0.0;

    Eigen::Index size() const noexcept { return strikes.size(); }

    void validate(double strike_floor = 1e-8) const {
        detail::require(strikes.size() >= 1, "HedgeLayer: needs at least one node");
        detail::require(weights.size() == strikes.size() && cp.size() == strikes.size(),
                        "HedgeLayer: strikes, weights and cp must have equal length");
        for (Eigen::Index i = 0; i < strikes.size(); ++i) {
            detail::require(strikes[i] >= strike_floor, "HedgeLayer: strike below floor");
            detail::require(cp[i] == 1 || cp[i] == -1, "HedgeLayer: cp entries must be +1 or -1");
        }
    }
};

enum class TrainingMode { hybrid, joint_adam };

struct TrainingConfig {
    int p_call = 8;
    int p_put = 8;
    double moneyness_lo = 0.90;
    double moneyness_hi = 1.10;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-8;
    int epochs = 30;
    int batch_size = 512;
    /// 0 means one pass over the training set: ceil(N / batch_size).
    int batches_per_epoch = 0;
    double strike_floor = 1e-8;
    double stop_tol = 1e-8;
    int stop_patience = 10;
    TrainingMode mode = TrainingMode::hybrid;

    void validate() const {
        detail::require(p_call >= 0 && p_put >= 0 && p_call + p_put >= 1,
                        "TrainingConfig: need at least one hidden node");
        detail::require(moneyness_lo > 0.0 && moneyness_lo < moneyness_hi,
                        "TrainingConfig: require 0 < moneyness_lo < moneyness_hi");
        detail::require(lr > 0.0, "TrainingConfig: lr must be positive");
        detail::require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
                        "TrainingConfig: Adam betas must lie in [0, 1)");
        detail::require(eps > 0.0, "TrainingConfig: eps must be positive");
        detail::require(epochs >= 0, "TrainingConfig: epochs must be >= 0");
        detail::require(batch_size >= 1, "TrainingConfig: batch_size must be >= 1");
        detail::require(batches_per_epoch >= 0, "TrainingConfig: batches_per_epoch must be >= 0");
        detail::require(strike_floor > 0.0, "TrainingConfig: strike_floor must be positive");
        detail::require(stop_patience >= 1, "TrainingConfig: stop_patience must be >= 1");
    }
};

struct AdamState {
    Eigen::VectorXd eta;
    Eigen::VectorXd nu;
    long step = 0;

    static AdamState zeros(Eigen::Index p) {
        return {Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p), 0};
    }
};

struct TrainingBatch {
    Eigen::VectorXd spots;
    Eigen::VectorXd targets;

    Eigen::Index size() const noexcept { return spots.size(); }

    void validate() const {
        detail::require(spots.size() == targets.size(), "TrainingBatch: length mismatch");
        detail::require(spots.size() >= 1, "TrainingBatch: empty batch");
        detail::require((spots.array() > 0.0).all(), "TrainingBatch: spots must be positive");
    }
};

struct TrainingTrace {
    struct Row {
        int epoch = 0;
        long iteration = 0;
        double loss = 0.0;
        double wall_ms = 0.0;
    };
    std::vector<Row> rows;
    bool stopped_early = false;

    void write_csv(std::ostream& os) const {
        os << "epoch,iteration,loss,wall_ms\n";
        os.precision(17);
        for (const auto& row : rows)
            os << row.epoch << ',' << row.iteration << ',' << row.loss << ',' << row.wall_ms << '\n';
    }
};

struct FitResult {
    HedgeLayer layer;
    TrainingTrace trace;
};

inline double node_payoff(double spot, double strike, int cp) noexcept {
    return std::max(cp * (spot - strike), 0.0);
}

/// X(b): entry (j, i) = max(cp_i (spot_j - b_i), 0).
inline Eigen::MatrixXd payoff_matrix(const Eigen::VectorXd& spots, const Eigen::VectorXd& strikes,
                                     const Eigen::VectorXi& cp) {
    Eigen::MatrixXd x(spots.size(), strikes.size());
    for (Eigen::Index i = 0; i < strikes.size(); ++i)
        for (Eigen::Index j = 0; j < spots.size(); ++j) x(j, i) = node_payoff(spots[j], strikes[i], cp[i]);
    return x;
}

inline Eigen::MatrixXd payoff_matrix(const Eigen::VectorXd& spots, const HedgeLayer& layer) {
    return payoff_matrix(spots, layer.strikes, layer.cp);
}

/// Portfolio payoff W' phi(spot, b).
inline double network_value(double spot, const HedgeLayer& layer) noexcept {
    double v = 0.0;
    for (Eigen::Index i = 0; i < layer.size(); ++i)
        v += layer.weights[i] * node_payoff(spot, layer.strikes[i], layer.cp[i]);
    return v;
}

/// Equidistant call strikes then equidistant put strikes on
/// [moneyness_lo * s0, moneyness_hi * s0], endpoints included. A single node
/// sits at the band midpoint.
inline std::pair<Eigen::VectorXd, Eigen::VectorXi> init_strikes(const TrainingConfig& config, double s0) {
    detail::require(config.p_call >= 0 && config.p_put >= 0 && config.p_call + config.p_put >= 1,
                    "init_strikes: empty node set");
    detail::require(s0 > 0.0, "init_strikes: s0 must be positive");
    const Eigen::Index p = config.p_call + config.p_put;
    Eigen::VectorXd strikes(p);
    Eigen::VectorXi cp(p);
    const double lo = config.moneyness_lo * s0;
    const double hi = config.moneyness_hi * s0;
    auto fill = [&](Eigen::Index offset, int count, int sign) {
        for (int k = 0; k < count; ++k) {
            strikes[offset + k] = count == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (count - 1);
            cp[offset + k] = sign;
        }
    };
    fill(0, config.p_call, +1);
    fill(config.p_call, config.p_put, -1);
    return {strikes, cp};
}

/// Least-squares portfolio weights without intercept. Rank-deficient designs
/// get the minimum-norm solution.
inline Eigen::VectorXd ols_weights(const TrainingBatch& batch, const Eigen::VectorXd& strikes,
                                   const Eigen::VectorXi& cp) {
    batch.validate();
    const Eigen::MatrixXd x = payoff_matrix(batch.spots, strikes, cp);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x);
    return cod.solve(batch.targets);
}

/// (1/2N) ||Y - X(b) W||^2
inline double mean_loss(const TrainingBatch& batch, const HedgeLayer& layer) {
    long double sse = 0.0L;
    for (Eigen::Index j = 0; j < batch.size(); ++j) {
        const long double r = batch.targets[j] - network_value(batch.spots[j], layer);
        sse += r * r;
    }
    return static_cast<double>(sse / (2.0L * static_cast<long double>(batch.size())));
}

/// Batch-summed gradient of the strike-only loss L*(b) with the weights held at
/// their least-squares optimum (envelope form). Per path and node:
/// dL/db_i = r_j * w_i * cp_i * 1{cp_i (S_j - b_i) > 0}, with r_j = Y_j - G(S_j).
inline Eigen::VectorXd grad_strikes(const TrainingBatch& batch, const HedgeLayer& layer) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(layer.size());
    for (Eigen::Index j = 0; j < batch.size(); ++j) {
        const double s = batch.spots[j];
        const double r = batch.targets[j] - network_value(s, layer);
        for (Eigen::Index i = 0; i < layer.size(); ++i)
            if (layer.cp[i] * (s - layer.strikes[i]) > 0.0) g[i] += r * layer.weights[i] * layer.cp[i];
    }
    return g;
}

namespace detail {

inline void adam_update(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state,
                        const TrainingConfig& config) {
    state.eta = config.beta1 * state.eta + (1.0 - config.beta1) * grad;
    state.nu = config.beta2 * state.nu + (1.0 - config.beta2) * grad.cwiseAbs2();
    ++state.step;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        const double eta_hat = state.eta[i] / c1;
        const double nu_hat = state.nu[i] / c2;
        params[i] -= eta_hat * config.lr / (std::sqrt(nu_hat) + config.eps);
    }
}

}  // namespace detail

/// One Adam step on the strikes followed by flooring at config.strike_floor.
inline std::pair<Eigen::VectorXd, AdamState> adam_step(const Eigen::VectorXd& strikes,
                                                       const Eigen::VectorXd& gradient,
                                                       const AdamState& state,
                                                       const TrainingConfig& config) {
    detail::require(gradient.size() == strikes.size() && state.eta.size() == strikes.size() &&
                        state.nu.size() == strikes.size(),
                    "adam_step: size mismatch");
    Eigen::VectorXd next = strikes;
    AdamState next_state = state;
    detail::adam_update(next, gradient, next_state, config);
    next = next.cwiseMax(config.strike_floor);
    return {std::move(next), std::move(next_state)};
}

/// Trains one hedge layer on (S_t, V_t) pairs.
///
/// hybrid: strikes start equidistant in the moneyness band and W is the
/// least-squares fit on the full set. Each iteration draws a batch with
/// replacement, takes an Adam step on the strikes along the envelope gradient,
/// then re-solves W by least squares on the full set.
///
/// joint_adam: same architecture and initial point, but W and b are both moved
/// by Adam along the batch gradient of L; W is never re-solved.
///
/// Training stops after config.epochs epochs or once the full-set loss changes
/// by less than stop_tol for stop_patience consecutive iterations.
inline FitResult fit_layer(const TrainingBatch& training, double s0, const TrainingConfig& config,
                           std::uint64_t seed, double exercise_time = 0.0) {
    training.validate();
    config.validate();
    using clock = std::chrono::steady_clock;
    const auto started = clock::now();
    auto elapsed_ms = [&] {
        return std::chrono::duration<double, std::milli>(clock::now() - started).count();
    };

    const detail::SortedDesign design(training.spots, training.targets);
    const Eigen::Index n = training.size();

    FitResult out;
    HedgeLayer& layer = out.layer;
    layer.exercise_time = exercise_time;
    std::tie(layer.strikes, layer.cp) = init_strikes(config, s0);
    layer.strikes = layer.strikes.cwiseMax(config.strike_floor);

    Eigen::MatrixXd gram = design.gram(layer.strikes, layer.cp);
    Eigen::VectorXd cross = design.cross(layer.strikes, layer.cp);
    layer.weights = detail::solve_gram_pinv(gram, cross);
    double loss = design.loss(gram, cross, layer.weights);
    out.trace.rows.push_back({0, 0, loss, elapsed_ms()});
    if (!std::isfinite(loss)) throw NumericalError("fit_layer: non-finite initial loss");
    if (config.epochs == 0) return out;

    const long per_epoch = config.batches_per_epoch > 0
                               ? config.batches_per_epoch
                               : static_cast<long>((n + config.batch_size - 1) / config.batch_size);
    const Eigen::Index p = layer.size();
    AdamState strike_state = AdamState::zeros(p);
    AdamState weight_state = AdamState::zeros(p);
    NormalStream rng(seed);

    Eigen::VectorXd g_b(p), g_w(p), phi(p);
    long iteration = 0;
    int streak = 0;
    for (int epoch = 1; epoch <= config.epochs && !out.trace.stopped_early; ++epoch) {
        for (long it = 0; it < per_epoch; ++it) {
            g_b.setZero();
            g_w.setZero();
            for (int k = 0; k < config.batch_size; ++k) {
                const auto j = static_cast<Eigen::Index>(rng.next_index(static_cast<std::uint64_t>(n)));
                const double s = training.spots[j];
                double pred = 0.0;
                for (Eigen::Index i = 0; i < p; ++i) {
                    phi[i] = node_payoff(s, layer.strikes[i], layer.cp[i]);
                    pred += layer.weights[i] * phi[i];
                }
                const double r = training.targets[j] - pred;
                for (Eigen::Index i = 0; i < p; ++i) {
                    if (phi[i] > 0.0) g_b[i] += r * layer.weights[i] * layer.cp[i];
                    g_w[i] -= r * phi[i];
                }
            }

            detail::adam_update(layer.strikes, g_b, strike_state, config);
            layer.strikes = layer.strikes.cwiseMax(config.strike_floor);
            if (config.mode == TrainingMode::joint_adam)
                detail::adam_update(layer.weights, g_w, weight_state, config);

            gram = design.gram(layer.strikes, layer.cp);
            cross = design.cross(layer.strikes, layer.cp);
            if (config.mode == TrainingMode::hybrid) layer.weights = detail::solve_gram_pinv(gram, cross);
            const double next_loss = design.loss(gram, cross, layer.weights);
            ++iteration;
            if (!std::isfinite(next_loss) || !layer.weights.allFinite())
                throw NumericalError("fit_layer: non-finite loss at iteration " + std::to_string(iteration));

            streak = std::abs(next_loss - loss) < config.stop_tol ? streak + 1 : 0;
            loss = next_loss;
            if (streak >= config.stop_patience) {
                out.trace.stopped_early = true;
                break;
            }
        }
        out.trace.rows.push_back({epoch, iteration, loss, elapsed_ms()});
    }
    return out;
}

}  // namespace rlnn
