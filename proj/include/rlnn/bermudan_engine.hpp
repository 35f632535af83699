#pragma once

// Backward induction with one static-hedge layer per exercise date. The
// continuation value at t_{m-1} is the Black-Scholes value of the portfolio
// fitted at t_m, so no regression is needed to move backwards in time.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rlnn/errors.hpp"
#include "rlnn/hedge_net.hpp"
#include "rlnn/market_model.hpp"

namespace rlnn {

struct BermudanSpec {
    double strike = 1.0;
    OptionSide side = OptionSide::put;
    std::vector<double> exercise_times;

    std::size_t n_dates() const noexcept { return exercise_times.size(); }
    double maturity() const { return exercise_times.back(); }

    void validate() const {
        detail::require(strike > 0.0 && std::isfinite(strike), "BermudanSpec: strike must be positive");
        detail::require(!exercise_times.empty(), "BermudanSpec: needs at least one exercise date");
        for (std::size_t m = 0; m < exercise_times.size(); ++m) {
            detail::require(exercise_times[m] > 0.0, "BermudanSpec: exercise times must be positive");
            if (m > 0)
                detail::require(exercise_times[m] > exercise_times[m - 1],
                                "BermudanSpec: exercise times must increase");
        }
    }

    double payoff(double spot) const noexcept { return exercise_payoff(side, spot, strike); }

    /// Start of the interval ending at exercise date m (t_0 = 0 for m = 0).
    double previous_time(std::size_t m) const noexcept { return m == 0 ? 0.0 : exercise_times[m - 1]; }

    /// M equally spaced dates ending at maturity.
    static BermudanSpec equally_spaced(double strike, OptionSide side, double maturity, int n_dates) {
        detail::require(n_dates >= 1, "BermudanSpec: n_dates must be >= 1");
        BermudanSpec spec{strike, side, {}};
        for (int m = 1; m <= n_dates; ++m) spec.exercise_times.push_back(maturity * m / n_dates);
        return spec;
    }
};

/// Per-path option and continuation values at the exercise dates. Column m
/// corresponds to exercise_times[m]; the continuation at maturity is zero.
struct ValueSurface {
    Eigen::MatrixXd values;
    Eigen::MatrixXd continuation;
    double t0_price = 0.0;
    double t0_continuation = 0.0;
};

/// Value at spot of the hedge portfolio expiring tau later.
inline double continuation_value(const HedgeLayer& layer, double spot, double r, double sigma, double tau) {
    detail::require(tau > 0.0, "continuation_value: tau must be positive");
    double v = 0.0;
    for (Eigen::Index i = 0; i < layer.size(); ++i) {
        const double w = layer.weights[i];
        if (w == 0.0) continue;
        const auto side = layer.cp[i] > 0 ? OptionSide::call : OptionSide::put;
        v += w * black_scholes(spot, layer.strikes[i], r, sigma, tau, side);
    }
    return v;
}

inline Eigen::VectorXd continuation_values(const HedgeLayer& layer, const Eigen::VectorXd& spots, double r,
                                           double sigma, double tau) {
    Eigen::VectorXd out(spots.size());
    for (Eigen::Index j = 0; j < spots.size(); ++j) out[j] = continuation_value(layer, spots[j], r, sigma, tau);
    return out;
}

struct RlnnResult {
    double t0_price = 0.0;
    std::vector<HedgeLayer> layers;  // layers[m] is fitted at exercise_times[m]
    std::vector<TrainingTrace> traces;
    std::optional<ValueSurface> surface;  // on the validation grid, when one was supplied
};

/// Option and continuation values implied by fitted layers on an arbitrary
/// path grid containing every exercise date.
inline ValueSurface rlnn_surface(const std::vector<HedgeLayer>& layers, const MarketParams& market,
                                 const BermudanSpec& spec, const PathGrid& paths, double t0_price) {
    spec.validate();
    detail::require(layers.size() == spec.n_dates(), "rlnn_surface: one layer per exercise date required");
    const auto n = paths.n_paths();
    const auto m_count = static_cast<Eigen::Index>(spec.n_dates());
    ValueSurface surface;
    surface.values.resize(n, m_count);
    surface.continuation.resize(n, m_count);
    surface.t0_price = t0_price;
    surface.t0_continuation = continuation_value(layers.front(), market.s0, market.r, market.sigma,
                                                 spec.exercise_times.front());
    for (Eigen::Index m = 0; m < m_count; ++m) {
        const auto col = paths.column_of(spec.exercise_times[m]);
        const bool last = m + 1 == m_count;
        const double tau = last ? 0.0 : spec.exercise_times[m + 1] - spec.exercise_times[m];
        for (Eigen::Index j = 0; j < n; ++j) {
            const double s = paths.values(j, col);
            const double q = last ? 0.0 : continuation_value(layers[m + 1], s, market.r, market.sigma, tau);
            surface.continuation(j, m) = q;
            surface.values(j, m) = std::max(spec.payoff(s), q);
        }
    }
    return surface;
}

/// Regress-later pricing with hedge layers.
///
/// Training paths are simulated at every exercise date from train_seed. At
/// maturity V = max(h, 0); moving backwards, a layer is fitted to (S_{t_m},
/// V_{t_m}) and the continuation at t_{m-1} is the Black-Scholes value of that
/// portfolio. The time-zero price is max(h(S_0), Q_{t_0}(S_0)). When a
/// validation grid is supplied, the per-path surface is evaluated on it.
inline RlnnResult price_rlnn(const MarketParams& market, const BermudanSpec& spec, const TrainingConfig& config,
                             Eigen::Index n_train, std::uint64_t train_seed,
                             const PathGrid* validation = nullptr) {
    market.validate();
    spec.validate();
    config.validate();
    detail::require(n_train >= 1, "price_rlnn: n_paths must be >= 1");

    const PathGrid train = simulate_gbm(market, std::nullopt, spec.exercise_times, n_train, train_seed);
    const auto m_count = static_cast<Eigen::Index>(spec.n_dates());

    RlnnResult out;
    out.layers.resize(spec.n_dates());
    out.traces.resize(spec.n_dates());

    TrainingBatch batch;
    batch.spots = train.values.col(m_count - 1);
    batch.targets = batch.spots.unaryExpr([&](double s) { return spec.payoff(s); });

    for (Eigen::Index m = m_count - 1; m >= 0; --m) {
        const auto fit_seed = derive_seed(train_seed, static_cast<std::uint64_t>(m) + 1);
        FitResult fit = fit_layer(batch, market.s0, config, fit_seed, spec.exercise_times[m]);
        out.layers[m] = std::move(fit.layer);
        out.traces[m] = std::move(fit.trace);

        const double tau = spec.exercise_times[m] - spec.previous_time(static_cast<std::size_t>(m));
        if (m == 0) {
            const double q0 = continuation_value(out.layers[0], market.s0, market.r, market.sigma, tau);
            out.t0_price = std::max(spec.payoff(market.s0), q0);
            break;
        }
        TrainingBatch prev;
        prev.spots = train.values.col(m - 1);
        prev.targets.resize(prev.spots.size());
        for (Eigen::Index j = 0; j < prev.spots.size(); ++j) {
            const double s = prev.spots[j];
            const double q = continuation_value(out.layers[m], s, market.r, market.sigma, tau);
            prev.targets[j] = std::max(spec.payoff(s), q);
        }
        batch = std::move(prev);
    }

    if (validation) out.surface = rlnn_surface(out.layers, market, spec, *validation, out.t0_price);
    return out;
}

/// Hedge-portfolio valuation at an arbitrary time t in (t_{m-1}, t_m): the
/// Black-Scholes value of layer m with tau = t_m - t. On an exercise date the
/// surface value max(h, Q) is returned, Q coming from the next layer.
inline Eigen::VectorXd value_at(const std::vector<HedgeLayer>& layers, const MarketParams& market,
                                const BermudanSpec& spec, double t, const Eigen::VectorXd& spots) {
    spec.validate();
    detail::require(layers.size() == spec.n_dates(), "value_at: one layer per exercise date required");
    detail::require(t > 0.0 && t <= spec.maturity() + 1e-12, "value_at: t outside (0, T]");
    detail::require((spots.array() > 0.0).all(), "value_at: spots must be positive");
    std::size_t m = 0;
    while (m + 1 < spec.n_dates() && spec.exercise_times[m] < t - 1e-12) ++m;
    const double tau = spec.exercise_times[m] - t;
    Eigen::VectorXd out(spots.size());
    const bool on_date = tau <= 1e-12;
    const bool last = m + 1 == spec.n_dates();
    for (Eigen::Index j = 0; j < spots.size(); ++j) {
        if (!on_date) {
            out[j] = continuation_value(layers[m], spots[j], market.r, market.sigma, tau);
            continue;
        }
        const double q = last ? 0.0
                              : continuation_value(layers[m + 1], spots[j], market.r, market.sigma,
                                                   spec.exercise_times[m + 1] - spec.exercise_times[m]);
        out[j] = std::max(spec.payoff(spots[j]), q);
    }
    return out;
}

}  // namespace rlnn
