#pragma once

// Geometric Brownian motion scenarios, discounting and the Black-Scholes
// pricer used to value hedge-portfolio constituents.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rlnn/errors.hpp"

namespace rlnn {

enum class OptionSide { call, put };

/// +1 for a call, -1 for a put.
constexpr int side_sign(OptionSide side) noexcept { return side == OptionSide::call ? 1 : -1; }

constexpr std::string_view to_string(OptionSide side) noexcept {
    return side == OptionSide::call ? "call" : "put";
}

/// Signed immediate-exercise value h(S): S-K for a call, K-S for a put.
constexpr double intrinsic(OptionSide side, double spot, double strike) noexcept {
    return side == OptionSide::call ? spot - strike : strike - spot;
}

/// What the holder receives on exercise, max(h, 0).
constexpr double exercise_payoff(OptionSide side, double spot, double strike) noexcept {
    return std::max(intrinsic(side, spot, strike), 0.0);
}

enum class Measure { risk_neutral, real_world };

constexpr std::string_view to_string(Measure m) noexcept {
    return m == Measure::risk_neutral ? "risk_neutral" : "real_world";
}

struct MarketParams {
    double s0 = 1.0;
    double r = 0.06;
    double sigma = 0.2;

    void validate() const {
        detail::require(s0 > 0.0 && std::isfinite(s0), "MarketParams: s0 must be positive");
        detail::require(sigma >= 0.0 && std::isfinite(sigma), "MarketParams: sigma must be >= 0");
        detail::require(std::isfinite(r), "MarketParams: r must be finite");
    }
};

/// Drift and volatility used for scenario generation under the real-world measure.
struct RealWorldParams {
    double mu = 0.0;
    double sigma_real = 0.0;

    void validate() const {
        detail::require(std::isfinite(mu), "RealWorldParams: mu must be finite");
        detail::require(sigma_real >= 0.0 && std::isfinite(sigma_real),
                        "RealWorldParams: sigma_real must be >= 0");
    }
};

/// Simulated spot levels, one row per path and one column per horizon.
struct PathGrid {
    std::vector<double> times;
    Eigen::MatrixXd values;
    Measure measure = Measure::risk_neutral;
    std::uint64_t seed = 0;

    Eigen::Index n_paths() const noexcept { return values.rows(); }
    Eigen::Index n_times() const noexcept { return values.cols(); }

    /// Column holding horizon t; throws if t is not on the grid.
    Eigen::Index column_of(double t, double tol = 1e-12) const {
        for (std::size_t k = 0; k < times.size(); ++k)
            if (std::abs(times[k] - t) <= tol) return static_cast<Eigen::Index>(k);
        throw std::invalid_argument("PathGrid: horizon not on grid");
    }

    bool has_time(double t, double tol = 1e-12) const noexcept {
        return std::any_of(times.begin(), times.end(),
                           [&](double x) { return std::abs(x - t) <= tol; });
    }
};

/// SplitMix64 finaliser. Used to derive independent substream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix_seed(seed ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Box-Muller standard normals over mt19937_64. The uniform mapping is spelled
/// out so the stream does not depend on the standard library's distributions.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1], u2 in [0, 1)
        const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    std::uint64_t next_index(std::uint64_t n) { return engine_() % n; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Exact-transition GBM paths. Drift is r - sigma^2/2 unless real-world
/// parameters are supplied, in which case mu - sigma_real^2/2 with sigma_real
/// diffusion is used. Each path consumes its own contiguous block of normals.
inline PathGrid simulate_gbm(const MarketParams& params, const std::optional<RealWorldParams>& rw,
                             std::span<const double> times, Eigen::Index n_paths,
                             std::uint64_t seed) {
    params.validate();
    if (rw) rw->validate();
    detail::require(n_paths >= 1, "simulate_gbm: n_paths must be >= 1");
    detail::require(!times.empty(), "simulate_gbm: empty horizon set");
    for (std::size_t k = 0; k < times.size(); ++k) {
        detail::require(times[k] > 0.0, "simulate_gbm: horizons must be positive");
        if (k > 0) detail::require(times[k] > times[k - 1], "simulate_gbm: horizons must increase");
    }

    const double vol = rw ? rw->sigma_real : params.sigma;
    const double drift = (rw ? rw->mu : params.r) - 0.5 * vol * vol;
    const auto n_times = static_cast<Eigen::Index>(times.size());

    std::vector<double> drift_step(times.size());
    std::vector<double> vol_step(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double dt = times[k] - (k == 0 ? 0.0 : times[k - 1]);
        drift_step[k] = drift * dt;
        vol_step[k] = vol * std::sqrt(dt);
    }

    PathGrid grid;
    grid.times.assign(times.begin(), times.end());
    grid.values.resize(n_paths, n_times);
    grid.measure = rw ? Measure::real_world : Measure::risk_neutral;
    grid.seed = seed;

    NormalStream normals(seed);
    for (Eigen::Index j = 0; j < n_paths; ++j) {
        double log_return = 0.0;
        for (Eigen::Index k = 0; k < n_times; ++k) {
            const double z = normals.next();
            log_return += drift_step[k] + vol_step[k] * z;
            grid.values(j, k) = params.s0 * std::exp(log_return);
        }
    }
    return grid;
}

/// Reciprocal of the savings account, exp(-r t).
inline double discount(double r, double t) {
    detail::require(t >= 0.0, "discount: negative horizon");
    return std::exp(-r * t);
}

inline double norm_cdf(double x) noexcept { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

/// Black-Scholes value without dividends. At tau = 0 or sigma = 0 the
/// deterministic discounted intrinsic limit is returned.
inline double black_scholes(double spot, double strike, double r, double sigma, double tau,
                            OptionSide side) {
    detail::require(spot > 0.0, "black_scholes: spot must be positive");
    detail::require(strike > 0.0, "black_scholes: strike must be positive");
    detail::require(tau >= 0.0, "black_scholes: tau must be >= 0");
    detail::require(sigma >= 0.0, "black_scholes: sigma must be >= 0");

    const double df = std::exp(-r * tau);
    const double sd = sigma * std::sqrt(tau);
    if (sd <= 0.0) return std::max(intrinsic(side, spot, strike * df), 0.0);

    const double d1 = (std::log(spot / strike) + r * tau) / sd + 0.5 * sd;
    const double d2 = d1 - sd;
    if (side == OptionSide::call) return spot * norm_cdf(d1) - strike * df * norm_cdf(d2);
    return strike * df * norm_cdf(-d2) - spot * norm_cdf(-d1);
}

}  // namespace rlnn
