#pragma once

// Longstaff-Schwartz with a cubic basis, plus the interpolation schemes used
// to produce values between exercise dates.

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "rlnn/bermudan_engine.hpp"
#include "rlnn/errors.hpp"
#include "rlnn/market_model.hpp"

namespace rlnn {

/// Cubic continuation polynomials, one per exercise date. Coefficients act on
/// the scaled spot x = S * scale (scale = 1/K) for conditioning. Entry m is
/// empty for the last date, which has no continuation.
struct CubicCoeffs {
    std::vector<std::array<double, 4>> per_date;
    double scale = 1.0;

    double evaluate(const std::array<double, 4>& c, double spot) const noexcept {
        const double x = spot * scale;
        return c[0] + x * (c[1] + x * (c[2] + x * c[3]));
    }
};

struct LsmResult {
    double t0_price = 0.0;
    CubicCoeffs coeffs;
    Eigen::MatrixXd values;
    Eigen::MatrixXd continuation;
};

struct LsmOptions {
    /// Regress realised discounted cash flows on in-the-money paths only, the
    /// textbook variant. Off by default: all paths, value-function targets.
    bool classical = false;
};

namespace detail {

inline Eigen::MatrixXd cubic_design(const Eigen::VectorXd& spots, double scale) {
    Eigen::MatrixXd x(spots.size(), 4);
    for (Eigen::Index j = 0; j < spots.size(); ++j) {
        const double s = spots[j] * scale;
        x(j, 0) = 1.0;
        x(j, 1) = s;
        x(j, 2) = s * s;
        x(j, 3) = s * s * s;
    }
    return x;
}

/// Least squares with minimum-norm fallback for degenerate designs.
inline std::array<double, 4> fit_cubic(const Eigen::VectorXd& spots, const Eigen::VectorXd& targets,
                                       double scale) {
    const Eigen::MatrixXd x = cubic_design(spots, scale);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x);
    const Eigen::VectorXd c = cod.solve(targets);
    if (!c.allFinite()) throw NumericalError("fit_cubic: non-finite coefficients");
    return {c[0], c[1], c[2], c[3]};
}

inline std::vector<Eigen::Index> exercise_columns(const PathGrid& paths, const BermudanSpec& spec) {
    std::vector<Eigen::Index> cols;
    for (double t : spec.exercise_times) cols.push_back(paths.column_of(t));
    return cols;
}

}  // namespace detail

/// Backward recursion: at each t_{m-1}, regress exp(-r dt) V_{t_m} on
/// {1, S, S^2, S^3} over all paths, set Q = zeta(C, S) and V = max(h, Q).
/// The time-zero price is max(h(S_0), mean of discounted V_{t_1}).
inline LsmResult fit_lsm(const PathGrid& paths, const BermudanSpec& spec, const MarketParams& market,
                         const LsmOptions& options = {}) {
    spec.validate();
    market.validate();
    const auto cols = detail::exercise_columns(paths, spec);
    const auto n = paths.n_paths();
    const auto m_count = static_cast<Eigen::Index>(spec.n_dates());

    LsmResult out;
    out.coeffs.scale = 1.0 / spec.strike;
    out.coeffs.per_date.assign(spec.n_dates(), {0.0, 0.0, 0.0, 0.0});
    out.values.resize(n, m_count);
    out.continuation.resize(n, m_count);

    for (Eigen::Index j = 0; j < n; ++j) {
        out.values(j, m_count - 1) = spec.payoff(paths.values(j, cols.back()));
        out.continuation(j, m_count - 1) = 0.0;
    }
    // Realised discounted cash flow (as of the current date) for the classical variant.
    Eigen::VectorXd cashflow = out.values.col(m_count - 1);

    for (Eigen::Index m = m_count - 1; m >= 1; --m) {
        const double df = std::exp(-market.r * (spec.exercise_times[m] - spec.exercise_times[m - 1]));
        const Eigen::VectorXd spots = paths.values.col(cols[m - 1]);
        std::array<double, 4> c{};
        if (options.classical) {
            cashflow *= df;
            std::vector<Eigen::Index> itm;
            for (Eigen::Index j = 0; j < n; ++j)
                if (intrinsic(spec.side, spots[j], spec.strike) > 0.0) itm.push_back(j);
            Eigen::VectorXd xs(static_cast<Eigen::Index>(itm.size())), ys(xs.size());
            for (std::size_t k = 0; k < itm.size(); ++k) {
                xs[static_cast<Eigen::Index>(k)] = spots[itm[k]];
                ys[static_cast<Eigen::Index>(k)] = cashflow[itm[k]];
            }
            if (xs.size() > 0) c = detail::fit_cubic(xs, ys, out.coeffs.scale);
        } else {
            const Eigen::VectorXd target = df * out.values.col(m);
            c = detail::fit_cubic(spots, target, out.coeffs.scale);
        }
        out.coeffs.per_date[static_cast<std::size_t>(m - 1)] = c;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double q = out.coeffs.evaluate(c, spots[j]);
            const double h = spec.payoff(spots[j]);
            out.continuation(j, m - 1) = q;
            out.values(j, m - 1) = std::max(h, q);
            if (options.classical && h > q && h > 0.0) cashflow[j] = h;
        }
    }

    const double df1 = std::exp(-market.r * spec.exercise_times.front());
    const Eigen::VectorXd first = options.classical ? Eigen::VectorXd(cashflow) : Eigen::VectorXd(out.values.col(0));
    out.t0_price = std::max(spec.payoff(market.s0), df1 * first.mean());
    return out;
}

/// Evaluates fitted LSM polynomials on another path set (e.g. validation paths).
inline LsmResult apply_lsm(const LsmResult& fitted, const PathGrid& paths, const BermudanSpec& spec) {
    spec.validate();
    const auto cols = detail::exercise_columns(paths, spec);
    const auto n = paths.n_paths();
    const auto m_count = static_cast<Eigen::Index>(spec.n_dates());
    LsmResult out;
    out.t0_price = fitted.t0_price;
    out.coeffs = fitted.coeffs;
    out.values.resize(n, m_count);
    out.continuation.resize(n, m_count);
    for (Eigen::Index m = 0; m < m_count; ++m) {
        const bool last = m + 1 == m_count;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double s = paths.values(j, cols[m]);
            const double q = last ? 0.0 : out.coeffs.evaluate(out.coeffs.per_date[m], s);
            out.continuation(j, m) = q;
            out.values(j, m) = std::max(spec.payoff(s), q);
        }
    }
    return out;
}

inline ValueSurface to_surface(const LsmResult& lsm) {
    return {lsm.values, lsm.continuation, lsm.t0_price, lsm.t0_price};
}

namespace detail {

struct Bracket {
    std::size_t m;  // interval (t_{m-1}, t_m) with exercise index m (t_{-1} := 0)
    double weight;  // (t - t_{m-1}) / (t_m - t_{m-1})
};

inline Bracket bracket_strict(const BermudanSpec& spec, double t) {
    for (std::size_t m = 0; m < spec.n_dates(); ++m) {
        const double lo = spec.previous_time(m);
        const double hi = spec.exercise_times[m];
        if (t > lo && t < hi) return {m, (t - lo) / (hi - lo)};
    }
    throw std::invalid_argument("interpolation: t must lie strictly between exercise dates");
}

template <class EndpointFn>
Eigen::VectorXd interpolate_linear(const LsmResult& result, const BermudanSpec& spec, const PathGrid& paths,
                                   double t, EndpointFn interior) {
    detail::require(result.values.rows() == paths.n_paths(), "interpolation: path count mismatch");
    const auto [m, w] = bracket_strict(spec, t);
    const auto cols = exercise_columns(paths, spec);
    const auto last = spec.n_dates() - 1;
    Eigen::VectorXd out(paths.n_paths());
    for (Eigen::Index j = 0; j < paths.n_paths(); ++j) {
        const double left = m == 0 ? result.t0_price : interior(j, m - 1);
        const double right = m == last ? spec.payoff(paths.values(j, cols[last])) : interior(j, m);
        out[j] = left + (right - left) * w;
    }
    return out;
}

}  // namespace detail

/// Per-path linear interpolation in time of V between the bracketing exercise
/// dates, with V_{t_0} = t0_price and V_{t_M} = max(h(S_{t_M}), 0).
inline Eigen::VectorXd interp_option_value(const LsmResult& result, const BermudanSpec& spec,
                                           const PathGrid& paths, double t) {
    return detail::interpolate_linear(result, spec, paths, t, [&](Eigen::Index j, std::size_t m) {
        return result.values(j, static_cast<Eigen::Index>(m));
    });
}

/// As interp_option_value but on Q, with Q_{t_0} = t0_price and
/// Q_{t_M} = max(h(S_{t_M}), 0).
inline Eigen::VectorXd interp_continuation_value(const LsmResult& result, const BermudanSpec& spec,
                                                 const PathGrid& paths, double t) {
    return detail::interpolate_linear(result, spec, paths, t, [&](Eigen::Index j, std::size_t m) {
        return result.continuation(j, static_cast<Eigen::Index>(m));
    });
}

/// How the maturity endpoint enters parameter interpolation on the last interval.
enum class ParamsBoundary {
    /// Blend with the path's realised value max(h(S_{t_M}), 0).
    value_blend,
    /// Blend with the exercise value evaluated at the intermediate spot S_t.
    intermediate_spot,
};

/// Componentwise linear interpolation of the cubic coefficients, evaluated at
/// the intermediate spot. The first interval blends the time-zero price (a
/// constant polynomial) with zeta(C(t_1), S_t); the last blends
/// zeta(C(t_{M-1}), S_t) with the exercise value at maturity.
inline Eigen::VectorXd interp_params(const LsmResult& result, const BermudanSpec& spec, const PathGrid& paths,
                                     double t, ParamsBoundary boundary = ParamsBoundary::value_blend) {
    const auto [m, w] = detail::bracket_strict(spec, t);
    const auto col = paths.column_of(t);
    const auto cols = detail::exercise_columns(paths, spec);
    const auto last = spec.n_dates() - 1;
    const auto& coeffs = result.coeffs;

    std::array<double, 4> left{result.t0_price, 0.0, 0.0, 0.0};
    if (m > 0) left = coeffs.per_date[m - 1];

    Eigen::VectorXd out(paths.n_paths());
    for (Eigen::Index j = 0; j < paths.n_paths(); ++j) {
        const double s = paths.values(j, col);
        if (m < last) {
            const auto& right = coeffs.per_date[m];
            std::array<double, 4> c{};
            for (std::size_t k = 0; k < 4; ++k) c[k] = left[k] + (right[k] - left[k]) * w;
            out[j] = coeffs.evaluate(c, s);
        } else {
            const double left_value = coeffs.evaluate(left, s);
            const double right_value = boundary == ParamsBoundary::value_blend
                                           ? spec.payoff(paths.values(j, cols[last]))
                                           : spec.payoff(s);
            out[j] = left_value + (right_value - left_value) * w;
        }
    }
    return out;
}

struct TrueFitResult {
    std::array<double, 4> coeffs{};
    double scale = 1.0;
    Eigen::VectorXd values;
};

/// Cubic regression of exp(-r (t_next - t)) * next_values on the spots at t.
/// Since t is not an exercise date the fitted continuation is the value.
inline TrueFitResult true_fit(const Eigen::VectorXd& spots_at_t, const Eigen::VectorXd& next_values, double t,
                              double t_next, double r, double scale) {
    detail::require(spots_at_t.size() == next_values.size() && spots_at_t.size() >= 1,
                    "true_fit: size mismatch");
    detail::require(t_next >= t, "true_fit: next exercise date precedes t");
    TrueFitResult out;
    out.scale = scale;
    const Eigen::VectorXd target = std::exp(-r * (t_next - t)) * next_values;
    out.coeffs = detail::fit_cubic(spots_at_t, target, scale);
    CubicCoeffs c{{out.coeffs}, scale};
    out.values = spots_at_t.unaryExpr([&](double s) { return c.evaluate(out.coeffs, s); });
    return out;
}

/// true_fit for fine-grid horizon t of a path grid, regressing the next
/// exercise date's values from an LSM result evaluated on the same paths.
inline TrueFitResult true_fit(const LsmResult& result, const BermudanSpec& spec, const PathGrid& paths, double t,
                              double r) {
    std::size_t m = 0;
    while (m < spec.n_dates() && spec.exercise_times[m] <= t + 1e-12) ++m;
    detail::require(m < spec.n_dates(), "true_fit: no exercise date after t");
    const Eigen::VectorXd spots = paths.values.col(paths.column_of(t));
    return true_fit(spots, result.values.col(static_cast<Eigen::Index>(m)), t, spec.exercise_times[m], r,
                    result.coeffs.scale);
}

}  // namespace rlnn
