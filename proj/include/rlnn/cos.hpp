#pragma once

// Fourier-cosine (COS) pricing of Bermudan options under GBM. Used as the
// reference model for the network and regression pricers.
//
// Notation: x = ln(S/K) on the truncated interval [a, b], theta = pi (x - a) / (b - a),
// u_k = k pi / (b - a). V_k are the cosine coefficients of the value function
// at an exercise date; the continuation one step earlier is
//   Q(x) = exp(-r dt) sum'_k Re{ phi(u_k; dt) exp(i u_k (x - a)) } V_k
// where sum' halves the k = 0 term.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "rlnn/bermudan_engine.hpp"
#include "rlnn/errors.hpp"
#include "rlnn/market_model.hpp"

namespace rlnn {

struct CosConfig {
    int n_terms = 256;
    double range_width = 10.0;
    double newton_tol = 1e-12;
    int newton_max_iter = 50;
    /// Compute continuation coefficients with the FFT Hankel/Toeplitz products
    /// instead of the O(L^2) direct sum.
    bool use_fft = false;

    void validate() const {
        detail::require(n_terms >= 16, "CosConfig: n_terms must be >= 16");
        detail::require(range_width > 0.0, "CosConfig: range_width must be positive");
        detail::require(newton_tol > 0.0, "CosConfig: newton_tol must be positive");
        detail::require(newton_max_iter >= 1, "CosConfig: newton_max_iter must be >= 1");
    }
};

enum class ExerciseRegion { interior, empty, full };

struct ExercisePoint {
    double x = 0.0;
    ExerciseRegion region = ExerciseRegion::interior;
    int iterations = 0;
};

struct CosWorkspace {
    double a = 0.0;
    double b = 0.0;
    /// coefficients[m] are the cosine coefficients of V at exercise_times[m].
    std::vector<Eigen::VectorXd> coefficients;
    /// Early-exercise log-moneyness per exercise date (0 at maturity).
    std::vector<ExercisePoint> exercise_points;
};

/// GBM characteristic function of the log-increment over dt.
inline std::complex<double> char_fn(double u, double dt, double r, double sigma) {
    const double mu = r - 0.5 * sigma * sigma;
    return std::exp(std::complex<double>(-0.5 * sigma * sigma * u * u * dt, u * mu * dt));
}

/// Cumulant truncation rule: c1 +- width * sqrt(c2) with c1 = (r - sigma^2/2) T
/// and c2 = sigma^2 T.
inline std::pair<double, double> truncation_range(double r, double sigma, double maturity, double width) {
    detail::require(maturity > 0.0, "truncation_range: maturity must be positive");
    detail::require(sigma > 0.0, "truncation_range: sigma must be positive");
    const double c1 = (r - 0.5 * sigma * sigma) * maturity;
    const double half = width * std::sqrt(sigma * sigma * maturity);
    return {c1 - half, c1 + half};
}

namespace detail {

/// int_c^d e^y cos(k pi (y - a) / (b - a)) dy
inline double cos_chi(int k, double a, double b, double c, double d) {
    const double w = k * std::numbers::pi / (b - a);
    const double ed = std::exp(d), ec = std::exp(c);
    const double num = std::cos(w * (d - a)) * ed - std::cos(w * (c - a)) * ec +
                       w * (std::sin(w * (d - a)) * ed - std::sin(w * (c - a)) * ec);
    return num / (1.0 + w * w);
}

/// int_c^d cos(k pi (y - a) / (b - a)) dy
inline double cos_psi(int k, double a, double b, double c, double d) {
    if (k == 0) return d - c;
    const double w = k * std::numbers::pi / (b - a);
    return (std::sin(w * (d - a)) - std::sin(w * (c - a))) / w;
}

}  // namespace detail

/// Cosine coefficients of the exercise value max(alpha K (e^y - 1), 0)
/// restricted to [x1, x2] (which must lie on the exercise side of y = 0).
inline Eigen::VectorXd payoff_coefficients(double a, double b, double x1, double x2, double strike,
                                           OptionSide side, int n_terms) {
    detail::require(a < b, "payoff_coefficients: require a < b");
    detail::require(a <= x1 && x1 <= x2 && x2 <= b, "payoff_coefficients: require a <= x1 <= x2 <= b");
    const double alpha = side_sign(side);
    Eigen::VectorXd h(n_terms);
    for (int k = 0; k < n_terms; ++k)
        h[k] = 2.0 / (b - a) * alpha * strike *
               (detail::cos_chi(k, a, b, x1, x2) - detail::cos_psi(k, a, b, x1, x2));
    return h;
}

/// Cosine coefficients on [x1, x2] of the discounted one-step expectation of
/// the function with coefficients next:
///   C_k = exp(-r dt) / pi * Im{ sum_j (Mc_{k,j} + Ms_{k,j}) u_j },
///   u_j = phi(u_j; dt) next_j (u_0 halved), Ms_{k,j} = m_{j-k}, Mc_{k,j} = m_{j+k},
///   m_n = (e^{i n theta2} - e^{i n theta1}) / n, m_0 = i (theta2 - theta1).
/// The Toeplitz (Ms) and Hankel (Mc) products are either summed directly or
/// evaluated as zero-padded FFT convolutions.
inline Eigen::VectorXd continuation_coefficients(const Eigen::VectorXd& next, double a, double b, double x1,
                                                 double x2, double dt, double r, double sigma,
                                                 bool use_fft = false) {
    detail::require(a < b && a <= x1 && x1 <= x2 && x2 <= b,
                    "continuation_coefficients: require a <= x1 <= x2 <= b");
    detail::require(dt > 0.0, "continuation_coefficients: dt must be positive");
    using cd = std::complex<double>;
    const auto n_terms = static_cast<int>(next.size());
    const double span = b - a;
    const double th1 = std::numbers::pi * (x1 - a) / span;
    const double th2 = std::numbers::pi * (x2 - a) / span;

    std::vector<cd> u(static_cast<std::size_t>(n_terms));
    for (int j = 0; j < n_terms; ++j) u[j] = char_fn(j * std::numbers::pi / span, dt, r, sigma) * next[j];
    if (n_terms > 0) u[0] *= 0.5;

    auto m_at = [&](int n) -> cd {
        if (n == 0) return {0.0, th2 - th1};
        const double nn = n;
        return (std::polar(1.0, nn * th2) - std::polar(1.0, nn * th1)) / nn;
    };

    Eigen::VectorXd out(n_terms);
    const double scale = std::exp(-r * dt) / std::numbers::pi;
    if (!use_fft) {
        std::vector<cd> m_table(static_cast<std::size_t>(3 * n_terms));
        for (int n = -(n_terms - 1); n <= 2 * n_terms - 2; ++n) m_table[n + n_terms - 1] = m_at(n);
        auto m = [&](int n) { return m_table[n + n_terms - 1]; };
        for (int k = 0; k < n_terms; ++k) {
            cd acc = 0.0;
            for (int j = 0; j < n_terms; ++j) acc += (m(j + k) + m(j - k)) * u[j];
            out[k] = scale * acc.imag();
        }
        return out;
    }

    const int len = 3 * n_terms - 2;
    int size = 1;
    while (size < len) size <<= 1;
    std::vector<cd> toeplitz(size, 0.0), hankel(size, 0.0), reversed(size, 0.0);
    for (int q = 0; q <= 2 * n_terms - 2; ++q) {
        toeplitz[q] = m_at(q - (n_terms - 1));
        hankel[q] = m_at(q);
    }
    for (int i = 0; i < n_terms; ++i) reversed[i] = u[n_terms - 1 - i];

    Eigen::FFT<double> fft;
    std::vector<cd> ft_t, ft_h, ft_u, conv_t, conv_h;
    fft.fwd(ft_t, toeplitz);
    fft.fwd(ft_h, hankel);
    fft.fwd(ft_u, reversed);
    for (int q = 0; q < size; ++q) {
        ft_t[q] *= ft_u[q];
        ft_h[q] *= ft_u[q];
    }
    fft.inv(conv_t, ft_t);
    fft.inv(conv_h, ft_h);
    for (int k = 0; k < n_terms; ++k) out[k] = scale * (conv_t[2 * n_terms - 2 - k] + conv_h[n_terms - 1 + k]).imag();
    return out;
}

/// Evaluates Q(x) and Q'(x) for fixed coefficients and horizon tau.
class CosSeries {
public:
    CosSeries(const Eigen::VectorXd& coefficients, double a, double b, double tau, double r, double sigma)
        : a_(a), freq_(std::numbers::pi / (b - a)), df_(std::exp(-r * tau)), z_(coefficients.size()) {
        for (Eigen::Index k = 0; k < coefficients.size(); ++k)
            z_[k] = char_fn(k * freq_, tau, r, sigma) * coefficients[k];
        if (!z_.empty()) z_[0] *= 0.5;
    }

    double operator()(double x) const {
        double acc = 0.0;
        for (std::size_t k = 0; k < z_.size(); ++k) {
            const double phase = static_cast<double>(k) * freq_ * (x - a_);
            acc += z_[k].real() * std::cos(phase) - z_[k].imag() * std::sin(phase);
        }
        return df_ * acc;
    }

    double derivative(double x) const {
        double acc = 0.0;
        for (std::size_t k = 0; k < z_.size(); ++k) {
            const double w = static_cast<double>(k) * freq_;
            const double phase = w * (x - a_);
            acc -= w * (z_[k].real() * std::sin(phase) + z_[k].imag() * std::cos(phase));
        }
        return df_ * acc;
    }

private:
    double a_, freq_, df_;
    std::vector<std::complex<double>> z_;
};

namespace detail {

/// Newton iteration kept inside a sign-change bracket [lo, hi]; steps that
/// leave the bracket become bisection steps, and after max_iter the search
/// finishes by pure bisection.
template <class F, class DF>
std::pair<double, int> safeguarded_newton(F&& f, DF&& df, double lo, double hi, double guess, double tol,
                                          int max_iter) {
    double f_lo = f(lo);
    double x = std::clamp(guess, lo, hi);
    if (x <= lo || x >= hi) x = 0.5 * (lo + hi);
    int it = 0;
    for (; it < max_iter; ++it) {
        const double fx = f(x);
        if (fx == 0.0) return {x, it};
        if ((fx < 0.0) == (f_lo < 0.0)) {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
        }
        const double slope = df(x);
        double next = slope != 0.0 ? x - fx / slope : lo;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) < tol) return {next, it + 1};
        x = next;
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
        ++it;
    }
    return {0.5 * (lo + hi), it};
}

}  // namespace detail

/// Log-moneyness where the continuation (series of next over dt) equals the
/// exercise value. Puts exercise on [a, x*], calls on [x*, b]. Without a sign
/// change the region is reported empty (x* at the far end) or full (x* = 0).
inline ExercisePoint find_exercise_point(const Eigen::VectorXd& next, double a, double b, double dt,
                                         const MarketParams& market, const BermudanSpec& spec, double guess,
                                         const CosConfig& config) {
    const CosSeries q(next, a, b, dt, market.r, market.sigma);
    const double k = spec.strike;
    const bool put = spec.side == OptionSide::put;
    auto g = [&](double x) { return q(x) - exercise_payoff(spec.side, k * std::exp(x), k); };
    auto dg = [&](double x) {
        const double dh = std::exp(x) * k;
        return q.derivative(x) + (put ? dh : -dh);
    };

    const double money = std::clamp(0.0, a, b);
    const double deep = put ? a : b;  // deepest in-the-money point
    if (g(deep) >= 0.0) return {deep, ExerciseRegion::empty, 0};
    if (g(money) < 0.0) return {money, ExerciseRegion::full, 0};
    const double lo = put ? a : money;
    const double hi = put ? money : b;
    const auto [x, it] = detail::safeguarded_newton(g, dg, lo, hi, guess, config.newton_tol, config.newton_max_iter);
    return {x, ExerciseRegion::interior, it};
}

/// Backward recursion over the exercise dates. Exercise dates may be unevenly
/// spaced; each step uses its own dt.
inline CosWorkspace build_cos_workspace(const MarketParams& market, const BermudanSpec& spec,
                                        const CosConfig& config) {
    market.validate();
    spec.validate();
    config.validate();
    CosWorkspace ws;
    std::tie(ws.a, ws.b) = truncation_range(market.r, market.sigma, spec.maturity(), config.range_width);
    const auto m_count = spec.n_dates();
    const int n = config.n_terms;
    const bool put = spec.side == OptionSide::put;
    ws.coefficients.resize(m_count);
    ws.exercise_points.resize(m_count);

    const double money = std::clamp(0.0, ws.a, ws.b);
    ws.coefficients[m_count - 1] = put ? payoff_coefficients(ws.a, ws.b, ws.a, money, spec.strike, spec.side, n)
                                       : payoff_coefficients(ws.a, ws.b, money, ws.b, spec.strike, spec.side, n);
    ws.exercise_points[m_count - 1] = {money, ExerciseRegion::interior, 0};

    for (std::size_t m = m_count - 1; m-- > 0;) {
        const double dt = spec.exercise_times[m + 1] - spec.exercise_times[m];
        const Eigen::VectorXd& next = ws.coefficients[m + 1];
        const ExercisePoint xp =
            find_exercise_point(next, ws.a, ws.b, dt, market, spec, ws.exercise_points[m + 1].x, config);
        if (!std::isfinite(xp.x)) throw NumericalError("build_cos_workspace: exercise point search failed");
        ws.exercise_points[m] = xp;
        if (put) {
            ws.coefficients[m] =
                payoff_coefficients(ws.a, ws.b, ws.a, xp.x, spec.strike, spec.side, n) +
                continuation_coefficients(next, ws.a, ws.b, xp.x, ws.b, dt, market.r, market.sigma, config.use_fft);
        } else {
            ws.coefficients[m] =
                continuation_coefficients(next, ws.a, ws.b, ws.a, xp.x, dt, market.r, market.sigma, config.use_fft) +
                payoff_coefficients(ws.a, ws.b, xp.x, ws.b, spec.strike, spec.side, n);
        }
        if (!ws.coefficients[m].allFinite()) throw NumericalError("build_cos_workspace: non-finite coefficients");
    }
    return ws;
}

/// Time-zero value: the continuation series from the first exercise date
/// evaluated at x = ln(S_0 / K).
inline double price_cos(const MarketParams& market, const BermudanSpec& spec, const CosConfig& config = {}) {
    const CosWorkspace ws = build_cos_workspace(market, spec, config);
    const CosSeries q(ws.coefficients.front(), ws.a, ws.b, spec.exercise_times.front(), market.r, market.sigma);
    return q(std::log(market.s0 / spec.strike));
}

/// Per-state values at time t in [0, T). Between exercise dates this is the
/// continuation over the stub to the next date; on an exercise date it is
/// max(exercise value, continuation).
inline Eigen::VectorXd value_at_state(const CosWorkspace& ws, const MarketParams& market, const BermudanSpec& spec,
                                      double t, const Eigen::VectorXd& spots) {
    detail::require(t >= 0.0 && t < spec.maturity() - 1e-12, "value_at_state: t must lie in [0, T)");
    detail::require((spots.array() > 0.0).all(), "value_at_state: spots must be positive");
    std::size_t m = 0;
    while (spec.exercise_times[m] < t - 1e-12) ++m;
    const bool on_date = std::abs(spec.exercise_times[m] - t) <= 1e-12;
    const std::size_t src = on_date ? m + 1 : m;
    const double tau = spec.exercise_times[src] - t;
    const CosSeries q(ws.coefficients[src], ws.a, ws.b, tau, market.r, market.sigma);
    Eigen::VectorXd out(spots.size());
    for (Eigen::Index j = 0; j < spots.size(); ++j) {
        const double cont = q(std::log(spots[j] / spec.strike));
        out[j] = on_date ? std::max(spec.payoff(spots[j]), cont) : cont;
    }
    return out;
}

inline Eigen::VectorXd value_at_state(const MarketParams& market, const BermudanSpec& spec, const CosConfig& config,
                                      double t, const Eigen::VectorXd& spots) {
    return value_at_state(build_cos_workspace(market, spec, config), market, spec, t, spots);
}

/// COS values and continuation values on every exercise column of a path grid.
inline ValueSurface cos_surface(const CosWorkspace& ws, const MarketParams& market, const BermudanSpec& spec,
                                const PathGrid& paths) {
    const auto n = paths.n_paths();
    const auto m_count = static_cast<Eigen::Index>(spec.n_dates());
    ValueSurface s;
    s.values.resize(n, m_count);
    s.continuation.resize(n, m_count);
    const CosSeries q0(ws.coefficients.front(), ws.a, ws.b, spec.exercise_times.front(), market.r, market.sigma);
    s.t0_continuation = q0(std::log(market.s0 / spec.strike));
    s.t0_price = s.t0_continuation;
    for (Eigen::Index m = 0; m < m_count; ++m) {
        const auto col = paths.column_of(spec.exercise_times[m]);
        const bool last = m + 1 == m_count;
        if (last) {
            for (Eigen::Index j = 0; j < n; ++j) {
                s.continuation(j, m) = 0.0;
                s.values(j, m) = spec.payoff(paths.values(j, col));
            }
            continue;
        }
        const CosSeries q(ws.coefficients[m + 1], ws.a, ws.b, spec.exercise_times[m + 1] - spec.exercise_times[m],
                          market.r, market.sigma);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double spot = paths.values(j, col);
            const double cont = q(std::log(spot / spec.strike));
            s.continuation(j, m) = cont;
            s.values(j, m) = std::max(spec.payoff(spot), cont);
        }
    }
    return s;
}

}  // namespace rlnn
