#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace rlnn::detail {

/// Normal-equation statistics of the ReLU design X(b) over a fixed training
/// set, computed from prefix sums over the spot-sorted sample.
///
/// Every hidden node is linear in the spot on a contiguous range of the sorted
/// sample (calls above their strike, puts below), so each entry of X'X and X'Y
/// reduces to range sums of 1, x, x^2, y and x*y. Spots are centred on their
/// mean and accumulated in long double to keep the differences of prefix sums
/// accurate.
class SortedDesign {
public:
    SortedDesign(const Eigen::VectorXd& spots, const Eigen::VectorXd& targets) {
        const auto n = spots.size();
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return spots[a] < spots[b]; });

        long double mean = 0.0L;
        for (Eigen::Index j = 0; j < n; ++j) mean += spots[j];
        center_ = static_cast<double>(mean / static_cast<long double>(std::max<Eigen::Index>(n, 1)));

        sorted_.resize(order.size());
        sx_.assign(order.size() + 1, 0.0L);
        sxx_.assign(order.size() + 1, 0.0L);
        sy_.assign(order.size() + 1, 0.0L);
        sxy_.assign(order.size() + 1, 0.0L);
        yy_ = 0.0L;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const double s = spots[order[k]];
            const long double x = static_cast<long double>(s) - center_;
            const long double y = targets[order[k]];
            sorted_[k] = s;
            sx_[k + 1] = sx_[k] + x;
            sxx_[k + 1] = sxx_[k] + x * x;
            sy_[k + 1] = sy_[k] + y;
            sxy_[k + 1] = sxy_[k] + x * y;
            yy_ += y * y;
        }
    }

    Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(sorted_.size()); }
    double yty() const noexcept { return static_cast<double>(yy_); }

    /// X(b)' X(b)
    Eigen::MatrixXd gram(const Eigen::VectorXd& strikes, const Eigen::VectorXi& cp) const {
        const auto p = strikes.size();
        const auto ranges = active_ranges(strikes, cp);
        Eigen::MatrixXd g(p, p);
        for (Eigen::Index i = 0; i < p; ++i) {
            const long double bi = static_cast<long double>(strikes[i]) - center_;
            for (Eigen::Index j = i; j < p; ++j) {
                const std::size_t lo = std::max(ranges[i].first, ranges[j].first);
                const std::size_t hi = std::min(ranges[i].second, ranges[j].second);
                long double v = 0.0L;
                if (lo < hi) {
                    const long double bj = static_cast<long double>(strikes[j]) - center_;
                    const long double n = static_cast<long double>(hi - lo);
                    const long double s1 = sx_[hi] - sx_[lo];
                    const long double s2 = sxx_[hi] - sxx_[lo];
                    v = (s2 - (bi + bj) * s1 + bi * bj * n) * (cp[i] * cp[j]);
                }
                g(i, j) = g(j, i) = static_cast<double>(v);
            }
        }
        return g;
    }

    /// X(b)' Y
    Eigen::VectorXd cross(const Eigen::VectorXd& strikes, const Eigen::VectorXi& cp) const {
        const auto ranges = active_ranges(strikes, cp);
        Eigen::VectorXd c(strikes.size());
        for (Eigen::Index i = 0; i < strikes.size(); ++i) {
            const auto [lo, hi] = ranges[i];
            const long double bi = static_cast<long double>(strikes[i]) - center_;
            const long double v = (sxy_[hi] - sxy_[lo]) - bi * (sy_[hi] - sy_[lo]);
            c[i] = static_cast<double>(v * cp[i]);
        }
        return c;
    }

    /// (1/2N) ||Y - X W||^2 from the normal-equation statistics.
    double loss(const Eigen::MatrixXd& gram, const Eigen::VectorXd& cross,
                const Eigen::VectorXd& weights) const {
        const long double quad = weights.dot(gram * weights);
        const long double lin = weights.dot(cross);
        const long double sse = yy_ - 2.0L * lin + quad;
        return static_cast<double>(std::max(sse, 0.0L) / (2.0L * static_cast<long double>(size())));
    }

private:
    std::vector<std::pair<std::size_t, std::size_t>> active_ranges(const Eigen::VectorXd& strikes,
                                                                   const Eigen::VectorXi& cp) const {
        std::vector<std::pair<std::size_t, std::size_t>> out(static_cast<std::size_t>(strikes.size()));
        for (Eigen::Index i = 0; i < strikes.size(); ++i) {
            if (cp[i] > 0) {
                const auto lo = std::upper_bound(sorted_.begin(), sorted_.end(), strikes[i]) - sorted_.begin();
                out[i] = {static_cast<std::size_t>(lo), sorted_.size()};
            } else {
                const auto hi = std::lower_bound(sorted_.begin(), sorted_.end(), strikes[i]) - sorted_.begin();
                out[i] = {0, static_cast<std::size_t>(hi)};
            }
        }
        return out;
    }

    std::vector<double> sorted_;
    std::vector<long double> sx_, sxx_, sy_, sxy_;
    long double yy_ = 0.0L;
    double center_ = 0.0;
};

/// Minimum-norm solution of G w = c through the eigendecomposition of the
/// symmetric Gram matrix; directions with eigenvalue below rel_tol * max are
/// dropped.
inline Eigen::VectorXd solve_gram_pinv(const Eigen::MatrixXd& gram, const Eigen::VectorXd& cross,
                                       double rel_tol = 1e-12) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const double top = lambda.size() > 0 ? lambda.maxCoeff() : 0.0;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(cross.size());
    if (!(top > 0.0)) return w;
    const Eigen::VectorXd proj = eig.eigenvectors().transpose() * cross;
    for (Eigen::Index k = 0; k < lambda.size(); ++k)
        if (lambda[k] > rel_tol * top) w += eig.eigenvectors().col(k) * (proj[k] / lambda[k]);
    return w;
}

}  // namespace rlnn::detail
