#pragma once

// Profiled loss L*(b) = min_W (1/2N) ||y - X(b) W||^2 with the inner problem
// solved by the normal-equations oracle, and its central finite differences.

#include <algorithm>
#include <vector>

#include "normal_equations.hpp"

namespace oracle {

inline double profiled_loss(const std::vector<double>& spots, const std::vector<double>& targets,
                            const std::vector<double>& strikes, const std::vector<int>& cp) {
    Matrix x(spots.size(), std::vector<double>(strikes.size()));
    for (std::size_t j = 0; j < spots.size(); ++j)
        for (std::size_t i = 0; i < strikes.size(); ++i) x[j][i] = std::max(cp[i] * (spots[j] - strikes[i]), 0.0);
    const auto w = least_squares(x, targets);
    double sse = 0.0;
    for (std::size_t j = 0; j < spots.size(); ++j) {
        double pred = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) pred += x[j][i] * w[i];
        sse += (targets[j] - pred) * (targets[j] - pred);
    }
    return sse / (2.0 * static_cast<double>(spots.size()));
}

inline std::vector<double> profiled_loss_gradient_fd(const std::vector<double>& spots,
                                                     const std::vector<double>& targets,
                                                     const std::vector<double>& strikes, const std::vector<int>& cp,
                                                     double h) {
    std::vector<double> g(strikes.size());
    for (std::size_t i = 0; i < strikes.size(); ++i) {
        auto up = strikes, down = strikes;
        up[i] += h;
        down[i] -= h;
        g[i] = (profiled_loss(spots, targets, up, cp) - profiled_loss(spots, targets, down, cp)) / (2.0 * h);
    }
    return g;
}

}  // namespace oracle
