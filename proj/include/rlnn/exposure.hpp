#pragma once

// Stopping times, exposure cubes and EE / PFE profiles for the three pricers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rlnn/bermudan_engine.hpp"
#include "rlnn/cos.hpp"
#include "rlnn/errors.hpp"
#include "rlnn/lsm.hpp"
#include "rlnn/market_model.hpp"

namespace rlnn {

enum class ModelKind { rlnn, lsm, cos };

constexpr std::string_view to_string(ModelKind k) noexcept {
    switch (k) {
        case ModelKind::rlnn: return "rlnn";
        case ModelKind::lsm: return "lsm";
        case ModelKind::cos: return "cos";
    }
    return "?";
}

/// How LSM values are produced between exercise dates.
enum class LsmInterp { option_value, continuation_value, params };

struct StoppingTimes {
    /// Exercise-date index per path, -1 when never exercised.
    std::vector<int> index;
    /// Exercise time per path, +inf when never exercised.
    Eigen::VectorXd tau;

    Eigen::Index n_paths() const noexcept { return tau.size(); }
};

/// First exercise date with intrinsic strictly above continuation. The last
/// column's continuation is expected to be zero.
inline StoppingTimes stopping_times(const Eigen::MatrixXd& continuation, const Eigen::MatrixXd& intrinsics,
                                    const std::vector<double>& exercise_times) {
    detail::require(continuation.rows() == intrinsics.rows() && continuation.cols() == intrinsics.cols(),
                    "stopping_times: shape mismatch");
    detail::require(static_cast<std::size_t>(continuation.cols()) == exercise_times.size(),
                    "stopping_times: one column per exercise date required");
    const auto n = continuation.rows();
    StoppingTimes out;
    out.index.assign(static_cast<std::size_t>(n), -1);
    out.tau = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index m = 0; m < continuation.cols(); ++m) {
            if (intrinsics(j, m) > continuation(j, m)) {
                out.index[j] = static_cast<int>(m);
                out.tau[j] = exercise_times[m];
                break;
            }
        }
    }
    return out;
}

/// Stopping times implied by a model's own continuation values on a path grid.
inline StoppingTimes stopping_times(const ValueSurface& surface, const BermudanSpec& spec, const PathGrid& paths) {
    const auto cols = detail::exercise_columns(paths, spec);
    Eigen::MatrixXd h(paths.n_paths(), static_cast<Eigen::Index>(cols.size()));
    for (Eigen::Index m = 0; m < h.cols(); ++m)
        for (Eigen::Index j = 0; j < h.rows(); ++j)
            h(j, m) = intrinsic(spec.side, paths.values(j, cols[m]), spec.strike);
    return stopping_times(surface.continuation, h, spec.exercise_times);
}

struct ExposureCube {
    Eigen::MatrixXd exposure;  // paths x horizons
    std::vector<double> horizons;
    Eigen::VectorXi n_alive;
    Measure measure = Measure::risk_neutral;
    ModelKind model = ModelKind::rlnn;
};

/// exposure(j, t) = value(j, t) while tau_j >= t, zero afterwards.
inline ExposureCube exposure_cube(const Eigen::MatrixXd& values, const std::vector<double>& horizons,
                                  const StoppingTimes& taus, ModelKind model, Measure measure) {
    detail::require(static_cast<std::size_t>(values.cols()) == horizons.size(),
                    "exposure_cube: one column per horizon required");
    detail::require(values.rows() == taus.n_paths(), "exposure_cube: path count mismatch");
    detail::require(std::is_sorted(horizons.begin(), horizons.end()), "exposure_cube: horizons must be sorted");
    ExposureCube cube;
    cube.exposure = Eigen::MatrixXd::Zero(values.rows(), values.cols());
    cube.horizons = horizons;
    cube.n_alive = Eigen::VectorXi::Zero(values.cols());
    cube.measure = measure;
    cube.model = model;
    for (Eigen::Index h = 0; h < values.cols(); ++h) {
        for (Eigen::Index j = 0; j < values.rows(); ++j) {
            if (taus.tau[j] >= horizons[h] - 1e-12) {
                cube.exposure(j, h) = values(j, h);
                ++cube.n_alive[h];
            }
        }
    }
    return cube;
}

struct ExposureProfile {
    std::vector<double> horizons;
    Eigen::VectorXd ee;
    Eigen::VectorXd pfe;
    Eigen::VectorXi n_alive;
    double quantile = 0.99;
    Measure measure = Measure::risk_neutral;
    ModelKind model = ModelKind::rlnn;
};

/// Nearest-rank quantile: the ceil(q N)-th smallest value.
inline double nearest_rank_quantile(Eigen::VectorXd column, double q) {
    detail::require(column.size() > 0, "nearest_rank_quantile: empty sample");
    detail::require(q > 0.0 && q <= 1.0, "nearest_rank_quantile: q must lie in (0, 1]");
    const auto n = column.size();
    auto rank = static_cast<Eigen::Index>(std::ceil(q * static_cast<double>(n) - 1e-9));
    rank = std::clamp<Eigen::Index>(rank, 1, n);
    std::nth_element(column.data(), column.data() + (rank - 1), column.data() + n);
    return column[rank - 1];
}

inline ExposureProfile profiles(const ExposureCube& cube, double quantile = 0.99) {
    detail::require(cube.exposure.rows() > 0 && cube.exposure.cols() > 0, "profiles: empty cube");
    ExposureProfile p;
    p.horizons = cube.horizons;
    p.n_alive = cube.n_alive;
    p.quantile = quantile;
    p.measure = cube.measure;
    p.model = cube.model;
    p.ee = cube.exposure.colwise().mean().transpose();
    p.pfe.resize(cube.exposure.cols());
    for (Eigen::Index h = 0; h < cube.exposure.cols(); ++h)
        p.pfe[h] = nearest_rank_quantile(cube.exposure.col(h), quantile);
    return p;
}

/// Exercise dates, plus the midpoint of every exercise interval when fine is
/// set, plus any extra horizons; sorted and deduplicated.
inline std::vector<double> exposure_horizons(const BermudanSpec& spec, bool fine,
                                             const std::vector<double>& extra = {}) {
    std::vector<double> out = spec.exercise_times;
    if (fine)
        for (std::size_t m = 0; m < spec.n_dates(); ++m)
            out.push_back(0.5 * (spec.previous_time(m) + spec.exercise_times[m]));
    for (double t : extra) {
        detail::require(t > 0.0 && t <= spec.maturity(), "exposure_horizons: horizon outside (0, T]");
        out.push_back(t);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
              out.end());
    return out;
}

/// Risk-neutral fitted pricers. Any subset may be present.
struct FittedModels {
    std::optional<RlnnResult> rlnn;
    std::optional<LsmResult> lsm;
    std::optional<CosWorkspace> cos;
    LsmInterp lsm_interp = LsmInterp::option_value;

    bool has(ModelKind k) const noexcept {
        switch (k) {
            case ModelKind::rlnn: return rlnn.has_value();
            case ModelKind::lsm: return lsm.has_value();
            case ModelKind::cos: return cos.has_value();
        }
        return false;
    }
};

struct ModelValues {
    ValueSurface surface;     // exercise dates
    Eigen::MatrixXd values;   // paths x horizons
};

/// A model's per-path values on every horizon of a path grid. The grid must
/// contain every exercise date and every horizon.
inline ModelValues model_values(ModelKind kind, const FittedModels& models, const MarketParams& market,
                                const BermudanSpec& spec, const PathGrid& paths,
                                const std::vector<double>& horizons) {
    if (!models.has(kind)) throw std::invalid_argument("model_values: model not fitted");
    ModelValues out;
    std::optional<LsmResult> applied;
    switch (kind) {
        case ModelKind::rlnn:
            out.surface = rlnn_surface(models.rlnn->layers, market, spec, paths, models.rlnn->t0_price);
            break;
        case ModelKind::lsm:
            applied = apply_lsm(*models.lsm, paths, spec);
            out.surface = to_surface(*applied);
            break;
        case ModelKind::cos: out.surface = cos_surface(*models.cos, market, spec, paths); break;
    }

    out.values.resize(paths.n_paths(), static_cast<Eigen::Index>(horizons.size()));
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        const double t = horizons[h];
        const auto date = std::find_if(spec.exercise_times.begin(), spec.exercise_times.end(),
                                       [&](double x) { return std::abs(x - t) <= 1e-12; });
        const auto col = static_cast<Eigen::Index>(h);
        if (date != spec.exercise_times.end()) {
            out.values.col(col) = out.surface.values.col(date - spec.exercise_times.begin());
            continue;
        }
        const Eigen::VectorXd spots = paths.values.col(paths.column_of(t));
        switch (kind) {
            case ModelKind::rlnn: out.values.col(col) = value_at(models.rlnn->layers, market, spec, t, spots); break;
            case ModelKind::cos: out.values.col(col) = value_at_state(*models.cos, market, spec, t, spots); break;
            case ModelKind::lsm:
                switch (models.lsm_interp) {
                    case LsmInterp::option_value:
                        out.values.col(col) = interp_option_value(*applied, spec, paths, t);
                        break;
                    case LsmInterp::continuation_value:
                        out.values.col(col) = interp_continuation_value(*applied, spec, paths, t);
                        break;
                    case LsmInterp::params: out.values.col(col) = interp_params(*applied, spec, paths, t); break;
                }
                break;
        }
    }
    if (!out.values.allFinite()) throw NumericalError("model_values: non-finite values");
    return out;
}

/// Cube for one model using its own stopping times.
inline ExposureCube model_exposure(ModelKind kind, const FittedModels& models, const MarketParams& market,
                                   const BermudanSpec& spec, const PathGrid& paths,
                                   const std::vector<double>& horizons) {
    const ModelValues mv = model_values(kind, models, market, spec, paths, horizons);
    const StoppingTimes taus = stopping_times(mv.surface, spec, paths);
    return exposure_cube(mv.values, horizons, taus, kind, paths.measure);
}

struct Scenario {
    int id = 0;  // 0 is the risk-neutral measure
    std::optional<RealWorldParams> real_world;
};

/// Real-world scenarios 1 to 4 (S_0 = 1).
inline std::vector<Scenario> default_scenarios() {
    return {{1, RealWorldParams{0.07, 0.1}},
            {2, RealWorldParams{0.10, 0.3}},
            {3, RealWorldParams{0.15, 0.5}},
            {4, RealWorldParams{0.01, 0.5}}};
}

struct ScenarioProfiles {
    Scenario scenario;
    std::vector<ExposureProfile> profiles;  // one per fitted model, in rlnn, lsm, cos order
};

/// Simulates each scenario's grid over the exercise dates and horizons and
/// profiles every fitted model on it. Pricers stay risk-neutral throughout.
inline std::vector<ScenarioProfiles> run_scenarios(const MarketParams& market, const BermudanSpec& spec,
                                                   const FittedModels& models, const std::vector<Scenario>& scenarios,
                                                   const std::vector<double>& horizons, Eigen::Index n_paths,
                                                   std::uint64_t seed) {
    std::vector<ModelKind> kinds;
    for (auto k : {ModelKind::rlnn, ModelKind::lsm, ModelKind::cos})
        if (models.has(k)) kinds.push_back(k);
    if (kinds.empty()) throw std::invalid_argument("run_scenarios: no fitted model");

    std::vector<double> grid_times = spec.exercise_times;
    grid_times.insert(grid_times.end(), horizons.begin(), horizons.end());
    std::sort(grid_times.begin(), grid_times.end());
    grid_times.erase(std::unique(grid_times.begin(), grid_times.end(),
                                 [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
                     grid_times.end());

    std::vector<ScenarioProfiles> out;
    for (const auto& sc : scenarios) {
        const PathGrid paths = simulate_gbm(market, sc.real_world, grid_times, n_paths, seed);
        ScenarioProfiles sp{sc, {}};
        for (auto k : kinds) sp.profiles.push_back(profiles(model_exposure(k, models, market, spec, paths, horizons)));
        out.push_back(std::move(sp));
    }
    return out;
}

}  // namespace rlnn
