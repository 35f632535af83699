#pragma once

// Experiment families of the benchmark harness: error-convergence race,
// PV distributions, exposure profiles and LSM interpolation schemes. Each
// command writes CSVs, SVG plots drawn from those CSVs, and registers its
// files with the run manifest.

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlnn/bench/config.hpp"
#include "rlnn/bench/csv.hpp"
#include "rlnn/bench/manifest.hpp"
#include "rlnn/bench/svg.hpp"
#include "rlnn/bermudan_engine.hpp"
#include "rlnn/cos.hpp"
#include "rlnn/exposure.hpp"
#include "rlnn/lsm.hpp"

namespace rlnn::bench {

inline std::string model_label(TrainingMode mode) { return mode == TrainingMode::hybrid ? "rlnn_opt" : "rlnn"; }

/// Time-zero RLNN prices after 0, 1, ..., config.epochs epochs, each obtained
/// by a full backward pass with that epoch budget. Once every layer of a pass
/// stopped early, larger budgets give the same layers and the price is reused.
inline std::vector<double> converge_prices(const MarketParams& market, const BermudanSpec& spec,
                                           const TrainingConfig& config, Eigen::Index n_train,
                                           std::uint64_t seed) {
    std::vector<double> prices;
    bool settled = false;
    for (int e = 0; e <= config.epochs; ++e) {
        if (settled) {
            prices.push_back(prices.back());
            continue;
        }
        TrainingConfig c = config;
        c.epochs = e;
        const RlnnResult r = price_rlnn(market, spec, c, n_train, seed);
        prices.push_back(r.t0_price);
        settled = e > 0 && std::all_of(r.traces.begin(), r.traces.end(),
                                       [](const TrainingTrace& t) { return t.stopped_early; });
    }
    return prices;
}

/// Smallest epoch from which |error| stays below tol through the last epoch;
/// -1 if the final error is not below tol.
inline int epochs_to_tolerance(const std::vector<double>& errors, double tol) {
    int first = -1;
    for (int e = static_cast<int>(errors.size()) - 1; e >= 0; --e) {
        if (!(std::abs(errors[static_cast<std::size_t>(e)]) < tol)) break;
        first = e;
    }
    return first;
}

/// The three risk-neutral pricers fitted for one contract.
struct FittedSet {
    FittedModels models;
    double cos_price = 0.0;
};

inline FittedSet fit_models(const ExperimentConfig& cfg, const BermudanSpec& spec) {
    FittedSet f;
    f.models.rlnn = price_rlnn(cfg.market, spec, cfg.training, cfg.paths.n_train, cfg.paths.train_seed());
    const PathGrid lsm_paths =
        simulate_gbm(cfg.market, std::nullopt, spec.exercise_times, cfg.paths.n_train, cfg.paths.lsm_seed());
    f.models.lsm = fit_lsm(lsm_paths, spec, cfg.market, LsmOptions{cfg.lsm.classical});
    f.models.cos = build_cos_workspace(cfg.market, spec, cfg.cos);
    f.models.lsm_interp = cfg.lsm.interp;
    const CosSeries q0(f.models.cos->coefficients.front(), f.models.cos->a, f.models.cos->b,
                       spec.exercise_times.front(), cfg.market.r, cfg.market.sigma);
    f.cos_price = q0(std::log(cfg.market.s0 / spec.strike));
    return f;
}

/// Column documentation for every CSV kind, emitted as schema.json.
inline nlohmann::json csv_schema() {
    return {
        {"converge_<label>.csv",
         {{"epoch", "training epochs per exercise date (0 = initialisation)"},
          {"model", "rlnn_opt (Adam on strikes, least squares on weights) or rlnn (Adam on all parameters)"},
          {"price", "time-zero model price"},
          {"cos_price", "COS reference price"},
          {"error", "price - cos_price"}}},
        {"converge_summary.csv",
         {{"label", "contract label"},
          {"model", "rlnn_opt or rlnn"},
          {"tolerance", "absolute error threshold"},
          {"epochs_to_tolerance", "smallest epoch after which |error| stays below tolerance (-1: never)"},
          {"final_error", "error after the last epoch"}}},
        {"pv_dist_<label>.csv",
         {{"t", "exercise date"},
          {"path", "validation path index"},
          {"spot", "underlying at t"},
          {"v_rlnn", "RLNN option value"},
          {"v_lsm", "LSM option value"},
          {"v_cos", "COS option value"},
          {"err_rlnn", "v_rlnn - v_cos"},
          {"err_lsm", "v_lsm - v_cos"}}},
        {"pv_dist_summary.csv",
         {{"label", "contract label"},
          {"t", "exercise date"},
          {"model", "rlnn or lsm"},
          {"max_abs_error", "max over paths of |v_model - v_cos|"},
          {"rms_error", "root mean square of v_model - v_cos"}}},
        {"exposure_<label>.csv",
         {{"t", "risk horizon"},
          {"model", "rlnn, lsm or cos"},
          {"measure", "risk_neutral or real_world"},
          {"scenario", "0 for risk-neutral, else real-world scenario id"},
          {"EE", "mean exposure"},
          {"PFE", "99% nearest-rank quantile of exposure (order statistic ceil(0.99 N))"},
          {"n_alive", "paths not exercised before t"}}},
        {"lsm_interp_<label>.csv",
         {{"t", "risk horizon"},
          {"scheme", "true_fit, option_value, continuation_value or params"},
          {"EE", "mean exposure"},
          {"PFE", "99% nearest-rank quantile of exposure"},
          {"ee_error", "EE - EE(true_fit)"},
          {"pfe_error", "PFE - PFE(true_fit)"}}},
        {"lsm_interp_summary.csv",
         {{"label", "contract label"},
          {"scheme", "interpolation scheme"},
          {"max_abs_ee_error", "max over horizons of |ee_error|"},
          {"max_abs_pfe_error", "max over horizons of |pfe_error|"}}},
    };
}

class Harness {
public:
    Harness(ExperimentConfig cfg, RunManifest& manifest) : cfg_(std::move(cfg)), manifest_(manifest) {
        std::filesystem::create_directories(manifest_.out_dir());
    }

    const ExperimentConfig& config() const noexcept { return cfg_; }

    void converge() {
        StageTimer timer(manifest_, "converge");
        CsvWriter summary(path("converge_summary.csv"),
                          {"label", "model", "tolerance", "epochs_to_tolerance", "final_error"});
        register_output("converge_summary.csv");
        for (double m : cfg_.spec.moneyness) {
            const BermudanSpec spec = cfg_.bermudan(m);
            const std::string label = moneyness_label(spec.side, m);
            const double cos_price = price_cos(cfg_.market, spec, cfg_.cos);
            const std::string name = "converge_" + label + ".csv";
            {
                CsvWriter csv(path(name), {"epoch", "model", "price", "cos_price", "error"});
                for (auto mode : {TrainingMode::hybrid, TrainingMode::joint_adam}) {
                    TrainingConfig tc = cfg_.training;
                    tc.mode = mode;
                    const auto prices =
                        converge_prices(cfg_.market, spec, tc, cfg_.paths.n_train, cfg_.paths.train_seed());
                    std::vector<double> errors;
                    for (std::size_t e = 0; e < prices.size(); ++e) {
                        errors.push_back(prices[e] - cos_price);
                        csv.row({static_cast<long>(e), model_label(mode), prices[e], cos_price, errors.back()});
                    }
                    summary.row({label, model_label(mode), cfg_.converge.tolerance,
                                 static_cast<long>(epochs_to_tolerance(errors, cfg_.converge.tolerance)),
                                 errors.back()});
                }
            }
            register_output(name);
            plot(name, {"Model error convergence, " + label, "epoch", "error", "model", {}, true, true, false},
                 "converge_" + label + ".svg");
        }
    }

    void pv_dist() {
        StageTimer timer(manifest_, "pv-dist");
        CsvWriter summary(path("pv_dist_summary.csv"), {"label", "t", "model", "max_abs_error", "rms_error"});
        register_output("pv_dist_summary.csv");
        for (double m : cfg_.spec.moneyness) {
            const BermudanSpec spec = cfg_.bermudan(m);
            const std::string label = moneyness_label(spec.side, m);
            const FittedSet fit = fit_models(cfg_, spec);
            const PathGrid paths = validation_grid(spec, {});
            const ValueSurface rs = rlnn_surface(fit.models.rlnn->layers, cfg_.market, spec, paths,
                                                 fit.models.rlnn->t0_price);
            const ValueSurface ls = to_surface(apply_lsm(*fit.models.lsm, paths, spec));
            const ValueSurface cs = cos_surface(*fit.models.cos, cfg_.market, spec, paths);
            const std::string name = "pv_dist_" + label + ".csv";
            {
                CsvWriter csv(path(name), {"t", "path", "spot", "v_rlnn", "v_lsm", "v_cos", "err_rlnn", "err_lsm"});
                for (Eigen::Index d = 0; d < static_cast<Eigen::Index>(spec.n_dates()); ++d) {
                    const double t = spec.exercise_times[static_cast<std::size_t>(d)];
                    const auto col = paths.column_of(t);
                    for (Eigen::Index j = 0; j < paths.n_paths(); ++j) {
                        const double vr = rs.values(j, d), vl = ls.values(j, d), vc = cs.values(j, d);
                        csv.row({t, static_cast<long>(j), paths.values(j, col), vr, vl, vc, vr - vc, vl - vc});
                    }
                    for (const auto& [model, surf] : {std::pair{"rlnn", &rs}, std::pair{"lsm", &ls}}) {
                        const Eigen::VectorXd err = surf->values.col(d) - cs.values.col(d);
                        summary.row({label, t, std::string(model), err.cwiseAbs().maxCoeff(),
                                     std::sqrt(err.squaredNorm() / static_cast<double>(err.size()))});
                    }
                }
            }
            register_output(name);
            for (std::size_t d = 0; d < spec.n_dates(); ++d) {
                const std::string t = format_number(spec.exercise_times[d]);
                const std::string tag = label + "_t" + std::to_string(d + 1);
                for (const char* err : {"err_rlnn", "err_lsm"})
                    plot(name, {"PV error vs COS, " + label + ", t=" + t, "spot", err, "", {{"t", t}}, false, false, true},
                         "pv_dist_" + tag + "_" + err + ".svg");
            }
        }
    }

    /// Exposure profiles for every contract. Scenario 0 is the risk-neutral
    /// measure; other ids select configured real-world scenarios.
    void exposure(const std::vector<int>& scenario_ids, bool fine) {
        StageTimer timer(manifest_, "exposure");
        std::vector<Scenario> scenarios;
        for (int id : scenario_ids) {
            if (id == 0) {
                scenarios.push_back({0, std::nullopt});
                continue;
            }
            const auto it = std::find_if(cfg_.scenarios.begin(), cfg_.scenarios.end(),
                                         [&](const Scenario& s) { return s.id == id; });
            if (it == cfg_.scenarios.end()) throw ConfigError("no scenario with id " + std::to_string(id));
            scenarios.push_back(*it);
        }
        for (double m : cfg_.spec.moneyness) {
            const BermudanSpec spec = cfg_.bermudan(m);
            const std::string label = moneyness_label(spec.side, m);
            const FittedSet fit = fit_models(cfg_, spec);
            const auto horizons = exposure_horizons(spec, false, fine ? cfg_.fine_horizons(spec) : std::vector<double>{});
            const auto results = run_scenarios(cfg_.market, spec, fit.models, scenarios, horizons,
                                               cfg_.paths.n_validation, cfg_.paths.validation_seed());
            const std::string name = "exposure_" + label + ".csv";
            {
                CsvWriter csv(path(name), {"t", "model", "measure", "scenario", "EE", "PFE", "n_alive"});
                for (const auto& sr : results)
                    for (const auto& p : sr.profiles)
                        for (std::size_t h = 0; h < p.horizons.size(); ++h)
                            csv.row({p.horizons[h], std::string(to_string(p.model)), std::string(to_string(p.measure)),
                                     static_cast<long>(sr.scenario.id), p.ee[static_cast<Eigen::Index>(h)],
                                     p.pfe[static_cast<Eigen::Index>(h)],
                                     static_cast<long>(p.n_alive[static_cast<Eigen::Index>(h)])});
            }
            register_output(name);
            for (const auto& sr : results) {
                const std::string sc = std::to_string(sr.scenario.id);
                for (const char* measure : {"EE", "PFE"})
                    plot(name,
                         {std::string(measure) + ", " + label + ", scenario " + sc, "t", measure, "model",
                          {{"scenario", sc}}, false, false, false},
                         "exposure_" + label + "_s" + sc + "_" + measure + ".svg");
            }
        }
    }

    void lsm_interp() {
        StageTimer timer(manifest_, "lsm-interp");
        CsvWriter summary(path("lsm_interp_summary.csv"),
                          {"label", "scheme", "max_abs_ee_error", "max_abs_pfe_error"});
        register_output("lsm_interp_summary.csv");
        for (double m : cfg_.spec.moneyness) {
            const BermudanSpec spec = cfg_.bermudan(m);
            const std::string label = moneyness_label(spec.side, m);
            const PathGrid lsm_paths = simulate_gbm(cfg_.market, std::nullopt, spec.exercise_times,
                                                    cfg_.paths.n_train, cfg_.paths.lsm_seed());
            const LsmResult fitted = fit_lsm(lsm_paths, spec, cfg_.market, LsmOptions{cfg_.lsm.classical});
            const auto fine = cfg_.fine_horizons(spec);
            const auto table = lsm_interp_profiles(fitted, spec, fine);
            const std::string name = "lsm_interp_" + label + ".csv";
            {
                CsvWriter csv(path(name), {"t", "scheme", "EE", "PFE", "ee_error", "pfe_error"});
                const auto& truth = table.at("true_fit");
                for (const auto& [scheme, p] : table) {
                    double max_ee = 0.0, max_pfe = 0.0;
                    for (Eigen::Index h = 0; h < p.ee.size(); ++h) {
                        const double ee_err = p.ee[h] - truth.ee[h];
                        const double pfe_err = p.pfe[h] - truth.pfe[h];
                        max_ee = std::max(max_ee, std::abs(ee_err));
                        max_pfe = std::max(max_pfe, std::abs(pfe_err));
                        csv.row({p.horizons[static_cast<std::size_t>(h)], scheme, p.ee[h], p.pfe[h], ee_err, pfe_err});
                    }
                    summary.row({label, scheme, max_ee, max_pfe});
                }
            }
            register_output(name);
            for (const char* measure : {"EE", "ee_error"})
                plot(name, {"LSM interpolation, " + label, "t", measure, "scheme", {}, false, false, false},
                     "lsm_interp_" + label + "_" + measure + ".svg");
        }
    }

    /// LSM exposure profiles with fine-horizon values from each interpolation
    /// scheme and from a cubic regression at the horizon itself (true_fit).
    /// Stopping times and exercise-date values are shared by all schemes.
    std::map<std::string, ExposureProfile> lsm_interp_profiles(const LsmResult& fitted, const BermudanSpec& spec,
                                                                const std::vector<double>& fine) const {
        const auto horizons = exposure_horizons(spec, false, fine);
        const PathGrid paths = validation_grid(spec, fine);
        const LsmResult applied = apply_lsm(fitted, paths, spec);
        const StoppingTimes taus = stopping_times(to_surface(applied), spec, paths);
        std::map<std::string, ExposureProfile> out;
        for (const std::string scheme : {"true_fit", "option_value", "continuation_value", "params"}) {
            Eigen::MatrixXd values(paths.n_paths(), static_cast<Eigen::Index>(horizons.size()));
            for (std::size_t h = 0; h < horizons.size(); ++h) {
                const double t = horizons[h];
                const auto col = static_cast<Eigen::Index>(h);
                const auto date = std::find_if(spec.exercise_times.begin(), spec.exercise_times.end(),
                                               [&](double x) { return std::abs(x - t) <= 1e-12; });
                if (date != spec.exercise_times.end()) {
                    values.col(col) = applied.values.col(date - spec.exercise_times.begin());
                } else if (scheme == "true_fit") {
                    values.col(col) = true_fit(applied, spec, paths, t, cfg_.market.r).values;
                } else if (scheme == "option_value") {
                    values.col(col) = interp_option_value(applied, spec, paths, t);
                } else if (scheme == "continuation_value") {
                    values.col(col) = interp_continuation_value(applied, spec, paths, t);
                } else {
                    values.col(col) = interp_params(applied, spec, paths, t, cfg_.lsm.params_boundary);
                }
            }
            out[scheme] = profiles(exposure_cube(values, horizons, taus, ModelKind::lsm, paths.measure));
        }
        return out;
    }

    /// Risk-neutral validation grid over the exercise dates and extra horizons.
    PathGrid validation_grid(const BermudanSpec& spec, const std::vector<double>& extra) const {
        std::vector<double> times = spec.exercise_times;
        times.insert(times.end(), extra.begin(), extra.end());
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end(),
                                [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
                    times.end());
        return simulate_gbm(cfg_.market, std::nullopt, times, cfg_.paths.n_validation, cfg_.paths.validation_seed());
    }

    void write_schema() {
        std::ofstream out(path("schema.json"));
        out << csv_schema().dump(2) << '\n';
        out.close();
        register_output("schema.json");
    }

private:
    std::string path(const std::string& name) const { return (manifest_.out_dir() / name).string(); }

    void register_output(const std::string& name) { manifest_.add_output(name); }

    void plot(const std::string& csv, const PlotSpec& spec, const std::string& svg) {
        plot_csv(path(csv), spec, path(svg));
        register_output(svg);
    }

    ExperimentConfig cfg_;
    RunManifest& manifest_;
};

}  // namespace rlnn::bench
