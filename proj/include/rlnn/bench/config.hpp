#pragma once

// Experiment configuration for the benchmark harness. JSON with fixed blocks;
// unknown keys are rejected at every level.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlnn/bermudan_engine.hpp"
#include "rlnn/cos.hpp"
#include "rlnn/errors.hpp"
#include "rlnn/exposure.hpp"
#include "rlnn/hedge_net.hpp"
#include "rlnn/lsm.hpp"
#include "rlnn/market_model.hpp"

namespace rlnn::bench {

using nlohmann::json;

struct SpecBlock {
    OptionSide side = OptionSide::put;
    double maturity = 1.0;
    std::string schedule = "quarterly";
    std::vector<double> exercise_times;  // overrides schedule when non-empty
    std::vector<double> moneyness{1.00, 1.10, 0.90};
};

struct PathsBlock {
    Eigen::Index n_train = 50000;
    Eigen::Index n_validation = 5000;
    std::uint64_t seed = 20240601;

    std::uint64_t train_seed() const noexcept { return seed; }
    std::uint64_t lsm_seed() const noexcept { return derive_seed(seed, 1); }
    std::uint64_t validation_seed() const noexcept { return derive_seed(seed, 2); }
};

struct LsmBlock {
    bool classical = false;
    LsmInterp interp = LsmInterp::option_value;
    ParamsBoundary params_boundary = ParamsBoundary::value_blend;
};

struct FineGridBlock {
    bool enabled = false;
    std::vector<double> horizons;  // empty: interval midpoints
};

struct ConvergeBlock {
    double tolerance = 1e-3;
};

struct ExperimentConfig {
    MarketParams market;
    SpecBlock spec;
    PathsBlock paths;
    TrainingConfig training;
    CosConfig cos;
    LsmBlock lsm;
    std::vector<Scenario> scenarios = default_scenarios();
    FineGridBlock fine_grid;
    ConvergeBlock converge;
    std::string output = "out";

    void validate() const;
    std::vector<double> exercise_times() const;
    BermudanSpec bermudan(double moneyness) const;
    std::vector<double> fine_horizons(const BermudanSpec& spec) const;
};

inline std::string moneyness_label(OptionSide side, double moneyness) {
    const long pct = std::lround(moneyness * 100.0);
    std::string tag;
    if (pct == 100) tag = "atm";
    else if ((side == OptionSide::put) == (moneyness > 1.0)) tag = "itm";
    else tag = "otm";
    return tag + std::to_string(pct);
}

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

inline OptionSide parse_side(const std::string& s) {
    if (s == "put") return OptionSide::put;
    if (s == "call") return OptionSide::call;
    throw ConfigError("spec.side: expected 'put' or 'call', got '" + s + "'");
}

inline TrainingMode parse_mode(const std::string& s) {
    if (s == "hybrid") return TrainingMode::hybrid;
    if (s == "joint_adam") return TrainingMode::joint_adam;
    throw ConfigError("training.mode: expected 'hybrid' or 'joint_adam', got '" + s + "'");
}

inline LsmInterp parse_interp(const std::string& s) {
    if (s == "option_value") return LsmInterp::option_value;
    if (s == "continuation_value") return LsmInterp::continuation_value;
    if (s == "params") return LsmInterp::params;
    throw ConfigError("lsm.interp: unknown scheme '" + s + "'");
}

inline std::string to_string(LsmInterp s) {
    switch (s) {
        case LsmInterp::option_value: return "option_value";
        case LsmInterp::continuation_value: return "continuation_value";
        case LsmInterp::params: return "params";
    }
    return "?";
}

inline ParamsBoundary parse_boundary(const std::string& s) {
    if (s == "value_blend") return ParamsBoundary::value_blend;
    if (s == "intermediate_spot") return ParamsBoundary::intermediate_spot;
    throw ConfigError("lsm.params_boundary: unknown value '" + s + "'");
}

inline std::string to_string(ParamsBoundary b) {
    return b == ParamsBoundary::value_blend ? "value_blend" : "intermediate_spot";
}

inline int schedule_dates(const std::string& s) {
    if (s == "annual") return 1;
    if (s == "semiannual") return 2;
    if (s == "quarterly") return 4;
    if (s == "monthly") return 12;
    throw ConfigError("spec.schedule: expected annual, semiannual, quarterly or monthly, got '" + s + "'");
}

}  // namespace detail

inline std::vector<double> ExperimentConfig::exercise_times() const {
    if (!spec.exercise_times.empty()) return spec.exercise_times;
    const int n = detail::schedule_dates(spec.schedule);
    std::vector<double> t;
    for (int m = 1; m <= n; ++m) t.push_back(spec.maturity * m / n);
    return t;
}

inline BermudanSpec ExperimentConfig::bermudan(double moneyness) const {
    BermudanSpec s{moneyness * market.s0, spec.side, exercise_times()};
    s.validate();
    return s;
}

inline std::vector<double> ExperimentConfig::fine_horizons(const BermudanSpec& s) const {
    if (!fine_grid.horizons.empty()) return fine_grid.horizons;
    std::vector<double> out;
    for (std::size_t m = 0; m < s.n_dates(); ++m) out.push_back(0.5 * (s.previous_time(m) + s.exercise_times[m]));
    return out;
}

inline void ExperimentConfig::validate() const {
    auto wrap = [](auto&& fn) {
        try {
            fn();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    };
    wrap([&] { market.validate(); });
    wrap([&] { training.validate(); });
    wrap([&] { cos.validate(); });
    if (!(spec.maturity > 0.0)) throw ConfigError("spec.maturity must be positive");
    if (spec.moneyness.empty()) throw ConfigError("spec.moneyness must not be empty");
    for (double m : spec.moneyness)
        if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("spec.moneyness entries must be positive");
    wrap([&] { bermudan(1.0); });
    if (paths.n_train < 1) throw ConfigError("paths.n_train must be >= 1");
    if (paths.n_validation < 100) throw ConfigError("paths.n_validation must be >= 100");
    for (const auto& sc : scenarios) {
        if (sc.id < 1) throw ConfigError("scenarios: ids must be >= 1");
        if (!sc.real_world) throw ConfigError("scenarios: real-world parameters required");
        wrap([&] { sc.real_world->validate(); });
    }
    const auto t = exercise_times();
    for (double h : fine_grid.horizons)
        if (!(h > 0.0 && h < t.back())) throw ConfigError("fine_grid.horizons must lie in (0, T)");
    if (!(converge.tolerance > 0.0)) throw ConfigError("converge.tolerance must be positive");
    if (output.empty()) throw ConfigError("output must not be empty");
}

inline ExperimentConfig parse_config(const json& root) {
    using detail::read;
    ExperimentConfig c;
    detail::check_keys(root, {"market", "spec", "paths", "training", "cos", "lsm", "scenarios", "fine_grid",
                              "converge", "output"},
                       "config");
    if (root.contains("market")) {
        const auto& j = root["market"];
        detail::check_keys(j, {"s0", "r", "sigma"}, "market");
        read(j, "s0", c.market.s0, "market");
        read(j, "r", c.market.r, "market");
        read(j, "sigma", c.market.sigma, "market");
    }
    if (root.contains("spec")) {
        const auto& j = root["spec"];
        detail::check_keys(j, {"side", "maturity", "schedule", "exercise_times", "moneyness"}, "spec");
        std::string side = std::string(to_string(c.spec.side));
        read(j, "side", side, "spec");
        c.spec.side = detail::parse_side(side);
        read(j, "maturity", c.spec.maturity, "spec");
        read(j, "schedule", c.spec.schedule, "spec");
        read(j, "exercise_times", c.spec.exercise_times, "spec");
        read(j, "moneyness", c.spec.moneyness, "spec");
        if (!c.spec.exercise_times.empty()) c.spec.maturity = c.spec.exercise_times.back();
    }
    if (root.contains("paths")) {
        const auto& j = root["paths"];
        detail::check_keys(j, {"n_train", "n_validation", "seed"}, "paths");
        read(j, "n_train", c.paths.n_train, "paths");
        read(j, "n_validation", c.paths.n_validation, "paths");
        read(j, "seed", c.paths.seed, "paths");
    }
    if (root.contains("training")) {
        const auto& j = root["training"];
        auto& t = c.training;
        detail::check_keys(j, {"p_call", "p_put", "moneyness_lo", "moneyness_hi", "lr", "beta1", "beta2", "eps",
                               "epochs", "batch_size", "batches_per_epoch", "strike_floor", "stop_tol",
                               "stop_patience", "mode"},
                           "training");
        read(j, "p_call", t.p_call, "training");
        read(j, "p_put", t.p_put, "training");
        read(j, "moneyness_lo", t.moneyness_lo, "training");
        read(j, "moneyness_hi", t.moneyness_hi, "training");
        read(j, "lr", t.lr, "training");
        read(j, "beta1", t.beta1, "training");
        read(j, "beta2", t.beta2, "training");
        read(j, "eps", t.eps, "training");
        read(j, "epochs", t.epochs, "training");
        read(j, "batch_size", t.batch_size, "training");
        read(j, "batches_per_epoch", t.batches_per_epoch, "training");
        read(j, "strike_floor", t.strike_floor, "training");
        read(j, "stop_tol", t.stop_tol, "training");
        read(j, "stop_patience", t.stop_patience, "training");
        if (j.contains("mode")) t.mode = detail::parse_mode(j["mode"].get<std::string>());
    }
    if (root.contains("cos")) {
        const auto& j = root["cos"];
        detail::check_keys(j, {"n_terms", "range_width", "newton_tol", "newton_max_iter", "use_fft"}, "cos");
        read(j, "n_terms", c.cos.n_terms, "cos");
        read(j, "range_width", c.cos.range_width, "cos");
        read(j, "newton_tol", c.cos.newton_tol, "cos");
        read(j, "newton_max_iter", c.cos.newton_max_iter, "cos");
        read(j, "use_fft", c.cos.use_fft, "cos");
    }
    if (root.contains("lsm")) {
        const auto& j = root["lsm"];
        detail::check_keys(j, {"classical", "interp", "params_boundary"}, "lsm");
        read(j, "classical", c.lsm.classical, "lsm");
        if (j.contains("interp")) c.lsm.interp = detail::parse_interp(j["interp"].get<std::string>());
        if (j.contains("params_boundary"))
            c.lsm.params_boundary = detail::parse_boundary(j["params_boundary"].get<std::string>());
    }
    if (root.contains("scenarios")) {
        const auto& arr = root["scenarios"];
        if (!arr.is_array()) throw ConfigError("scenarios: expected an array");
        c.scenarios.clear();
        for (const auto& j : arr) {
            detail::check_keys(j, {"id", "mu", "sigma_real"}, "scenarios[]");
            Scenario sc;
            RealWorldParams rw;
            read(j, "id", sc.id, "scenarios[]");
            read(j, "mu", rw.mu, "scenarios[]");
            read(j, "sigma_real", rw.sigma_real, "scenarios[]");
            sc.real_world = rw;
            c.scenarios.push_back(sc);
        }
    }
    if (root.contains("fine_grid")) {
        const auto& j = root["fine_grid"];
        detail::check_keys(j, {"enabled", "horizons"}, "fine_grid");
        read(j, "enabled", c.fine_grid.enabled, "fine_grid");
        read(j, "horizons", c.fine_grid.horizons, "fine_grid");
        std::sort(c.fine_grid.horizons.begin(), c.fine_grid.horizons.end());
    }
    if (root.contains("converge")) {
        const auto& j = root["converge"];
        detail::check_keys(j, {"tolerance"}, "converge");
        read(j, "tolerance", c.converge.tolerance, "converge");
    }
    read(root, "output", c.output, "config");
    c.validate();
    return c;
}

inline json to_json(const ExperimentConfig& c) {
    json scenarios = json::array();
    for (const auto& sc : c.scenarios)
        scenarios.push_back({{"id", sc.id}, {"mu", sc.real_world->mu}, {"sigma_real", sc.real_world->sigma_real}});
    const auto& t = c.training;
    return {
        {"market", {{"s0", c.market.s0}, {"r", c.market.r}, {"sigma", c.market.sigma}}},
        {"spec",
         {{"side", std::string(to_string(c.spec.side))},
          {"maturity", c.spec.maturity},
          {"schedule", c.spec.schedule},
          {"exercise_times", c.spec.exercise_times},
          {"moneyness", c.spec.moneyness}}},
        {"paths", {{"n_train", c.paths.n_train}, {"n_validation", c.paths.n_validation}, {"seed", c.paths.seed}}},
        {"training",
         {{"p_call", t.p_call},
          {"p_put", t.p_put},
          {"moneyness_lo", t.moneyness_lo},
          {"moneyness_hi", t.moneyness_hi},
          {"lr", t.lr},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"eps", t.eps},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"batches_per_epoch", t.batches_per_epoch},
          {"strike_floor", t.strike_floor},
          {"stop_tol", t.stop_tol},
          {"stop_patience", t.stop_patience},
          {"mode", t.mode == TrainingMode::hybrid ? "hybrid" : "joint_adam"}}},
        {"cos",
         {{"n_terms", c.cos.n_terms},
          {"range_width", c.cos.range_width},
          {"newton_tol", c.cos.newton_tol},
          {"newton_max_iter", c.cos.newton_max_iter},
          {"use_fft", c.cos.use_fft}}},
        {"lsm",
         {{"classical", c.lsm.classical},
          {"interp", detail::to_string(c.lsm.interp)},
          {"params_boundary", detail::to_string(c.lsm.params_boundary)}}},
        {"scenarios", scenarios},
        {"fine_grid", {{"enabled", c.fine_grid.enabled}, {"horizons", c.fine_grid.horizons}}},
        {"converge", {{"tolerance", c.converge.tolerance}}},
        {"output", c.output},
    };
}

/// Reads a config file. A run manifest is also accepted, in which case its
/// config snapshot is used.
inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (root.is_object() && root.value("format", std::string{}) == "rlnn-bench-manifest") root = root.at("config");
    return parse_config(root);
}

}  // namespace rlnn::bench
