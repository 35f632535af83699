#pragma once

// Versioned JSON artifacts for fitted layers, LSM coefficients and value
// surfaces, so exposure runs can reuse fits without retraining.

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rlnn/bermudan_engine.hpp"
#include "rlnn/errors.hpp"
#include "rlnn/hedge_net.hpp"
#include "rlnn/lsm.hpp"

namespace rlnn {

inline constexpr int artifact_version = 1;
inline constexpr const char* artifact_format = "rlnn-artifact";

struct Artifact {
    MarketParams market;
    BermudanSpec spec;
    std::optional<RlnnResult> rlnn;
    std::optional<LsmResult> lsm;  // coefficients and t0 price; per-path values go in surfaces
    std::optional<ValueSurface> rlnn_surface;
    std::optional<ValueSurface> lsm_surface;
};

namespace detail {

inline nlohmann::json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Eigen::VectorXd vector_from(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const Eigen::VectorXd row = m.row(i).transpose();
        rows.push_back(vector_json(row));
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

inline Eigen::MatrixXd matrix_from(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    require(static_cast<Eigen::Index>(data.size()) == rows, "artifact: matrix row count mismatch");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto row = data[static_cast<std::size_t>(i)].get<std::vector<double>>();
        require(static_cast<Eigen::Index>(row.size()) == cols, "artifact: matrix column count mismatch");
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)];
    }
    return m;
}

inline nlohmann::json surface_json(const ValueSurface& s) {
    return {{"t0_price", s.t0_price},
            {"t0_continuation", s.t0_continuation},
            {"values", matrix_json(s.values)},
            {"continuation", matrix_json(s.continuation)}};
}

inline ValueSurface surface_from(const nlohmann::json& j) {
    ValueSurface s;
    s.t0_price = j.at("t0_price").get<double>();
    s.t0_continuation = j.at("t0_continuation").get<double>();
    s.values = matrix_from(j.at("values"));
    s.continuation = matrix_from(j.at("continuation"));
    return s;
}

inline OptionSide side_from(const std::string& s) {
    if (s == "put") return OptionSide::put;
    if (s == "call") return OptionSide::call;
    throw std::invalid_argument("unknown option side: " + s);
}

}  // namespace detail

inline nlohmann::json to_json(const Artifact& a) {
    using nlohmann::json;
    json j;
    j["format"] = artifact_format;
    j["version"] = artifact_version;
    j["market"] = {{"s0", a.market.s0}, {"r", a.market.r}, {"sigma", a.market.sigma}};
    j["spec"] = {{"strike", a.spec.strike},
                 {"side", std::string(to_string(a.spec.side))},
                 {"exercise_times", a.spec.exercise_times}};
    if (a.rlnn) {
        json layers = json::array();
        for (const auto& l : a.rlnn->layers) {
            std::vector<int> cp(l.cp.data(), l.cp.data() + l.cp.size());
            layers.push_back({{"exercise_time", l.exercise_time},
                              {"strikes", detail::vector_json(l.strikes)},
                              {"weights", detail::vector_json(l.weights)},
                              {"cp", cp}});
        }
        j["rlnn"] = {{"t0_price", a.rlnn->t0_price}, {"layers", layers}};
    }
    if (a.lsm) {
        json coeffs = json::array();
        for (const auto& c : a.lsm->coeffs.per_date) coeffs.push_back(std::vector<double>(c.begin(), c.end()));
        j["lsm"] = {{"t0_price", a.lsm->t0_price}, {"scale", a.lsm->coeffs.scale}, {"coefficients", coeffs}};
    }
    if (a.rlnn_surface) j["rlnn_surface"] = detail::surface_json(*a.rlnn_surface);
    if (a.lsm_surface) j["lsm_surface"] = detail::surface_json(*a.lsm_surface);
    return j;
}

inline Artifact artifact_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string{}) != artifact_format) throw ConfigError("artifact: unrecognised format");
    const int version = j.at("version").get<int>();
    if (version != artifact_version)
        throw ConfigError("artifact: unsupported version " + std::to_string(version));
    Artifact a;
    const auto& m = j.at("market");
    a.market = {m.at("s0").get<double>(), m.at("r").get<double>(), m.at("sigma").get<double>()};
    const auto& s = j.at("spec");
    a.spec.strike = s.at("strike").get<double>();
    a.spec.side = detail::side_from(s.at("side").get<std::string>());
    a.spec.exercise_times = s.at("exercise_times").get<std::vector<double>>();
    a.market.validate();
    a.spec.validate();
    if (j.contains("rlnn")) {
        RlnnResult r;
        r.t0_price = j["rlnn"].at("t0_price").get<double>();
        for (const auto& l : j["rlnn"].at("layers")) {
            HedgeLayer layer;
            layer.exercise_time = l.at("exercise_time").get<double>();
            layer.strikes = detail::vector_from(l.at("strikes"));
            layer.weights = detail::vector_from(l.at("weights"));
            const auto cp = l.at("cp").get<std::vector<int>>();
            layer.cp = Eigen::Map<const Eigen::VectorXi>(cp.data(), static_cast<Eigen::Index>(cp.size()));
            layer.validate();
            r.layers.push_back(std::move(layer));
        }
        detail::require(r.layers.size() == a.spec.n_dates(), "artifact: one layer per exercise date required");
        r.traces.resize(r.layers.size());
        a.rlnn = std::move(r);
    }
    if (j.contains("lsm")) {
        LsmResult l;
        l.t0_price = j["lsm"].at("t0_price").get<double>();
        l.coeffs.scale = j["lsm"].at("scale").get<double>();
        for (const auto& c : j["lsm"].at("coefficients")) {
            const auto v = c.get<std::vector<double>>();
            detail::require(v.size() == 4, "artifact: cubic coefficients need 4 entries");
            l.coeffs.per_date.push_back({v[0], v[1], v[2], v[3]});
        }
        a.lsm = std::move(l);
    }
    if (j.contains("rlnn_surface")) a.rlnn_surface = detail::surface_from(j["rlnn_surface"]);
    if (j.contains("lsm_surface")) a.lsm_surface = detail::surface_from(j["lsm_surface"]);
    return a;
}

inline void save_artifact(const Artifact& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    // max_digits10 round trip
    out << to_json(a).dump(1) << '\n';
}

inline Artifact load_artifact(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return artifact_from_json(nlohmann::json::parse(in));
}

}  // namespace rlnn
