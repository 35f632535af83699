// Prices an at-the-money quarterly Bermudan put with the hedge network, LSM
// and COS, then prints risk-neutral EE/PFE profiles for each model.
//
//   price_bermudan [n_paths] [seed]

#include <cstdio>
#include <cstdlib>

#include "rlnn/rlnn.hpp"

int main(int argc, char** argv) {
    using namespace rlnn;
    const Eigen::Index n = argc > 1 ? std::atol(argv[1]) : 50000;
    const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 42;

    const MarketParams market{1.0, 0.06, 0.2};
    const auto spec = BermudanSpec::equally_spaced(1.0, OptionSide::put, 1.0, 4);

    FittedModels models;
    models.rlnn = price_rlnn(market, spec, TrainingConfig{}, n, seed);
    models.lsm = fit_lsm(simulate_gbm(market, std::nullopt, spec.exercise_times, n, derive_seed(seed, 1)), spec, market);
    models.cos = build_cos_workspace(market, spec, CosConfig{});

    const double cos = price_cos(market, spec);
    const double eur = black_scholes(market.s0, spec.strike, market.r, market.sigma, spec.maturity(), spec.side);
    std::printf("European   %.6f\n", eur);
    std::printf("COS        %.6f\n", cos);
    std::printf("RLNN       %.6f  (%+.2e)\n", models.rlnn->t0_price, models.rlnn->t0_price - cos);
    std::printf("LSM        %.6f  (%+.2e)\n", models.lsm->t0_price, models.lsm->t0_price - cos);

    const auto horizons = exposure_horizons(spec, true);
    const auto runs = run_scenarios(market, spec, models, {{0, std::nullopt}}, horizons, 5000, derive_seed(seed, 2));
    std::printf("\n%-6s %-5s %9s %9s %7s\n", "t", "model", "EE", "PFE", "alive");
    for (std::size_t h = 0; h < horizons.size(); ++h)
        for (const auto& p : runs.front().profiles) {
            const auto k = static_cast<Eigen::Index>(h);
            std::printf("%-6.3f %-5s %9.5f %9.5f %7d\n", horizons[h], std::string(to_string(p.model)).c_str(), p.ee[k],
                        p.pfe[k], p.n_alive[k]);
        }
}
