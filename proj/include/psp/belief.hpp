#pragma once

#include "psp/linalg.hpp"
#include "psp/world.hpp"

#include <array>
#include <cstdint>
#include <map>

namespace psp::plan {

struct BeliefConfig {
    double cell_size = 12.5;
    double obs_noise_var = 0.25;   // label noise variance sigma^2
    double prior_bias = 1.6;       // prior mean of the bias weight (free space)
    double prior_sigma_w = 0.35;   // prior sd of the spatial weights
    double prior_sigma_b = 0.45;   // prior sd of the bias weight
};

using CellKey = std::pair<long long, long long>;

// Posterior over one cell's linear classifier w (dx, dy, bias), with the
// sufficient statistics kept so updates are order-independent in batch.
struct CellBelief {
    std::array<double, 3> mu{};
    Mat sigma{3, 3};
    Mat xtx{3, 3};
    std::array<double, 3> xty{};
    long long n_obs = 0;
};

// One Bayesian linear classifier per grid cell; sign(w . phi(p)) > 0
// means clear. Conjugate Gaussian update on +-1 labels with fixed noise.
struct BeliefGrid {
    explicit BeliefGrid(BeliefConfig config = {});

    CellKey key_of(Vec2 p) const;
    Vec2 cell_center(CellKey key) const;
    std::array<double, 3> features(Vec2 p, CellKey key) const;

    const CellBelief& cell(CellKey key) const;  // prior if untouched
    const CellBelief& cell_at(Vec2 p) const { return cell(key_of(p)); }

    void observe(const std::vector<LabeledPoint>& points);

    // Pr(w . phi(p) > 0) under the cell posterior; diagnostics and tests
    double clear_probability(Vec2 p) const;

    double total_sigma_trace() const;

    BeliefConfig config;
    CellBelief prior;
    std::map<CellKey, CellBelief> cells;
};

} // namespace psp::plan
