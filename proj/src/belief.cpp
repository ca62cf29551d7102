#include "psp/belief.hpp"

#include "psp/error.hpp"
#include "psp/normal.hpp"

#include <cmath>
#include <set>

namespace psp::plan {

BeliefGrid::BeliefGrid(BeliefConfig cfg) : config(cfg) {
    prior.mu = {0.0, 0.0, config.prior_bias};
    prior.sigma = Mat(3, 3);
    prior.sigma(0, 0) = config.prior_sigma_w * config.prior_sigma_w;
    prior.sigma(1, 1) = config.prior_sigma_w * config.prior_sigma_w;
    prior.sigma(2, 2) = config.prior_sigma_b * config.prior_sigma_b;
}

CellKey BeliefGrid::key_of(Vec2 p) const {
    return {static_cast<long long>(std::floor(p.x / config.cell_size)),
            static_cast<long long>(std::floor(p.y / config.cell_size))};
}

Vec2 BeliefGrid::cell_center(CellKey key) const {
    return {(static_cast<double>(key.first) + 0.5) * config.cell_size,
            (static_cast<double>(key.second) + 0.5) * config.cell_size};
}

std::array<double, 3> BeliefGrid::features(Vec2 p, CellKey key) const {
    Vec2 center = cell_center(key);
    double scale = config.cell_size * 0.5;
    return {(p.x - center.x) / scale, (p.y - center.y) / scale, 1.0};
}

const CellBelief& BeliefGrid::cell(CellKey key) const {
    auto it = cells.find(key);
    return it == cells.end() ? prior : it->second;
}

void BeliefGrid::observe(const std::vector<LabeledPoint>& points) {
    if (points.empty()) return;
    std::set<CellKey> touched;
    for (const LabeledPoint& point : points) {
        CellKey key = key_of(point.p);
        CellBelief& cell = cells.try_emplace(key, prior).first->second;
        std::array<double, 3> phi = features(point.p, key);
        double label = point.label > 0 ? 1.0 : -1.0;
        for (int r = 0; r < 3; r++) {
            for (int c = 0; c < 3; c++) cell.xtx(r, c) += phi[static_cast<std::size_t>(r)] * phi[static_cast<std::size_t>(c)];
            cell.xty[static_cast<std::size_t>(r)] += phi[static_cast<std::size_t>(r)] * label;
        }
        cell.n_obs++;
        touched.insert(key);
    }

    // posterior from sufficient statistics (batch form, order-independent):
    //   Sigma = (Sigma0^-1 + XtX / s2)^-1,  mu = Sigma (Sigma0^-1 mu0 + Xty / s2)
    Mat prior_inv;
    if (!invert(prior.sigma, prior_inv)) {
        fail(Error::Kind::Inference, "prior covariance is singular");
    }
    for (CellKey key : touched) {
        CellBelief& cell = cells[key];
        Mat precision = prior_inv;
        for (int r = 0; r < 3; r++) {
            for (int c = 0; c < 3; c++) {
                precision(r, c) += cell.xtx(r, c) / config.obs_noise_var;
            }
        }
        if (!invert(precision, cell.sigma)) {
            fail(Error::Kind::Inference, "posterior precision is singular");
        }
        std::vector<double> rhs(3, 0.0);
        for (int r = 0; r < 3; r++) {
            double v = cell.xty[static_cast<std::size_t>(r)] / config.obs_noise_var;
            for (int c = 0; c < 3; c++) v += prior_inv(r, c) * prior.mu[static_cast<std::size_t>(c)];
            rhs[static_cast<std::size_t>(r)] = v;
        }
        for (int r = 0; r < 3; r++) {
            double v = 0.0;
            for (int c = 0; c < 3; c++) v += cell.sigma(r, c) * rhs[static_cast<std::size_t>(c)];
            cell.mu[static_cast<std::size_t>(r)] = v;
        }
    }
}

double BeliefGrid::clear_probability(Vec2 p) const {
    CellKey key = key_of(p);
    const CellBelief& cb = cell(key);
    std::array<double, 3> phi = features(p, key);
    double mean = 0.0;
    double var = 0.0;
    for (int r = 0; r < 3; r++) {
        mean += cb.mu[static_cast<std::size_t>(r)] * phi[static_cast<std::size_t>(r)];
        for (int c = 0; c < 3; c++) {
            var += phi[static_cast<std::size_t>(r)] * cb.sigma(r, c) * phi[static_cast<std::size_t>(c)];
        }
    }
    return gauss_tail_above(mean, var, 0.0);
}

double BeliefGrid::total_sigma_trace() const {
    double total = 0.0;
    for (const auto& [key, cell] : cells) {
        (void)key;
        total += cell.sigma(0, 0) + cell.sigma(1, 1) + cell.sigma(2, 2);
    }
    return total;
}

} // namespace psp::plan
