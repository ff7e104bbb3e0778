#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "fkoc/errors.hpp"
#include "fkoc/grid.hpp"
#include "fkoc/kernel.hpp"

namespace fkoc {

// tau^z for tau >= 0 and complex z with Re(z) > 0 at tau = 0.
inline CScalar pow_pos(double tau, CScalar z) {
    if (tau == 0.0) return CScalar(0.0, 0.0);
    return std::exp(z * std::log(tau));
}

namespace detail {

struct GLPoint {
    double x, w;
};

// 16-point Gauss-Legendre rule on [-1, 1].
inline constexpr GLPoint kGauss16[16] = {
    {-0.9894009349916499326, 0.027152459411754094852},
    {-0.94457502307323257608, 0.062253523938647892863},
    {-0.86563120238783174388, 0.09515851168249278481},
    {-0.7554044083550030339, 0.12462897125553387205},
    {-0.61787624440264374845, 0.14959598881657673208},
    {-0.45801677765722738634, 0.16915651939500253819},
    {-0.28160355077925891323, 0.18260341504492358887},
    {-0.095012509837637440185, 0.18945061045506849629},
    {0.095012509837637440185, 0.18945061045506849629},
    {0.28160355077925891323, 0.18260341504492358887},
    {0.45801677765722738634, 0.16915651939500253819},
    {0.61787624440264374845, 0.14959598881657673208},
    {0.7554044083550030339, 0.12462897125553387205},
    {0.86563120238783174388, 0.09515851168249278481},
    {0.94457502307323257608, 0.062253523938647892863},
    {0.9894009349916499326, 0.027152459411754094852},
};

} // namespace detail

// Product-trapezoidal cell weights for a density sum_k e_k tau^(z_k - 1) on a
// uniform grid. Because the grid is uniform, the two weights a cell [t_{i-m},
// t_{i-m+1}] contributes to row i depend only on the distance m:
//
//   far(m)  multiplies x(t_{i-m})    (hat function rising towards t_{i-m})
//   near(m) multiplies x(t_{i-m+1})
//
// Identity terms (z == 0, the alpha = 1 degenerate reciprocal) are collected
// separately and later added to the matrix diagonal.
struct CellTables {
    std::vector<CScalar> near; // index m = 1 .. n-1
    std::vector<CScalar> far;
    CScalar identity_weight{0.0, 0.0};
    double truncation_estimate = 0.0;

    int max_distance() const { return static_cast<int>(near.size()) - 1; }
};

enum class QuadRoute {
    Exact, // per-term closed-form antiderivatives (default)
    Gauss, // 16-point Gauss-Legendre per regular cell, exact singular cell
};

// Effective density coefficient of one RL term: w * tau^(z-1) / Gamma(z).
inline CScalar rl_density_coefficient(const RLTerm& t) {
    return t.weight / complex_gamma(t.exponent);
}

inline CellTables build_cell_tables(const RLSeries& series, const TimeGrid& grid,
                                    QuadRoute route = QuadRoute::Exact) {
    const int n = grid.n();
    const double h = grid.h();
    CellTables tab;
    tab.truncation_estimate = series.truncation_estimate;
    tab.near.assign(n, CScalar(0.0, 0.0));
    tab.far.assign(n, CScalar(0.0, 0.0));

    for (const RLTerm& term : series.terms) {
        const CScalar z = term.exponent;
        if (std::abs(z) <= kPoleTol) {
            tab.identity_weight += term.weight;
            continue;
        }
        if (z.real() <= kPoleTol) {
            throw DomainError(
                "product quadrature: operator term of non-positive real order");
        }
        const CScalar e = rl_density_coefficient(term);
        if (std::abs(e) == 0.0) continue;

        // Power table tau_m^z and tau_m^(z+1) at tau_m = m h.
        std::vector<CScalar> pz(n + 1), pz1(n + 1);
        pz[0] = CScalar(0.0, 0.0);
        pz1[0] = CScalar(0.0, 0.0);
        for (int m = 1; m <= n; ++m) {
            double tau = m * h;
            pz[m] = pow_pos(tau, z);
            pz1[m] = pz[m] * tau;
        }

        for (int m = 1; m < n; ++m) {
            CScalar p0, p1; // integrals of tau^(z-1) and tau^z over the cell
            bool exact_cell = (route == QuadRoute::Exact) || (m == 1);
            if (exact_cell) {
                p0 = (pz[m] - pz[m - 1]) / z;
                p1 = (pz1[m] - pz1[m - 1]) / (z + 1.0);
            } else {
                p0 = CScalar(0.0, 0.0);
                p1 = CScalar(0.0, 0.0);
                double lo = (m - 1) * h, hi = m * h;
                double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
                for (const auto& gp : detail::kGauss16) {
                    double tau = mid + half * gp.x;
                    CScalar dens = pow_pos(tau, z) / tau;
                    p0 += gp.w * dens;
                    p1 += gp.w * dens * tau;
                }
                p0 *= half;
                p1 *= half;
            }
            double lo = (m - 1) * h;
            tab.far[m] += e * (p1 - lo * p0) / h;
            tab.near[m] += e * ((lo + h) * p0 - p1) / h;
        }
    }
    return tab;
}

// Row `row` of the left product-integration operator: weights w_j with
// sum_j w_j x(t_j) ~ int_a^{t_row} (t_row - s)^(alpha-1) A((t_row-s)^beta) x ds.
inline std::vector<CScalar> product_weights_left(const TimeGrid& grid,
                                                 const AnalyticKernel& k, int row,
                                                 QuadRoute route = QuadRoute::Exact) {
    if (row < 0 || row >= grid.n()) throw InputError("product weights: row out of range");
    k.require_interval(grid.length());
    RLSeries series = forward_rl_series(k, grid.length());
    CellTables tab = build_cell_tables(series, grid, route);
    std::vector<CScalar> w(grid.n(), CScalar(0.0, 0.0));
    for (int m = 1; m <= row; ++m) {
        w[row - m] += tab.far[m];
        w[row - m + 1] += tab.near[m];
    }
    w[row] += tab.identity_weight;
    return w;
}

inline std::vector<CScalar> product_weights_right(const TimeGrid& grid,
                                                  const AnalyticKernel& k, int row,
                                                  QuadRoute route = QuadRoute::Exact) {
    // Mirror of the left rule under s -> a + b - s.
    std::vector<CScalar> w =
        product_weights_left(grid, k, grid.n() - 1 - row, route);
    std::reverse(w.begin(), w.end());
    return w;
}

} // namespace fkoc
