#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "fkoc/grid.hpp"
#include "fkoc/kernel.hpp"
#include "fkoc/quadrature.hpp"
#include "fkoc/rng.hpp"

namespace fkoc {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

enum class OpKind {
    IntL,
    IntR,
    RLDerL,
    RLDerR,
    CapL,
    CapR,
    CombinedInt,
    CombinedCap,
    CombinedRL,
};

enum class Side { Left, Right };

inline const char* op_kind_name(OpKind k) {
    switch (k) {
        case OpKind::IntL: return "int-left";
        case OpKind::IntR: return "int-right";
        case OpKind::RLDerL: return "rl-left";
        case OpKind::RLDerR: return "rl-right";
        case OpKind::CapL: return "caputo-left";
        case OpKind::CapR: return "caputo-right";
        case OpKind::CombinedInt: return "combined-int";
        case OpKind::CombinedCap: return "combined-caputo";
        case OpKind::CombinedRL: return "combined-rl";
    }
    return "?";
}

// Dense discretization of a fractional operator on a TimeGrid.
struct FracOperatorMatrix {
    OpKind kind;
    Matrix m;
    TimeGrid grid;
    double gamma = 1.0; // convex weight for combined kinds
    double truncation_estimate = 0.0;

    GridFunction apply(const GridFunction& gf) const {
        if (!(gf.grid() == grid)) throw ShapeMismatch("operator apply: grid mismatch");
        Eigen::Map<const Vector> x(gf.values().data(), gf.n());
        Vector y = m * x;
        return GridFunction(grid, std::vector<CScalar>(y.data(), y.data() + y.size()));
    }
};

namespace detail {

inline Matrix matrix_from_tables(const CellTables& tab, const TimeGrid& grid,
                                 Side side) {
    const int n = grid.n();
    Matrix w = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int m = 1; m <= i; ++m) {
            w(i, i - m) += tab.far[m];
            w(i, i - m + 1) += tab.near[m];
        }
        w(i, i) += tab.identity_weight;
    }
    if (side == Side::Right) {
        // Reflection s -> a + b - s maps the right operator onto the left one.
        Matrix r(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) r(i, j) = w(n - 1 - i, n - 1 - j);
        return r;
    }
    return w;
}

// Second-order differentiation matrix (central interior, one-sided ends).
inline Matrix diff_matrix(const TimeGrid& grid) {
    const int n = grid.n();
    if (n < 3) throw GridTooCoarse("diff matrix: needs at least three nodes");
    const double h = grid.h();
    Matrix d = Matrix::Zero(n, n);
    d(0, 0) = -3.0 / (2.0 * h);
    d(0, 1) = 4.0 / (2.0 * h);
    d(0, 2) = -1.0 / (2.0 * h);
    for (int i = 1; i + 1 < n; ++i) {
        d(i, i - 1) = -1.0 / (2.0 * h);
        d(i, i + 1) = 1.0 / (2.0 * h);
    }
    d(n - 1, n - 3) = 1.0 / (2.0 * h);
    d(n - 1, n - 2) = -4.0 / (2.0 * h);
    d(n - 1, n - 1) = 3.0 / (2.0 * h);
    return d;
}

// Products against the sparse differentiation stencil in O(n^2).
inline Matrix times_diff(const Matrix& a, const TimeGrid& grid) {
    const int n = grid.n();
    const double h2 = 2.0 * grid.h();
    Matrix out = Matrix::Zero(n, n);
    // columns of D: D(k, j) nonzero patterns
    auto axpy = [&](int k, int j, double v) { out.col(j) += a.col(k) * (v / h2); };
    axpy(0, 0, -3.0);
    axpy(0, 1, 4.0);
    axpy(0, 2, -1.0);
    for (int k = 1; k + 1 < n; ++k) {
        axpy(k, k - 1, -1.0);
        axpy(k, k + 1, 1.0);
    }
    axpy(n - 1, n - 3, 1.0);
    axpy(n - 1, n - 2, -4.0);
    axpy(n - 1, n - 1, 3.0);
    return out;
}

inline Matrix diff_times(const Matrix& a, const TimeGrid& grid) {
    const int n = grid.n();
    const double h2 = 2.0 * grid.h();
    Matrix out = Matrix::Zero(n, n);
    out.row(0) = (-3.0 * a.row(0) + 4.0 * a.row(1) - a.row(2)) / h2;
    for (int i = 1; i + 1 < n; ++i) {
        out.row(i) = (a.row(i + 1) - a.row(i - 1)) / h2;
    }
    out.row(n - 1) =
        (a.row(n - 3) - 4.0 * a.row(n - 2) + 3.0 * a.row(n - 1)) / h2;
    return out;
}

} // namespace detail

// Left/right fractional integral with kernel k: density
// (distance)^(alpha-1) A((distance)^beta), built by exact product-trapezoidal
// integration of the kernel series against piecewise-linear interpolants.
inline FracOperatorMatrix build_integral(const TimeGrid& grid, const AnalyticKernel& k,
                                         Side side, QuadRoute route = QuadRoute::Exact) {
    k.require_interval(grid.length());
    if (k.alpha() <= 0.0 && std::abs(k.coeffs()[0]) > 0.0) {
        throw DomainError("build_integral: alpha = 0 density is not integrable");
    }
    RLSeries series = forward_rl_series(k, grid.length());
    CellTables tab = build_cell_tables(series, grid, route);
    FracOperatorMatrix op{side == Side::Left ? OpKind::IntL : OpKind::IntR,
                          detail::matrix_from_tables(tab, grid, side), grid, 1.0,
                          tab.truncation_estimate};
    return op;
}

// Integral operator of the reciprocal kernel at order 1-alpha; shared by the
// RL and Caputo derivative assemblies and by transversality rows.
inline FracOperatorMatrix build_reciprocal_integral(const TimeGrid& grid,
                                                    const AnalyticKernel& k,
                                                    Side side) {
    k.require_interval(grid.length());
    RLSeries series = reciprocal_rl_series(k, grid.length());
    CellTables tab = build_cell_tables(series, grid);
    FracOperatorMatrix op{side == Side::Left ? OpKind::IntL : OpKind::IntR,
                          detail::matrix_from_tables(tab, grid, side), grid, 1.0,
                          tab.truncation_estimate};
    return op;
}

// Caputo derivative: I^{1-alpha}[Abar] of the derivative; sign -1 on the right.
inline FracOperatorMatrix build_caputo(const TimeGrid& grid, const AnalyticKernel& k,
                                       Side side) {
    FracOperatorMatrix ibar = build_reciprocal_integral(grid, k, side);
    Matrix m = detail::times_diff(ibar.m, grid);
    if (side == Side::Right) m = -m;
    return FracOperatorMatrix{side == Side::Left ? OpKind::CapL : OpKind::CapR,
                              std::move(m), grid, 1.0, ibar.truncation_estimate};
}

// Riemann-Liouville derivative: derivative of I^{1-alpha}[Abar]; sign -1 right.
inline FracOperatorMatrix build_rl_derivative(const TimeGrid& grid,
                                              const AnalyticKernel& k, Side side) {
    FracOperatorMatrix ibar = build_reciprocal_integral(grid, k, side);
    Matrix m = detail::diff_times(ibar.m, grid);
    if (side == Side::Right) m = -m;
    return FracOperatorMatrix{side == Side::Left ? OpKind::RLDerL : OpKind::RLDerR,
                              std::move(m), grid, 1.0, ibar.truncation_estimate};
}

// gamma * left + (1 - gamma) * right, entry-wise.
inline FracOperatorMatrix combine(const FracOperatorMatrix& left,
                                  const FracOperatorMatrix& right, double gamma) {
    if (!(left.grid == right.grid) || left.m.rows() != right.m.rows()) {
        throw ShapeMismatch("combine: operators live on different grids");
    }
    if (gamma < 0.0 || gamma > 1.0) throw InputError("combine: gamma outside [0, 1]");
    OpKind kind = OpKind::CombinedInt;
    if (left.kind == OpKind::CapL || left.kind == OpKind::CapR) kind = OpKind::CombinedCap;
    if (left.kind == OpKind::RLDerL || left.kind == OpKind::RLDerR) kind = OpKind::CombinedRL;
    FracOperatorMatrix op{kind, gamma * left.m + (1.0 - gamma) * right.m, left.grid,
                          gamma,
                          std::max(left.truncation_estimate, right.truncation_estimate)};
    return op;
}

// Series-formula route: sum_{n<=terms} a_n Gamma(beta n + alpha) RL_I^{alpha+n
// beta}, each RL integral by Gauss-Legendre product quadrature. Serves as the
// independent cross-check of build_integral.
inline GridFunction apply_series_form(const AnalyticKernel& k, const TimeGrid& grid,
                                      const GridFunction& gf, Side side, int terms) {
    if (terms < 0 || terms > k.truncation_length()) {
        throw InputError("apply_series_form: term count out of range");
    }
    k.require_interval(grid.length());
    GammaWeightedSeries g = gamma_weighted(k, k.alpha());
    RLSeries series;
    for (int n = 0; n < terms; ++n) {
        CScalar z = k.beta() * static_cast<double>(n) + k.alpha();
        series.terms.push_back(RLTerm{z, g.coeffs[n]});
    }
    if (series.terms.empty()) return GridFunction::zeros(grid);
    CellTables tab = build_cell_tables(series, grid, QuadRoute::Gauss);
    Matrix m = detail::matrix_from_tables(tab, grid, side);
    Eigen::Map<const Vector> x(gf.values().data(), gf.n());
    Vector y = m * x;
    return GridFunction(grid, std::vector<CScalar>(y.data(), y.data() + y.size()));
}

// ---------------------------------------------------------------------------
// Operator norm sampling
// ---------------------------------------------------------------------------

struct NormBoundReport {
    double max_ratio = 0.0;
    double bound_alpha_domain = 0.0; // (b-a)^alpha * M, M over radius (b-a)^alpha
    double bound_beta_domain = 0.0;  // (b-a)^alpha * M, M over radius (b-a)^Re(beta)
    double bound_sharp = 0.0;        // (b-a)^alpha * M / alpha
    int trials = 0;
    bool real_beta = true;
    bool holds_stated() const { return max_ratio <= bound_alpha_domain * (1.0 + 1e-6); }
    bool holds_sharp() const { return max_ratio <= bound_sharp * (1.0 + 1e-6); }
};

// Samples ||I f||_1 / ||f||_1 over random smooth non-negative f and compares
// with the candidate norm constants.
inline NormBoundReport verify_norm_bound(const AnalyticKernel& k, const TimeGrid& grid,
                                         int trials, std::uint64_t seed = 42) {
    if (trials < 1) throw InputError("verify_norm_bound: trials must be >= 1");
    FracOperatorMatrix intl = build_integral(grid, k, Side::Left);
    SupBound m = sup_bound(k, grid.length());
    NormBoundReport rep;
    rep.trials = trials;
    rep.real_beta = std::abs(k.beta().imag()) == 0.0;
    double la = std::pow(grid.length(), k.alpha());
    rep.bound_alpha_domain = la * m.m_alpha_domain;
    rep.bound_beta_domain = la * m.m_beta_domain;
    rep.bound_sharp = la * m.m_alpha_domain / k.alpha();
    Rng rng(seed);
    for (int t = 0; t < trials; ++t) {
        double c0 = rng.uniform(0.0, 1.0);
        double c1 = rng.uniform(0.0, 1.0);
        double w = rng.uniform(0.5, 6.0);
        double ph = rng.uniform(0.0, 2.0 * M_PI);
        GridFunction f = GridFunction::sample(grid, [&](double tt) {
            double v = c0 + c1 * std::sin(w * tt + ph);
            return v * v;
        });
        double nf = f.l1_norm();
        if (nf <= 1e-300) continue; // zero draw: ratio undefined, skip
        double ni = intl.apply(f).l1_norm();
        rep.max_ratio = std::max(rep.max_ratio, ni / nf);
    }
    return rep;
}

} // namespace fkoc
