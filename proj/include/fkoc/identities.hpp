#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fkoc/grid.hpp"
#include "fkoc/kernel.hpp"
#include "fkoc/operators.hpp"

namespace fkoc {

struct IdentityReport {
    std::string name;
    CScalar lhs{0.0, 0.0};
    CScalar rhs{0.0, 0.0};
    double abs_residual = 0.0;
    double rel_residual = 0.0;
    int grid_n = 0;
    std::string notes;

    void finish() {
        abs_residual = std::abs(lhs - rhs);
        rel_residual = abs_residual / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    }
};

namespace detail {

// Riemann-Stieltjes trapezoid sum of int y dV given nodal values of V. Used
// for integrals of y against d/dt of a fractional integral: differencing V
// instead of differentiating it keeps the endpoint weight singularity
// telescoping (exact for constant y).
inline CScalar stieltjes(const GridFunction& y, const GridFunction& v) {
    CScalar s(0.0, 0.0);
    for (int j = 0; j + 1 < y.n(); ++j) {
        s += 0.5 * (y[j] + y[j + 1]) * (v[j + 1] - v[j]);
    }
    return s;
}

inline GridFunction pointwise_mul(const GridFunction& a, const GridFunction& b) {
    std::vector<CScalar> v(a.n());
    for (int i = 0; i < a.n(); ++i) v[i] = a[i] * b[i];
    return GridFunction(a.grid(), std::move(v));
}

} // namespace detail

// int_a^b x (I_{a+} y) dt = int_a^b y (I_{b-} x) dt.
inline IdentityReport check_duality(const AnalyticKernel& k, const TimeGrid& grid,
                                    const GridFunction& x, const GridFunction& y) {
    IdentityReport rep;
    rep.name = "duality";
    rep.grid_n = grid.n();
    if (std::abs(CScalar(k.alpha(), 0.0) + k.beta()) < 1.0) {
        rep.notes = "warning: |alpha + beta| < 1";
    }
    FracOperatorMatrix il = build_integral(grid, k, Side::Left);
    FracOperatorMatrix ir = build_integral(grid, k, Side::Right);
    rep.lhs = trapezoid(detail::pointwise_mul(x, il.apply(y)));
    rep.rhs = trapezoid(detail::pointwise_mul(y, ir.apply(x)));
    rep.finish();
    return rep;
}

// Combined integration by parts (gamma = 1 gives the left formula, gamma = 0
// the right one):
//
//   int x (C_D^gamma y) = gamma [y Ibar_{b-} x]_a^b + (1-gamma) [-y Ibar_{a+} x]_a^b
//                         + int y (RL_D^{1-gamma} x)
//
// The right-hand integral is evaluated as a Riemann-Stieltjes sum against the
// nodal values of the reciprocal-kernel integrals of x, which also provides
// the one-sided boundary evaluations.
inline IdentityReport check_parts(const AnalyticKernel& k, const TimeGrid& grid,
                                  const GridFunction& x, const GridFunction& y,
                                  double gamma) {
    IdentityReport rep;
    rep.name = "parts(gamma=" + std::to_string(gamma) + ")";
    rep.grid_n = grid.n();
    const int n = grid.n();

    FracOperatorMatrix capl = build_caputo(grid, k, Side::Left);
    FracOperatorMatrix capr = build_caputo(grid, k, Side::Right);
    FracOperatorMatrix cap = combine(capl, capr, gamma);
    rep.lhs = trapezoid(detail::pointwise_mul(x, cap.apply(y)));

    FracOperatorMatrix ibar_l = build_reciprocal_integral(grid, k, Side::Left);
    FracOperatorMatrix ibar_r = build_reciprocal_integral(grid, k, Side::Right);
    GridFunction vl = ibar_l.apply(x); // (Ibar_{a+} x)(t_i)
    GridFunction vr = ibar_r.apply(x); // (Ibar_{b-} x)(t_i)

    CScalar boundary = gamma * (y[n - 1] * vr[n - 1] - y[0] * vr[0]) +
                       (1.0 - gamma) * (-(y[n - 1] * vl[n - 1]) + y[0] * vl[0]);
    // RL_D^{1-gamma} x = (1-gamma) d/dt(vl) + gamma (-d/dt(vr))
    CScalar integral = (1.0 - gamma) * detail::stieltjes(y, vl) -
                       gamma * detail::stieltjes(y, vr);
    rep.rhs = boundary + integral;
    rep.finish();
    return rep;
}

// ---------------------------------------------------------------------------
// Gronwall inequality
// ---------------------------------------------------------------------------

struct GronwallResult {
    GridFunction bound;
    int terms = 0;
    bool truncated_by_tolerance = true;
    double max_g = 0.0;
    double premise_threshold = 0.0; // (b-a)^(1-alpha) / M
    double contraction_factor = 0.0; // max_g (b-a)^(alpha-1) M (the proof's ratio)
    double sup_m = 0.0;
};

namespace detail {

inline void require_nonneg_real(const GridFunction& f, const char* what) {
    for (int i = 0; i < f.n(); ++i) {
        if (std::abs(f[i].imag()) > 1e-12 || f[i].real() < -1e-12) {
            throw InputError(std::string(what) + " must be real and non-negative");
        }
    }
}

} // namespace detail

// B(t) = f + sum_{k>=1} g^k (I^{alpha,beta,gamma})^k f, truncated when the
// sup norm of the added term drops below tol.
inline GronwallResult gronwall_bound(const GridFunction& f, const GridFunction& g,
                                     const AnalyticKernel& k, const TimeGrid& grid,
                                     double gamma, double tol = 1e-10,
                                     int max_terms = 200) {
    detail::require_nonneg_real(f, "gronwall: f");
    detail::require_nonneg_real(g, "gronwall: g");
    for (int i = 0; i + 1 < g.n(); ++i) {
        if (g[i + 1].real() < g[i].real() - 1e-12) {
            throw NonMonotoneG("gronwall: g must be monotone non-decreasing");
        }
    }
    GronwallResult out{f, 0, false, 0.0, 0.0, 0.0, 0.0};
    for (int i = 0; i < g.n(); ++i) out.max_g = std::max(out.max_g, g[i].real());
    out.sup_m = sup_bound(k, grid.length()).value();
    out.premise_threshold =
        std::pow(grid.length(), 1.0 - k.alpha()) / std::max(out.sup_m, 1e-300);
    out.contraction_factor = out.max_g / out.premise_threshold;
    if (out.max_g >= out.premise_threshold) {
        throw PremiseViolation("gronwall: max g >= (b-a)^(1-alpha)/M");
    }

    FracOperatorMatrix icomb = combine(build_integral(grid, k, Side::Left),
                                       build_integral(grid, k, Side::Right), gamma);
    GridFunction iter = f; // (I^k f)
    std::vector<double> gk(g.n(), 1.0); // g^k pointwise
    for (int kk = 1; kk <= max_terms; ++kk) {
        iter = icomb.apply(iter);
        double term_sup = 0.0;
        for (int i = 0; i < f.n(); ++i) {
            gk[i] *= g[i].real();
            CScalar term = gk[i] * iter[i];
            out.bound[i] += term;
            term_sup = std::max(term_sup, std::abs(term));
        }
        out.terms = kk;
        if (term_sup < tol) {
            out.truncated_by_tolerance = true;
            break;
        }
    }
    return out;
}

// Checks the hypothesis u <= f + g (I u), then asserts the conclusion
// u <= B pointwise.
inline IdentityReport verify_gronwall(const GridFunction& u, const GridFunction& f,
                                      const GridFunction& g, const AnalyticKernel& k,
                                      const TimeGrid& grid, double gamma,
                                      double tol = 1e-8) {
    detail::require_nonneg_real(u, "gronwall: u");
    FracOperatorMatrix icomb = combine(build_integral(grid, k, Side::Left),
                                       build_integral(grid, k, Side::Right), gamma);
    GridFunction iu = icomb.apply(u);
    double scale = std::max(1.0, u.sup_norm());
    for (int i = 0; i < u.n(); ++i) {
        double rhs = f[i].real() + g[i].real() * iu[i].real();
        if (u[i].real() > rhs + 1e-9 * scale) {
            throw HypothesisViolation("gronwall: hypothesis u <= f + g I u fails at node " +
                                      std::to_string(i));
        }
    }
    GronwallResult b = gronwall_bound(f, g, k, grid, gamma);
    IdentityReport rep;
    rep.name = "gronwall";
    rep.grid_n = grid.n();
    double worst = -1e300;
    for (int i = 0; i < u.n(); ++i) {
        worst = std::max(worst, u[i].real() - b.bound[i].real());
    }
    // Positive worst means the conclusion failed by that margin.
    rep.lhs = CScalar(worst, 0.0);
    rep.rhs = CScalar(0.0, 0.0);
    rep.abs_residual = std::max(0.0, worst);
    rep.rel_residual = rep.abs_residual / std::max(1.0, u.sup_norm());
    rep.notes = "terms=" + std::to_string(b.terms) +
                (b.truncated_by_tolerance ? "" : " (term cap reached)") +
                (rep.abs_residual <= tol ? "" : " VIOLATED");
    return rep;
}

} // namespace fkoc
