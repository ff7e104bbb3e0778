#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "fkoc/errors.hpp"
#include "fkoc/special.hpp"

namespace fkoc {

// Gamma-weighted coefficient series c_n = a_n * Gamma(beta*n + shift).
struct GammaWeightedSeries {
    std::vector<CScalar> coeffs;
    double shift = 0.0;
};

struct KernelValue {
    CScalar value;
    // Magnitude of the smallest retained term; for a convergent tail this
    // bounds the truncation error up to a geometric constant, for a
    // divergent (asymptotic) tail it is the attainable accuracy.
    double truncation_estimate = 0.0;
    int terms_used = 0;
};

// Analytic kernel A(x) = sum a_n x^n on the disc |x| < R, together with the
// order parameters of the fractional operator it defines: the integral
// operator has density (t-s)^(alpha-1) * A((t-s)^beta).
class AnalyticKernel {
public:
    AnalyticKernel(std::vector<CScalar> coeffs, double radius, double alpha,
                   CScalar beta)
        : coeffs_(std::move(coeffs)), radius_(radius), alpha_(alpha), beta_(beta) {
        if (coeffs_.empty()) throw InputError("kernel: empty coefficient list");
        for (const auto& c : coeffs_) {
            if (!is_finite(c)) throw InputError("kernel: non-finite coefficient");
        }
        if (!(radius_ > 0.0)) throw InputError("kernel: radius must be positive");
        if (alpha_ < 0.0 || alpha_ > 1.0) {
            throw InputError("kernel: alpha must lie in [0, 1]");
        }
        if (beta_.real() < 0.0) {
            throw InputError("kernel: Re(beta) must be non-negative");
        }
    }

    const std::vector<CScalar>& coeffs() const { return coeffs_; }
    double radius() const { return radius_; }
    double alpha() const { return alpha_; }
    CScalar beta() const { return beta_; }
    int truncation_length() const { return static_cast<int>(coeffs_.size()); }

    // Definition requires R > (b-a)^Re(beta) before the kernel may be used
    // on an interval of that length.
    bool admits_interval(double length) const {
        return std::pow(length, beta_.real()) < radius_;
    }

    void require_interval(double length) const {
        if (!admits_interval(length)) {
            throw RadiusError("kernel: interval length violates R > (b-a)^Re(beta)");
        }
    }

private:
    std::vector<CScalar> coeffs_;
    double radius_;
    double alpha_;
    CScalar beta_;
};

// Horner evaluation of the truncated series at x, |x| < R. Partial sums are
// truncated at the smallest term so that formally divergent reciprocal
// series still return their best asymptotic value.
inline KernelValue eval_kernel(const AnalyticKernel& k, CScalar x) {
    double ax = std::abs(x);
    if (ax >= k.radius() && !(ax == 0.0)) {
        throw RadiusError("eval_kernel: |x| >= R");
    }
    const auto& a = k.coeffs();
    // Term magnitudes |a_n| |x|^n; find the optimal truncation index.
    int best = 0;
    double best_mag = std::abs(a[0]);
    double xn = 1.0;
    std::vector<double> mags(a.size());
    for (std::size_t n = 0; n < a.size(); ++n) {
        mags[n] = std::abs(a[n]) * xn;
        xn *= ax;
    }
    // Keep everything up to the global minimum of the (smoothed) tail.
    best = static_cast<int>(a.size()) - 1;
    best_mag = (a.size() > 1) ? mags[best] : 0.0;
    for (std::size_t n = 0; n + 1 < a.size(); ++n) {
        bool tail_grows = true;
        for (std::size_t m = n + 1; m < std::min(a.size(), n + 4); ++m) {
            if (mags[m] <= mags[n] || mags[m] == 0.0) tail_grows = false;
        }
        if (tail_grows) {
            best = static_cast<int>(n);
            best_mag = mags[n];
            break;
        }
    }
    CScalar acc(0.0, 0.0);
    for (int n = best; n >= 0; --n) acc = acc * x + a[n];
    return KernelValue{acc, best_mag, best + 1};
}

// c_n = a_n Gamma(beta n + shift). Throws PoleError if any weight sits on a
// Gamma pole.
inline GammaWeightedSeries gamma_weighted(const AnalyticKernel& k, double shift) {
    GammaWeightedSeries out;
    out.shift = shift;
    out.coeffs.reserve(k.coeffs().size());
    for (std::size_t n = 0; n < k.coeffs().size(); ++n) {
        CScalar arg = k.beta() * static_cast<double>(n) + shift;
        out.coeffs.push_back(k.coeffs()[n] * complex_gamma(arg));
    }
    return out;
}

namespace detail {

// Reciprocal of a formal power series: d with c * d = 1.
inline std::vector<CScalar> series_reciprocal(const std::vector<CScalar>& c) {
    if (std::abs(c[0]) <= kPoleTol) {
        throw SingularSeriesError("series reciprocal: leading coefficient vanishes");
    }
    std::vector<CScalar> d(c.size());
    d[0] = 1.0 / c[0];
    for (std::size_t k = 1; k < c.size(); ++k) {
        CScalar s(0.0, 0.0);
        for (std::size_t j = 1; j <= k; ++j) s += c[j] * d[k - j];
        d[k] = -s / c[0];
    }
    return d;
}

// Convolution of two coefficient lists, truncated to the shorter length.
inline std::vector<CScalar> series_convolve(const std::vector<CScalar>& a,
                                            const std::vector<CScalar>& b) {
    std::size_t n = std::min(a.size(), b.size());
    std::vector<CScalar> out(n, CScalar(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j <= k; ++j) out[k] += a[j] * b[k - j];
    }
    return out;
}

} // namespace detail

// The reciprocal kernel: A_Gamma(shift alpha) * Abar_Gamma(shift 1-alpha) = 1
// as formal power series. The returned kernel carries order 1-alpha because
// Abar always appears inside I^{1-alpha, beta}.
//
// At alpha = 1 the coefficient abar_0 = d_0 / Gamma(0) degenerates to zero
// while the Gamma-weighted series d stays finite; operators must therefore be
// assembled from the weighted series (see rl_terms below), never from the
// plain coefficients.
inline AnalyticKernel reciprocal_kernel(const AnalyticKernel& k) {
    GammaWeightedSeries c = gamma_weighted(k, k.alpha());
    std::vector<CScalar> d = detail::series_reciprocal(c.coeffs);
    double bar_alpha = 1.0 - k.alpha();
    std::vector<CScalar> abar(d.size());
    for (std::size_t m = 0; m < d.size(); ++m) {
        CScalar arg = k.beta() * static_cast<double>(m) + bar_alpha;
        if (near_gamma_pole(arg)) {
            // Gamma blows up, so the plain coefficient is exactly zero.
            abar[m] = CScalar(0.0, 0.0);
        } else {
            abar[m] = d[m] / complex_gamma(arg);
        }
    }
    return AnalyticKernel(std::move(abar), k.radius(), bar_alpha, k.beta());
}

// Max deviation of conv(A_Gamma, Abar_Gamma) from the unit series.
inline double reciprocal_roundtrip_residual(const AnalyticKernel& k,
                                            const AnalyticKernel& kbar) {
    GammaWeightedSeries c = gamma_weighted(k, k.alpha());
    // Rebuild the weighted series of kbar without dividing by Gamma poles.
    std::vector<CScalar> d = detail::series_reciprocal(c.coeffs);
    auto conv = detail::series_convolve(c.coeffs, d);
    (void)kbar;
    double res = std::abs(conv[0] - CScalar(1.0, 0.0));
    for (std::size_t j = 1; j < conv.size(); ++j) res = std::max(res, std::abs(conv[j]));
    return res;
}

// One term of the Riemann-Liouville series representation of an operator:
// weight * RL_I^{exponent}, where RL_I^0 is the identity.
struct RLTerm {
    CScalar exponent;
    CScalar weight;
};

struct RLSeries {
    std::vector<RLTerm> terms;
    // Estimated magnitude of the first dropped term's operator contribution;
    // zero when the full coefficient list was retained.
    double truncation_estimate = 0.0;
};

namespace detail {

// Crude per-term operator size on an interval of given length:
// |w| * L^{Re z} / |Gamma(z+1)| (the action on the constant function).
inline double rl_term_size(CScalar w, CScalar z, double length) {
    if (std::abs(w) == 0.0) return 0.0;
    double lp = std::pow(length, z.real());
    CScalar g = near_gamma_pole(z + 1.0) ? CScalar(1e300, 0.0) : complex_gamma(z + 1.0);
    return std::abs(w) * lp / std::abs(g);
}

} // namespace detail

// RL series of the forward integral operator of k: terms w_n RL_I^{alpha+n
// beta} with w_n = a_n Gamma(beta n + alpha). `weighted` may be supplied when
// the caller already has the Gamma-weighted coefficients (mandatory for the
// degenerate alpha = 0 reciprocal case, where plain coefficients are zero).
//
// Terms are truncated at the minimum of their estimated operator size, which
// keeps formally divergent reciprocal series usable as asymptotic expansions.
inline RLSeries rl_series(const std::vector<CScalar>& weighted, double order,
                          CScalar beta, double interval_length) {
    RLSeries out;
    std::vector<double> size(weighted.size());
    for (std::size_t n = 0; n < weighted.size(); ++n) {
        CScalar z = beta * static_cast<double>(n) + order;
        size[n] = detail::rl_term_size(weighted[n], z, interval_length);
    }
    // Cut where the tail starts growing (asymptotic-series truncation).
    std::size_t cut = weighted.size();
    for (std::size_t n = 0; n + 1 < weighted.size(); ++n) {
        bool grows = true;
        for (std::size_t m = n + 1; m < std::min(weighted.size(), n + 4); ++m) {
            if (size[m] <= std::max(size[n], 1e-300)) grows = false;
        }
        if (grows && size[n + 1] > 1e-14 * size[0]) {
            cut = n + 1;
            out.truncation_estimate = size[n + 1];
            break;
        }
    }
    for (std::size_t n = 0; n < cut; ++n) {
        CScalar z = beta * static_cast<double>(n) + order;
        if (std::abs(weighted[n]) == 0.0) continue;
        out.terms.push_back(RLTerm{z, weighted[n]});
    }
    if (out.terms.empty()) out.terms.push_back(RLTerm{CScalar(order, 0.0), CScalar(0.0, 0.0)});
    return out;
}

inline RLSeries forward_rl_series(const AnalyticKernel& k, double interval_length) {
    GammaWeightedSeries g = gamma_weighted(k, k.alpha());
    return rl_series(g.coeffs, k.alpha(), k.beta(), interval_length);
}

// RL series of the reciprocal-kernel integral I^{1-alpha, beta} used inside
// RL/Caputo derivatives. Built directly from the reciprocal of A_Gamma so the
// alpha = 1 limit (identity operator) is exact.
inline RLSeries reciprocal_rl_series(const AnalyticKernel& k, double interval_length) {
    GammaWeightedSeries c = gamma_weighted(k, k.alpha());
    std::vector<CScalar> d = detail::series_reciprocal(c.coeffs);
    return rl_series(d, 1.0 - k.alpha(), k.beta(), interval_length);
}

// ---------------------------------------------------------------------------
// Semigroup coefficient condition
// ---------------------------------------------------------------------------

struct SemigroupReport {
    // residual[k] with the paper's displayed second factor Gamma(alpha2+n beta)
    std::vector<double> residual_literal;
    // residual[k] with the index-consistent factor Gamma(alpha2+m beta)
    std::vector<double> residual_symmetric;
    double max_literal = 0.0;
    double max_symmetric = 0.0;
};

// Checks sum_{m+n=k} a_n(alpha1) a_m(alpha2) Gamma(alpha1+n beta) Gamma(alpha2
// + . beta) = a_k(alpha1+alpha2) Gamma(alpha1+alpha2+k beta) for k <= kmax.
// Both placements of the second Gamma index are evaluated; the displayed
// condition in the source uses n twice, which looks like a typo.
inline SemigroupReport check_semigroup(const AnalyticKernel& k1,
                                       const AnalyticKernel& k2,
                                       const AnalyticKernel& k12, int kmax) {
    if (std::abs(k1.beta() - k2.beta()) > kPoleTol ||
        std::abs(k1.beta() - k12.beta()) > kPoleTol) {
        throw MismatchedBetaError("check_semigroup: kernels must share beta");
    }
    CScalar beta = k1.beta();
    double a1 = k1.alpha(), a2 = k2.alpha();
    SemigroupReport rep;
    for (int k = 0; k <= kmax; ++k) {
        CScalar lhs_lit(0.0, 0.0), lhs_sym(0.0, 0.0);
        for (int n = 0; n <= k; ++n) {
            int m = k - n;
            if (n >= k1.truncation_length() || m >= k2.truncation_length()) continue;
            CScalar an = k1.coeffs()[n];
            CScalar am = k2.coeffs()[m];
            CScalar g1 = complex_gamma(beta * static_cast<double>(n) + a1);
            CScalar g2n = complex_gamma(beta * static_cast<double>(n) + a2);
            CScalar g2m = complex_gamma(beta * static_cast<double>(m) + a2);
            lhs_lit += an * am * g1 * g2n;
            lhs_sym += an * am * g1 * g2m;
        }
        CScalar rhs(0.0, 0.0);
        if (k < k12.truncation_length()) {
            rhs = k12.coeffs()[k] * complex_gamma(beta * static_cast<double>(k) + a1 + a2);
        }
        rep.residual_literal.push_back(std::abs(lhs_lit - rhs));
        rep.residual_symmetric.push_back(std::abs(lhs_sym - rhs));
        rep.max_literal = std::max(rep.max_literal, rep.residual_literal.back());
        rep.max_symmetric = std::max(rep.max_symmetric, rep.residual_symmetric.back());
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Sup bound M
// ---------------------------------------------------------------------------

struct SupBound {
    // sup over the domain of radius (b-a)^alpha (the boundedness lemma's
    // stated domain; this is the value used by Gronwall thresholds).
    double m_alpha_domain = 0.0;
    // sup over the domain of radius (b-a)^Re(beta) (the radius the kernel
    // definition actually constrains).
    double m_beta_domain = 0.0;
    double value() const { return m_alpha_domain; }
};

namespace detail {

inline double sup_on_radius(const AnalyticKernel& k, double r) {
    if (r <= 0.0) return std::abs(eval_kernel(k, CScalar(0.0, 0.0)).value);
    double m = 0.0;
    // Real segment; the operator samples A on (0, r)^... for real beta.
    const int nr = 2048;
    for (int i = 0; i <= nr; ++i) {
        double x = -r + 2.0 * r * i / nr;
        if (std::abs(x) >= k.radius()) continue;
        m = std::max(m, std::abs(eval_kernel(k, CScalar(x, 0.0)).value));
    }
    if (std::abs(k.beta().imag()) > 0.0) {
        // Complex beta makes the series argument complex: sample the disc
        // boundary as well.
        const int na = 720;
        for (int i = 0; i < na; ++i) {
            double th = 2.0 * M_PI * i / na;
            CScalar x = r * CScalar(std::cos(th), std::sin(th));
            if (std::abs(x) >= k.radius()) break;
            m = std::max(m, std::abs(eval_kernel(k, x).value));
        }
    }
    return m;
}

} // namespace detail

// M = sup |A| over the two candidate domains discussed above.
inline SupBound sup_bound(const AnalyticKernel& k, double interval_length) {
    k.require_interval(interval_length);
    SupBound out;
    double r_alpha = std::pow(interval_length, k.alpha());
    double r_beta = std::pow(interval_length, k.beta().real());
    if (r_alpha >= k.radius() * (1.0 + 1e-12) && k.radius() < 1e300) {
        throw RadiusError("sup_bound: (b-a)^alpha exceeds kernel radius");
    }
    out.m_alpha_domain =
        detail::sup_on_radius(k, std::min(r_alpha, k.radius() * (1 - 1e-12)));
    out.m_beta_domain =
        detail::sup_on_radius(k, std::min(r_beta, k.radius() * (1 - 1e-12)));
    return out;
}

// ---------------------------------------------------------------------------
// Builtin kernels
// ---------------------------------------------------------------------------

namespace kernels {

inline constexpr int kDefaultTruncation = 64;

// a_0 = 1/Gamma(alpha): the operator reduces to the classical
// Riemann-Liouville integral of order alpha.
inline AnalyticKernel rl_constant(double alpha, CScalar beta = CScalar(0.0, 0.0)) {
    if (near_gamma_pole(CScalar(alpha, 0.0))) {
        throw PoleError("rl_constant: Gamma(alpha) pole");
    }
    std::vector<CScalar> a{1.0 / complex_gamma(CScalar(alpha, 0.0))};
    return AnalyticKernel(std::move(a), std::numeric_limits<double>::infinity(),
                          alpha, beta);
}

inline AnalyticKernel constant(CScalar a0, double alpha,
                               CScalar beta = CScalar(0.0, 0.0)) {
    return AnalyticKernel({a0}, std::numeric_limits<double>::infinity(), alpha, beta);
}

// A(x) = exp(x - shift), i.e. a_n = exp(-shift)/n!; entire, so R = inf.
inline AnalyticKernel exp_shift(double shift, double alpha, CScalar beta,
                                int truncation = kDefaultTruncation) {
    std::vector<CScalar> a(truncation);
    double c = std::exp(-shift);
    double fact = 1.0;
    for (int n = 0; n < truncation; ++n) {
        if (n > 0) fact *= n;
        a[n] = CScalar(c / fact, 0.0);
    }
    return AnalyticKernel(std::move(a), std::numeric_limits<double>::infinity(),
                          alpha, beta);
}

// The worked example's kernel: A(x) = exp(x - sqrt(2)), alpha = 1/2, beta = 3i.
inline AnalyticKernel paper_example() {
    return exp_shift(std::sqrt(2.0), 0.5, CScalar(0.0, 3.0));
}

inline AnalyticKernel zero(double alpha, CScalar beta = CScalar(0.0, 0.0)) {
    return AnalyticKernel({CScalar(0.0, 0.0)},
                          std::numeric_limits<double>::infinity(), alpha, beta);
}

} // namespace kernels

} // namespace fkoc
