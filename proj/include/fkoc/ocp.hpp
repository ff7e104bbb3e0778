#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fkoc/expr.hpp"
#include "fkoc/grid.hpp"
#include "fkoc/kernel.hpp"
#include "fkoc/operators.hpp"
#include "fkoc/rng.hpp"

namespace fkoc {

// Pointwise control bounds; absent expression means unbounded on that side.
struct ControlBounds {
    ExprPtr lower; // expressions in t
    ExprPtr upper;
    bool bounded() const { return lower != nullptr || upper != nullptr; }
};

struct SolveOptions {
    int max_iter = 500;
    double tol = 1e-8;
    double damping = 0.5; // fallback damping for the inner Picard sweep
    double inner_tol = 1e-12;
    int inner_max_iter = 400;
};

// The optimal control problem: maximize J = int L(t,x,u) dt subject to
// D^{alpha,beta,gamma} x = f(t,x,u), x(a) = x_a, u in [u_min(t), u_max(t)].
struct OCProblem {
    double a = 0.0, b = 1.0;
    AnalyticKernel kernel;
    double gamma = 1.0;
    ExprPtr L, f;
    double x_a = 0.0;
    ControlBounds bounds;
    std::optional<double> lipschitz_K;
    int grid_n = 513;
    SolveOptions opts;

    TimeGrid grid() const { return TimeGrid(a, b, grid_n); }

    // Lipschitz constant of f in (x, u): user-declared or estimated by
    // sampling the symbolic partials over a coarse envelope.
    double lipschitz(double x_lo, double x_hi, double u_lo, double u_hi) const {
        if (lipschitz_K) return *lipschitz_K;
        ExprPtr fx = diff(f, VarId::X), fu = diff(f, VarId::U);
        double k = 0.0;
        const int nt = 33, nv = 9;
        for (int i = 0; i < nt; ++i) {
            double t = a + (b - a) * i / (nt - 1);
            for (int jx = 0; jx < nv; ++jx) {
                for (int ju = 0; ju < nv; ++ju) {
                    EvalEnv env{t, x_lo + (x_hi - x_lo) * jx / (nv - 1),
                                u_lo + (u_hi - u_lo) * ju / (nv - 1)};
                    try {
                        k = std::max(k, std::abs(eval(fx, env)));
                        k = std::max(k, std::abs(eval(fu, env)));
                    } catch (const EvalError&) {
                        // singular sample point, skip
                    }
                }
            }
        }
        return k;
    }

    std::vector<std::string> premise_notes() const {
        std::vector<std::string> notes;
        if (std::abs(CScalar(kernel.alpha(), 0.0) + kernel.beta()) < 1.0) {
            notes.push_back("|alpha + beta| < 1: problem constraint violated");
        }
        double m = sup_bound(kernel, b - a).value();
        double threshold = std::pow(b - a, 1.0 - kernel.alpha()) / std::max(m, 1e-300);
        double k = lipschitz(-1.0, 1.0, -1.0, 1.0);
        if (k >= threshold) {
            notes.push_back("Lipschitz constant " + std::to_string(k) +
                            " >= continuity threshold " + std::to_string(threshold));
        }
        return notes;
    }
};

struct Candidate {
    GridFunction x, u, lambda;
    std::vector<int> excluded; // nodes where candidate expressions are singular
};

struct ExtremalReport {
    double r_state = 0.0;
    double r_adjoint = 0.0;
    double r_optimality = 0.0;
    double r_transversality = 0.0;        // literal form (right integral at b)
    double r_transversality_alt = 0.0;    // right integral evaluated at a
    std::string transversality_enforced = "literal";
    double J = 0.0;
    std::vector<int> excluded_nodes;
    int iterations = 0;
    double imag_x_max = 0.0;
    double ic_residual = 0.0; // |x(a) - x_a|
    double operator_truncation = 0.0;
    std::string notes;
};

struct SolveInfo {
    int iterations = 0;
    bool converged = false;
    double last_change = 0.0;
    double J = 0.0;
    double imag_x_max = 0.0;
    std::string transversality_enforced = "literal";
    std::vector<int> excluded_nodes;
};

inline CScalar hamiltonian(const OCProblem& p, double t, double x, double u,
                           CScalar lambda) {
    EvalEnv env{t, x, u};
    return CScalar(eval(p.L, env), 0.0) + lambda * eval(p.f, env);
}

// ---------------------------------------------------------------------------
// Discretized problem operators
// ---------------------------------------------------------------------------

struct ProblemOperators {
    TimeGrid grid;
    FracOperatorMatrix cap_combined;  // ^A_C D^{alpha,beta,gamma}
    FracOperatorMatrix rl_adjoint;    // ^A_RL D^{alpha,beta,1-gamma}
    FracOperatorMatrix ibar_left;     // ^Abar I^{1-alpha} from the left
    FracOperatorMatrix ibar_right;    //   ... and from the right
    Eigen::RowVectorXcd trans_row;    // enforced transversality closure
    std::string trans_enforced;
    double truncation_estimate = 0.0;
};

inline ProblemOperators build_problem_operators(const OCProblem& p) {
    TimeGrid grid = p.grid();
    const int n = grid.n();
    FracOperatorMatrix capl = build_caputo(grid, p.kernel, Side::Left);
    FracOperatorMatrix capr = build_caputo(grid, p.kernel, Side::Right);
    FracOperatorMatrix rll = build_rl_derivative(grid, p.kernel, Side::Left);
    FracOperatorMatrix rlr = build_rl_derivative(grid, p.kernel, Side::Right);
    FracOperatorMatrix ibl = build_reciprocal_integral(grid, p.kernel, Side::Left);
    FracOperatorMatrix ibr = build_reciprocal_integral(grid, p.kernel, Side::Right);

    ProblemOperators ops{grid,
                         combine(capl, capr, p.gamma),
                         combine(rll, rlr, 1.0 - p.gamma),
                         std::move(ibl),
                         std::move(ibr),
                         Eigen::RowVectorXcd::Zero(n),
                         "literal",
                         0.0};
    ops.truncation_estimate = std::max(ops.cap_combined.truncation_estimate,
                                       ops.rl_adjoint.truncation_estimate);

    // Transversality closure: (1-gamma) Ibar_{a+} lambda (b) + gamma
    // Ibar_{b-} lambda (b) = 0. Read literally the right integral at t = b is
    // the empty integral, which for gamma = 1 yields an identically zero row;
    // the solver then falls back to the symmetric alternative with the right
    // integral taken at t = a.
    Eigen::RowVectorXcd lit = (1.0 - p.gamma) * ops.ibar_left.m.row(n - 1) +
                              p.gamma * ops.ibar_right.m.row(n - 1);
    double scale = ops.ibar_left.m.row(n - 1).cwiseAbs().maxCoeff() +
                   ops.ibar_right.m.row(0).cwiseAbs().maxCoeff();
    if (lit.cwiseAbs().maxCoeff() > 1e-12 * scale) {
        ops.trans_row = lit;
        ops.trans_enforced = "literal";
    } else {
        ops.trans_row = (1.0 - p.gamma) * ops.ibar_left.m.row(n - 1) +
                        p.gamma * ops.ibar_right.m.row(0);
        ops.trans_enforced = "alternative";
    }
    return ops;
}

namespace detail {

inline Vector to_vector(const GridFunction& g) {
    return Eigen::Map<const Vector>(g.values().data(), g.n());
}

inline GridFunction to_grid_function(const TimeGrid& grid, const Vector& v) {
    return GridFunction(grid, std::vector<CScalar>(v.data(), v.data() + v.size()));
}

class LuSolver {
public:
    explicit LuSolver(const Matrix& m) : lu_(m) {
        Eigen::VectorXd d = lu_.matrixLU().diagonal().cwiseAbs();
        if (d.minCoeff() <= 1e-14 * std::max(d.maxCoeff(), 1e-300)) {
            throw LinearSolveError("linear solve: discretized system is singular");
        }
    }
    Vector solve(const Vector& rhs) const { return lu_.solve(rhs); }

private:
    Eigen::PartialPivLU<Matrix> lu_;
};

// Evaluates expr at every node with the candidate values; failures land in
// `excluded` and yield 0.
inline std::vector<double> eval_nodes(const ExprPtr& e, const TimeGrid& grid,
                                      const GridFunction* x, const GridFunction* u,
                                      std::set<int>& excluded) {
    std::vector<double> out(grid.n(), 0.0);
    for (int i = 0; i < grid.n(); ++i) {
        EvalEnv env{grid.node(i), x ? (*x)[i].real() : 0.0, u ? (*u)[i].real() : 0.0};
        try {
            out[i] = eval(e, env);
        } catch (const EvalError&) {
            excluded.insert(i);
        }
    }
    return out;
}

} // namespace detail

// Samples a candidate expression on the grid; singular nodes are recorded and
// filled with zero (they are skipped by every residual later).
inline GridFunction sample_candidate(const TimeGrid& grid, const ExprPtr& e,
                                     std::vector<int>& excluded) {
    std::vector<CScalar> v(grid.n(), CScalar(0.0, 0.0));
    for (int i = 0; i < grid.n(); ++i) {
        try {
            v[i] = CScalar(eval(e, EvalEnv{grid.node(i), 0.0, 0.0}), 0.0);
        } catch (const EvalError&) {
            excluded.push_back(i);
        }
    }
    return GridFunction(grid, std::move(v));
}

// Trapezoid of the running cost skipping singular nodes (their half-cells are
// dropped and noted by the caller).
inline double objective(const OCProblem& p, const TimeGrid& grid, const GridFunction& x,
                        const GridFunction& u, std::set<int>& excluded) {
    std::vector<double> l = detail::eval_nodes(p.L, grid, &x, &u, excluded);
    double s = 0.0;
    for (int i = 0; i + 1 < grid.n(); ++i) {
        if (excluded.count(i) || excluded.count(i + 1)) continue;
        s += 0.5 * (l[i] + l[i + 1]);
    }
    return s * grid.h();
}

// ---------------------------------------------------------------------------
// Pontryagin residual evaluation
// ---------------------------------------------------------------------------

inline ExtremalReport evaluate_extremal(const OCProblem& p, const Candidate& c,
                                        const ProblemOperators& ops) {
    const TimeGrid& grid = ops.grid;
    const int n = grid.n();
    if (!(c.x.grid() == grid)) throw ShapeMismatch("candidate lives on a different grid");

    ExtremalReport rep;
    rep.operator_truncation = ops.truncation_estimate;
    std::set<int> excluded(c.excluded.begin(), c.excluded.end());

    ExprPtr lx = diff(p.L, VarId::X), lu = diff(p.L, VarId::U);
    ExprPtr fx = diff(p.f, VarId::X), fu = diff(p.f, VarId::U);
    std::vector<double> fv = detail::eval_nodes(p.f, grid, &c.x, &c.u, excluded);
    std::vector<double> lxv = detail::eval_nodes(lx, grid, &c.x, &c.u, excluded);
    std::vector<double> luv = detail::eval_nodes(lu, grid, &c.x, &c.u, excluded);
    std::vector<double> fxv = detail::eval_nodes(fx, grid, &c.x, &c.u, excluded);
    std::vector<double> fuv = detail::eval_nodes(fu, grid, &c.x, &c.u, excluded);

    GridFunction dx = ops.cap_combined.apply(c.x);
    GridFunction dl = ops.rl_adjoint.apply(c.lambda);

    for (int i = 1; i + 1 < n; ++i) {
        if (excluded.count(i)) continue;
        rep.r_state = std::max(rep.r_state, std::abs(dx[i] - fv[i]));
        CScalar hx = CScalar(lxv[i], 0.0) + c.lambda[i] * fxv[i];
        rep.r_adjoint = std::max(rep.r_adjoint, std::abs(dl[i] - hx));
        CScalar hu = CScalar(luv[i], 0.0) + c.lambda[i] * fuv[i];
        double ui = c.u[i].real();
        if (p.bounds.bounded()) {
            double lo = p.bounds.lower ? eval(p.bounds.lower, EvalEnv{grid.node(i), 0, 0})
                                       : -1e300;
            double hi = p.bounds.upper ? eval(p.bounds.upper, EvalEnv{grid.node(i), 0, 0})
                                       : 1e300;
            double proj = std::clamp(ui + hu.real(), lo, hi);
            rep.r_optimality = std::max(rep.r_optimality, std::abs(ui - proj));
        } else {
            rep.r_optimality = std::max(rep.r_optimality, std::abs(hu));
        }
    }

    Vector lam = detail::to_vector(c.lambda);
    const int last = n - 1;
    Eigen::RowVectorXcd row_lit = (1.0 - p.gamma) * ops.ibar_left.m.row(last) +
                                  p.gamma * ops.ibar_right.m.row(last);
    Eigen::RowVectorXcd row_alt = (1.0 - p.gamma) * ops.ibar_left.m.row(last) +
                                  p.gamma * ops.ibar_right.m.row(0);
    rep.r_transversality = std::abs((row_lit * lam).value());
    rep.r_transversality_alt = std::abs((row_alt * lam).value());
    rep.transversality_enforced = ops.trans_enforced;

    rep.imag_x_max = 0.0;
    for (int i = 0; i < n; ++i) {
        rep.imag_x_max = std::max(rep.imag_x_max, std::abs(c.x[i].imag()));
    }
    rep.ic_residual = std::abs(c.x[0] - CScalar(p.x_a, 0.0));
    rep.J = objective(p, grid, c.x, c.u, excluded);
    rep.excluded_nodes.assign(excluded.begin(), excluded.end());
    return rep;
}

inline ExtremalReport evaluate_extremal(const OCProblem& p, const Candidate& c) {
    ProblemOperators ops = build_problem_operators(p);
    return evaluate_extremal(p, c, ops);
}

// ---------------------------------------------------------------------------
// State and adjoint solves
// ---------------------------------------------------------------------------

namespace detail {

// Shared machinery for the damped Picard state solve: solves
// M_C x = f(t, Re x, u), x(a) = x_a, through the shifted system
// (M_C - diag(c)) x = f(t, Re x_k, u) - c x_k with c = df/dx frozen at the
// sweep start (one factorization per sweep; exact in one step for linear f).
struct StateSolver {
    const OCProblem& p;
    const ProblemOperators& ops;
    Matrix base;          // M_C with row 0 replaced by the initial condition
    std::vector<double> shift;
    std::optional<LuSolver> lu;

    StateSolver(const OCProblem& problem, const ProblemOperators& operators)
        : p(problem), ops(operators) {
        base = ops.cap_combined.m;
        base.row(0).setZero();
        base(0, 0) = CScalar(1.0, 0.0);
        shift.assign(ops.grid.n(), 0.0);
    }

    void refresh(const GridFunction& x, const GridFunction& u, std::set<int>& excluded) {
        ExprPtr fx = diff(p.f, VarId::X);
        std::vector<double> c = eval_nodes(fx, ops.grid, &x, &u, excluded);
        c[0] = 0.0;
        bool changed = !lu.has_value();
        for (int i = 0; i < ops.grid.n(); ++i) {
            if (std::abs(c[i] - shift[i]) > 1e-13 * (1.0 + std::abs(shift[i])))
                changed = true;
        }
        if (!changed) return;
        shift = c;
        Matrix m = base;
        for (int i = 1; i < ops.grid.n(); ++i) m(i, i) -= shift[i];
        lu.emplace(m);
    }

    // One Picard sweep from x0; returns the fixed point.
    GridFunction solve(const GridFunction& u, GridFunction x, std::set<int>& excluded,
                       double tol, int max_iter) {
        refresh(x, u, excluded);
        const int n = ops.grid.n();
        double theta = 1.0;
        double prev_res = 1e300;
        for (int it = 0; it < max_iter; ++it) {
            std::vector<double> fv = eval_nodes(p.f, ops.grid, &x, &u, excluded);
            Vector rhs(n);
            rhs[0] = CScalar(p.x_a, 0.0);
            Vector xv = to_vector(x);
            for (int i = 1; i < n; ++i) rhs[i] = CScalar(fv[i], 0.0) - shift[i] * xv[i];
            Vector xnew = lu->solve(rhs);
            double res = 0.0;
            for (int i = 0; i < n; ++i) res = std::max(res, std::abs(xnew[i] - xv[i]));
            if (res > prev_res * 1.05 && theta > p.opts.damping) {
                theta = p.opts.damping; // damp when the full step diverges
            }
            Vector mixed = theta * xnew + (1.0 - theta) * xv;
            x = to_grid_function(ops.grid, mixed);
            prev_res = res;
            double scale = std::max(1.0, x.sup_norm());
            if (res * theta < tol * scale) return x;
        }
        throw NoConvergence("state solve: Picard sweep did not converge",
                            max_iter, prev_res);
    }
};

} // namespace detail

// Solves the state equation for a fixed control (used by the continuity
// experiments and by each sweep of the solver).
inline GridFunction solve_state(const OCProblem& p, const ProblemOperators& ops,
                                const GridFunction& u,
                                std::vector<int>* excluded_out = nullptr) {
    detail::StateSolver solver(p, ops);
    std::set<int> excluded;
    GridFunction x0 = GridFunction::zeros(ops.grid);
    x0[0] = CScalar(p.x_a, 0.0);
    GridFunction x = solver.solve(u, x0, excluded, p.opts.inner_tol, p.opts.inner_max_iter);
    if (excluded_out) excluded_out->assign(excluded.begin(), excluded.end());
    return x;
}

// ---------------------------------------------------------------------------
// Forward-backward sweep
// ---------------------------------------------------------------------------

inline std::pair<Candidate, SolveInfo> solve_fbs(const OCProblem& p,
                                                 const GridFunction& init_u) {
    ProblemOperators ops = build_problem_operators(p);
    const TimeGrid& grid = ops.grid;
    const int n = grid.n();
    const SolveOptions& o = p.opts;

    ExprPtr lx = diff(p.L, VarId::X), lu_e = diff(p.L, VarId::U);
    ExprPtr fx = diff(p.f, VarId::X), fu = diff(p.f, VarId::U);

    std::set<int> excluded;
    GridFunction u = init_u;
    detail::StateSolver state(p, ops);
    GridFunction x0 = GridFunction::zeros(grid);
    x0[0] = CScalar(p.x_a, 0.0);
    GridFunction x = state.solve(u, x0, excluded, o.inner_tol, o.inner_max_iter);
    GridFunction lambda = GridFunction::zeros(grid);

    auto solve_adjoint = [&](const GridFunction& xs, const GridFunction& us) {
        std::vector<double> fxv = detail::eval_nodes(fx, grid, &xs, &us, excluded);
        std::vector<double> lxv = detail::eval_nodes(lx, grid, &xs, &us, excluded);
        Matrix m = ops.rl_adjoint.m;
        for (int i = 0; i + 1 < n; ++i) m(i, i) -= fxv[i];
        m.row(n - 1) = ops.trans_row;
        Vector rhs(n);
        for (int i = 0; i < n; ++i) rhs[i] = CScalar(lxv[i], 0.0);
        rhs[n - 1] = CScalar(0.0, 0.0);
        detail::LuSolver lu(m);
        return detail::to_grid_function(grid, lu.solve(rhs));
    };

    auto project = [&](double v, double t) {
        double lo = p.bounds.lower ? eval(p.bounds.lower, EvalEnv{t, 0, 0}) : -1e300;
        double hi = p.bounds.upper ? eval(p.bounds.upper, EvalEnv{t, 0, 0}) : 1e300;
        return std::clamp(v, lo, hi);
    };

    lambda = solve_adjoint(x, u);
    double J = objective(p, grid, x, u, excluded);
    double sigma = 1.0;
    SolveInfo info;
    info.transversality_enforced = ops.trans_enforced;

    for (int it = 1; it <= o.max_iter; ++it) {
        info.iterations = it;
        // gradient of the reduced objective: dH/du along the sweep
        std::vector<double> luv = detail::eval_nodes(lu_e, grid, &x, &u, excluded);
        std::vector<double> fuv = detail::eval_nodes(fu, grid, &x, &u, excluded);
        std::vector<double> grad(n, 0.0);
        double gsup = 0.0; // sup of the projected-gradient displacement
        for (int i = 0; i < n; ++i) {
            if (excluded.count(i)) continue;
            grad[i] = luv[i] + (lambda[i] * fuv[i]).real();
            gsup = std::max(gsup, std::abs(project(u[i].real() + grad[i], grid.node(i)) -
                                           u[i].real()));
        }

        // backtracking ascent step on J
        sigma = std::min(sigma * 2.0, 1e6);
        bool accepted = false;
        GridFunction u_try = u, x_try = x;
        double J_try = J;
        while (sigma > 1e-12) {
            u_try = u;
            for (int i = 0; i < n; ++i) {
                if (excluded.count(i)) continue;
                u_try[i] = CScalar(project(u[i].real() + sigma * grad[i], grid.node(i)), 0.0);
            }
            try {
                x_try = state.solve(u_try, x, excluded, o.inner_tol, o.inner_max_iter);
            } catch (const NoConvergence&) {
                sigma *= 0.5;
                continue;
            }
            J_try = objective(p, grid, x_try, u_try, excluded);
            if (J_try >= J - 1e-12 * (1.0 + std::abs(J))) {
                accepted = true;
                break;
            }
            sigma *= 0.5;
        }
        if (!accepted) {
            // line search stalled: optimal iff the projected gradient vanished
            info.converged = gsup < 10.0 * o.tol;
            break;
        }

        GridFunction lambda_new = solve_adjoint(x_try, u_try);
        double change = 0.0;
        for (int i = 0; i < n; ++i) {
            change = std::max(change, std::abs(u_try[i] - u[i]));
            change = std::max(change, std::abs(x_try[i] - x[i]));
            change = std::max(change, std::abs(lambda_new[i] - lambda[i]));
        }
        u = u_try;
        x = x_try;
        lambda = lambda_new;
        J = J_try;
        info.last_change = change;
        if (change < o.tol && gsup < 10.0 * o.tol) {
            info.converged = true;
            break;
        }
    }

    info.J = J;
    for (int i = 0; i < n; ++i) {
        info.imag_x_max = std::max(info.imag_x_max, std::abs(x[i].imag()));
    }
    info.excluded_nodes.assign(excluded.begin(), excluded.end());
    if (!info.converged) {
        throw NoConvergence("solve_fbs: no convergence in " +
                                std::to_string(o.max_iter) + " iterations",
                            info.iterations, info.last_change);
    }
    Candidate c{x, u, lambda, info.excluded_nodes};
    return {std::move(c), std::move(info)};
}

// ---------------------------------------------------------------------------
// Mangasarian sufficiency check
// ---------------------------------------------------------------------------

struct SufficiencyReport {
    bool lambda_nonnegative = true;
    bool l_concave = true;
    bool f_concave = true;
    double worst_eigenvalue_L = -1e300;
    double worst_eigenvalue_f = -1e300;
    double min_lambda = 0.0;
    std::string witness;
    bool passed() const { return lambda_nonnegative && l_concave && f_concave; }
};

namespace detail {

// Largest eigenvalue of the symmetric 2x2 Hessian [[hxx, hxu], [hxu, huu]].
inline double hessian_max_eig(double hxx, double hxu, double huu) {
    double tr = hxx + huu;
    double disc = std::sqrt(std::max(0.0, (hxx - huu) * (hxx - huu) + 4.0 * hxu * hxu));
    return 0.5 * (tr + disc);
}

} // namespace detail

inline SufficiencyReport check_sufficiency(const OCProblem& p, const Candidate& c,
                                           int samples, std::uint64_t seed = 42) {
    if (p.bounds.bounded()) {
        throw InputError("sufficiency check applies to unconstrained controls only");
    }
    SufficiencyReport rep;
    rep.min_lambda = 1e300;
    for (int i = 0; i < c.lambda.n(); ++i) {
        rep.min_lambda = std::min(rep.min_lambda, c.lambda[i].real());
    }
    rep.lambda_nonnegative = rep.min_lambda >= -1e-12;

    // envelope of the candidate trajectory, padded
    double xlo = 1e300, xhi = -1e300, ulo = 1e300, uhi = -1e300;
    std::set<int> skip(c.excluded.begin(), c.excluded.end());
    for (int i = 0; i < c.x.n(); ++i) {
        if (skip.count(i)) continue;
        xlo = std::min(xlo, c.x[i].real());
        xhi = std::max(xhi, c.x[i].real());
        ulo = std::min(ulo, c.u[i].real());
        uhi = std::max(uhi, c.u[i].real());
    }
    double xpad = 0.5 * (xhi - xlo) + 1.0, upad = 0.5 * (uhi - ulo) + 1.0;
    xlo -= xpad;
    xhi += xpad;
    ulo -= upad;
    uhi += upad;

    struct Second {
        ExprPtr xx, xu, uu;
    };
    auto seconds = [](const ExprPtr& e) {
        ExprPtr ex = diff(e, VarId::X), eu = diff(e, VarId::U);
        return Second{diff(ex, VarId::X), diff(ex, VarId::U), diff(eu, VarId::U)};
    };
    Second l2 = seconds(p.L), f2 = seconds(p.f);

    Rng rng(seed);
    int done = 0, attempts = 0;
    while (done < samples && attempts < samples * 20) {
        ++attempts;
        EvalEnv env{rng.uniform(p.a, p.b), rng.uniform(xlo, xhi), rng.uniform(ulo, uhi)};
        try {
            double el = detail::hessian_max_eig(eval(l2.xx, env), eval(l2.xu, env),
                                                eval(l2.uu, env));
            double ef = detail::hessian_max_eig(eval(f2.xx, env), eval(f2.xu, env),
                                                eval(f2.uu, env));
            rep.worst_eigenvalue_L = std::max(rep.worst_eigenvalue_L, el);
            rep.worst_eigenvalue_f = std::max(rep.worst_eigenvalue_f, ef);
            if (el > 1e-10 && rep.l_concave) {
                rep.l_concave = false;
                rep.witness = "L convex direction at t=" + std::to_string(env.t) +
                              " x=" + std::to_string(env.x) + " u=" + std::to_string(env.u) +
                              " eig=" + std::to_string(el);
            }
            if (ef > 1e-10 && rep.f_concave) {
                rep.f_concave = false;
                rep.witness += (rep.witness.empty() ? "" : "; ");
                rep.witness += "f convex direction at t=" + std::to_string(env.t) +
                               " eig=" + std::to_string(ef);
            }
            ++done;
        } catch (const EvalError&) {
            // singular sample, retry elsewhere
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Continuity / differentiability experiments
// ---------------------------------------------------------------------------

struct ContinuityRow {
    double eps;
    double distance;       // ||x_eps - x*||_inf
    double variation_gap;  // ||(x_eps - x*)/eps - eta||_inf
};

struct ContinuityReport {
    std::vector<ContinuityRow> rows;
    double fitted_slope = 0.0;
    double lipschitz_K = 0.0;
    double premise_threshold = 0.0;
};

inline ContinuityReport continuity_experiment(const OCProblem& p, const GridFunction& u_star,
                                              const GridFunction& h,
                                              const std::vector<double>& eps_list) {
    for (std::size_t i = 1; i < eps_list.size(); ++i) {
        if (!(eps_list[i] < eps_list[i - 1]) || eps_list[i] <= 0.0) {
            throw InputError("continuity: eps list must be positive decreasing");
        }
    }
    ProblemOperators ops = build_problem_operators(p);
    const TimeGrid& grid = ops.grid;
    const int n = grid.n();

    std::vector<int> excl;
    GridFunction x0 = solve_state(p, ops, u_star, &excl);

    // linear variation equation for eta
    std::set<int> excluded(excl.begin(), excl.end());
    ExprPtr fx = diff(p.f, VarId::X), fu = diff(p.f, VarId::U);
    std::vector<double> fxv = detail::eval_nodes(fx, grid, &x0, &u_star, excluded);
    std::vector<double> fuv = detail::eval_nodes(fu, grid, &x0, &u_star, excluded);
    Matrix m = ops.cap_combined.m;
    m.row(0).setZero();
    m(0, 0) = CScalar(1.0, 0.0);
    for (int i = 1; i < n; ++i) m(i, i) -= fxv[i];
    Vector rhs(n);
    rhs[0] = CScalar(0.0, 0.0);
    for (int i = 1; i < n; ++i) rhs[i] = CScalar(fuv[i] * h[i].real(), 0.0);
    detail::LuSolver lu(m);
    GridFunction eta = detail::to_grid_function(grid, lu.solve(rhs));

    ContinuityReport rep;
    double xmax = x0.sup_norm(), umax = u_star.sup_norm();
    rep.lipschitz_K = p.lipschitz(-xmax - 1, xmax + 1, -umax - 1, umax + 1);
    double sup_m = sup_bound(p.kernel, grid.length()).value();
    rep.premise_threshold =
        std::pow(grid.length(), 1.0 - p.kernel.alpha()) / std::max(sup_m, 1e-300);

    for (double eps : eps_list) {
        GridFunction u_eps = u_star;
        for (int i = 0; i < n; ++i) u_eps[i] += eps * h[i];
        GridFunction x_eps = solve_state(p, ops, u_eps);
        double dist = 0.0, gap = 0.0;
        for (int i = 0; i < n; ++i) {
            dist = std::max(dist, std::abs(x_eps[i] - x0[i]));
            gap = std::max(gap, std::abs((x_eps[i] - x0[i]) / eps - eta[i]));
        }
        rep.rows.push_back(ContinuityRow{eps, dist, gap});
    }

    // least-squares slope of log(dist) against log(eps)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (const auto& r : rep.rows) {
        if (r.distance <= 0.0) continue;
        double lx_ = std::log(r.eps), ly = std::log(r.distance);
        sx += lx_;
        sy += ly;
        sxx += lx_ * lx_;
        sxy += lx_ * ly;
        ++cnt;
    }
    if (cnt >= 2) rep.fitted_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    return rep;
}

} // namespace fkoc
