#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "fkoc/errors.hpp"
#include "fkoc/kernel.hpp"
#include "fkoc/ocp.hpp"

namespace fkoc {

using Json = nlohmann::json;

// Run-wide configuration: interval, grid size, kernel spec, operator
// parameters, seeds and tolerances. Problem data (L, f, bounds, candidates)
// live under the "problem" key.
struct RunConfig {
    double a = 0.0, b = 1.0;
    int grid_n = 513;
    Json kernel_spec;
    double alpha = 0.5;
    CScalar beta{0.0, 0.0};
    double gamma = 1.0;
    std::uint64_t seed = 42;
    int truncation = kernels::kDefaultTruncation;
    Json raw;

    AnalyticKernel kernel() const {
        return make_kernel(kernel_spec, alpha, beta, truncation);
    }

    // Kernel specs: {"builtin": "rl_constant"}, {"builtin": "exp_shift",
    // "shift": s}, or {"coeffs": [[re, im], ...], "radius": R}.
    static AnalyticKernel make_kernel(const Json& spec, double alpha, CScalar beta,
                                      int truncation) {
        if (spec.is_null()) return kernels::rl_constant(alpha, beta);
        if (spec.contains("builtin")) {
            std::string name = spec["builtin"].get<std::string>();
            if (name == "rl_constant") return kernels::rl_constant(alpha, beta);
            if (name == "exp_shift") {
                double shift = spec.value("shift", std::sqrt(2.0));
                return kernels::exp_shift(shift, alpha, beta, truncation);
            }
            if (name == "zero") return kernels::zero(alpha, beta);
            throw InputError("config: unknown builtin kernel '" + name + "'");
        }
        if (spec.contains("coeffs")) {
            std::vector<CScalar> coeffs;
            for (const auto& c : spec["coeffs"]) {
                if (c.is_array()) {
                    coeffs.emplace_back(c.at(0).get<double>(),
                                        c.size() > 1 ? c.at(1).get<double>() : 0.0);
                } else {
                    coeffs.emplace_back(c.get<double>(), 0.0);
                }
            }
            double radius = spec.value("radius", std::numeric_limits<double>::infinity());
            return AnalyticKernel(std::move(coeffs), radius, alpha, beta);
        }
        throw InputError("config: kernel spec needs 'builtin' or 'coeffs'");
    }
};

inline CScalar parse_beta(const Json& j) {
    if (j.is_number()) return CScalar(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2) {
        return CScalar(j.at(0).get<double>(), j.at(1).get<double>());
    }
    throw InputError("config: beta must be a number or [re, im]");
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw InputError(std::string("config parse error: ") + e.what());
    }
    RunConfig cfg;
    cfg.raw = j;
    if (j.contains("interval")) {
        cfg.a = j["interval"].at(0).get<double>();
        cfg.b = j["interval"].at(1).get<double>();
    }
    cfg.grid_n = j.value("grid_n", 513);
    cfg.alpha = j.value("alpha", 0.5);
    if (j.contains("beta")) cfg.beta = parse_beta(j["beta"]);
    cfg.gamma = j.value("gamma", 1.0);
    cfg.seed = j.value("seed", 42ULL);
    cfg.truncation = j.value("truncation", kernels::kDefaultTruncation);
    if (j.contains("kernel")) cfg.kernel_spec = j["kernel"];
    return cfg;
}

// Expression entries may be strings or plain numbers.
inline ExprPtr expr_from(const Json& j, std::string_view allowed) {
    if (j.is_number()) return make_const(j.get<double>());
    if (j.is_string()) return parse(j.get<std::string>(), allowed);
    throw InputError("config: expected expression string or number");
}

// Builds the optimal control problem from the "problem" object: keys L, f,
// x_a, and optional u_min, u_max, lipschitz_K, candidate_x, candidate_u,
// candidate_lambda.
struct ProblemConfig {
    OCProblem problem;
    ExprPtr candidate_x, candidate_u, candidate_lambda;
};

inline ProblemConfig load_problem(const RunConfig& cfg) {
    if (!cfg.raw.contains("problem")) {
        throw InputError("config: missing 'problem' object");
    }
    const Json& pj = cfg.raw["problem"];
    ProblemConfig out{OCProblem{cfg.a, cfg.b, cfg.kernel(), cfg.gamma,
                                nullptr, nullptr, 0.0, {}, std::nullopt,
                                cfg.grid_n, SolveOptions{}},
                      nullptr, nullptr, nullptr};
    OCProblem& p = out.problem;
    if (!pj.contains("L") || !pj.contains("f")) {
        throw InputError("config: problem needs 'L' and 'f' expressions");
    }
    p.L = expr_from(pj["L"], "txu");
    p.f = expr_from(pj["f"], "txu");
    p.x_a = pj.value("x_a", 0.0);
    auto is_infinite = [](const Json& j) {
        return j.is_string() &&
               (j.get<std::string>() == "inf" || j.get<std::string>() == "-inf");
    };
    if (pj.contains("u_min") && !is_infinite(pj["u_min"])) {
        p.bounds.lower = expr_from(pj["u_min"], "t");
    }
    if (pj.contains("u_max") && !is_infinite(pj["u_max"])) {
        p.bounds.upper = expr_from(pj["u_max"], "t");
    }
    if (pj.contains("lipschitz_K")) p.lipschitz_K = pj["lipschitz_K"].get<double>();
    if (pj.contains("candidate_x")) out.candidate_x = expr_from(pj["candidate_x"], "t");
    if (pj.contains("candidate_u")) out.candidate_u = expr_from(pj["candidate_u"], "t");
    if (pj.contains("candidate_lambda")) {
        out.candidate_lambda = expr_from(pj["candidate_lambda"], "t");
    }
    if (cfg.raw.contains("solve")) {
        const Json& sj = cfg.raw["solve"];
        p.opts.max_iter = sj.value("max_iter", 500);
        p.opts.tol = sj.value("tol", 1e-8);
        p.opts.damping = sj.value("damping", 0.5);
    }
    return out;
}

} // namespace fkoc
