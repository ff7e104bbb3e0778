#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "fkoc/errors.hpp"
#include "fkoc/special.hpp"

namespace fkoc {

// Uniform mesh t_i = a + i h on [a, b], h = (b-a)/(n-1).
class TimeGrid {
public:
    TimeGrid(double a, double b, int n) : a_(a), b_(b), n_(n) {
        if (!(b > a)) throw InputError("grid: requires b > a");
        if (n < 2) throw InputError("grid: requires at least two nodes");
        h_ = (b - a) / (n - 1);
    }

    double a() const { return a_; }
    double b() const { return b_; }
    int n() const { return n_; }
    double h() const { return h_; }
    double length() const { return b_ - a_; }
    double node(int i) const { return a_ + h_ * i; }

    bool operator==(const TimeGrid& o) const {
        return a_ == o.a_ && b_ == o.b_ && n_ == o.n_;
    }

private:
    double a_, b_;
    int n_;
    double h_;
};

// Complex-valued samples on a TimeGrid.
class GridFunction {
public:
    GridFunction(TimeGrid grid, std::vector<CScalar> values)
        : grid_(grid), values_(std::move(values)) {
        if (static_cast<int>(values_.size()) != grid_.n()) {
            throw ShapeMismatch("grid function: value count does not match grid");
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!is_finite(values_[i])) {
                throw SingularSampleError("grid function: non-finite value at node " +
                                          std::to_string(i));
            }
        }
    }

    static GridFunction zeros(TimeGrid grid) {
        return GridFunction(grid, std::vector<CScalar>(grid.n(), CScalar(0.0, 0.0)));
    }

    template <typename F>
    static GridFunction sample(TimeGrid grid, F&& f) {
        std::vector<CScalar> v(grid.n());
        for (int i = 0; i < grid.n(); ++i) v[i] = CScalar(f(grid.node(i)));
        return GridFunction(grid, std::move(v));
    }

    const TimeGrid& grid() const { return grid_; }
    int n() const { return grid_.n(); }
    const std::vector<CScalar>& values() const { return values_; }
    CScalar operator[](int i) const { return values_[i]; }
    CScalar& operator[](int i) { return values_[i]; }

    double sup_norm() const {
        double m = 0.0;
        for (const auto& v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    // Trapezoidal L1 norm of |values|.
    double l1_norm() const {
        double s = 0.0;
        for (int i = 0; i + 1 < n(); ++i) {
            s += 0.5 * (std::abs(values_[i]) + std::abs(values_[i + 1]));
        }
        return s * grid_.h();
    }

private:
    TimeGrid grid_;
    std::vector<CScalar> values_;
};

// Trapezoidal quadrature of a nodal sequence.
inline CScalar trapezoid(const GridFunction& f) {
    CScalar s(0.0, 0.0);
    for (int i = 0; i + 1 < f.n(); ++i) s += 0.5 * (f[i] + f[i + 1]);
    return s * f.grid().h();
}

// Second-order finite differences: central in the interior, one-sided
// three-point stencils at the endpoints. Exact for quadratics.
inline GridFunction derivative(const GridFunction& gf) {
    int n = gf.n();
    if (n < 3) throw GridTooCoarse("derivative: needs at least three nodes");
    double h = gf.grid().h();
    std::vector<CScalar> d(n);
    d[0] = (-3.0 * gf[0] + 4.0 * gf[1] - gf[2]) / (2.0 * h);
    for (int i = 1; i + 1 < n; ++i) d[i] = (gf[i + 1] - gf[i - 1]) / (2.0 * h);
    d[n - 1] = (3.0 * gf[n - 1] - 4.0 * gf[n - 2] + gf[n - 3]) / (2.0 * h);
    return GridFunction(gf.grid(), std::move(d));
}

} // namespace fkoc
