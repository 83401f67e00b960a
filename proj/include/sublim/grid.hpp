#pragma once

#include "sublim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sublim {

/// Bounded Lipschitz function on the real line with its sup-norm bound
/// and Lipschitz constant.
struct TestFunction {
    std::function<double(double)> fn;
    double bound = 0.0;     // M
    double lipschitz = 0.0; // L

    double operator()(double x) const { return fn(x); }

    static TestFunction constant(double c) { return {[c](double) { return c; }, std::abs(c), 0.0}; }
};

/// Clamped linear interpolation on a uniform index grid: p is a fractional
/// node index, values beyond either end repeat the boundary value.
inline double interpolate_index(std::span<const double> u, double p) {
    const std::size_t last = u.size() - 1;
    if (p <= 0.0)
        return u.front();
    if (p >= static_cast<double>(last))
        return u.back();
    const auto j = static_cast<std::size_t>(p);
    const double f = p - static_cast<double>(j);
    return f == 0.0 ? u[j] : (1.0 - f) * u[j] + f * u[j + 1];
}

/// Function values on a uniform 1-D grid with m+1 nodes.
class ValueGrid {
public:
    ValueGrid(double x_min, double x_max, std::vector<double> values)
        : x_min_(x_min), x_max_(x_max), values_(std::move(values)) {
        if (!(x_min_ < x_max_))
            throw ParameterError("grid needs x_min < x_max");
        if (values_.size() < 3)
            throw ParameterError("grid needs at least 3 nodes");
        for (double v : values_)
            if (!std::isfinite(v))
                throw ParameterError("grid values must be finite");
    }

    /// Samples f at every node.
    template <class F>
    static ValueGrid sample(double x_min, double x_max, std::size_t intervals, const F& f) {
        std::vector<double> v(intervals + 1);
        const double dx = (x_max - x_min) / static_cast<double>(intervals);
        for (std::size_t i = 0; i <= intervals; ++i)
            v[i] = f(node_position(x_min, dx, i, intervals, x_max));
        return ValueGrid(x_min, x_max, std::move(v));
    }

    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    std::size_t intervals() const noexcept { return values_.size() - 1; }
    double dx() const noexcept { return (x_max_ - x_min_) / static_cast<double>(intervals()); }
    double x(std::size_t i) const { return node_position(x_min_, dx(), i, intervals(), x_max_); }
    const std::vector<double>& values() const noexcept { return values_; }

    double at(double x) const { return interpolate_index(values_, (x - x_min_) / dx()); }

    static double node_position(double x_min, double dx, std::size_t i, std::size_t m, double x_max) {
        return i == m ? x_max : x_min + static_cast<double>(i) * dx;
    }

private:
    double x_min_, x_max_;
    std::vector<double> values_;
};

} // namespace sublim
