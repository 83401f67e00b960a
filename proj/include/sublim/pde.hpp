#pragma once

// G-heat equation  u_t = G(u_xx)  and its drift extension  u_t = G(u_x, u_xx)
// solved with explicit monotone finite differences on [-L, L].
//
//   G(a)    = 1/2 (sigma_max^2 a^+ - sigma_min^2 a^-)
//   G(p, a) = max over corners (mu, sigma^2) of  mu p + 1/2 sigma^2 a
//
// Both schemes keep the node's own coefficient nonnegative, hence are
// monotone and satisfy the discrete maximum principle.

#include "sublim/clt.hpp"
#include "sublim/errors.hpp"
#include "sublim/grid.hpp"
#include "sublim/measures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sublim {

/// Variance interval [sigma_min_sq, sigma_max_sq] and drift interval [mu_min, mu_max].
class GParams1D {
public:
    GParams1D(double sigma_min_sq, double sigma_max_sq, double mu_min = 0.0, double mu_max = 0.0)
        : sigma_min_sq_(sigma_min_sq), sigma_max_sq_(sigma_max_sq), mu_min_(mu_min), mu_max_(mu_max) {
        if (!(sigma_min_sq >= 0.0 && sigma_min_sq <= sigma_max_sq) || !std::isfinite(sigma_max_sq))
            throw ParameterError("need 0 <= sigma_min_sq <= sigma_max_sq");
        if (!(mu_min <= mu_max) || !std::isfinite(mu_min) || !std::isfinite(mu_max))
            throw ParameterError("need mu_min <= mu_max");
    }

    double sigma_min_sq() const noexcept { return sigma_min_sq_; }
    double sigma_max_sq() const noexcept { return sigma_max_sq_; }
    double mu_min() const noexcept { return mu_min_; }
    double mu_max() const noexcept { return mu_max_; }
    bool has_drift() const noexcept { return mu_min_ != 0.0 || mu_max_ != 0.0; }
    double max_abs_drift() const noexcept { return std::max(std::abs(mu_min_), std::abs(mu_max_)); }

    friend bool operator==(const GParams1D&, const GParams1D&) = default;

private:
    double sigma_min_sq_, sigma_max_sq_, mu_min_, mu_max_;
};

inline double g_eval(const GParams1D& g, double a) {
    return 0.5 * (g.sigma_max_sq() * std::max(a, 0.0) - g.sigma_min_sq() * std::max(-a, 0.0));
}

/// Rectangle form: sup over [mu_min, mu_max] of mu p, plus g_eval(a).
inline double gp_eval(const GParams1D& g, double p, double a) {
    return (g.mu_max() * std::max(p, 0.0) - g.mu_min() * std::max(-p, 0.0)) + g_eval(g, a);
}

/// Family form: max over members of p E[y] + 1/2 a E[x^2]. Never above gp_eval
/// on g_from_family(steps).
inline double gp_eval_family(const DriftStepFamily& steps, double p, double a) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < steps.mean_y().size(); ++k)
        best = std::max(best, p * steps.mean_y()[k] + 0.5 * a * steps.var_x()[k]);
    return best;
}

inline GParams1D g_from_family(const StepFamily& steps) {
    return GParams1D(steps.sigma_min_sq(), steps.sigma_max_sq());
}

/// Bounding rectangle of the family's (E[y], E[x^2]) pairs. Correlated
/// members make this a relaxation; use gp_eval_family for the exact G.
inline GParams1D g_from_family(const DriftStepFamily& steps) {
    const auto& v = steps.var_x();
    const auto& m = steps.mean_y();
    return GParams1D(*std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end()),
                     *std::min_element(m.begin(), m.end()), *std::max_element(m.begin(), m.end()));
}

/// G(A) = 1/2 max_theta E_theta[<A x, x>] for a d x d row-major matrix A.
inline double g_eval_matrix(const AmbiguitySet& family, std::span<const double> a) {
    const std::size_t d = family.dimension();
    if (a.size() != d * d)
        throw ParameterError("matrix size does not match family dimension");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& m : family) {
        const double e = m.expectation([&](PointView x) {
            double q = 0.0;
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t c = 0; c < d; ++c)
                    q += a[r * d + c] * x[r] * x[c];
            return q;
        });
        best = std::max(best, e);
    }
    return 0.5 * best;
}

struct PdeConfig {
    double half_width = 10.0; // L
    double dx = 0.01;
    double horizon = 1.0; // T
    double gamma = 0.9;   // CFL safety factor
    std::vector<double> snapshot_times{1.0};

    std::size_t intervals() const {
        if (!(half_width > 0.0) || !std::isfinite(half_width))
            throw ParameterError("pde half_width must be positive");
        if (!(dx > 0.0) || !std::isfinite(dx))
            throw ParameterError("pde dx must be positive");
        const double m = 2.0 * half_width / dx;
        const double r = std::round(m);
        if (std::abs(m - r) > 1e-9 * std::max(1.0, m) || r < 2.0)
            throw ParameterError("2 L / dx must be an integer >= 2");
        return static_cast<std::size_t>(r);
    }

    void validate() const {
        (void)intervals();
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw ParameterError("pde horizon T must be positive");
        if (!(gamma > 0.0 && gamma <= 1.0))
            throw ParameterError("CFL factor gamma must lie in (0, 1]");
        for (double t : snapshot_times)
            if (!(t >= 0.0 && t <= horizon))
                throw ParameterError("snapshot time outside [0, T]");
    }
};

struct Snapshot {
    double time;
    ValueGrid grid;
};

struct Solution {
    TestFunction initial;
    std::vector<Snapshot> snapshots;
    double dt = 0.0;
    std::size_t steps = 0; // to the horizon
};

namespace detail {

enum class Scheme { heat, hjb };

inline double max_stable_dt(const GParams1D& g, double dx, double gamma, Scheme scheme) {
    const double rate = g.sigma_max_sq() / (dx * dx) + (scheme == Scheme::hjb ? g.max_abs_drift() / dx : 0.0);
    if (!(rate > 0.0))
        throw ParameterError("G is identically zero; nothing to evolve");
    return gamma / rate;
}

inline std::size_t step_count(double t, double dt_max) {
    if (t <= 0.0)
        return 0;
    return static_cast<std::size_t>(std::max(1.0, std::ceil(t / dt_max - 1e-9)));
}

inline void step_heat(const GParams1D& g, std::span<const double> u, std::span<double> out, double dt, double dx) {
    const double inv = 1.0 / (dx * dx);
    const std::size_t m = u.size() - 1;
    for (std::size_t i = 1; i < m; ++i)
        out[i] = u[i] + dt * g_eval(g, (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv);
    out[0] = out[1];
    out[m] = out[m - 1];
}

inline void step_hjb(const GParams1D& g, std::span<const double> u, std::span<double> out, double dt, double dx) {
    const double inv2 = 1.0 / (dx * dx);
    const double inv1 = 1.0 / dx;
    const std::array<double, 2> mus{g.mu_min(), g.mu_max()};
    const std::array<double, 2> sigmas{g.sigma_min_sq(), g.sigma_max_sq()};
    const std::size_t m = u.size() - 1;
    for (std::size_t i = 1; i < m; ++i) {
        const double fwd = (u[i + 1] - u[i]) * inv1;
        const double bwd = (u[i] - u[i - 1]) * inv1;
        const double d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv2;
        double best = -std::numeric_limits<double>::infinity();
        for (double mu : mus) {
            const double drift = mu > 0.0 ? mu * fwd : (mu < 0.0 ? mu * bwd : 0.0);
            for (double s2 : sigmas)
                best = std::max(best, drift + 0.5 * s2 * d2);
        }
        out[i] = u[i] + dt * best;
    }
    out[0] = out[1];
    out[m] = out[m - 1];
}

// Marches u forward by `steps` steps of size dt. `on_step(k, u)` sees the state after step k.
template <class OnStep>
std::vector<double> march(const GParams1D& g, std::vector<double> u, double dx, double dt, std::size_t steps,
                          Scheme scheme, OnStep&& on_step) {
    std::vector<double> next(u.size());
    for (std::size_t k = 1; k <= steps; ++k) {
        if (scheme == Scheme::heat)
            step_heat(g, u, next, dt, dx);
        else
            step_hjb(g, u, next, dt, dx);
        for (double v : next)
            if (!std::isfinite(v))
                throw NumericError("non-finite value in explicit scheme", k);
        u.swap(next);
        on_step(k, u);
    }
    return u;
}

inline std::vector<double> sample_initial(const TestFunction& phi, const PdeConfig& cfg) {
    const std::size_t m = cfg.intervals();
    std::vector<double> u(m + 1);
    for (std::size_t i = 0; i <= m; ++i) {
        u[i] = phi(ValueGrid::node_position(-cfg.half_width, cfg.dx, i, m, cfg.half_width));
        if (!std::isfinite(u[i]))
            throw NumericError("initial function is not finite on the grid", 0);
    }
    return u;
}

inline Solution solve(const GParams1D& g, const TestFunction& phi, const PdeConfig& cfg, Scheme scheme) {
    cfg.validate();
    auto u = sample_initial(phi, cfg);
    const std::size_t steps = step_count(cfg.horizon, max_stable_dt(g, cfg.dx, cfg.gamma, scheme));
    const double dt = cfg.horizon / static_cast<double>(steps);

    std::vector<double> times = cfg.snapshot_times;
    std::sort(times.begin(), times.end());
    // Nearest completed step for each requested time.
    std::vector<std::size_t> at_step;
    for (double t : times)
        at_step.push_back(std::min(steps, static_cast<std::size_t>(std::llround(t / dt))));

    Solution sol{phi, {}, dt, steps};
    auto record = [&](std::size_t k, const std::vector<double>& v) {
        for (std::size_t s = 0; s < at_step.size(); ++s)
            if (at_step[s] == k)
                sol.snapshots.push_back(
                    {k == steps ? cfg.horizon : static_cast<double>(k) * dt, ValueGrid(-cfg.half_width, cfg.half_width, v)});
    };
    record(0, u);
    const std::size_t last = at_step.empty() ? 0 : at_step.back();
    march(g, std::move(u), cfg.dx, dt, last, scheme, record);
    return sol;
}

} // namespace detail

/// Explicit scheme for u_t = G(u_xx) with u(0, .) = phi.
inline Solution solve_gheat(const GParams1D& g, const TestFunction& phi, const PdeConfig& cfg) {
    if (g.has_drift())
        throw ParameterError("solve_gheat needs a zero drift interval; use solve_ghjb");
    return detail::solve(g, phi, cfg, detail::Scheme::heat);
}

/// Upwind corner-control scheme for u_t = G(u_x, u_xx).
inline Solution solve_ghjb(const GParams1D& g, const TestFunction& phi, const PdeConfig& cfg) {
    return detail::solve(g, phi, cfg, detail::Scheme::hjb);
}

/// Grid values of the G-heat solution at time t, started from `initial`.
inline std::vector<double> evolve_gheat(const GParams1D& g, std::vector<double> initial, const PdeConfig& cfg,
                                        double t) {
    if (g.has_drift())
        throw ParameterError("evolve_gheat needs a zero drift interval");
    const std::size_t steps = detail::step_count(t, detail::max_stable_dt(g, cfg.dx, cfg.gamma, detail::Scheme::heat));
    if (steps == 0)
        return initial;
    const double dt = t / static_cast<double>(steps);
    return detail::march(g, std::move(initial), cfg.dx, dt, steps, detail::Scheme::heat,
                         [](std::size_t, const std::vector<double>&) {});
}

namespace detail {

inline double interior_max_abs_diff(std::span<const double> a, std::span<const double> b, const PdeConfig& cfg) {
    const std::size_t m = a.size() - 1;
    double worst = 0.0;
    for (std::size_t i = 0; i <= m; ++i) {
        const double x = ValueGrid::node_position(-cfg.half_width, cfg.dx, i, m, cfg.half_width);
        if (std::abs(x) <= 0.5 * cfg.half_width + 1e-12)
            worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

} // namespace detail

/// max over |x| <= L/2 of |evolve(evolve(phi, s), t) - evolve(phi, t + s)|.
inline double semigroup_check(const GParams1D& g, const TestFunction& phi, double t, double s, const PdeConfig& cfg) {
    cfg.validate();
    if (!(t >= 0.0 && s >= 0.0))
        throw ParameterError("semigroup_check: t and s must be nonnegative");
    if (t + s > cfg.horizon + 1e-12)
        throw ParameterError("semigroup_check: t + s exceeds the horizon");
    const auto u0 = detail::sample_initial(phi, cfg);
    const auto two_legs = evolve_gheat(g, evolve_gheat(g, u0, cfg, s), cfg, t);
    const auto one_leg = evolve_gheat(g, u0, cfg, t + s);
    return detail::interior_max_abs_diff(two_legs, one_leg, cfg);
}

/// a xi + b xi' ~ sqrt(a^2 + b^2) xi, checked as the semigroup relation at (a^2, b^2).
inline double stability_check(const GParams1D& g, const TestFunction& phi, double a, double b, const PdeConfig& cfg) {
    if (!(a >= 0.0 && b >= 0.0))
        throw ParameterError("stability_check: a and b must be nonnegative");
    return semigroup_check(g, phi, a * a, b * b, cfg);
}

struct HolderResult {
    double lhs;   // max over |x| <= L/2 of |u(t+s, x) - u(t, x)|
    double bound; // Lip(phi) sigma_max sqrt(s)
    double slack; // 10 dx Lip(phi)
    bool ok() const { return lhs <= bound + slack; }
};

inline HolderResult time_holder_check(const GParams1D& g, const TestFunction& phi, double t, double s,
                                      const PdeConfig& cfg) {
    cfg.validate();
    if (!(s > 0.0))
        throw ParameterError("time_holder_check: s must be positive");
    if (!(t >= 0.0) || t + s > cfg.horizon + 1e-12)
        throw ParameterError("time_holder_check: need 0 <= t and t + s <= T");
    const auto u0 = detail::sample_initial(phi, cfg);
    const auto ut = evolve_gheat(g, u0, cfg, t);
    const auto uts = evolve_gheat(g, u0, cfg, t + s);
    return {detail::interior_max_abs_diff(ut, uts, cfg), phi.lipschitz * std::sqrt(g.sigma_max_sq() * s),
            10.0 * cfg.dx * phi.lipschitz};
}

/// E^[phi(xi)] for G-normal xi, read off u(1, 0).
inline double gnormal_value(const GParams1D& g, const TestFunction& phi, const PdeConfig& cfg) {
    PdeConfig c = cfg;
    c.horizon = 1.0;
    c.snapshot_times = {1.0};
    c.validate();
    const auto u = evolve_gheat(g, detail::sample_initial(phi, c), c, 1.0);
    return ValueGrid(-c.half_width, c.half_width, u).at(0.0);
}

/// `x<TAB>u` per node, 12 significant digits.
inline void write_tsv(const ValueGrid& grid, std::ostream& os) {
    for (std::size_t i = 0; i <= grid.intervals(); ++i)
        os << format_sig12(grid.x(i)) << '\t' << format_sig12(grid.values()[i]) << '\n';
}

} // namespace sublim
