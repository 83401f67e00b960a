#pragma once

// Sublinear central limit theorem at desk scale.
//
// For i.i.d. increments under a family of zero-mean step laws the value
// E^[phi(S_n / sqrt(n))] is the nested (adapted) maximization
//
//     u_n = phi,   u_k(x) = max_theta sum_j w_{theta,j} u_{k+1}(x + a_{theta,j} / sqrt(n)),
//
// answered by u_0(0). clt_value_exact enumerates reachable positions;
// clt_value_dp runs the same recursion on a uniform grid.

#include "sublim/errors.hpp"
#include "sublim/grid.hpp"
#include "sublim/measures.hpp"
#include "sublim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sublim {

inline constexpr double mean_tolerance = 1e-12;

/// Zero-mean step laws on the line.
class StepFamily {
public:
    explicit StepFamily(AmbiguitySet family) : family_(std::move(family)) {
        if (family_.dimension() != 1)
            throw ParameterError("step family must be one-dimensional");
        for (std::size_t k = 0; k < family_.size(); ++k) {
            const auto& m = family_[k];
            const double mean = m.expectation([](PointView x) { return x[0]; });
            if (std::abs(mean) > mean_tolerance)
                throw ParameterError("step measure " + std::to_string(k) + " has nonzero mean " +
                                     std::to_string(mean));
            variances_.push_back(m.expectation([](PointView x) { return x[0] * x[0]; }));
        }
        sigma_min_sq_ = *std::min_element(variances_.begin(), variances_.end());
        sigma_max_sq_ = *std::max_element(variances_.begin(), variances_.end());
        if (!(sigma_max_sq_ > 0.0))
            throw ParameterError("step family needs a member with positive variance");
    }

    const AmbiguitySet& family() const noexcept { return family_; }
    const std::vector<double>& variances() const noexcept { return variances_; }
    double sigma_min_sq() const noexcept { return sigma_min_sq_; }
    double sigma_max_sq() const noexcept { return sigma_max_sq_; }
    double max_abs_atom() const { return family_.max_atom_norm(); }

private:
    AmbiguitySet family_;
    std::vector<double> variances_;
    double sigma_min_sq_ = 0.0, sigma_max_sq_ = 0.0;
};

/// Joint (x, y) step laws; x drives diffusion, y drift.
class DriftStepFamily {
public:
    explicit DriftStepFamily(AmbiguitySet family) : family_(std::move(family)) {
        if (family_.dimension() != 2)
            throw ParameterError("drift step family needs atoms (x, y)");
        for (std::size_t k = 0; k < family_.size(); ++k) {
            const auto& m = family_[k];
            const double mx = m.expectation([](PointView p) { return p[0]; });
            if (std::abs(mx) > mean_tolerance)
                throw ParameterError("drift step measure " + std::to_string(k) +
                                     " has nonzero x-mean " + std::to_string(mx));
            mean_y_.push_back(m.expectation([](PointView p) { return p[1]; }));
            var_x_.push_back(m.expectation([](PointView p) { return p[0] * p[0]; }));
        }
    }

    const AmbiguitySet& family() const noexcept { return family_; }
    const std::vector<double>& mean_y() const noexcept { return mean_y_; }
    const std::vector<double>& var_x() const noexcept { return var_x_; }
    double sigma_max_sq() const { return *std::max_element(var_x_.begin(), var_x_.end()); }

    double max_abs_x() const { return max_abs_coord(0); }
    double max_abs_y() const { return max_abs_coord(1); }

private:
    double max_abs_coord(std::size_t c) const {
        double r = 0.0;
        for (const auto& m : family_)
            for (std::size_t i = 0; i < m.size(); ++i)
                r = std::max(r, std::abs(m.atom(i)[c]));
        return r;
    }

    AmbiguitySet family_;
    std::vector<double> mean_y_, var_x_;
};

/// Grid realization for clt_value_dp. Without an explicit radius the grid
/// covers |x_eval| + max(6 sigma_max + max|a|, sqrt(n) max|a|).
struct GridConfig {
    double dx = 0.01;
    std::optional<double> radius;
    double x_eval = 0.0;
};

inline constexpr std::size_t default_state_cap = 2'000'000;

/// Exact nested maximization over all reachable positions. Accepts
/// unbounded phi (polynomials).
inline double clt_value_exact(const StepFamily& steps, const std::function<double(double)>& phi, int n,
                              std::size_t state_cap = default_state_cap) {
    if (n < 1)
        throw ParameterError("clt_value_exact: n must be >= 1");
    const auto& fam = steps.family();
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));

    // Distinct atom values across the family, and each measure as (atom id, weight) pairs.
    std::vector<double> atoms;
    for (const auto& m : fam)
        for (std::size_t i = 0; i < m.size(); ++i)
            atoms.push_back(m.atom(i)[0]);
    std::sort(atoms.begin(), atoms.end());
    atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
    const std::size_t n_atoms = atoms.size();
    std::vector<std::vector<std::pair<std::size_t, double>>> laws;
    for (const auto& m : fam) {
        auto& law = laws.emplace_back();
        for (std::size_t i = 0; i < m.size(); ++i) {
            const auto id = static_cast<std::size_t>(
                std::lower_bound(atoms.begin(), atoms.end(), m.atom(i)[0]) - atoms.begin());
            law.emplace_back(id, m.weight(i));
        }
    }

    // Forward pass: reachable positions per level, keyed after rounding to 1e-12.
    constexpr double resolution = 1e-12;
    constexpr double max_position = 9e6;
    std::vector<std::vector<double>> positions(static_cast<std::size_t>(n) + 1);
    std::vector<std::vector<std::uint32_t>> children(static_cast<std::size_t>(n));
    positions[0] = {0.0};
    std::size_t total = 1;
    for (int k = 0; k < n; ++k) {
        std::unordered_map<std::int64_t, std::uint32_t> index;
        auto& next = positions[static_cast<std::size_t>(k) + 1];
        auto& links = children[static_cast<std::size_t>(k)];
        links.reserve(positions[static_cast<std::size_t>(k)].size() * n_atoms);
        for (double x : positions[static_cast<std::size_t>(k)]) {
            for (double a : atoms) {
                const double y = x + a * scale;
                if (!(std::abs(y) < max_position))
                    throw SizeError("clt_value_exact: position out of hashing range");
                const auto key = std::llround(y / resolution);
                auto [it, inserted] = index.try_emplace(key, static_cast<std::uint32_t>(next.size()));
                if (inserted) {
                    next.push_back(y);
                    if (++total > state_cap)
                        throw SizeError("clt_value_exact: more than " + std::to_string(state_cap) +
                                        " reachable states; use clt_value_dp");
                }
                links.push_back(it->second);
            }
        }
    }

    // Backward pass.
    std::vector<double> u;
    u.reserve(positions.back().size());
    for (double x : positions.back()) {
        const double v = phi(x);
        if (!std::isfinite(v))
            throw EvaluationError("clt_value_exact: phi is not finite at x = " + std::to_string(x));
        u.push_back(v);
    }
    for (int k = n - 1; k >= 0; --k) {
        const auto& links = children[static_cast<std::size_t>(k)];
        std::vector<double> prev(positions[static_cast<std::size_t>(k)].size());
        for (std::size_t p = 0; p < prev.size(); ++p) {
            const std::uint32_t* child = links.data() + p * n_atoms;
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& law : laws) {
                double s = 0.0;
                for (const auto& [id, w] : law)
                    s += w * u[child[id]];
                best = std::max(best, s);
            }
            prev[p] = best;
        }
        u = std::move(prev);
    }
    return u[0];
}

namespace detail {

struct StepLaw {
    std::vector<double> weights;
    std::vector<double> shifts; // displacement in grid-index units
};

struct GridLayout {
    double x_min;
    double dx;
    std::size_t intervals;
};

inline GridLayout make_layout(const GridConfig& cfg, double required, double preferred) {
    if (!(cfg.dx > 0.0) || !std::isfinite(cfg.dx))
        throw ParameterError("grid dx must be positive");
    const double need = std::abs(cfg.x_eval) + required;
    double radius = cfg.radius.value_or(std::abs(cfg.x_eval) + preferred);
    if (!(radius >= need - 1e-12))
        throw DomainError("grid radius " + std::to_string(radius) + " is smaller than the required " +
                          std::to_string(need));
    const auto half = static_cast<std::size_t>(std::max(1.0, std::ceil(radius / cfg.dx - 1e-9)));
    return {-static_cast<double>(half) * cfg.dx, cfg.dx, 2 * half};
}

// Backward induction on the grid; returns u_0 interpolated at x_eval.
inline double grid_induction(const std::vector<StepLaw>& laws, const TestFunction& phi, int n,
                             const GridLayout& g, double x_eval) {
    std::vector<double> u(g.intervals + 1);
    for (std::size_t i = 0; i <= g.intervals; ++i) {
        u[i] = phi(g.x_min + static_cast<double>(i) * g.dx);
        if (!std::isfinite(u[i]))
            throw NumericError("phi is not finite on the grid", 0);
    }
    std::vector<double> next(u.size());
    for (int step = 1; step <= n; ++step) {
        for (std::size_t i = 0; i <= g.intervals; ++i) {
            const double p = static_cast<double>(i);
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& law : laws) {
                double s = 0.0;
                for (std::size_t j = 0; j < law.weights.size(); ++j)
                    s += law.weights[j] * interpolate_index(u, p + law.shifts[j]);
                best = std::max(best, s);
            }
            if (!std::isfinite(best))
                throw NumericError("non-finite value in grid induction", static_cast<std::size_t>(step));
            next[i] = best;
        }
        u.swap(next);
    }
    return interpolate_index(u, (x_eval - g.x_min) / g.dx);
}

} // namespace detail

/// Backward induction of the nested maximization on a clamped linear grid.
inline double clt_value_dp(const StepFamily& steps, const TestFunction& phi, int n, const GridConfig& cfg = {}) {
    if (n < 1)
        throw ParameterError("clt_value_dp: n must be >= 1");
    const double sigma = std::sqrt(steps.sigma_max_sq());
    const double amax = steps.max_abs_atom();
    const double required = 6.0 * sigma + amax;
    const double reach = std::sqrt(static_cast<double>(n)) * amax;
    const auto layout = detail::make_layout(cfg, required, std::max(required, reach));

    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<detail::StepLaw> laws;
    for (const auto& m : steps.family()) {
        auto& law = laws.emplace_back();
        for (std::size_t i = 0; i < m.size(); ++i) {
            law.weights.push_back(m.weight(i));
            law.shifts.push_back(m.atom(i)[0] * scale / layout.dx);
        }
    }
    return detail::grid_induction(laws, phi, n, layout, cfg.x_eval);
}

/// Same recursion with joint steps x/sqrt(n) + y/n.
inline double generalized_clt_value_dp(const DriftStepFamily& steps, const TestFunction& phi, int n,
                                       const GridConfig& cfg = {}) {
    if (n < 1)
        throw ParameterError("generalized_clt_value_dp: n must be >= 1");
    const double sigma = std::sqrt(steps.sigma_max_sq());
    const double ax = steps.max_abs_x();
    const double ay = steps.max_abs_y();
    const double required = 6.0 * sigma + ax;
    const double reach = std::sqrt(static_cast<double>(n)) * ax;
    const auto layout = detail::make_layout(cfg, required, std::max(required, reach) + ay);

    const double nd = static_cast<double>(n);
    const double scale = 1.0 / std::sqrt(nd);
    std::vector<detail::StepLaw> laws;
    for (const auto& m : steps.family()) {
        auto& law = laws.emplace_back();
        for (std::size_t i = 0; i < m.size(); ++i) {
            const auto a = m.atom(i);
            law.weights.push_back(m.weight(i));
            law.shifts.push_back((a[0] * scale + a[1] / nd) / layout.dx);
        }
    }
    return detail::grid_induction(laws, phi, n, layout, cfg.x_eval);
}

struct ConvergenceRow {
    int n;
    double value;
    double delta; // |value - previous value|, 0 on the first row
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
};

namespace detail {

inline void check_n_list(std::span<const int> n_list) {
    if (n_list.empty())
        throw ParameterError("n_list must not be empty");
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        if (n_list[i] < 1)
            throw ParameterError("n_list entries must be >= 1");
        if (i > 0 && n_list[i] <= n_list[i - 1])
            throw ParameterError("n_list must be strictly increasing");
    }
}

inline ConvergenceTable tabulate(std::span<const int> n_list, std::vector<double> values) {
    ConvergenceTable t;
    for (std::size_t i = 0; i < n_list.size(); ++i)
        t.rows.push_back({n_list[i], values[i], i == 0 ? 0.0 : std::abs(values[i] - values[i - 1])});
    return t;
}

} // namespace detail

/// DP value for every n in n_list; the values are computed in parallel.
inline ConvergenceTable clt_convergence_table(const StepFamily& steps, const TestFunction& phi,
                                              std::span<const int> n_list, const GridConfig& cfg = {}) {
    detail::check_n_list(n_list);
    std::vector<double> values(n_list.size());
    parallel_for(n_list.size(), [&](std::size_t i) { values[i] = clt_value_dp(steps, phi, n_list[i], cfg); });
    return detail::tabulate(n_list, std::move(values));
}

inline ConvergenceTable clt_convergence_table_exact(const StepFamily& steps,
                                                    const std::function<double(double)>& phi,
                                                    std::span<const int> n_list,
                                                    std::size_t state_cap = default_state_cap) {
    detail::check_n_list(n_list);
    std::vector<double> values(n_list.size());
    for (std::size_t i = 0; i < n_list.size(); ++i)
        values[i] = clt_value_exact(steps, phi, n_list[i], state_cap);
    return detail::tabulate(n_list, std::move(values));
}

/// Decimal with 12 significant digits.
inline std::string format_sig12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
    return buf;
}

inline void write_csv(const ConvergenceTable& t, std::ostream& os) {
    os << "n,value,delta\n";
    for (const auto& r : t.rows)
        os << r.n << ',' << format_sig12(r.value) << ',' << format_sig12(r.delta) << '\n';
}

struct DominationViolation {
    std::size_t pair;
    int n;
    double lhs; // value_n(phi) - value_n(psi)
    double rhs; // value_n(phi - psi), or the sup when checking the second inequality
};

struct DominationReport {
    std::vector<double> sup_difference; // max over n_list of value_n(phi - psi), per pair
    std::vector<DominationViolation> violations;
    bool ok() const { return violations.empty(); }
};

/// value_n(phi) - value_n(psi) <= value_n(phi - psi) <= max_m value_m(phi - psi)
/// for every pair and every n.
inline DominationReport domination_check(const StepFamily& steps,
                                         std::span<const std::pair<TestFunction, TestFunction>> pairs,
                                         std::span<const int> n_list, const GridConfig& cfg = {},
                                         double slack = 0.0) {
    if (pairs.empty())
        throw ParameterError("domination_check needs at least one pair");
    detail::check_n_list(n_list);
    const double tol = 1e-9 + slack;
    DominationReport report;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto& [phi, psi] = pairs[p];
        const TestFunction diff{[&phi, &psi](double x) { return phi(x) - psi(x); }, phi.bound + psi.bound,
                                phi.lipschitz + psi.lipschitz};
        std::vector<double> vphi(n_list.size()), vpsi(n_list.size()), vdiff(n_list.size());
        parallel_for(n_list.size(), [&](std::size_t i) {
            vphi[i] = clt_value_dp(steps, phi, n_list[i], cfg);
            vpsi[i] = clt_value_dp(steps, psi, n_list[i], cfg);
            vdiff[i] = clt_value_dp(steps, diff, n_list[i], cfg);
        });
        const double sup = *std::max_element(vdiff.begin(), vdiff.end());
        report.sup_difference.push_back(sup);
        for (std::size_t i = 0; i < n_list.size(); ++i) {
            if (vphi[i] - vpsi[i] > vdiff[i] + tol)
                report.violations.push_back({p, n_list[i], vphi[i] - vpsi[i], vdiff[i]});
            if (vdiff[i] > sup + tol)
                report.violations.push_back({p, n_list[i], vdiff[i], sup});
        }
    }
    return report;
}

/// Diagonal extraction over a shared dictionary: tables[i][j] is the value
/// of distribution i on dictionary entry j. Entry by entry, the surviving
/// index list is cut down to a longest subset whose values on that entry
/// fit in a window of width eps; ties go to the window holding the
/// earliest index. The result keeps the original order.
inline std::vector<std::size_t> diagonal_extract(const std::vector<std::vector<double>>& tables, double eps) {
    if (tables.empty())
        throw ParameterError("diagonal_extract: no tables");
    if (!(eps > 0.0))
        throw ParameterError("diagonal_extract: eps must be positive");
    const std::size_t entries = tables.front().size();
    for (const auto& t : tables)
        if (t.size() != entries)
            throw ParameterError("diagonal_extract: tables differ in dictionary length");

    std::vector<std::size_t> keep(tables.size());
    std::iota(keep.begin(), keep.end(), std::size_t{0});
    for (std::size_t j = 0; j < entries && keep.size() > 1; ++j) {
        std::vector<std::pair<double, std::size_t>> vals;
        for (auto i : keep)
            vals.emplace_back(tables[i][j], i);
        std::sort(vals.begin(), vals.end());

        std::size_t best_lo = 0, best_hi = 1, best_first = vals[0].second;
        std::size_t hi = 0;
        for (std::size_t lo = 0; lo < vals.size(); ++lo) {
            hi = std::max(hi, lo + 1);
            while (hi < vals.size() && vals[hi].first - vals[lo].first <= eps)
                ++hi;
            std::size_t first = vals[lo].second;
            for (std::size_t k = lo; k < hi; ++k)
                first = std::min(first, vals[k].second);
            const std::size_t len = hi - lo, best_len = best_hi - best_lo;
            if (len > best_len || (len == best_len && first < best_first)) {
                best_lo = lo;
                best_hi = hi;
                best_first = first;
            }
        }
        std::vector<std::size_t> next;
        for (std::size_t k = best_lo; k < best_hi; ++k)
            next.push_back(vals[k].second);
        std::sort(next.begin(), next.end());
        keep = std::move(next);
    }
    return keep;
}

/// Smooth cutoff: 1 on [-L, L], exp(1 - 1/(1 - s^2)) with s = (|x| - L)/L
/// on L < |x| < 2L, 0 beyond.
inline double smooth_cutoff(double x, double radius) {
    const double r = std::abs(x);
    if (r <= radius)
        return 1.0;
    if (r >= 2.0 * radius)
        return 0.0;
    const double s = (r - radius) / radius;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

// sup over s in (0,1) of |d/ds exp(1 - 1/(1 - s^2))|, attained near s = 0.76.
inline constexpr double cutoff_slope_bound = 2.1704;

/// {1} followed by cos(k pi x / L) chi(x), sin(k pi x / L) chi(x) for k = 1..ceil(count/2).
inline std::vector<TestFunction> dictionary_default(double radius, int count) {
    if (!(radius > 0.0))
        throw ParameterError("dictionary radius must be positive");
    if (count < 1)
        throw ParameterError("dictionary count must be >= 1");
    std::vector<TestFunction> dict{TestFunction::constant(1.0)};
    const int kmax = (count + 1) / 2;
    for (int k = 1; k <= kmax; ++k) {
        const double freq = k * std::numbers::pi / radius;
        const double lip = freq + cutoff_slope_bound / radius;
        dict.push_back({[freq, radius](double x) { return std::cos(freq * x) * smooth_cutoff(x, radius); }, 1.0, lip});
        dict.push_back({[freq, radius](double x) { return std::sin(freq * x) * smooth_cutoff(x, radius); }, 1.0, lip});
    }
    return dict;
}

} // namespace sublim
