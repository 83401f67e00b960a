#pragma once

// Finitely supported probability measures, families of them (ambiguity
// sets) and the functionals they induce: the upper expectation
//
//     E^[X] = max_theta sum_i w_{theta,i} X(a_{theta,i})
//
// and the Choquet capacity c(A) = max_theta P_theta(A). Everything is exact
// on the finite algebra generated by the atoms.

#include "sublim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace sublim {

inline constexpr double weight_tolerance = 1e-12;
inline constexpr double property_tolerance = 1e-10;

using PointView = std::span<const double>;

/// Probability measure with finitely many atoms in R^d.
class DiscreteMeasure {
public:
    DiscreteMeasure(std::vector<std::vector<double>> atoms, std::vector<double> weights)
        : weights_(std::move(weights)) {
        if (atoms.empty())
            throw ParameterError("measure needs at least one atom");
        if (atoms.size() != weights_.size())
            throw ParameterError("atom count " + std::to_string(atoms.size()) +
                                 " differs from weight count " + std::to_string(weights_.size()));
        dim_ = atoms.front().size();
        if (dim_ == 0)
            throw ParameterError("atoms must have dimension >= 1");
        coords_.reserve(atoms.size() * dim_);
        for (const auto& a : atoms) {
            if (a.size() != dim_)
                throw ParameterError("atoms have mixed dimensions");
            for (double v : a) {
                if (!std::isfinite(v))
                    throw ParameterError("atom coordinate is not finite");
                coords_.push_back(v);
            }
        }
        normalize_weights();
        check_distinct();
    }

    /// One-dimensional convenience constructor.
    static DiscreteMeasure on_line(const std::vector<double>& points, std::vector<double> weights) {
        std::vector<std::vector<double>> atoms;
        atoms.reserve(points.size());
        for (double p : points)
            atoms.push_back({p});
        return DiscreteMeasure(std::move(atoms), std::move(weights));
    }

    /// Point masses 1/2 at -a and +a.
    static DiscreteMeasure rademacher(double a) { return on_line({-a, a}, {0.5, 0.5}); }

    std::size_t size() const noexcept { return weights_.size(); }
    std::size_t dimension() const noexcept { return dim_; }
    PointView atom(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
    double weight(std::size_t i) const { return weights_[i]; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    /// Classical expectation; throws EvaluationError naming the atom on a non-finite value.
    template <class F>
    double expectation(const F& f) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < size(); ++i) {
            const double v = f(atom(i));
            if (!std::isfinite(v))
                throw EvaluationError("non-finite value at atom " + describe_atom(i));
            sum += weights_[i] * v;
        }
        return sum;
    }

    std::string describe_atom(std::size_t i) const {
        std::ostringstream os;
        os.precision(17);
        os << '(';
        const auto a = atom(i);
        for (std::size_t k = 0; k < a.size(); ++k)
            os << (k ? ", " : "") << a[k];
        os << ')';
        return os.str();
    }

private:
    void normalize_weights() {
        double sum = 0.0;
        for (double w : weights_) {
            if (!(w >= 0.0) || !std::isfinite(w))
                throw ParameterError("weights must be finite and nonnegative");
            sum += w;
        }
        if (std::abs(sum - 1.0) > weight_tolerance)
            throw ParameterError("weights sum to " + std::to_string(sum) + ", not 1");
        for (double& w : weights_)
            w /= sum;
    }

    void check_distinct() const {
        std::vector<std::size_t> order(size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto less = [this](std::size_t a, std::size_t b) {
            const auto x = atom(a), y = atom(b);
            return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
        };
        std::sort(order.begin(), order.end(), less);
        for (std::size_t k = 1; k < order.size(); ++k) {
            const auto x = atom(order[k - 1]), y = atom(order[k]);
            if (std::equal(x.begin(), x.end(), y.begin()))
                throw ParameterError("duplicate atom " + describe_atom(order[k]));
        }
    }

    std::size_t dim_ = 0;
    std::vector<double> coords_;
    std::vector<double> weights_;
};

/// Nonempty finite family of measures on a common R^d.
class AmbiguitySet {
public:
    explicit AmbiguitySet(std::vector<DiscreteMeasure> measures) : measures_(std::move(measures)) {
        if (measures_.empty())
            throw ParameterError("ambiguity set must contain at least one measure");
        for (const auto& m : measures_)
            if (m.dimension() != dimension())
                throw ParameterError("measures in an ambiguity set must share a dimension");
    }

    std::size_t size() const noexcept { return measures_.size(); }
    std::size_t dimension() const noexcept { return measures_.front().dimension(); }
    const DiscreteMeasure& operator[](std::size_t i) const { return measures_[i]; }
    const std::vector<DiscreteMeasure>& measures() const noexcept { return measures_; }
    auto begin() const noexcept { return measures_.begin(); }
    auto end() const noexcept { return measures_.end(); }

    /// Largest Euclidean norm over all atoms.
    double max_atom_norm() const {
        double r = 0.0;
        for (const auto& m : measures_)
            for (std::size_t i = 0; i < m.size(); ++i)
                r = std::max(r, euclidean_norm(m.atom(i)));
        return r;
    }

    static double euclidean_norm(PointView x) {
        double s = 0.0;
        for (double v : x)
            s += v * v;
        return std::sqrt(s);
    }

private:
    std::vector<DiscreteMeasure> measures_;
};

/// Real function on R^d, with optional sup-norm and Lipschitz bounds.
struct RandomVariable {
    std::function<double(PointView)> fn;
    std::optional<double> bound;
    std::optional<double> lipschitz;

    double operator()(PointView x) const { return fn(x); }

    static RandomVariable constant(double c) {
        return {[c](PointView) { return c; }, std::abs(c), 0.0};
    }
    /// Lift a scalar function to act on the first coordinate.
    static RandomVariable scalar(std::function<double(double)> f) {
        return {[f = std::move(f)](PointView x) { return f(x[0]); }, {}, {}};
    }
};

/// Membership predicate on R^d.
struct Event {
    std::function<bool(PointView)> contains;

    bool operator()(PointView x) const { return contains(x); }

    static Event everything() { return {[](PointView) { return true; }}; }
    static Event nothing() { return {[](PointView) { return false; }}; }
    /// {x : |x| > r}
    static Event norm_above(double r) {
        return {[r](PointView x) { return AmbiguitySet::euclidean_norm(x) > r; }};
    }
    /// {x : |x| >= r}
    static Event norm_at_least(double r) {
        return {[r](PointView x) { return AmbiguitySet::euclidean_norm(x) >= r; }};
    }
};

struct ExpectationResult {
    double value;
    std::size_t argmax;
};

/// Upper expectation over the family; ties go to the lowest measure index.
inline ExpectationResult upper_expectation(const AmbiguitySet& family, const RandomVariable& x) {
    ExpectationResult best{family[0].expectation(x), 0};
    for (std::size_t k = 1; k < family.size(); ++k) {
        const double v = family[k].expectation(x);
        if (v > best.value)
            best = {v, k};
    }
    return best;
}

struct SublinearityReport {
    bool monotone_applies = false; // X >= Y at every atom
    bool monotone = true;
    bool constant_preserving = true;
    bool subadditive = true;
    bool homogeneous = true;

    double ex = 0, ey = 0, ex_plus_y = 0, e_lambda_x = 0, e_constant = 0;

    bool ok() const { return monotone && constant_preserving && subadditive && homogeneous; }
};

/// Checks the four sublinear-expectation axioms on one instance.
inline SublinearityReport verify_sublinearity(const AmbiguitySet& family, const RandomVariable& x,
                                              const RandomVariable& y, double lambda, double c,
                                              double tol = property_tolerance) {
    if (!(lambda >= 0.0))
        throw ParameterError("lambda must be nonnegative");
    SublinearityReport r;
    r.ex = upper_expectation(family, x).value;
    r.ey = upper_expectation(family, y).value;
    r.ex_plus_y =
        upper_expectation(family, {[&](PointView p) { return x(p) + y(p); }, {}, {}}).value;
    r.e_lambda_x = upper_expectation(family, {[&](PointView p) { return lambda * x(p); }, {}, {}}).value;
    r.e_constant = upper_expectation(family, RandomVariable::constant(c)).value;

    r.monotone_applies = true;
    for (const auto& m : family)
        for (std::size_t i = 0; i < m.size(); ++i)
            if (x(m.atom(i)) < y(m.atom(i)))
                r.monotone_applies = false;
    if (r.monotone_applies)
        r.monotone = r.ex >= r.ey - tol;
    r.constant_preserving = std::abs(r.e_constant - c) <= tol;
    r.subadditive = r.ex_plus_y <= r.ex + r.ey + tol;
    r.homogeneous = std::abs(r.e_lambda_x - lambda * r.ex) <= tol * std::max(1.0, std::abs(lambda * r.ex));
    return r;
}

inline double capacity(const AmbiguitySet& family, const Event& a) {
    double best = 0.0;
    for (const auto& m : family) {
        double mass = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i)
            if (a(m.atom(i)))
                mass += m.weight(i);
        best = std::max(best, mass);
    }
    return std::clamp(best, 0.0, 1.0);
}

/// A set is polar when every measure gives it zero weight.
inline bool polar_check(const AmbiguitySet& family, const Event& a) {
    for (const auto& m : family)
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m.weight(i) > 0.0 && a(m.atom(i)))
                return false;
    return true;
}

namespace detail {

// membership[e][k][i]: does event e contain atom i of measure k
using Membership = std::vector<std::vector<std::vector<char>>>;

inline Membership membership(const AmbiguitySet& family, std::span<const Event> events) {
    Membership out(events.size());
    for (std::size_t e = 0; e < events.size(); ++e) {
        out[e].resize(family.size());
        for (std::size_t k = 0; k < family.size(); ++k) {
            const auto& m = family[k];
            out[e][k].resize(m.size());
            for (std::size_t i = 0; i < m.size(); ++i)
                out[e][k][i] = events[e](m.atom(i)) ? 1 : 0;
        }
    }
    return out;
}

// Capacity of the union of events [first, last).
inline double union_capacity(const AmbiguitySet& family, const Membership& mem, std::size_t first,
                             std::size_t last) {
    double best = 0.0;
    for (std::size_t k = 0; k < family.size(); ++k) {
        const auto& m = family[k];
        double mass = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            bool in = false;
            for (std::size_t e = first; e < last && !in; ++e)
                in = mem[e][k][i] != 0;
            if (in)
                mass += m.weight(i);
        }
        best = std::max(best, mass);
    }
    return std::clamp(best, 0.0, 1.0);
}

} // namespace detail

struct CapacityReport {
    std::vector<double> capacities;         // c(A_n)
    std::vector<double> envelope;           // c(A_1 u ... u A_n)
    double union_capacity = 0.0;
    bool monotone = true;
    bool subadditive = true;
    bool continuous_from_below = true;
    std::vector<std::pair<std::size_t, std::size_t>> monotonicity_witnesses; // violating (i, j), A_i within A_j

    bool ok() const { return monotone && subadditive && continuous_from_below; }
};

/// Monotonicity, finite subadditivity and continuity from below of c.
inline CapacityReport capacity_properties_check(const AmbiguitySet& family, std::span<const Event> events,
                                                double tol = property_tolerance) {
    if (events.empty())
        throw ParameterError("capacity_properties_check needs at least one event");
    const auto mem = detail::membership(family, events);
    CapacityReport r;
    const std::size_t n = events.size();
    for (std::size_t e = 0; e < n; ++e)
        r.capacities.push_back(detail::union_capacity(family, mem, e, e + 1));

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j)
                continue;
            bool subset = true;
            for (std::size_t k = 0; k < family.size() && subset; ++k)
                for (std::size_t a = 0; a < family[k].size() && subset; ++a)
                    subset = !mem[i][k][a] || mem[j][k][a];
            if (subset && r.capacities[i] > r.capacities[j] + tol) {
                r.monotone = false;
                r.monotonicity_witnesses.emplace_back(i, j);
            }
        }

    r.union_capacity = detail::union_capacity(family, mem, 0, n);
    const double sum = std::accumulate(r.capacities.begin(), r.capacities.end(), 0.0);
    r.subadditive = r.union_capacity <= sum + tol;

    for (std::size_t e = 1; e <= n; ++e) {
        r.envelope.push_back(detail::union_capacity(family, mem, 0, e));
        if (e > 1 && r.envelope[e - 1] < r.envelope[e - 2] - tol)
            r.continuous_from_below = false;
    }
    if (std::abs(r.envelope.back() - r.union_capacity) > tol)
        r.continuous_from_below = false;
    return r;
}

/// t_n = c(A_n u A_{n+1} u ... u A_m), for n = 1..m.
inline std::vector<double> borel_cantelli_tail(const AmbiguitySet& family, std::span<const Event> events) {
    if (events.empty())
        throw ParameterError("borel_cantelli_tail needs at least one event");
    const auto mem = detail::membership(family, events);
    std::vector<double> tail(events.size());
    for (std::size_t n = 0; n < events.size(); ++n)
        tail[n] = detail::union_capacity(family, mem, n, events.size());
    return tail;
}

struct TightnessCertificate {
    double radius;          // N
    double moment;          // E^[|x|^l]
    double capacity_beyond; // c({|x| > N})
    bool verified;
};

inline constexpr double tightness_step = 0.5;

/// Smallest N on the 0.5 lattice with N^l > E^[|x|^l] / eps, checked against
/// the capacity of {|x| > N} directly.
inline TightnessCertificate tightness_radius(const AmbiguitySet& family, double eps, double l) {
    if (!(eps > 0.0 && eps <= 1.0))
        throw ParameterError("tightness_radius: eps must lie in (0, 1]");
    if (!(l > 0.0) || !std::isfinite(l))
        throw ParameterError("tightness_radius: l must be positive");

    const RandomVariable norm_pow{[l](PointView x) { return std::pow(AmbiguitySet::euclidean_norm(x), l); },
                                  {}, {}};
    const double moment = upper_expectation(family, norm_pow).value;
    const double threshold = moment / eps;

    auto n_of = [](long long k) { return static_cast<double>(k) * tightness_step; };
    long long k = std::max(1LL, static_cast<long long>(std::floor(std::pow(threshold, 1.0 / l) / tightness_step)));
    while (k > 1 && std::pow(n_of(k - 1), l) > threshold)
        --k;
    while (!(std::pow(n_of(k), l) > threshold))
        ++k;

    TightnessCertificate c{};
    c.radius = n_of(k);
    c.moment = moment;
    c.capacity_beyond = capacity(family, Event::norm_above(c.radius));
    c.verified = c.capacity_beyond < eps;
    return c;
}

} // namespace sublim
