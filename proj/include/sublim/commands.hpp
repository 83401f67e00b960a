#pragma once

// Command implementations behind the `sublim` executable. Each command
// reads a validated RunConfig and writes its report to `out`; files go to
// params.output_dir. Exit codes: 0 ok, 1 violation, 2 config error,
// 3 numeric error.

#include "sublim/clt.hpp"
#include "sublim/config.hpp"
#include "sublim/expr.hpp"
#include "sublim/measures.hpp"
#include "sublim/pde.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace sublim {

enum ExitCode : int { exit_ok = 0, exit_violation = 1, exit_config = 2, exit_numeric = 3 };

namespace detail {

using json = nlohmann::json;

// Scalar view of a point: the coordinate itself in 1-D, the Euclidean norm otherwise.
inline double scalar_of(PointView p) { return p.size() == 1 ? p[0] : AmbiguitySet::euclidean_norm(p); }

inline RandomVariable random_variable(const Expr& e) {
    return {[e](PointView p) { return e.eval(scalar_of(p)); }, {}, {}};
}

inline Event event_of(const Expr& e) {
    return {[e](PointView p) { return e.eval(scalar_of(p)) > 0.0; }};
}

struct BoundedFunction {
    TestFunction fn;
    SampledBounds bounds;
};

// Bounded-mode function: rejects growth toward the sampling boundary.
inline BoundedFunction bounded_function(const FunctionSpec& spec, double radius) {
    const Expr e = spec.expr();
    SampledBounds b{};
    try {
        b = infer_bounds(e, radius);
    } catch (const EvaluationError& err) {
        throw ConfigError(std::string("/function: ") + err.what());
    }
    if (b.unbounded_growth)
        throw ConfigError("/function: '" + spec.expression +
                          "' grows without bound; only the exact clt mode accepts it");
    return {{[e](double x) { return e.eval(x); }, b.bound, b.lipschitz}, b};
}

inline json bounds_json(const FunctionSpec& spec, const SampledBounds& b) {
    return {{"expression", spec.expression},
            {"bound", b.bound},
            {"lipschitz", b.lipschitz},
            {"sampled", true},
            {"unbounded_growth", b.unbounded_growth}};
}

inline GridConfig grid_of(const RunParams& p) { return {p.dx, p.radius, p.x_eval}; }

inline StepFamily step_family(const RunConfig& cfg) {
    try {
        return StepFamily(cfg.ambiguity_set());
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("/family: ") + e.what());
    }
}

inline double bounds_radius(const RunConfig& cfg, const StepFamily& steps) {
    if (cfg.params.radius)
        return *cfg.params.radius;
    return std::abs(cfg.params.x_eval) + 6.0 * std::sqrt(steps.sigma_max_sq()) + steps.max_abs_atom();
}

inline std::filesystem::path output_path(const RunParams& p, const std::string& name) {
    std::filesystem::path dir(p.output_dir);
    std::filesystem::create_directories(dir);
    return dir / name;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + path.string());
    f << text;
}

inline int run_expect(const RunConfig& cfg, std::ostream& out) {
    const auto family = cfg.ambiguity_set();
    const auto x = random_variable(cfg.require_function().expr());
    const auto e = upper_expectation(family, x);

    json report = {{"command", "expect"},
                   {"dimension", family.dimension()},
                   {"measures", family.size()},
                   {"function", cfg.function->expression},
                   {"upper_expectation", {{"value", e.value}, {"argmax", e.argmax}}}};
    std::vector<double> lower;
    for (const auto& m : family)
        lower.push_back(m.expectation(x));
    report["per_measure_expectation"] = lower;

    std::vector<Event> events;
    for (const auto& text : cfg.params.events)
        events.push_back(event_of(parse_expr(text)));
    if (!events.empty()) {
        json caps = json::array();
        for (std::size_t i = 0; i < events.size(); ++i)
            caps.push_back({{"event", cfg.params.events[i] + " > 0"},
                            {"capacity", capacity(family, events[i])},
                            {"polar", polar_check(family, events[i])}});
        report["capacities"] = caps;
        report["borel_cantelli_tail"] = borel_cantelli_tail(family, events);
    }
    const auto t = tightness_radius(family, cfg.params.epsilon, cfg.params.moment_order);
    report["tightness"] = {{"epsilon", cfg.params.epsilon},
                           {"moment_order", cfg.params.moment_order},
                           {"moment", t.moment},
                           {"radius", t.radius},
                           {"capacity_beyond", t.capacity_beyond},
                           {"verified", t.verified}};
    out << report.dump(2) << '\n';
    return exit_ok;
}

inline int run_clt(const RunConfig& cfg, std::ostream& out) {
    const auto steps = step_family(cfg);
    const auto& p = cfg.params;
    ConvergenceTable table;
    if (p.mode == "exact") {
        const Expr e = cfg.require_function().expr();
        table = clt_convergence_table_exact(steps, [&e](double x) { return e.eval(x); }, p.n_list);
    } else {
        const auto f = bounded_function(cfg.require_function(), bounds_radius(cfg, steps));
        table = clt_convergence_table(steps, f.fn, p.n_list, grid_of(p));
    }
    write_csv(table, out);
    return exit_ok;
}

inline GParams1D g_of(const RunConfig& cfg, bool& drift_family) {
    drift_family = false;
    if (cfg.params.g) {
        const auto& g = *cfg.params.g;
        return GParams1D(g.sigma_min_sq, g.sigma_max_sq, g.mu_min, g.mu_max);
    }
    const auto family = cfg.ambiguity_set();
    try {
        if (family.dimension() == 2) {
            drift_family = true;
            return g_from_family(DriftStepFamily(family));
        }
        return g_from_family(StepFamily(family));
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("/family: ") + e.what());
    }
}

inline json g_json(const GParams1D& g) {
    return {{"sigma_min_sq", g.sigma_min_sq()},
            {"sigma_max_sq", g.sigma_max_sq()},
            {"mu_min", g.mu_min()},
            {"mu_max", g.mu_max()}};
}

inline int run_pde(const RunConfig& cfg, std::ostream& out) {
    bool drift_family = false;
    const auto g = g_of(cfg, drift_family);
    const auto& pde = cfg.params.pde;
    const auto f = bounded_function(cfg.require_function(), pde.half_width);
    const bool hjb = g.has_drift();
    Solution sol;
    try {
        sol = hjb ? solve_ghjb(g, f.fn, pde) : solve_gheat(g, f.fn, pde);
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("/params: ") + e.what());
    }

    json snaps = json::array();
    for (std::size_t k = 0; k < sol.snapshots.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "snapshot_%03zu.tsv", k);
        std::ostringstream tsv;
        write_tsv(sol.snapshots[k].grid, tsv);
        write_file(output_path(cfg.params, name), tsv.str());
        snaps.push_back({{"time", sol.snapshots[k].time}, {"file", name}});
    }
    json manifest = {{"command", "pde"},
                     {"scheme", hjb ? "ghjb" : "gheat"},
                     {"g", g_json(g)},
                     {"g_source", cfg.params.g ? "params" : (drift_family ? "drift_family_rectangle" : "family")},
                     {"pde",
                      {{"half_width", pde.half_width},
                       {"dx", pde.dx},
                       {"horizon", pde.horizon},
                       {"gamma", pde.gamma},
                       {"dt", sol.dt},
                       {"steps", sol.steps}}},
                     {"function", bounds_json(*cfg.function, f.bounds)},
                     {"snapshots", snaps}};
    const std::string text = manifest.dump(2) + "\n";
    write_file(output_path(cfg.params, "manifest.json"), text);
    out << text;
    return exit_ok;
}

inline int run_compare(const RunConfig& cfg, std::ostream& out) {
    const auto steps = step_family(cfg);
    const auto& p = cfg.params;
    const auto f = bounded_function(cfg.require_function(), bounds_radius(cfg, steps));
    const auto g = g_from_family(steps);
    const double reference = gnormal_value(g, f.fn, p.pde);
    const auto table = clt_convergence_table(steps, f.fn, p.n_list, grid_of(p));

    std::ostringstream plot;
    out << "n,dp,pde,abs_err\n";
    for (const auto& row : table.rows) {
        const double err = std::abs(row.value - reference);
        out << row.n << ',' << format_sig12(row.value) << ',' << format_sig12(reference) << ','
            << format_sig12(err) << '\n';
        if (err > 0.0)
            plot << format_sig12(std::log(static_cast<double>(row.n))) << '\t' << format_sig12(std::log(err)) << '\n';
    }
    write_file(output_path(p, "compare_plot.tsv"), plot.str());
    return exit_ok;
}

struct SuiteTally {
    std::string name;
    int cases = 0;
    int violations = 0;
    double worst = 0.0; // largest observed residual or excess

    json to_json() const {
        return {{"name", name}, {"cases", cases}, {"violations", violations}, {"worst", worst}};
    }
};

inline int run_check(const RunConfig& cfg, std::ostream& out) {
    const auto family = cfg.ambiguity_set();
    const auto& p = cfg.params;
    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto dict = dictionary_default(p.dictionary_radius, p.dictionary_size);
    std::vector<SuiteTally> suites;

    // Random elements of the span of the dictionary.
    auto random_combo = [&] {
        std::vector<double> c(dict.size());
        for (auto& v : c)
            v = 4.0 * unit(rng) - 2.0;
        return RandomVariable{[c, &dict](PointView x) {
                                  double s = 0.0;
                                  for (std::size_t k = 0; k < dict.size(); ++k)
                                      s += c[k] * dict[k](scalar_of(x));
                                  return s;
                              },
                              {}, {}};
    };

    SuiteTally sub{"sublinearity"};
    std::optional<RandomVariable> user_x;
    if (cfg.function)
        user_x = random_variable(cfg.function->expr());
    for (int i = 0; i < p.cases; ++i) {
        const auto x = (i == 0 && user_x) ? *user_x : random_combo();
        const auto y = random_combo();
        const auto r = verify_sublinearity(family, x, y, 3.0 * unit(rng), 10.0 * unit(rng) - 5.0);
        ++sub.cases;
        sub.worst = std::max(sub.worst, r.ex_plus_y - r.ex - r.ey);
        if (!r.ok())
            ++sub.violations;
    }
    suites.push_back(sub);

    // Events: user-supplied first, then random intervals on the scalar view.
    SuiteTally caps{"capacity_laws"}, bc{"borel_cantelli_tail"};
    const double span = std::max(1.0, family.max_atom_norm());
    for (int i = 0; i < p.cases; ++i) {
        std::vector<Event> events;
        if (i == 0)
            for (const auto& text : p.events)
                events.push_back(event_of(parse_expr(text)));
        const int extra = 1 + static_cast<int>(unit(rng) * 5);
        for (int k = 0; k < extra; ++k) {
            double a = (2.0 * unit(rng) - 1.0) * 1.2 * span, b = (2.0 * unit(rng) - 1.0) * 1.2 * span;
            if (a > b)
                std::swap(a, b);
            events.push_back({[a, b](PointView x) {
                const double s = scalar_of(x);
                return s >= a && s <= b;
            }});
        }
        const auto r = capacity_properties_check(family, events);
        ++caps.cases;
        if (!r.ok())
            ++caps.violations;
        const auto tail = borel_cantelli_tail(family, events);
        ++bc.cases;
        for (std::size_t n = 0; n < tail.size(); ++n) {
            double rest = 0.0;
            for (std::size_t k = n; k < tail.size(); ++k)
                rest += r.capacities[k];
            const bool bad = tail[n] > rest + property_tolerance ||
                             (n > 0 && tail[n] > tail[n - 1] + property_tolerance);
            if (bad) {
                ++bc.violations;
                break;
            }
        }
    }
    suites.push_back(caps);
    suites.push_back(bc);

    SuiteTally tight{"tightness"};
    for (double eps : {p.epsilon, 0.01}) {
        const auto t = tightness_radius(family, eps, p.moment_order);
        ++tight.cases;
        if (!t.verified)
            ++tight.violations;
    }
    suites.push_back(tight);

    json report = {{"command", "check"}};
    std::optional<StepFamily> steps;
    try {
        steps.emplace(family);
    } catch (const ParameterError& e) {
        report["skipped"] = std::string("clt/pde suites need a zero-mean 1-D family: ") + e.what();
    }
    if (steps) {
        const auto g = g_from_family(*steps);
        const TestFunction phi = cfg.function ? bounded_function(*cfg.function, p.pde.half_width).fn
                                              : TestFunction{[](double x) { return std::cos(x); }, 1.0, 1.0};
        PdeConfig pde = p.pde;

        SuiteTally semi{"semigroup"};
        for (auto [t, s] : {std::pair{0.5, 0.5}, std::pair{0.36, 0.64}}) {
            if (t + s > pde.horizon + 1e-12)
                continue;
            const double r = semigroup_check(g, phi, t, s, pde);
            const double alias = stability_check(g, phi, std::sqrt(t), std::sqrt(s), pde);
            ++semi.cases;
            semi.worst = std::max(semi.worst, r);
            if (r > p.semigroup_tolerance || alias > p.semigroup_tolerance)
                ++semi.violations;
        }
        suites.push_back(semi);

        SuiteTally holder{"time_holder"};
        for (double t : {0.0, 0.25, 0.5})
            for (double s : {0.01, 0.04, 0.25}) {
                if (t + s > pde.horizon + 1e-12)
                    continue;
                const auto h = time_holder_check(g, phi, t, s, pde);
                ++holder.cases;
                holder.worst = std::max(holder.worst, h.lhs - h.bound);
                if (!h.ok())
                    ++holder.violations;
            }
        suites.push_back(holder);

        SuiteTally dom{"domination"};
        std::vector<std::pair<TestFunction, TestFunction>> pairs;
        for (std::size_t k = 0; k + 1 < dict.size(); ++k)
            pairs.emplace_back(dict[k + 1], dict[k]);
        pairs.emplace_back(phi, TestFunction::constant(0.0));
        const auto d = domination_check(*steps, pairs, p.n_list, grid_of(p));
        dom.cases = static_cast<int>(pairs.size() * p.n_list.size());
        dom.violations = static_cast<int>(d.violations.size());
        suites.push_back(dom);
    }

    json arr = json::array();
    int violations = 0;
    for (const auto& s : suites) {
        arr.push_back(s.to_json());
        violations += s.violations;
    }
    report["suites"] = arr;
    report["ok"] = violations == 0;
    out << report.dump(2) << '\n';
    return violations == 0 ? exit_ok : exit_violation;
}

} // namespace detail

/// Runs `command` on configuration text. Errors go to `err` and map to exit codes.
inline int run_command(std::string_view command, std::string_view config_text, std::ostream& out, std::ostream& err) {
    try {
        RunConfig cfg = parse_config(config_text);
        if (!cfg.command.empty() && cfg.command != command)
            throw ConfigError("/command: config is for '" + cfg.command + "', not '" + std::string(command) + "'");
        cfg.command = std::string(command);
        if (command == "expect")
            return detail::run_expect(cfg, out);
        if (command == "clt")
            return detail::run_clt(cfg, out);
        if (command == "pde")
            return detail::run_pde(cfg, out);
        if (command == "compare")
            return detail::run_compare(cfg, out);
        if (command == "check")
            return detail::run_check(cfg, out);
        err << "error: unknown command '" << command << "'\n";
        return exit_config;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const ParameterError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        err << "numeric error: " << e.what() << '\n';
        return exit_numeric;
    }
}

} // namespace sublim
