#pragma once

// Run configuration: a JSON document
//
//   { "command": "clt",
//     "family":   [ { "atoms": [[-1], [1]], "weights": [0.5, 0.5] }, ... ],
//     "function": "cos(x)"  |  { "builtin": "cos", "params": { "freq": 1 } },
//     "params":   { ... } }
//
// parse_config validates everything it reads and reports the JSON path of
// the first offending value. emit_config writes the normalized form.

#include "sublim/errors.hpp"
#include "sublim/expr.hpp"
#include "sublim/measures.hpp"
#include "sublim/pde.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sublim {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::array<std::string_view, 5> command_names{"expect", "clt", "pde", "compare", "check"};

struct MeasureSpec {
    std::vector<std::vector<double>> atoms;
    std::vector<double> weights;
};

struct FunctionSpec {
    std::string expression;                // normalized text; always set
    std::optional<std::string> builtin;    // builtin name when given that way
    std::map<std::string, double> params;  // builtin parameters

    Expr expr() const { return parse_expr(expression); }
};

struct GSpec {
    double sigma_min_sq, sigma_max_sq, mu_min = 0.0, mu_max = 0.0;
};

struct RunParams {
    std::vector<int> n_list{4, 16, 64, 256};
    std::string mode = "dp"; // clt: "dp" or "exact"
    double dx = 0.01;
    std::optional<double> radius;
    double x_eval = 0.0;
    PdeConfig pde{10.0, 0.01, 1.0, 0.9, {0.25, 0.5, 1.0}};
    std::optional<GSpec> g;
    double epsilon = 0.1;
    double moment_order = 2.0;
    std::vector<std::string> events; // event {x : e(x) > 0}, normalized text
    int dictionary_size = 6;
    double dictionary_radius = 3.0;
    double semigroup_tolerance = 5e-3;
    int cases = 100;
    std::uint64_t seed = 1;
    std::string output_dir = ".";
};

struct RunConfig {
    std::string command;
    std::vector<MeasureSpec> family;
    std::optional<FunctionSpec> function;
    RunParams params;

    AmbiguitySet ambiguity_set() const {
        if (family.empty())
            throw ConfigError("/family: a family of measures is required for '" + command + "'");
        std::vector<DiscreteMeasure> ms;
        for (std::size_t i = 0; i < family.size(); ++i) {
            try {
                ms.emplace_back(family[i].atoms, family[i].weights);
            } catch (const ParameterError& e) {
                throw ConfigError("/family/" + std::to_string(i) + ": " + e.what());
            }
        }
        return AmbiguitySet(std::move(ms));
    }

    const FunctionSpec& require_function() const {
        if (!function)
            throw ConfigError("/function: required for '" + command + "'");
        return *function;
    }
};

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void config_fail(const std::string& path, const std::string& msg) {
    throw ConfigError((path.empty() ? std::string("/") : path) + ": " + msg);
}

inline double get_number(const json& j, const std::string& path) {
    if (!j.is_number())
        config_fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v))
        config_fail(path, "number is not finite");
    return v;
}

inline long long get_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer())
        config_fail(path, "expected an integer");
    return j.is_number_unsigned() ? static_cast<long long>(std::min<std::uint64_t>(j.get<std::uint64_t>(), INT64_MAX))
                                  : j.get<long long>();
}

inline std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string())
        config_fail(path, "expected a string");
    return j.get<std::string>();
}

inline std::vector<double> get_numbers(const json& j, const std::string& path) {
    if (!j.is_array())
        config_fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(get_number(j[i], path + "/" + std::to_string(i)));
    return out;
}

inline void check_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object())
        config_fail(path, "expected an object");
    for (const auto& [key, _] : j.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            config_fail(path, "unknown key '" + key + "'");
}

inline std::string normalize_expression(const std::string& text, const std::string& path) {
    try {
        return to_string(parse_expr(text));
    } catch (const ParseError& e) {
        config_fail(path, e.what());
    }
}

// Builtins expand to expressions; params not listed default as shown.
inline std::string builtin_expression(const std::string& name, const std::map<std::string, double>& p,
                                      const std::string& path) {
    auto param = [&](const char* key, double fallback) {
        const auto it = p.find(key);
        return it == p.end() ? fallback : it->second;
    };
    auto num = [](double v) { return to_string(Expr::number(std::abs(v))).insert(0, v < 0 ? "-" : ""); };
    for (const auto& [key, _] : p) {
        static const std::map<std::string, std::vector<std::string>> known{
            {"constant", {"value"}}, {"identity", {}},     {"square", {}},
            {"cos", {"freq"}},        {"sin", {"freq"}},    {"tanh", {"scale"}},
            {"abs_clamp", {"cap"}},   {"square_clamp", {"cap"}}};
        const auto it = known.find(name);
        if (it != known.end() && std::find(it->second.begin(), it->second.end(), key) == it->second.end())
            config_fail(path + "/params/" + key, "unknown parameter for builtin '" + name + "'");
    }
    if (name == "constant")
        return "(" + num(param("value", 0.0)) + ")";
    if (name == "identity")
        return "x";
    if (name == "square")
        return "x^2";
    if (name == "cos")
        return "cos(" + num(param("freq", 1.0)) + "*x)";
    if (name == "sin")
        return "sin(" + num(param("freq", 1.0)) + "*x)";
    if (name == "tanh")
        return "tanh(" + num(param("scale", 1.0)) + "*x)";
    if (name == "abs_clamp")
        return "clamp(abs(x), 0, " + num(param("cap", 5.0)) + ")";
    if (name == "square_clamp")
        return "clamp(x^2, 0, " + num(param("cap", 25.0)) + ")";
    config_fail(path + "/builtin", "unknown builtin '" + name + "'");
}

inline FunctionSpec parse_function(const json& j) {
    FunctionSpec f;
    if (j.is_string()) {
        f.expression = normalize_expression(j.get<std::string>(), "/function");
        return f;
    }
    check_keys(j, "/function", {"builtin", "params"});
    if (!j.contains("builtin"))
        config_fail("/function", "missing 'builtin'");
    f.builtin = get_string(j["builtin"], "/function/builtin");
    if (j.contains("params")) {
        const auto& p = j["params"];
        if (!p.is_object())
            config_fail("/function/params", "expected an object");
        for (const auto& [key, val] : p.items())
            f.params[key] = get_number(val, "/function/params/" + key);
    }
    f.expression = normalize_expression(builtin_expression(*f.builtin, f.params, "/function"), "/function");
    return f;
}

inline MeasureSpec parse_measure(const json& j, const std::string& path) {
    check_keys(j, path, {"atoms", "weights"});
    if (!j.contains("atoms") || !j.contains("weights"))
        config_fail(path, "measure needs 'atoms' and 'weights'");
    MeasureSpec m;
    const auto& atoms = j["atoms"];
    if (!atoms.is_array())
        config_fail(path + "/atoms", "expected an array");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const std::string ap = path + "/atoms/" + std::to_string(i);
        // A bare number is a one-dimensional atom.
        m.atoms.push_back(atoms[i].is_number() ? std::vector<double>{get_number(atoms[i], ap)} : get_numbers(atoms[i], ap));
    }
    m.weights = get_numbers(j["weights"], path + "/weights");
    try {
        (void)DiscreteMeasure(m.atoms, m.weights);
    } catch (const ParameterError& e) {
        config_fail(path, e.what());
    }
    return m;
}

inline void parse_pde(const json& j, PdeConfig& pde) {
    check_keys(j, "/params/pde", {"half_width", "dx", "horizon", "gamma", "snapshots"});
    if (j.contains("half_width"))
        pde.half_width = get_number(j["half_width"], "/params/pde/half_width");
    if (j.contains("dx"))
        pde.dx = get_number(j["dx"], "/params/pde/dx");
    if (j.contains("horizon"))
        pde.horizon = get_number(j["horizon"], "/params/pde/horizon");
    if (j.contains("gamma"))
        pde.gamma = get_number(j["gamma"], "/params/pde/gamma");
    if (j.contains("snapshots"))
        pde.snapshot_times = get_numbers(j["snapshots"], "/params/pde/snapshots");
    try {
        pde.validate();
        if (pde.intervals() > 10'000'000)
            config_fail("/params/pde", "grid too large");
    } catch (const ParameterError& e) {
        config_fail("/params/pde", e.what());
    }
}

inline RunParams parse_params(const json& j) {
    RunParams p;
    check_keys(j, "/params",
               {"n_list", "mode", "dx", "radius", "x_eval", "pde", "g", "epsilon", "moment_order", "events",
                "dictionary_size", "dictionary_radius", "semigroup_tolerance", "cases", "seed", "output_dir"});
    if (j.contains("n_list")) {
        const auto& a = j["n_list"];
        if (!a.is_array() || a.empty())
            config_fail("/params/n_list", "expected a nonempty array of integers");
        p.n_list.clear();
        for (std::size_t i = 0; i < a.size(); ++i) {
            const auto v = get_integer(a[i], "/params/n_list/" + std::to_string(i));
            if (v < 1 || v > 100'000)
                config_fail("/params/n_list/" + std::to_string(i), "n must lie in [1, 100000]");
            if (i > 0 && v <= p.n_list.back())
                config_fail("/params/n_list/" + std::to_string(i), "n_list must be strictly increasing");
            p.n_list.push_back(static_cast<int>(v));
        }
    }
    if (j.contains("mode")) {
        p.mode = get_string(j["mode"], "/params/mode");
        if (p.mode != "dp" && p.mode != "exact")
            config_fail("/params/mode", "expected \"dp\" or \"exact\"");
    }
    if (j.contains("dx")) {
        p.dx = get_number(j["dx"], "/params/dx");
        if (!(p.dx >= 1e-5))
            config_fail("/params/dx", "dx must be >= 1e-5");
    }
    if (j.contains("radius")) {
        p.radius = get_number(j["radius"], "/params/radius");
        if (!(*p.radius > 0.0 && *p.radius / p.dx < 1e7))
            config_fail("/params/radius", "radius must be positive and at most 1e7 grid steps");
    }
    if (j.contains("x_eval"))
        p.x_eval = get_number(j["x_eval"], "/params/x_eval");
    if (j.contains("pde"))
        parse_pde(j["pde"], p.pde);
    if (j.contains("g")) {
        const auto& g = j["g"];
        check_keys(g, "/params/g", {"sigma_min_sq", "sigma_max_sq", "mu_min", "mu_max"});
        if (!g.contains("sigma_min_sq") || !g.contains("sigma_max_sq"))
            config_fail("/params/g", "needs sigma_min_sq and sigma_max_sq");
        GSpec s{get_number(g["sigma_min_sq"], "/params/g/sigma_min_sq"),
                get_number(g["sigma_max_sq"], "/params/g/sigma_max_sq")};
        if (g.contains("mu_min"))
            s.mu_min = get_number(g["mu_min"], "/params/g/mu_min");
        if (g.contains("mu_max"))
            s.mu_max = get_number(g["mu_max"], "/params/g/mu_max");
        try {
            (void)GParams1D(s.sigma_min_sq, s.sigma_max_sq, s.mu_min, s.mu_max);
        } catch (const ParameterError& e) {
            config_fail("/params/g", e.what());
        }
        p.g = s;
    }
    if (j.contains("epsilon")) {
        p.epsilon = get_number(j["epsilon"], "/params/epsilon");
        if (!(p.epsilon > 0.0 && p.epsilon <= 1.0))
            config_fail("/params/epsilon", "epsilon must lie in (0, 1]");
    }
    if (j.contains("moment_order")) {
        p.moment_order = get_number(j["moment_order"], "/params/moment_order");
        if (!(p.moment_order > 0.0))
            config_fail("/params/moment_order", "must be positive");
    }
    if (j.contains("events")) {
        const auto& a = j["events"];
        if (!a.is_array())
            config_fail("/params/events", "expected an array of expressions");
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::string path = "/params/events/" + std::to_string(i);
            p.events.push_back(normalize_expression(get_string(a[i], path), path));
        }
    }
    if (j.contains("dictionary_size")) {
        const auto v = get_integer(j["dictionary_size"], "/params/dictionary_size");
        if (v < 1 || v > 1000)
            config_fail("/params/dictionary_size", "must lie in [1, 1000]");
        p.dictionary_size = static_cast<int>(v);
    }
    if (j.contains("dictionary_radius")) {
        p.dictionary_radius = get_number(j["dictionary_radius"], "/params/dictionary_radius");
        if (!(p.dictionary_radius > 0.0))
            config_fail("/params/dictionary_radius", "must be positive");
    }
    if (j.contains("semigroup_tolerance")) {
        p.semigroup_tolerance = get_number(j["semigroup_tolerance"], "/params/semigroup_tolerance");
        if (!(p.semigroup_tolerance > 0.0))
            config_fail("/params/semigroup_tolerance", "must be positive");
    }
    if (j.contains("cases")) {
        const auto v = get_integer(j["cases"], "/params/cases");
        if (v < 1 || v > 1'000'000)
            config_fail("/params/cases", "must lie in [1, 1000000]");
        p.cases = static_cast<int>(v);
    }
    if (j.contains("seed")) {
        const auto v = get_integer(j["seed"], "/params/seed");
        if (v < 0)
            config_fail("/params/seed", "must be nonnegative");
        p.seed = static_cast<std::uint64_t>(v);
    }
    if (j.contains("output_dir"))
        p.output_dir = get_string(j["output_dir"], "/params/output_dir");
    return p;
}

} // namespace detail

/// Parses and validates a configuration document. Every failure is a ConfigError.
inline RunConfig parse_config(std::string_view text) {
    using detail::json;
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON at byte ") + std::to_string(e.byte) + ": " + e.what());
    }
    try {
        detail::check_keys(doc, "", {"command", "family", "function", "params"});
        RunConfig cfg;
        if (doc.contains("command")) {
            cfg.command = detail::get_string(doc["command"], "/command");
            if (std::find(command_names.begin(), command_names.end(), cfg.command) == command_names.end())
                detail::config_fail("/command", "unknown command '" + cfg.command + "'");
        }
        if (doc.contains("family")) {
            const auto& fam = doc["family"];
            if (!fam.is_array() || fam.empty())
                detail::config_fail("/family", "expected a nonempty array of measures");
            for (std::size_t i = 0; i < fam.size(); ++i)
                cfg.family.push_back(detail::parse_measure(fam[i], "/family/" + std::to_string(i)));
            std::size_t dim = cfg.family.front().atoms.front().size();
            for (std::size_t i = 0; i < cfg.family.size(); ++i)
                if (cfg.family[i].atoms.front().size() != dim)
                    detail::config_fail("/family/" + std::to_string(i), "measures must share a dimension");
        }
        if (doc.contains("function"))
            cfg.function = detail::parse_function(doc["function"]);
        if (doc.contains("params"))
            cfg.params = detail::parse_params(doc["params"]);
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
}

/// Normalized JSON text; parse_config(emit_config(c)) emits the same text.
inline std::string emit_config(const RunConfig& cfg) {
    using detail::json;
    json doc = json::object();
    if (!cfg.command.empty())
        doc["command"] = cfg.command;
    if (!cfg.family.empty()) {
        json fam = json::array();
        for (const auto& m : cfg.family)
            fam.push_back({{"atoms", m.atoms}, {"weights", m.weights}});
        doc["family"] = fam;
    }
    if (cfg.function) {
        if (cfg.function->builtin)
            doc["function"] = {{"builtin", *cfg.function->builtin}, {"params", cfg.function->params}};
        else
            doc["function"] = cfg.function->expression;
    }
    const auto& p = cfg.params;
    json params = {
        {"n_list", p.n_list},
        {"mode", p.mode},
        {"dx", p.dx},
        {"x_eval", p.x_eval},
        {"pde",
         {{"half_width", p.pde.half_width},
          {"dx", p.pde.dx},
          {"horizon", p.pde.horizon},
          {"gamma", p.pde.gamma},
          {"snapshots", p.pde.snapshot_times}}},
        {"epsilon", p.epsilon},
        {"moment_order", p.moment_order},
        {"events", p.events},
        {"dictionary_size", p.dictionary_size},
        {"dictionary_radius", p.dictionary_radius},
        {"semigroup_tolerance", p.semigroup_tolerance},
        {"cases", p.cases},
        {"seed", p.seed},
        {"output_dir", p.output_dir},
    };
    if (p.radius)
        params["radius"] = *p.radius;
    if (p.g)
        params["g"] = {{"sigma_min_sq", p.g->sigma_min_sq},
                       {"sigma_max_sq", p.g->sigma_max_sq},
                       {"mu_min", p.g->mu_min},
                       {"mu_max", p.g->mu_max}};
    doc["params"] = params;
    return doc.dump(2) + "\n";
}

} // namespace sublim
