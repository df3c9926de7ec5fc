#include "refdiff/app/run_spec.hpp"

#include "refdiff/errors.hpp"

#include <fstream>
#include <initializer_list>

namespace refdiff::app {

using nlohmann::json;

namespace {

constexpr std::pair<Output, std::string_view> kOutputNames[] = {
    {Output::Alpha, "alpha"}, {Output::Eta2, "eta2"}, {Output::Density, "density"}, {Output::UPrime, "u_prime"},
    {Output::Psi, "psi"},     {Output::Rate, "rate"}, {Output::Mc, "mc"},           {Output::Verify, "verify"},
};

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ValidationError("spec " + where + ": " + what);
}

void require_object(const json& doc, const std::string& where) {
    if (!doc.is_object()) fail(where, "expected an object");
}

void allow_keys(const json& doc, const std::string& where, std::initializer_list<std::string_view> keys) {
    for (const auto& item : doc.items()) {
        bool known = false;
        for (auto k : keys) known = known || item.key() == k;
        if (!known) fail(where, "unknown key '" + item.key() + "'");
    }
}

template <class T>
T get(const json& doc, const std::string& where, const char* key) {
    if (!doc.contains(key)) fail(where, std::string("missing key '") + key + "'");
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        fail(where, std::string("bad value for '") + key + "'");
    }
}

template <class T>
T get_or(const json& doc, const std::string& where, const char* key, T fallback) {
    return doc.contains(key) ? get<T>(doc, where, key) : fallback;
}

json domain_to_json(const Domain& d) {
    if (const auto* two = std::get_if<TwoBarrier>(&d)) return {{"kind", "two_barrier"}, {"b_barrier", two->b_barrier}};
    return {{"kind", "single_barrier"}};
}

Domain domain_from_json(const json& doc) {
    const std::string where = "model.domain";
    require_object(doc, where);
    const auto kind = get<std::string>(doc, where, "kind");
    if (kind == "two_barrier") {
        allow_keys(doc, where, {"kind", "b_barrier"});
        return TwoBarrier{get<double>(doc, where, "b_barrier")};
    }
    if (kind == "single_barrier") {
        allow_keys(doc, where, {"kind"});
        return SingleBarrier{};
    }
    fail(where, "unknown domain kind '" + kind + "'");
}

json mc_to_json(const McConfig& mc) {
    return {{"dt", mc.dt},
            {"horizon_t", mc.horizon_t},
            {"replications", mc.replications},
            {"seed", mc.seed},
            {"x0", mc.x0},
            {"batch_count", mc.batch_count},
            {"histogram_bins", mc.histogram_bins},
            {"histogram_upper", mc.histogram_upper},
            {"scheme", std::string(to_string(mc.scheme))}};
}

McConfig mc_from_json(const json& doc) {
    const std::string where = "mc";
    require_object(doc, where);
    allow_keys(doc, where,
               {"dt", "horizon_t", "replications", "seed", "x0", "batch_count", "histogram_bins", "histogram_upper",
                "scheme"});
    McConfig mc;
    mc.dt = get_or(doc, where, "dt", mc.dt);
    mc.horizon_t = get_or(doc, where, "horizon_t", mc.horizon_t);
    mc.replications = get_or(doc, where, "replications", mc.replications);
    mc.seed = get_or(doc, where, "seed", mc.seed);
    mc.x0 = get_or(doc, where, "x0", mc.x0);
    mc.batch_count = get_or(doc, where, "batch_count", mc.batch_count);
    mc.histogram_bins = get_or(doc, where, "histogram_bins", mc.histogram_bins);
    mc.histogram_upper = get_or(doc, where, "histogram_upper", mc.histogram_upper);
    if (doc.contains("scheme")) mc.scheme = reflection_scheme_from_string(get<std::string>(doc, where, "scheme"));
    return mc;
}

json solver_to_json(const SolverConfig& c) {
    return {{"grid_points", c.grid_points},
            {"quad_tol", c.quad_tol},
            {"root_tol", c.root_tol},
            {"eig_tol", c.eig_tol},
            {"region_eps", c.region_eps}};
}

SolverConfig solver_from_json(const json& doc) {
    const std::string where = "solver";
    require_object(doc, where);
    allow_keys(doc, where, {"grid_points", "quad_tol", "root_tol", "eig_tol", "region_eps"});
    SolverConfig c;
    c.grid_points = get_or(doc, where, "grid_points", c.grid_points);
    c.quad_tol = get_or(doc, where, "quad_tol", c.quad_tol);
    c.root_tol = get_or(doc, where, "root_tol", c.root_tol);
    c.eig_tol = get_or(doc, where, "eig_tol", c.eig_tol);
    c.region_eps = get_or(doc, where, "region_eps", c.region_eps);
    return c;
}

}  // namespace

std::string_view to_string(Output output) {
    for (const auto& [o, name] : kOutputNames) {
        if (o == output) return name;
    }
    return "unknown";
}

Output output_from_string(std::string_view name) {
    for (const auto& [o, n] : kOutputNames) {
        if (n == name) return o;
    }
    throw ValidationError("unknown output '" + std::string(name) + "'");
}

json to_json(const CoefficientSpec& spec) {
    return std::visit(
        [](const auto& c) -> json {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, ConstantDrift>) {
                return {{"kind", "constant_drift"}, {"mu", c.mu}};
            } else if constexpr (std::is_same_v<T, OuDrift>) {
                return {{"kind", "ou_drift"}, {"a", c.a}, {"c", c.c}};
            } else if constexpr (std::is_same_v<T, ConstantSq>) {
                return {{"kind", "constant_sigma2"}, {"sigma2", c.sigma2}};
            } else if constexpr (std::is_same_v<T, SampledGrid>) {
                return {{"kind", "sampled_grid"}, {"xs", c.xs}, {"values", c.values}};
            } else if constexpr (std::is_same_v<T, ConstantCost>) {
                return {{"kind", "constant_cost"}, {"value", c.value}};
            } else {
                return {{"kind", "zero_cost"}};
            }
        },
        spec);
}

CoefficientSpec coefficient_from_json(const json& doc) {
    const std::string where = "coefficient";
    require_object(doc, where);
    const auto kind = get<std::string>(doc, where, "kind");
    if (kind == "constant_drift") {
        allow_keys(doc, where, {"kind", "mu"});
        return ConstantDrift{get<double>(doc, where, "mu")};
    }
    if (kind == "ou_drift") {
        allow_keys(doc, where, {"kind", "a", "c"});
        return OuDrift{get<double>(doc, where, "a"), get<double>(doc, where, "c")};
    }
    if (kind == "constant_sigma2") {
        allow_keys(doc, where, {"kind", "sigma2"});
        return ConstantSq{get<double>(doc, where, "sigma2")};
    }
    if (kind == "sampled_grid") {
        allow_keys(doc, where, {"kind", "xs", "values"});
        return SampledGrid{get<std::vector<double>>(doc, where, "xs"), get<std::vector<double>>(doc, where, "values")};
    }
    if (kind == "constant_cost") {
        allow_keys(doc, where, {"kind", "value"});
        return ConstantCost{get<double>(doc, where, "value")};
    }
    if (kind == "zero_cost") {
        allow_keys(doc, where, {"kind"});
        return ZeroCost{};
    }
    fail(where, "unknown kind '" + kind + "'");
}

json to_json(const RunSpec& spec) {
    json outputs = json::array();
    for (auto o : spec.outputs) outputs.push_back(std::string(to_string(o)));
    json doc = {
        {"model",
         {{"drift", to_json(spec.model.mu)},
          {"sigma2", to_json(spec.model.sigma2)},
          {"domain", domain_to_json(spec.model.domain)}}},
        {"functional",
         {{"cost", to_json(spec.functional.f)},
          {"r0", spec.functional.r0},
          {"rb", spec.functional.rb},
          {"assert_bounded", spec.functional.assert_bounded}}},
        {"solver", solver_to_json(spec.solver)},
        {"cgf_thetas", spec.cgf_thetas},
        {"outputs", outputs},
    };
    if (spec.mc) doc["mc"] = mc_to_json(*spec.mc);
    if (spec.theta_grid) doc["theta_grid"] = *spec.theta_grid;
    if (spec.rate_points) doc["rate_points"] = *spec.rate_points;
    return doc;
}

RunSpec run_spec_from_json(const json& doc) {
    require_object(doc, "root");
    allow_keys(doc, "root",
               {"model", "functional", "solver", "mc", "theta_grid", "rate_points", "cgf_thetas", "outputs"});
    RunSpec spec;

    const json model = get<json>(doc, "root", "model");
    require_object(model, "model");
    allow_keys(model, "model", {"drift", "sigma2", "domain"});
    spec.model.mu = coefficient_from_json(get<json>(model, "model", "drift"));
    spec.model.sigma2 = coefficient_from_json(get<json>(model, "model", "sigma2"));
    spec.model.domain = domain_from_json(get<json>(model, "model", "domain"));

    const json fn = get<json>(doc, "root", "functional");
    require_object(fn, "functional");
    allow_keys(fn, "functional", {"cost", "r0", "rb", "assert_bounded"});
    spec.functional.f = fn.contains("cost") ? coefficient_from_json(fn.at("cost")) : CoefficientSpec{ZeroCost{}};
    spec.functional.r0 = get_or(fn, "functional", "r0", 0.0);
    spec.functional.rb = get_or(fn, "functional", "rb", 0.0);
    spec.functional.assert_bounded = get_or(fn, "functional", "assert_bounded", false);

    if (doc.contains("solver")) spec.solver = solver_from_json(doc.at("solver"));
    if (doc.contains("mc")) spec.mc = mc_from_json(doc.at("mc"));
    if (doc.contains("theta_grid")) spec.theta_grid = get<std::vector<double>>(doc, "root", "theta_grid");
    if (doc.contains("rate_points")) spec.rate_points = get<std::vector<double>>(doc, "root", "rate_points");
    spec.cgf_thetas = get_or(doc, "root", "cgf_thetas", std::vector<double>{});
    for (const auto& name : get_or(doc, "root", "outputs", std::vector<std::string>{})) {
        spec.outputs.insert(output_from_string(name));
    }
    return spec;
}

RunSpec load_run_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open spec file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("spec file " + path.string() + " is not valid JSON: " + e.what());
    }
    return run_spec_from_json(doc);
}

void check_run_spec(const RunSpec& spec) {
    const bool needs_compact = spec.outputs.contains(Output::Psi) || spec.outputs.contains(Output::Rate);
    if (needs_compact && !spec.model.is_two_barrier()) {
        throw ValidationError("large deviations requires a compact domain (two reflecting barriers)");
    }
    const bool needs_mc = spec.outputs.contains(Output::Mc) || spec.outputs.contains(Output::Verify);
    if (needs_mc && !spec.mc) throw ValidationError("mc and verify outputs need an mc block");
    if (spec.theta_grid) {
        const auto& g = *spec.theta_grid;
        if (!std::is_sorted(g.begin(), g.end()) || std::adjacent_find(g.begin(), g.end()) != g.end() ||
            std::find(g.begin(), g.end(), 0.0) == g.end()) {
            throw ValidationError("theta_grid must be strictly ascending and contain 0");
        }
    }
    if (!spec.cgf_thetas.empty() && !spec.model.is_two_barrier()) {
        throw ValidationError("large deviations requires a compact domain (two reflecting barriers)");
    }
}

}  // namespace refdiff::app
