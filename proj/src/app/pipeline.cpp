#include "refdiff/app/pipeline.hpp"

#include "refdiff/errors.hpp"
#include "refdiff/poisson.hpp"
#include "refdiff/rate.hpp"
#include "refdiff/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>

namespace refdiff::app {

using nlohmann::json;

namespace {

struct Analytic {
    PoissonSolution solution;
    std::optional<double> x_max;  // single barrier only
};

Analytic analytic(const RunSpec& spec) {
    Analytic out;
    if (spec.model.is_two_barrier()) {
        out.solution = solve_poisson(spec.model, spec.functional, spec.solver);
    } else {
        out.x_max = auto_truncation(spec.model, spec.functional, spec.solver);
        out.solution = solve_poisson(spec.model, spec.functional, spec.solver, *out.x_max);
    }
    return out;
}

McEstimate monte_carlo(const RunSpec& spec) {
    return estimate_scaled_cgf(spec.model, spec.functional, *spec.mc, spec.cgf_thetas);
}

// Mean over [lo, hi] of the piecewise-linear interpolant of (grid, values);
// zero beyond the grid.
double bin_average(const std::vector<double>& grid, const std::vector<double>& values, double lo, double hi) {
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double a = std::max(lo, grid[i]);
        const double b = std::min(hi, grid[i + 1]);
        if (!(b > a)) continue;
        const double slope = (values[i + 1] - values[i]) / (grid[i + 1] - grid[i]);
        const double va = values[i] + slope * (a - grid[i]);
        const double vb = values[i] + slope * (b - grid[i]);
        integral += 0.5 * (va + vb) * (b - a);
    }
    return integral / (hi - lo);
}

double ratio_statistic(double gap, double scale) {
    if (gap == 0.0) return 0.0;
    if (scale == 0.0) return std::numeric_limits<double>::infinity();
    return gap / scale;
}

VerifyCheck make_check(std::string name, double analytic_value, double estimate, double statistic, double threshold) {
    return {std::move(name), analytic_value, estimate, statistic, threshold, statistic <= threshold};
}

VerificationReport build_report(const RunSpec& spec, const Analytic& exact, const McEstimate& est,
                                const std::vector<double>& psi_at_cgf, const RunOptions& options) {
    VerificationReport report;
    const auto& sol = exact.solution;

    const double alpha = sol.alpha + options.inject_alpha_offset;
    report.checks.push_back(make_check("alpha_z", alpha, est.alpha.value,
                                       ratio_statistic(std::abs(est.alpha.value - alpha), est.alpha.se), 3.0));

    report.checks.push_back(make_check("eta2_relative_error", sol.eta2, est.eta2.value,
                                       ratio_statistic(std::abs(est.eta2.value - sol.eta2), sol.eta2), 0.15));

    if (est.eta2_batch_means) {
        const auto& bm = *est.eta2_batch_means;
        const double combined = std::hypot(bm.se, est.eta2.se);
        report.checks.push_back(make_check("eta2_batch_means_z", est.eta2.value, bm.value,
                                           ratio_statistic(std::abs(bm.value - est.eta2.value), combined), 3.0));
    }

    const auto& hist = est.occupation;
    double sup_gap = 0.0;
    for (std::size_t k = 0; k < hist.density.size(); ++k) {
        const double p = bin_average(sol.grid, sol.density, hist.edges[k], hist.edges[k + 1]);
        sup_gap = std::max(sup_gap, std::abs(hist.density[k] - p));
    }
    report.checks.push_back(make_check("occupation_sup_gap", 0.0, sup_gap, sup_gap, 0.05));

    for (std::size_t i = 0; i < est.cgf.size(); ++i) {
        const auto& point = est.cgf[i];
        const double gap = std::abs(point.value - psi_at_cgf[i]);
        char name[64];
        std::snprintf(name, sizeof name, "cgf_gap[theta=%g]", point.theta);
        report.checks.push_back(make_check(name, psi_at_cgf[i], point.value, gap, 0.02));
    }
    (void)spec;
    return report;
}

json to_json(const Estimate& e) { return {{"value", e.value}, {"se", e.se}}; }

json to_json(const McEstimate& est) {
    json cgf = json::array();
    for (const auto& p : est.cgf) {
        cgf.push_back({{"theta", p.theta},
                       {"value", p.value},
                       {"se", p.se},
                       {"top_weight_fraction", p.top_weight_fraction},
                       {"unreliable", p.unreliable}});
    }
    json doc = {{"alpha", to_json(est.alpha)},
                {"eta2", to_json(est.eta2)},
                {"occupation", {{"edges", est.occupation.edges}, {"density", est.occupation.density}}},
                {"cgf", cgf},
                {"diagnostics",
                 {{"dt", est.diagnostics.dt},
                  {"horizon", est.diagnostics.horizon},
                  {"replications", est.diagnostics.replications},
                  {"seed", est.diagnostics.seed},
                  {"scheme", std::string(to_string(est.diagnostics.scheme))}}}};
    if (est.eta2_batch_means) doc["eta2_batch_means"] = to_json(*est.eta2_batch_means);
    return doc;
}

std::optional<json> closed_form_block(const RunSpec& spec, const PoissonSolution& sol) {
    const auto& m = spec.model;
    const auto& fn = spec.functional;
    const auto* sq = std::get_if<ConstantSq>(&m.sigma2);
    if (!m.is_two_barrier() || !sq || !std::holds_alternative<ZeroCost>(fn.f)) return std::nullopt;
    const double b = m.b_barrier();
    if (const auto* drift = std::get_if<ConstantDrift>(&m.mu)) {
        const auto cf = closed_form_rbm(drift->mu, sq->sigma2, b, fn.r0, fn.rb, spec.solver.region_eps);
        const double gap = std::abs(cf.eta2 - sol.eta2);
        return json{{"family", "reflected_brownian_motion"},
                    {"alpha", cf.alpha},
                    {"eta2_display", cf.eta2},
                    {"drift_free", cf.drift_free},
                    {"eta2_display_gap", gap},
                    {"eta2_display_agrees", gap <= 1e-6 * std::max(1.0, sol.eta2)}};
    }
    if (const auto* ou = std::get_if<OuDrift>(&m.mu)) {
        const auto cf = closed_form_ou(ou->a, ou->c, sq->sigma2, b, fn.r0, fn.rb);
        return json{{"family", "reflected_ornstein_uhlenbeck"}, {"alpha", cf.alpha}};
    }
    return std::nullopt;
}

std::vector<double> psi_at(const RunSpec& spec) {
    std::vector<double> out;
    for (double theta : spec.cgf_thetas) {
        out.push_back(solve_principal(spec.model, spec.functional, theta, spec.solver).psi);
    }
    return out;
}

std::string format_csv(const Table& table) {
    std::string text;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) text += ',';
        text += table.columns[c];
    }
    text += '\n';
    const std::size_t rows = table.data.empty() ? 0 : table.data.front().size();
    char buf[40];
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < table.data.size(); ++c) {
            if (c) text += ',';
            std::snprintf(buf, sizeof buf, "%.17g", table.data[c][r]);
            text += buf;
        }
        text += '\n';
    }
    return text;
}

}  // namespace

bool VerificationReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.pass; });
}

json to_json(const VerificationReport& report) {
    json checks = json::array();
    for (const auto& c : report.checks) {
        checks.push_back({{"name", c.name},
                          {"analytic", c.analytic},
                          {"estimate", c.estimate},
                          {"statistic", c.statistic},
                          {"threshold", c.threshold},
                          {"pass", c.pass}});
    }
    return {{"pass", report.pass()}, {"checks", checks}};
}

VerificationReport verify(const RunSpec& spec, const RunOptions& options) {
    if (!spec.mc) throw ValidationError("verify needs an mc block");
    require_admissible(spec.model, spec.functional);
    const auto exact = analytic(spec);
    const auto psi = psi_at(spec);
    return build_report(spec, exact, monte_carlo(spec), psi, options);
}

ResultBundle run(const RunSpec& spec, const RunOptions& options) {
    check_run_spec(spec);
    check_config(spec.solver);
    require_admissible(spec.model, spec.functional);
    if (spec.mc) check_mc_config(spec.model, *spec.mc);

    const auto wants = [&](Output o) { return spec.outputs.contains(o); };
    ResultBundle bundle;
    auto& doc = bundle.document;
    doc["schema_version"] = kSchemaVersion;
    doc["spec"] = to_json(spec);

    std::optional<Analytic> exact;
    if (wants(Output::Alpha) || wants(Output::Eta2) || wants(Output::Density) || wants(Output::UPrime) ||
        wants(Output::Verify)) {
        exact = analytic(spec);
        const auto& sol = exact->solution;
        json poisson = {{"alpha", sol.alpha},
                        {"residuals",
                         {{"ode_sup", sol.residuals.ode_sup},
                          {"bc0", sol.residuals.bc0},
                          {"bcb", sol.residuals.bcb}}}};
        if (wants(Output::Eta2) || wants(Output::Verify)) poisson["eta2"] = sol.eta2;
        if (exact->x_max) poisson["x_max"] = *exact->x_max;
        doc["poisson"] = poisson;
        if (auto cf = closed_form_block(spec, sol)) doc["closed_form"] = *cf;
        if (wants(Output::Density)) bundle.tables.push_back({"density.csv", {"x", "value"}, {sol.grid, sol.density}});
        if (wants(Output::UPrime)) bundle.tables.push_back({"u_prime.csv", {"x", "value"}, {sol.grid, sol.u_prime}});
    }

    if (wants(Output::Psi) || wants(Output::Rate)) {
        const auto thetas = spec.theta_grid.value_or(default_theta_grid());
        const auto curve = psi_curve(spec.model, spec.functional, thetas, spec.solver);
        doc["psi"] = {{"thetas", curve.thetas},
                      {"psis", curve.psis},
                      {"alpha_check", curve.alpha_check},
                      {"convexity_violations", curve.convexity_violations}};
        bundle.tables.push_back({"psi.csv", {"theta", "psi"}, {curve.thetas, curve.psis}});
        if (wants(Output::Rate)) {
            const auto ys = spec.rate_points.value_or(default_rate_points(curve, 41));
            const auto rate = rate_function(curve, ys, spec.solver);
            std::vector<double> flags(rate.domain_flags.begin(), rate.domain_flags.end());
            doc["rate"] = {{"ys", rate.ys},
                           {"values", rate.values},
                           {"arg_thetas", rate.arg_thetas},
                           {"domain_flags", rate.domain_flags}};
            bundle.tables.push_back(
                {"rate.csv", {"y", "rate", "arg_theta", "domain_flag"}, {rate.ys, rate.values, rate.arg_thetas, flags}});
        }
    }

    if (wants(Output::Mc) || wants(Output::Verify)) {
        const auto est = monte_carlo(spec);
        doc["mc"] = to_json(est);
        const auto& edges = est.occupation.edges;
        bundle.tables.push_back({"occupation.csv",
                                 {"bin_lo", "bin_hi", "density"},
                                 {std::vector<double>(edges.begin(), edges.end() - 1),
                                  std::vector<double>(edges.begin() + 1, edges.end()), est.occupation.density}});
        if (wants(Output::Verify)) {
            const auto report = build_report(spec, *exact, est, psi_at(spec), options);
            doc["verify"] = to_json(report);
            bundle.verification_failed = !report.pass();
        }
    }

    json files = json::array();
    for (const auto& t : bundle.tables) files.push_back(t.file_name);
    doc["tables"] = files;
    return bundle;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
        if (!out.flush()) throw std::runtime_error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_bundle(const ResultBundle& bundle, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    for (const auto& t : bundle.tables) write_file_atomic(out_dir / t.file_name, format_csv(t));
    write_file_atomic(out_dir / "result.json", bundle.document.dump(2) + "\n");
}

}  // namespace refdiff::app
