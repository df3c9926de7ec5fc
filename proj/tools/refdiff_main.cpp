#include "refdiff/app/pipeline.hpp"
#include "refdiff/app/presets.hpp"
#include "refdiff/errors.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <set>
#include <string>

namespace {

using namespace refdiff;
using namespace refdiff::app;

enum ExitCode { kOk = 0, kUsage = 1, kValidation = 2, kSolver = 3, kVerification = 4 };

struct CommonArgs {
    std::string spec_path;
    std::string preset_name;
    std::string out_dir = "refdiff-out";
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::optional<double> mc_dt;
    std::optional<double> mc_horizon;
    std::optional<std::int64_t> mc_replications;
    double inject_alpha_offset = 0.0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    auto* spec = cmd->add_option("--spec", args.spec_path, "Run spec (JSON)")->check(CLI::ExistingFile);
    auto* preset = cmd->add_option("--preset", args.preset_name, "Built-in spec: rbm-zero-drift, rbm-drift, rou, zhang-case");
    spec->excludes(preset);
    cmd->add_option("--out", args.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--seed", args.seed, "Monte Carlo seed (overrides the spec)");
    cmd->add_option("--threads", args.threads, "OpenMP threads (results do not depend on it)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--mc-dt", args.mc_dt, "Override mc.dt");
    cmd->add_option("--mc-horizon", args.mc_horizon, "Override mc.horizon_t");
    cmd->add_option("--mc-replications", args.mc_replications, "Override mc.replications");
    cmd->add_option("--inject-alpha-offset", args.inject_alpha_offset)->group("");
}

RunSpec resolve_spec(const CommonArgs& args) {
    if (args.spec_path.empty() && args.preset_name.empty()) {
        throw CLI::ValidationError("one of --spec or --preset is required");
    }
    RunSpec spec = args.spec_path.empty() ? preset(args.preset_name) : load_run_spec(args.spec_path);
    if (args.seed || args.mc_dt || args.mc_horizon || args.mc_replications) {
        if (!spec.mc) spec.mc = McConfig{};
        if (args.seed) spec.mc->seed = *args.seed;
        if (args.mc_dt) spec.mc->dt = *args.mc_dt;
        if (args.mc_horizon) spec.mc->horizon_t = *args.mc_horizon;
        if (args.mc_replications) spec.mc->replications = *args.mc_replications;
    }
    return spec;
}

void print_summary(const ResultBundle& bundle, const std::string& out_dir) {
    const auto& doc = bundle.document;
    if (doc.contains("poisson")) {
        const auto& p = doc["poisson"];
        std::printf("alpha = %.12g\n", p["alpha"].get<double>());
        if (p.contains("eta2")) std::printf("eta2  = %.12g\n", p["eta2"].get<double>());
    }
    if (doc.contains("psi")) {
        std::printf("psi: %zu points, convexity violations %d\n", doc["psi"]["thetas"].size(),
                    doc["psi"]["convexity_violations"].get<int>());
    }
    if (doc.contains("mc")) {
        const auto& m = doc["mc"];
        std::printf("mc alpha = %.6g +- %.2g, eta2 = %.6g +- %.2g\n", m["alpha"]["value"].get<double>(),
                    m["alpha"]["se"].get<double>(), m["eta2"]["value"].get<double>(), m["eta2"]["se"].get<double>());
    }
    if (doc.contains("verify")) {
        for (const auto& c : doc["verify"]["checks"]) {
            const double stat = c["statistic"].is_number() ? c["statistic"].get<double>() : INFINITY;
            std::printf("%-4s %-24s %.4g (limit %.4g)\n", c["pass"].get<bool>() ? "PASS" : "FAIL",
                        c["name"].get<std::string>().c_str(), stat, c["threshold"].get<double>());
        }
    }
    std::printf("wrote %s/result.json\n", out_dir.c_str());
}

int execute(const CommonArgs& args, std::optional<std::set<Output>> outputs) {
    auto spec = resolve_spec(args);
    if (outputs) spec.outputs = *outputs;
    if (spec.outputs.empty()) throw ValidationError("spec requests no outputs");
    if (args.threads > 0) omp_set_num_threads(args.threads);

    const auto bundle = run(spec, RunOptions{args.inject_alpha_offset});
    write_bundle(bundle, args.out_dir);
    print_summary(bundle, args.out_dir);
    return bundle.verification_failed ? kVerification : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Limit constants for additive functionals of reflecting diffusions"};
    app.require_subcommand(1);

    struct Command {
        const char* name;
        const char* help;
        std::optional<std::set<Output>> outputs;
    };
    const Command commands[] = {
        {"analyze", "alpha, eta2, stationary density and u'",
         std::set<Output>{Output::Alpha, Output::Eta2, Output::Density, Output::UPrime}},
        {"psi", "scaled cumulant generating function on a theta grid", std::set<Output>{Output::Psi}},
        {"rate", "large-deviations rate function", std::set<Output>{Output::Psi, Output::Rate}},
        {"simulate", "Monte Carlo estimates", std::set<Output>{Output::Mc}},
        {"verify", "analytic values against Monte Carlo", std::set<Output>{Output::Verify}},
        {"run", "outputs listed in the spec", std::nullopt},
    };

    CommonArgs args;
    std::optional<std::set<Output>> chosen;
    for (const auto& c : commands) {
        auto* cmd = app.add_subcommand(c.name, c.help);
        add_common(cmd, args);
        cmd->callback([&chosen, &c] { chosen = c.outputs; });
    }
    app.add_subcommand("presets", "list built-in specs")->callback([] {
        for (const auto& name : preset_names()) std::cout << name << '\n';
        std::exit(kOk);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        return execute(args, chosen);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kSolver;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kSolver;
    }
}
