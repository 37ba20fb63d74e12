#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ortho/config.hpp"
#include "ortho/runner.hpp"

namespace {

using namespace ortho;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

int cmd_verify(std::uint64_t seed, const std::string& fault_name) {
    VerifyOptions options;
    options.seed = seed;
    if (fault_name == "retraction") {
        options.fault = VerifyFault::SkipRetraction;
    } else if (!fault_name.empty()) {
        std::cerr << "unknown fault '" << fault_name << "'\n";
        return kExitUsage;
    }

    const std::vector<PropertyResult> results = run_verification(options);
    bool all_passed = true;
    std::printf("%-28s %-6s %s\n", "property", "status", "detail");
    for (const PropertyResult& r : results) {
        std::printf("%-28s %-6s %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL",
                    r.detail.c_str());
        if (!r.passed) {
            all_passed = false;
            std::cerr << "verification failed: " << r.name << "\n";
        }
    }
    return all_passed ? kExitOk : kExitVerifyFailure;
}

std::vector<double> parse_diag(const std::string& text) {
    std::vector<double> out;
    if (text.empty()) return out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw ConfigError("bad --diag entry '" + cell + "'");
        }
    }
    return out;
}

int cmd_rayleigh(const RayleighOptions& options, const std::string& out_path) {
    const RayleighReport report = run_rayleigh(options);
    std::ostringstream body;
    body << "{\n"
         << "  \"converged\": " << (report.converged ? "true" : "false") << ",\n"
         << "  \"drift\": " << format_full(report.drift) << ",\n"
         << "  \"final_objective\": " << format_full(report.final_objective) << ",\n"
         << "  \"gap\": " << format_full(report.gap) << ",\n"
         << "  \"optimal_objective\": " << format_full(report.optimal_objective) << ",\n"
         << "  \"steps_run\": " << report.steps_run << "\n"
         << "}\n";
    if (out_path.empty()) {
        std::cout << body.str();
    } else {
        std::ofstream out(out_path);
        if (!out) throw IoError("cannot open " + out_path);
        out << body.str();
        std::cout << "rayleigh report written to " << out_path << "\n";
    }
    if (!report.converged) {
        std::cerr << "rayleigh did not reach the optimum: gap " << report.gap << " after "
                  << report.steps_run << " steps\n";
        return kExitDiverged;
    }
    return kExitOk;
}

int cmd_decouple(const std::string& config_path, const std::string& out_dir, bool force,
                 const std::string& arms_csv, const std::string& seed_override,
                 const std::string& optimizer_override) {
    RunConfig raw = config_path.empty() ? RunConfig() : RunConfig::from_file(config_path);
    if (!seed_override.empty()) raw.set("seed", seed_override);
    if (!optimizer_override.empty()) raw.set("optimizer", optimizer_override);
    if (!arms_csv.empty()) raw.set("arms", arms_csv);

    DecoupleOptions options;
    options.cfg = synthetic_config_from(raw);
    options.out_dir = out_dir;
    options.force = force;

    const std::string arms_value = raw.get_string("arms", "omlp,penalty,unconstrained");
    options.arms.clear();
    std::stringstream ss(arms_value);
    std::string arm;
    while (std::getline(ss, arm, ',')) {
        if (!arm.empty()) options.arms.push_back(parse_arm(arm));
    }

    const std::vector<std::string> unknown = raw.unconsumed_keys();
    if (!unknown.empty()) {
        std::cerr << "unknown config key: " << unknown.front() << "\n";
        return kExitUsage;
    }

    const DecoupleResult result = run_decouple(options);
    for (const ArmResult& r : result.arms) {
        std::printf("arm=%-14s offdiag_energy=%.6f dwfc_accuracy=%.4f heat_mass_ratio=%.4f\n",
                    arm_name(r.arm).c_str(), r.report.offdiag_energy, r.report.dwfc_accuracy,
                    r.report.heat_mass_ratio);
    }
    if (result.ordering_checked) {
        std::printf("energy ordering omlp < penalty < unconstrained: %s\n",
                    result.ordering_satisfied ? "satisfied" : "violated");
    }
    std::cout << "reports written under " << out_dir << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stiefel-manifold optimization, orthogonally constrained projection heads,\n"
                 "weighted patch contrastive losses, and the synthetic feature-decoupling\n"
                 "benchmark built on them."};
    app.require_subcommand(1);

    // verify
    auto* verify = app.add_subcommand("verify", "run the invariant suite (release gate)");
    std::uint64_t verify_seed = 42;
    std::string fault;
    verify->add_option("--seed", verify_seed, "seed for the random instances");
    verify->add_option("--inject-fault", fault,
                       "negative control: break a named stage (retraction)");

    // rayleigh
    auto* rayleigh = app.add_subcommand(
        "rayleigh", "minimize -tr(Theta^T A Theta) over the Stiefel manifold");
    RayleighOptions ropts;
    std::string diag_text;
    std::string rayleigh_optimizer = "rsgd";
    std::string rayleigh_out;
    rayleigh->add_option("--n", ropts.n, "ambient dimension (ignored with --diag)");
    rayleigh->add_option("--p", ropts.p, "number of orthonormal columns");
    rayleigh->add_option("--steps", ropts.steps, "step budget");
    rayleigh->add_option("--gamma", ropts.gamma, "step size");
    rayleigh->add_option("--optimizer", rayleigh_optimizer, "rsgd | radam");
    rayleigh->add_option("--seed", ropts.seed, "seed for A and the start point");
    rayleigh->add_option("--diag", diag_text, "comma list: use A = diag(...) instead of random");
    rayleigh->add_option("--tol", ropts.target_tol, "objective gap declaring convergence");
    rayleigh->add_option("--out", rayleigh_out, "write the JSON report here instead of stdout");

    // decouple
    auto* decouple =
        app.add_subcommand("decouple", "run the feature-decoupling ablation experiment");
    std::string config_path;
    std::string out_dir = "decouple_out";
    std::string arms_csv;
    std::string seed_override;
    std::string optimizer_override;
    bool force = false;
    decouple->add_option("--config", config_path, "key=value config file");
    decouple->add_option("--out", out_dir, "output directory");
    decouple->add_flag("--force", force, "overwrite an existing output directory");
    decouple->add_option("--arms", arms_csv, "comma list: omlp, penalty, unconstrained");
    decouple->add_option("--seed", seed_override, "override the config seed");
    decouple->add_option("--optimizer", optimizer_override, "override: rsgd | radam");
    {
        std::string footer = "Config file keys:\n";
        for (const auto& [key, help] : decouple_config_keys()) {
            footer += "  " + key + ": " + help + "\n";
        }
        decouple->footer(footer);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (verify->parsed()) return cmd_verify(verify_seed, fault);
        if (rayleigh->parsed()) {
            ropts.optimizer = parse_optimizer(rayleigh_optimizer);
            ropts.diag = parse_diag(diag_text);
            return cmd_rayleigh(ropts, rayleigh_out);
        }
        if (decouple->parsed()) {
            return cmd_decouple(config_path, out_dir, force, arms_csv, seed_override,
                                optimizer_override);
        }
    } catch (const TrainingDivergedError& e) {
        std::cerr << "training diverged: " << e.what();
        if (!e.checkpoint_path.empty()) {
            std::cerr << " (last-good checkpoint: " << e.checkpoint_path << ")";
        }
        std::cerr << "\n";
        return kExitDiverged;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
