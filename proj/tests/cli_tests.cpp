// Exit-code and file-output contract tests for the command-line tool.
//
// Usage: cli_tests <path-to-cli-binary> [scratch-dir]

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

#define REQUIRE_MSG(cond, msg)                                                     \
    do {                                                                           \
        if (!(cond)) {                                                             \
            std::cerr << "[FAIL] " << __FILE__ << ":" << __LINE__ << " " << (msg)  \
                      << "\n";                                                     \
            ++g_failures;                                                          \
        }                                                                          \
    } while (0)

struct RunOutcome {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string g_scratch;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunOutcome run(const std::string& command) {
    const std::string out_path = g_scratch + "/cmd.out";
    const std::string err_path = g_scratch + "/cmd.err";
    const int raw = std::system(
        (command + " > \"" + out_path + "\" 2> \"" + err_path + "\"").c_str());
    RunOutcome outcome;
    outcome.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    outcome.out = slurp(out_path);
    outcome.err = slurp(err_path);
    return outcome;
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: cli_tests <path-to-cli-binary> [scratch-dir]\n");
        return 2;
    }
    const std::string cli = std::string("\"") + argv[1] + "\"";
    g_scratch = argc > 2 ? argv[2] : (fs::temp_directory_path() / "ortho_cli_tests").string();
    fs::create_directories(g_scratch);

    // --- verify -----------------------------------------------------------
    {
        const RunOutcome ok = run(cli + " verify");
        REQUIRE_MSG(ok.exit_code == 0, "fresh verify should exit 0, got " +
                                           std::to_string(ok.exit_code) + "\n" + ok.err);
        REQUIRE_MSG(contains(ok.out, "theorem1_orthogonality"), "verify table lists properties");

        // a different seed draws different instances but the verdict holds
        const RunOutcome reseeded = run(cli + " verify --seed 777");
        REQUIRE_MSG(reseeded.exit_code == 0, "reseeded verify should exit 0");

        const RunOutcome faulty = run(cli + " verify --inject-fault retraction");
        REQUIRE_MSG(faulty.exit_code == 1, "faulted verify should exit 1, got " +
                                               std::to_string(faulty.exit_code));
        REQUIRE_MSG(contains(faulty.err, "theorem2_orthonormality"),
                    "faulted verify names theorem2_orthonormality on stderr");

        const RunOutcome bad_fault = run(cli + " verify --inject-fault warp");
        REQUIRE_MSG(bad_fault.exit_code == 2, "unknown fault should exit 2");
    }

    // --- rayleigh -----------------------------------------------------------
    {
        const RunOutcome fixed = run(cli + " rayleigh --diag 5,3,1 --p 2");
        REQUIRE_MSG(fixed.exit_code == 0, "rayleigh diag(5,3,1) p=2 should converge\n" +
                                              fixed.err);
        REQUIRE_MSG(contains(fixed.out, "\"converged\": true"), "rayleigh reports convergence");
        REQUIRE_MSG(contains(fixed.out, "\"optimal_objective\": -8"),
                    "optimum from the eigensolver is -8");

        // p = n: the objective is pinned at -trace(A), nothing to optimize
        const RunOutcome full = run(cli + " rayleigh --diag 5,3,1 --p 3");
        REQUIRE_MSG(full.exit_code == 0, "rayleigh p=n should exit 0");
        REQUIRE_MSG(contains(full.out, "\"steps_run\": 0"), "p=n converges at step 0");

        const RunOutcome random_a = run(cli + " rayleigh --n 6 --p 2 --seed 5 --steps 20000");
        REQUIRE_MSG(random_a.exit_code == 0, "random-A rayleigh should converge\n" +
                                                 random_a.err);

        const RunOutcome bad = run(cli + " rayleigh --diag 5,3,1 --p 9");
        REQUIRE_MSG(bad.exit_code == 2, "p > n should exit 2");
    }

    // --- decouple -----------------------------------------------------------
    {
        const std::string cfg_path = g_scratch + "/small.cfg";
        {
            std::ofstream cfg(cfg_path);
            cfg << "# small run for the exit-code contract\n"
                   "samples_per_domain = 64\n"
                   "epochs = 2\n"
                   "hold_epochs = 1\n"
                   "decay_epochs = 1\n";
        }
        const std::string out_dir = g_scratch + "/dec_out";
        fs::remove_all(out_dir);

        const RunOutcome first = run(cli + " decouple --config \"" + cfg_path +
                                     "\" --out \"" + out_dir + "\"");
        REQUIRE_MSG(first.exit_code == 0, "decouple should exit 0\n" + first.err);
        REQUIRE_MSG(fs::exists(out_dir + "/report.json"), "report.json written");
        for (const char* arm : {"omlp", "penalty", "unconstrained"}) {
            REQUIRE_MSG(fs::exists(out_dir + "/" + arm + "/cosine_sim.csv"),
                        std::string(arm) + "/cosine_sim.csv written");
            REQUIRE_MSG(fs::exists(out_dir + "/" + arm + "/loss_trace.csv"),
                        std::string(arm) + "/loss_trace.csv written");
            REQUIRE_MSG(fs::exists(out_dir + "/" + arm + "/heat_vectors.csv"),
                        std::string(arm) + "/heat_vectors.csv written");
        }
        REQUIRE_MSG(contains(first.out, "arm=omlp"), "per-arm summary printed");
        REQUIRE_MSG(contains(first.out, "energy ordering"), "ordering line printed");

        // collision without --force
        const RunOutcome collide = run(cli + " decouple --config \"" + cfg_path +
                                       "\" --out \"" + out_dir + "\"");
        REQUIRE_MSG(collide.exit_code == 2, "existing out dir without --force should exit 2");
        REQUIRE_MSG(contains(collide.err, "--force"), "collision message mentions --force");

        // --force overwrites
        const RunOutcome forced = run(cli + " decouple --config \"" + cfg_path +
                                      "\" --out \"" + out_dir + "\" --force");
        REQUIRE_MSG(forced.exit_code == 0, "decouple --force should exit 0");

        // single arm
        const std::string single_dir = g_scratch + "/dec_single";
        fs::remove_all(single_dir);
        const RunOutcome single = run(cli + " decouple --config \"" + cfg_path +
                                      "\" --out \"" + single_dir + "\" --arms omlp");
        REQUIRE_MSG(single.exit_code == 0, "single-arm decouple should exit 0");
        REQUIRE_MSG(contains(single.out, "arm=omlp"), "single arm summary printed");
        REQUIRE_MSG(!contains(single.out, "arm=penalty"), "unselected arms not run");
        REQUIRE_MSG(!fs::exists(single_dir + "/penalty"), "unselected arm directory absent");

        // unknown config key is named
        const std::string bad_cfg = g_scratch + "/bad.cfg";
        {
            std::ofstream cfg(bad_cfg);
            cfg << "epochz = 3\n";
        }
        const std::string bad_dir = g_scratch + "/dec_bad";
        fs::remove_all(bad_dir);
        const RunOutcome bad = run(cli + " decouple --config \"" + bad_cfg + "\" --out \"" +
                                   bad_dir + "\"");
        REQUIRE_MSG(bad.exit_code == 2, "unknown config key should exit 2");
        REQUIRE_MSG(contains(bad.err, "epochz"), "unknown key named on stderr");

        // malformed flag value
        const RunOutcome bad_arm = run(cli + " decouple --config \"" + cfg_path +
                                       "\" --out \"" + g_scratch +
                                       "/dec_badarm\" --arms baseline");
        REQUIRE_MSG(bad_arm.exit_code == 2, "unknown arm should exit 2");
    }

    // --- usage ----------------------------------------------------------------
    {
        const RunOutcome none = run(cli);
        REQUIRE_MSG(none.exit_code == 2, "missing subcommand should exit 2");
        const RunOutcome help = run(cli + " --help");
        REQUIRE_MSG(help.exit_code == 0, "--help exits 0");
        const RunOutcome dec_help = run(cli + " decouple --help");
        REQUIRE_MSG(dec_help.exit_code == 0, "decouple --help exits 0");
        REQUIRE_MSG(contains(dec_help.out, "samples_per_domain"),
                    "decouple --help documents the config keys");
    }

    if (g_failures == 0) {
        std::printf("cli contract tests passed\n");
        return 0;
    }
    std::printf("%d cli contract check(s) failed\n", g_failures);
    return 1;
}
