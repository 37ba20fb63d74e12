#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ortho/bench.hpp"

namespace ortho {

// ---------------------------------------------------------------------------
// verify: the release-gate invariant suite
// ---------------------------------------------------------------------------

/// Fault hooks for negative-control runs of the verification suite.
enum class VerifyFault { None, SkipRetraction };

struct VerifyOptions {
    std::uint64_t seed = 42;
    VerifyFault fault = VerifyFault::None;
};

struct PropertyResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Runs every manifold/optimizer invariant and the gradient oracles; one
/// result per named property.
std::vector<PropertyResult> run_verification(const VerifyOptions& options);

// ---------------------------------------------------------------------------
// rayleigh: end-to-end manifold optimization on f(Theta) = -tr(Theta^T A Theta)
// ---------------------------------------------------------------------------

struct RayleighOptions {
    std::size_t n = 3;
    std::size_t p = 2;
    std::size_t steps = 10000;
    double gamma = 1e-2;
    ManifoldOptimizer optimizer = ManifoldOptimizer::Rsgd;
    std::uint64_t seed = 42;
    std::vector<double> diag;  // nonempty: A = diag(...), overrides n and seed-drawn A
    double target_tol = 1e-6;  // stop once |f - f*| falls below this
};

struct RayleighReport {
    double final_objective = 0.0;
    double optimal_objective = 0.0;  // -(sum of top-p eigenvalues), from the eigensolver
    double gap = 0.0;
    double drift = 0.0;
    std::size_t steps_run = 0;
    bool converged = false;
};

RayleighReport run_rayleigh(const RayleighOptions& options);

// ---------------------------------------------------------------------------
// decouple: the ablation experiment with file outputs
// ---------------------------------------------------------------------------

struct DecoupleOptions {
    SyntheticConfig cfg;
    std::vector<TrainingArm> arms = {TrainingArm::Omlp, TrainingArm::Penalty,
                                     TrainingArm::Unconstrained};
    std::string out_dir = "decouple_out";
    bool force = false;
};

struct ArmResult {
    TrainingArm arm = TrainingArm::Omlp;
    ExperimentReport report;
};

struct DecoupleResult {
    std::vector<ArmResult> arms;
    /// set when all three arms ran: omlp < penalty < unconstrained on
    /// off-diagonal energy
    bool ordering_checked = false;
    bool ordering_satisfied = false;
};

/// Trains every requested arm, writes report.json plus per-arm
/// cosine_sim.csv / loss_trace.csv / heat_vectors.csv under out_dir.
DecoupleResult run_decouple(const DecoupleOptions& options);

}  // namespace ortho
