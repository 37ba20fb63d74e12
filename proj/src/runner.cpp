#include "ortho/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ortho/dwfc.hpp"
#include "ortho/omlp.hpp"
#include "ortho/wpnce.hpp"

namespace ortho {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// verification properties
// ---------------------------------------------------------------------------

struct PropertyContext {
    VerifyOptions options;
    std::vector<PropertyResult> results;

    void record(const std::string& name, bool passed, const std::string& detail) {
        results.push_back({name, passed, detail});
    }
};

void verify_theorem1(PropertyContext& ctx) {
    Rng rng = Rng(ctx.options.seed).derive(101);
    double worst_orth = 0.0;
    double worst_tan = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.uniform_below(31);
        const std::size_t p = 1 + rng.uniform_below(n);
        const StiefelPoint theta = random_point(n, p, rng);
        const Matrix g = gaussian_matrix(n, p, rng);
        const TangentVector grad = project_to_tangent(theta, g);

        const double gnorm = frob_norm(g);
        const double orth = std::abs(frob_inner(sub(grad.z(), g), grad.z())) /
                            (1e-8 * (1.0 + gnorm * gnorm));
        const Matrix tg = matmul(transpose(theta.theta()), grad.z());
        const double tan = frob_norm(add(tg, transpose(tg))) / 1e-10;
        worst_orth = std::max(worst_orth, orth);
        worst_tan = std::max(worst_tan, tan);
    }
    std::ostringstream orth_detail;
    orth_detail << "worst residual at " << worst_orth << "x of the bound over 1000 cases";
    ctx.record("theorem1_orthogonality", worst_orth < 1.0, orth_detail.str());
    std::ostringstream tan_detail;
    tan_detail << "worst tangency residual at " << worst_tan << "x of 1e-10";
    ctx.record("theorem1_tangency", worst_tan < 1.0, tan_detail.str());
}

void verify_projection_structure(PropertyContext& ctx) {
    Rng rng = Rng(ctx.options.seed).derive(102);
    double worst_idem = 0.0;
    double worst_lin = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.uniform_below(12);
        const std::size_t p = 1 + rng.uniform_below(n);
        const StiefelPoint theta = random_point(n, p, rng);
        const Matrix g1 = gaussian_matrix(n, p, rng);
        const Matrix g2 = gaussian_matrix(n, p, rng);

        const Matrix once = project_to_tangent(theta, g1).z();
        const Matrix twice = project_to_tangent(theta, once).z();
        worst_idem = std::max(worst_idem, frob_norm(sub(once, twice)));

        const Matrix lhs = project_to_tangent(theta, add(scale(g1, 1.5), scale(g2, -2.0))).z();
        const Matrix rhs = add(scale(project_to_tangent(theta, g1).z(), 1.5),
                               scale(project_to_tangent(theta, g2).z(), -2.0));
        worst_lin = std::max(worst_lin, frob_norm(sub(lhs, rhs)));
    }
    ctx.record("projection_idempotence", worst_idem < 1e-12,
               "worst |P(P(G)) - P(G)| = " + std::to_string(worst_idem));
    ctx.record("projection_linearity", worst_lin < 1e-12,
               "worst linearity residual = " + std::to_string(worst_lin));
}

void verify_theorem2(PropertyContext& ctx) {
    Rng rng = Rng(ctx.options.seed).derive(103);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.uniform_below(15);
        const std::size_t p = 1 + rng.uniform_below(n);
        const StiefelPoint theta = random_point(n, p, rng);
        const TangentVector xi = random_tangent(theta, rng);

        Matrix mapped;
        if (ctx.options.fault == VerifyFault::SkipRetraction) {
            mapped = add(theta.theta(), xi.z());  // fault: no inverse square root factor
        } else {
            mapped = retract(theta, xi).theta();
        }
        const Matrix gram = matmul(transpose(mapped), mapped);
        worst = std::max(worst, frob_norm(sub(gram, Matrix::identity(p))));
    }
    std::ostringstream detail;
    detail << "worst ||R^T R - I||_F = " << worst << " over 1000 tangents";
    ctx.record("theorem2_orthonormality", worst < 1e-10, detail.str());
}

void verify_retraction_first_order(PropertyContext& ctx) {
    Rng rng = Rng(ctx.options.seed).derive(104);
    const StiefelPoint theta = random_point(12, 5, rng);
    const TangentVector xi = random_tangent(theta, rng);
    const double ts[3] = {1e-2, 1e-3, 1e-4};
    double ratios[3];
    for (int i = 0; i < 3; ++i) {
        const TangentVector step = TangentVector::make(theta, scale(xi.z(), ts[i]));
        const Matrix linear = add(theta.theta(), step.z());
        ratios[i] = frob_norm(sub(retract(theta, step).theta(), linear)) / (ts[i] * ts[i]);
    }
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) ok = ok && ratios[i] < 4.0 * ratios[j];
    }
    std::ostringstream detail;
    detail << "second-order ratios " << ratios[0] << ", " << ratios[1] << ", " << ratios[2];
    ctx.record("retraction_first_order", ok, detail.str());
}

void verify_optimizer_constraint(PropertyContext& ctx) {
    Rng rng = Rng(ctx.options.seed).derive(105);
    ParamSlot sgd = ParamSlot::stiefel(random_point(10, 4, rng));
    ParamSlot adam = ParamSlot::stiefel(random_point(10, 4, rng));
    for (int i = 0; i < 300; ++i) {
        sgd = rsgd_step(sgd, gaussian_matrix(10, 4, rng), 1e-2);
        adam = riemannian_adam_step(adam, gaussian_matrix(10, 4, rng), 1e-2);
    }
    const double sgd_drift = sgd.as_stiefel().drift();
    const double adam_drift = adam.as_stiefel().drift();
    ctx.record("rsgd_orthonormality", sgd_drift < 1e-8,
               "drift after 300 steps = " + std::to_string(sgd_drift));
    ctx.record("radam_orthonormality", adam_drift < 1e-8,
               "drift after 300 steps = " + std::to_string(adam_drift));
}

void verify_rayleigh_descent(PropertyContext& ctx) {
    Rng rng = Rng(ctx.options.seed).derive(106);
    bool ok = true;
    for (int trial = 0; trial < 20 && ok; ++trial) {
        const std::size_t n = 3 + rng.uniform_below(5);
        const std::size_t p = 1 + rng.uniform_below(n - 1);
        Matrix m = gaussian_matrix(n, n, rng);
        const Matrix a = scale(add(m, transpose(m)), 0.5);
        ParamSlot slot = ParamSlot::stiefel(random_point(n, p, rng));
        const Matrix grad = scale(matmul(a, slot.value), -2.0);
        if (frob_norm(project_to_tangent(slot.as_stiefel(), grad).z()) < 1e-8) continue;
        const double before = -trace(matmul(transpose(slot.value), matmul(a, slot.value)));
        const ParamSlot after = rsgd_step(slot, grad, 1e-3);
        const double f_after = -trace(matmul(transpose(after.value), matmul(a, after.value)));
        ok = f_after < before;
    }
    ctx.record("rayleigh_descent", ok,
               "strict decrease from non-critical points at gamma = 1e-3");
}

bool fd_close(double analytic, double fd, double rel_tol, double abs_floor) {
    const double diff = std::abs(analytic - fd);
    if (diff <= abs_floor) return true;
    return diff <= rel_tol * std::max(std::abs(analytic), std::abs(fd));
}

void verify_omlp_gradients(PropertyContext& ctx) {
    Rng rng = Rng(ctx.options.seed).derive(107);
    bool ok = true;
    Omlp net = Omlp::create({8, 4, 4}, rng);
    Matrix input = gaussian_matrix(3, 8, rng);
    const Matrix probe = gaussian_matrix(3, 4, rng);
    const auto [out, tape] = net.forward(input);
    const MlpGradients grads = net.backward(tape, probe);
    const double h = 1e-6;
    for (std::size_t l = 0; l < net.layer_count() && ok; ++l) {
        Matrix& w = net.layer(l).weight.value;
        for (int k = 0; k < 10 && ok; ++k) {
            const std::size_t idx = rng.uniform_below(w.size());
            const double saved = w.data()[idx];
            w.data()[idx] = saved + h;
            const double up = frob_inner(net.forward(input).first, probe);
            w.data()[idx] = saved - h;
            const double down = frob_inner(net.forward(input).first, probe);
            w.data()[idx] = saved;
            ok = fd_close(grads.weight_grads[l].data()[idx], (up - down) / (2 * h), 1e-5, 1e-8);
        }
    }
    ctx.record("omlp_gradient_check", ok, "sampled coordinates vs central differences");
}

void verify_dwfc_gradients(PropertyContext& ctx) {
    Rng rng = Rng(ctx.options.seed).derive(108);
    DwfcNet net = DwfcNet::create(5, 4, rng);
    Matrix feat(5, 4);
    for (double& v : feat.data()) {
        const double x = rng.normal();
        v = x + (x >= 0 ? 0.5 : -0.5);  // keep clear of the LeakyReLU kink
    }
    const ChannelFeature cf = ChannelFeature::make(feat);
    const DwfcOutput out = net.forward(cf);
    const DwfcGradients grads = net.backward(out.tape, 0.9, -0.4);
    const double h = 1e-6;
    bool ok = true;
    auto probe = [&]() {
        const DwfcOutput o = net.forward(cf);
        return 0.9 * o.logit_h - 0.4 * o.logit_c;
    };
    for (std::size_t b = 0; b < DwfcNet::kBlocks && ok; ++b) {
        Matrix& w = net.block(b).weight.value;
        for (int k = 0; k < 8 && ok; ++k) {
            const std::size_t idx = rng.uniform_below(w.size());
            const double saved = w.data()[idx];
            w.data()[idx] = saved + h;
            const double up = probe();
            w.data()[idx] = saved - h;
            const double down = probe();
            w.data()[idx] = saved;
            ok = fd_close(grads.block_weight_grads[b].data()[idx], (up - down) / (2 * h), 1e-5,
                          1e-8);
        }
    }
    ctx.record("dwfc_gradient_check", ok, "sampled coordinates vs central differences");
}

void verify_wpnce_gradients(PropertyContext& ctx) {
    Rng rng = Rng(ctx.options.seed).derive(109);
    auto unit = [&rng](std::size_t dim) {
        std::vector<double> v(dim);
        double norm = 0.0;
        for (double& x : v) {
            x = rng.normal();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
        return v;
    };
    const std::size_t dim = 6;
    std::vector<std::vector<double>> clears = {unit(dim), unit(dim)};
    std::vector<std::vector<double>> negs = {unit(dim), unit(dim), unit(dim)};
    EmbeddingBatch batch = EmbeddingBatch::make(unit(dim), unit(dim), clears, negs);
    const WeightPair weights = WeightPair::uniform(dim);
    const WpnceGradients grads = wpnce_gradients(batch, weights);
    const double h = 1e-6;
    bool ok = true;
    for (std::size_t d = 0; d < dim && ok; ++d) {
        const double saved = batch.query[d];
        batch.query[d] = saved + h;
        const double up = wpnce_loss(
            EmbeddingBatch::make_unchecked(batch.query, batch.key_pos_hazy, batch.keys_clear,
                                           batch.keys_neg_hazy),
            weights);
        batch.query[d] = saved - h;
        const double down = wpnce_loss(
            EmbeddingBatch::make_unchecked(batch.query, batch.key_pos_hazy, batch.keys_clear,
                                           batch.keys_neg_hazy),
            weights);
        batch.query[d] = saved;
        ok = fd_close(grads.query[d], (up - down) / (2 * h), 1e-6, 1e-8);
    }
    ctx.record("wpnce_gradient_check", ok, "query gradient vs central differences");
}

void verify_schedule(PropertyContext& ctx) {
    const Schedule s;
    bool ok = lr_at_epoch(s, 0) == s.base_lr && lr_at_epoch(s, 300) == 0.5 * s.base_lr &&
              lr_at_epoch(s, s.hold_epochs + s.decay_epochs) == 0.0;
    for (std::size_t e = 1; e < 450; ++e) {
        ok = ok && lr_at_epoch(s, e) <= lr_at_epoch(s, e - 1) && lr_at_epoch(s, e) >= 0.0;
    }
    ctx.record("schedule_shape", ok, "hold, midpoint, terminal zero, monotone");
}

// ---------------------------------------------------------------------------
// decouple output files
// ---------------------------------------------------------------------------

void write_loss_trace_csv(const std::string& path, const std::vector<LossTracePoint>& trace) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out << "step,wpnce,ce\n";
    for (const LossTracePoint& point : trace) {
        out << point.step << ',' << format_full(point.wpnce) << ',' << format_full(point.ce)
            << '\n';
    }
}

void write_heat_vectors(const std::string& path, const TrainedNets& nets,
                        const SyntheticDataset& data) {
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    char id[32];
    for (std::size_t i = 0; i < data.hazy.size(); ++i) {
        const DwfcOutput out = nets.classifier.forward(data.hazy[i]);
        std::snprintf(id, sizeof(id), "h%04zu", i);
        rows.emplace_back(id, heat_vectors(nets.classifier, out.x).first);
    }
    for (std::size_t i = 0; i < data.clear.size(); ++i) {
        const DwfcOutput out = nets.classifier.forward(data.clear[i]);
        std::snprintf(id, sizeof(id), "c%04zu", i);
        rows.emplace_back(id, heat_vectors(nets.classifier, out.x).second);
    }
    write_heat_vectors_csv(path, rows);
}

json config_to_json(const SyntheticConfig& cfg) {
    json j;
    j["channels"] = cfg.channels;
    j["positions"] = cfg.positions;
    j["related_channels"] = cfg.related_channels;
    j["samples_per_domain"] = cfg.samples_per_domain;
    j["mixing_strength"] = cfg.mixing_strength;
    j["noise_sigma"] = cfg.noise_sigma;
    j["seed"] = cfg.seed;
    j["epochs"] = cfg.epochs;
    j["optimizer"] = cfg.optimizer == ManifoldOptimizer::Rsgd ? "rsgd" : "radam";
    j["base_lr"] = cfg.schedule.base_lr;
    j["hold_epochs"] = cfg.schedule.hold_epochs;
    j["decay_epochs"] = cfg.schedule.decay_epochs;
    j["embed_layers"] = cfg.embed_layers;
    j["joint_updates"] = cfg.joint_updates;
    j["detach_weights"] = cfg.detach_weights;
    j["penalty_lambda"] = cfg.penalty_lambda;
    return j;
}

}  // namespace

std::vector<PropertyResult> run_verification(const VerifyOptions& options) {
    PropertyContext ctx{options, {}};
    verify_theorem1(ctx);
    verify_projection_structure(ctx);
    verify_theorem2(ctx);
    verify_retraction_first_order(ctx);
    verify_optimizer_constraint(ctx);
    verify_rayleigh_descent(ctx);
    verify_omlp_gradients(ctx);
    verify_dwfc_gradients(ctx);
    verify_wpnce_gradients(ctx);
    verify_schedule(ctx);
    return std::move(ctx.results);
}

RayleighReport run_rayleigh(const RayleighOptions& options) {
    Matrix a;
    std::size_t n = options.n;
    if (!options.diag.empty()) {
        a = Matrix::diagonal(options.diag);
        n = options.diag.size();
    } else {
        Rng a_rng = Rng(options.seed).derive(1);
        const Matrix m = gaussian_matrix(n, n, a_rng);
        a = scale(add(m, transpose(m)), 0.5);
    }
    if (options.p == 0 || options.p > n) {
        throw ConfigError("rayleigh: need 1 <= p <= n");
    }
    if (options.gamma <= 0.0) throw ConfigError("rayleigh: gamma must be > 0");

    // optimum from the eigensolver: -(sum of the top-p eigenvalues)
    const EigResult eig = sym_eig(a);
    double top_sum = 0.0;
    for (std::size_t i = 0; i < options.p; ++i) top_sum += eig.values[n - 1 - i];

    Rng start_rng = Rng(options.seed).derive(2);
    ParamSlot slot = ParamSlot::stiefel(random_point(n, options.p, start_rng));

    RayleighReport report;
    report.optimal_objective = -top_sum;
    std::size_t step = 0;
    for (; step < options.steps; ++step) {
        const double objective = -trace(matmul(transpose(slot.value), matmul(a, slot.value)));
        if (!std::isfinite(objective)) {
            throw TrainingDivergedError("rayleigh objective became non-finite", "");
        }
        if (std::abs(objective - report.optimal_objective) < options.target_tol) break;
        const Matrix grad = scale(matmul(a, slot.value), -2.0);
        slot = options.optimizer == ManifoldOptimizer::Rsgd
                   ? rsgd_step(slot, grad, options.gamma)
                   : riemannian_adam_step(slot, grad, options.gamma);
    }
    report.steps_run = step;
    report.final_objective = -trace(matmul(transpose(slot.value), matmul(a, slot.value)));
    report.gap = std::abs(report.final_objective - report.optimal_objective);
    report.drift = slot.as_stiefel().drift();
    report.converged = report.gap < options.target_tol;
    return report;
}

DecoupleResult run_decouple(const DecoupleOptions& options) {
    if (options.arms.empty()) throw ConfigError("decouple: no arms selected");
    const fs::path out_dir(options.out_dir);
    if (fs::exists(out_dir) && !options.force) {
        throw ConfigError("output directory '" + options.out_dir +
                          "' already exists (pass --force to overwrite)");
    }
    fs::create_directories(out_dir);

    const SyntheticDataset data = generate_dataset(options.cfg);

    DecoupleResult result;
    json arms_json;
    for (const TrainingArm arm : options.arms) {
        TrainResult trained = train(options.cfg, arm);
        const std::string name = arm_name(arm);
        const fs::path arm_dir = out_dir / name;
        fs::create_directories(arm_dir);
        write_csv(trained.report.cosine_sim, (arm_dir / "cosine_sim.csv").string());
        write_loss_trace_csv((arm_dir / "loss_trace.csv").string(),
                             trained.report.loss_trace);
        write_heat_vectors((arm_dir / "heat_vectors.csv").string(), trained.nets, data);

        json arm_json;
        arm_json["offdiag_energy"] = trained.report.offdiag_energy;
        arm_json["dwfc_accuracy"] = trained.report.dwfc_accuracy;
        arm_json["heat_mass_ratio"] = trained.report.heat_mass_ratio;
        if (!trained.report.loss_trace.empty()) {
            arm_json["final_wpnce"] = trained.report.loss_trace.back().wpnce;
            arm_json["final_ce"] = trained.report.loss_trace.back().ce;
        }
        arms_json[name] = std::move(arm_json);
        result.arms.push_back({arm, std::move(trained.report)});
    }

    json report;
    report["arms"] = std::move(arms_json);
    report["config"] = config_to_json(options.cfg);
    report["tau"] = 0.07;

    auto energy_of = [&result](TrainingArm arm) -> const double* {
        for (const ArmResult& r : result.arms) {
            if (r.arm == arm) return &r.report.offdiag_energy;
        }
        return nullptr;
    };
    const double* omlp = energy_of(TrainingArm::Omlp);
    const double* penalty = energy_of(TrainingArm::Penalty);
    const double* unconstrained = energy_of(TrainingArm::Unconstrained);
    if (omlp && penalty && unconstrained) {
        result.ordering_checked = true;
        result.ordering_satisfied = *omlp < *penalty && *penalty < *unconstrained;
        report["ordering_satisfied"] = result.ordering_satisfied;
    }

    std::ofstream out(out_dir / "report.json");
    if (!out) throw IoError("cannot open report.json under " + options.out_dir);
    out << report.dump(2) << '\n';
    return result;
}

}  // namespace ortho
