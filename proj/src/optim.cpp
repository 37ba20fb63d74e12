#include "ortho/optim.hpp"

#include <cmath>
#include <optional>
#include <filesystem>
#include <fstream>

namespace ortho {

ParamSlot ParamSlot::stiefel(const StiefelPoint& point) {
    ParamSlot slot;
    slot.kind = ParamKind::StiefelConstrained;
    slot.value = point.theta();
    slot.adam_m = Matrix(slot.value.rows(), slot.value.cols());
    slot.adam_v = Matrix(slot.value.rows(), slot.value.cols());
    return slot;
}

ParamSlot ParamSlot::euclidean(Matrix value) {
    ParamSlot slot;
    slot.kind = ParamKind::Euclidean;
    slot.adam_m = Matrix(value.rows(), value.cols());
    slot.adam_v = Matrix(value.rows(), value.cols());
    slot.value = std::move(value);
    return slot;
}

StiefelPoint ParamSlot::as_stiefel() const {
    if (kind != ParamKind::StiefelConstrained) {
        throw KindError("as_stiefel: slot is not Stiefel-constrained");
    }
    return StiefelPoint::make(value);
}

ParamSlot rsgd_step(const ParamSlot& slot, const Matrix& euclid_grad, double gamma) {
    if (slot.kind != ParamKind::StiefelConstrained) {
        throw KindError("rsgd_step: slot is not Stiefel-constrained");
    }
    if (gamma <= 0.0) throw ParameterError("rsgd_step: gamma must be > 0");
    const StiefelPoint theta = slot.as_stiefel();
    const TangentVector grad = project_to_tangent(theta, euclid_grad);
    const TangentVector displacement = TangentVector::make(theta, scale(grad.z(), -gamma));
    const StiefelPoint next = retract(theta, displacement);
    ParamSlot out = slot;
    out.value = next.theta();
    out.step_count += 1;
    return out;
}

namespace {

ParamSlot adam_update(const ParamSlot& slot, const Matrix& grad, double lr, double beta1,
                      double beta2, double eps, bool manifold) {
    if (grad.rows() != slot.value.rows() || grad.cols() != slot.value.cols()) {
        throw DimensionError("adam: gradient shape does not match slot value");
    }
    if (lr < 0.0) throw ParameterError("adam: lr must be >= 0");
    ParamSlot out = slot;
    out.step_count += 1;
    const double t = static_cast<double>(out.step_count);

    // On the manifold the moments track the tangent-projected gradient.
    // Adapting on raw Euclidean coordinates and projecting afterward loses
    // descent alignment: the projected sign-like direction is uncorrelated
    // with the Riemannian gradient and the iterate wanders instead of
    // converging.
    std::optional<StiefelPoint> theta;
    Matrix effective_grad = grad;
    if (manifold) {
        theta = StiefelPoint::make(out.value);
        effective_grad = project_to_tangent(*theta, grad).z();
    }

    for (std::size_t i = 0; i < grad.size(); ++i) {
        const double g = effective_grad.data()[i];
        out.adam_m.data()[i] = beta1 * out.adam_m.data()[i] + (1.0 - beta1) * g;
        out.adam_v.data()[i] = beta2 * out.adam_v.data()[i] + (1.0 - beta2) * g * g;
    }
    const double mc = 1.0 - std::pow(beta1, t);
    const double vc = 1.0 - std::pow(beta2, t);
    Matrix direction(grad.rows(), grad.cols());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        const double mhat = out.adam_m.data()[i] / mc;
        const double vhat = out.adam_v.data()[i] / vc;
        direction.data()[i] = mhat / (std::sqrt(vhat) + eps);
    }
    if (manifold) {
        const TangentVector step =
            TangentVector::make(*theta, scale(project_to_tangent(*theta, direction).z(), -lr));
        out.value = retract(*theta, step).theta();
    } else {
        for (std::size_t i = 0; i < grad.size(); ++i) {
            out.value.data()[i] -= lr * direction.data()[i];
        }
    }
    return out;
}

}  // namespace

ParamSlot adam_step(const ParamSlot& slot, const Matrix& grad, double lr, double beta1,
                    double beta2, double eps) {
    if (slot.kind != ParamKind::Euclidean) {
        throw KindError("adam_step: slot is not Euclidean");
    }
    return adam_update(slot, grad, lr, beta1, beta2, eps, /*manifold=*/false);
}

ParamSlot riemannian_adam_step(const ParamSlot& slot, const Matrix& euclid_grad, double lr,
                               double beta1, double beta2, double eps) {
    if (slot.kind != ParamKind::StiefelConstrained) {
        throw KindError("riemannian_adam_step: slot is not Stiefel-constrained");
    }
    return adam_update(slot, euclid_grad, lr, beta1, beta2, eps, /*manifold=*/true);
}

double lr_at_epoch(const Schedule& s, std::size_t epoch) {
    if (epoch < s.hold_epochs) return s.base_lr;
    const std::size_t past = epoch - s.hold_epochs;
    if (past >= s.decay_epochs) return 0.0;
    return s.base_lr *
           (1.0 - static_cast<double>(past) / static_cast<double>(s.decay_epochs));
}

// ---------------------------------------------------------------------------
// Checkpoint bundle
// ---------------------------------------------------------------------------

namespace {

namespace fs = std::filesystem;

std::string slot_path(const std::string& dir, const std::string& name, const char* part) {
    return (fs::path(dir) / (name + "." + part + ".csv")).string();
}

}  // namespace

void save_slot(const std::string& dir, const std::string& name, const ParamSlot& slot) {
    fs::create_directories(dir);
    write_csv(slot.value, slot_path(dir, name, "value"));
    write_csv(slot.adam_m, slot_path(dir, name, "m"));
    write_csv(slot.adam_v, slot_path(dir, name, "v"));
    std::ofstream meta(slot_path(dir, name, "meta"));
    if (!meta) throw IoError("save_slot: cannot open meta file for " + name);
    meta << (slot.kind == ParamKind::StiefelConstrained ? "stiefel" : "euclidean") << ','
         << slot.step_count << '\n';
}

ParamSlot load_slot(const std::string& dir, const std::string& name) {
    ParamSlot slot;
    slot.value = read_csv(slot_path(dir, name, "value"));
    slot.adam_m = read_csv(slot_path(dir, name, "m"));
    slot.adam_v = read_csv(slot_path(dir, name, "v"));
    std::ifstream meta(slot_path(dir, name, "meta"));
    if (!meta) throw IoError("load_slot: cannot open meta file for " + name);
    std::string kind;
    std::getline(meta, kind, ',');
    meta >> slot.step_count;
    if (kind == "stiefel") {
        slot.kind = ParamKind::StiefelConstrained;
    } else if (kind == "euclidean") {
        slot.kind = ParamKind::Euclidean;
    } else {
        throw IoError("load_slot: unknown slot kind '" + kind + "'");
    }
    return slot;
}

void save_slots(const std::string& dir, const NamedSlots& slots) {
    for (const auto& [name, slot] : slots) save_slot(dir, name, slot);
}

}  // namespace ortho
