#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ortho/linalg.hpp"
#include "ortho/stiefel.hpp"

namespace ortho {

enum class ParamKind { StiefelConstrained, Euclidean };

/// One optimizable parameter with its Adam moment buffers. Stiefel-constrained
/// slots keep orthonormal columns after every step.
struct ParamSlot {
    ParamKind kind = ParamKind::Euclidean;
    Matrix value;
    Matrix adam_m;
    Matrix adam_v;
    std::size_t step_count = 0;

    static ParamSlot stiefel(const StiefelPoint& point);
    static ParamSlot euclidean(Matrix value);

    /// Reinterprets the current value as a Stiefel point (checked).
    StiefelPoint as_stiefel() const;
};

/// Riemannian SGD: project the Euclidean gradient to the tangent space at the
/// current point, displace by -gamma along it, and retract back onto the
/// manifold.
ParamSlot rsgd_step(const ParamSlot& slot, const Matrix& euclid_grad, double gamma);

/// Standard Adam with bias correction.
ParamSlot adam_step(const ParamSlot& slot, const Matrix& grad, double lr, double beta1 = 0.5,
                    double beta2 = 0.999, double eps = 1e-8);

/// Adam moments maintained on the tangent projection of the Euclidean
/// gradient; the bias-corrected adaptive direction is re-projected and
/// retracted, so both the constraint and descent alignment survive the step.
ParamSlot riemannian_adam_step(const ParamSlot& slot, const Matrix& euclid_grad, double lr,
                               double beta1 = 0.5, double beta2 = 0.999, double eps = 1e-8);

/// Learning-rate schedule: constant for hold_epochs, then linear to zero over
/// decay_epochs, zero afterward.
struct Schedule {
    double base_lr = 2e-4;
    std::size_t hold_epochs = 200;
    std::size_t decay_epochs = 200;
};

double lr_at_epoch(const Schedule& s, std::size_t epoch);

// ---------------------------------------------------------------------------
// Checkpointing: CSV bundle (value, m, v, meta) per named slot in a directory.
// ---------------------------------------------------------------------------

void save_slot(const std::string& dir, const std::string& name, const ParamSlot& slot);
ParamSlot load_slot(const std::string& dir, const std::string& name);

using NamedSlots = std::vector<std::pair<std::string, ParamSlot>>;

void save_slots(const std::string& dir, const NamedSlots& slots);

}  // namespace ortho
