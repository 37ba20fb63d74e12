#pragma once

#include <cstddef>
#include <vector>

#include "ortho/linalg.hpp"
#include "ortho/optim.hpp"
#include "ortho/rng.hpp"

namespace ortho {

/// Affine layer whose weight matrix (d_in x d_out, d_in >= d_out) keeps
/// orthonormal columns; the bias is an ordinary Euclidean parameter.
struct OrthoLinearLayer {
    ParamSlot weight;
    ParamSlot bias;  // 1 x d_out

    std::size_t d_in() const { return weight.value.rows(); }
    std::size_t d_out() const { return weight.value.cols(); }
};

/// Pre-activations and layer inputs recorded by forward for exact
/// reverse-mode gradients.
struct ActivationTape {
    std::vector<Matrix> layer_inputs;
    std::vector<Matrix> pre_activations;
};

struct MlpGradients {
    std::vector<Matrix> weight_grads;
    std::vector<Matrix> bias_grads;
    Matrix input_grad;
};

/// Projection head: affine layers with ReLU between them and a linear last
/// layer. Widths must be non-increasing so every weight fits on St(p,n).
/// Weight slots are Stiefel-constrained by default; the penalty and
/// unconstrained training arms use Euclidean slots with identical
/// initialization.
class Omlp {
public:
    /// widths = {d_in, h_1, ..., d_out}; weights initialized with
    /// QR-orthonormalized Gaussians, biases zero.
    static Omlp create(const std::vector<std::size_t>& widths, Rng& rng,
                       ParamKind weight_kind = ParamKind::StiefelConstrained);

    std::size_t layer_count() const { return layers_.size(); }
    const OrthoLinearLayer& layer(std::size_t i) const { return layers_[i]; }
    OrthoLinearLayer& layer(std::size_t i) { return layers_[i]; }

    std::size_t d_in() const { return layers_.front().d_in(); }
    std::size_t d_out() const { return layers_.back().d_out(); }

    /// features: batch x d_in rows. Output batch x d_out plus the tape.
    std::pair<Matrix, ActivationTape> forward(const Matrix& features) const;

    /// Exact reverse-mode gradients of the affine/ReLU chain; the ReLU
    /// subgradient at zero is zero.
    MlpGradients backward(const ActivationTape& tape, const Matrix& output_grad) const;

private:
    std::vector<OrthoLinearLayer> layers_;
};

}  // namespace ortho
