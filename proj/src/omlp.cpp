#include "ortho/omlp.hpp"

#include <string>

namespace ortho {

Omlp Omlp::create(const std::vector<std::size_t>& widths, Rng& rng, ParamKind weight_kind) {
    if (widths.size() < 2) {
        throw DimensionError("Omlp::create: need at least {d_in, d_out}");
    }
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        if (widths[i] < widths[i + 1]) {
            throw DimensionError("Omlp::create: widths must be non-increasing (St(p,n) needs "
                                 "n >= p), got " +
                                 std::to_string(widths[i]) + " -> " + std::to_string(widths[i + 1]));
        }
    }
    Omlp net;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const StiefelPoint init = random_point(widths[i], widths[i + 1], rng);
        OrthoLinearLayer layer;
        layer.weight = ParamSlot::stiefel(init);
        layer.weight.kind = weight_kind;
        layer.bias = ParamSlot::euclidean(Matrix(1, widths[i + 1]));
        net.layers_.push_back(std::move(layer));
    }
    return net;
}

std::pair<Matrix, ActivationTape> Omlp::forward(const Matrix& features) const {
    if (features.cols() != d_in()) {
        throw DimensionError("Omlp::forward: input width " + std::to_string(features.cols()) +
                             " does not match first layer " + std::to_string(d_in()));
    }
    ActivationTape tape;
    Matrix x = features;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        tape.layer_inputs.push_back(x);
        Matrix pre = matmul(x, layers_[l].weight.value);
        for (std::size_t i = 0; i < pre.rows(); ++i)
            for (std::size_t j = 0; j < pre.cols(); ++j) pre(i, j) += layers_[l].bias.value(0, j);
        tape.pre_activations.push_back(pre);
        if (l + 1 < layers_.size()) {
            for (double& v : pre.data()) v = v > 0.0 ? v : 0.0;  // ReLU between layers only
        }
        x = std::move(pre);
    }
    return {std::move(x), std::move(tape)};
}

MlpGradients Omlp::backward(const ActivationTape& tape, const Matrix& output_grad) const {
    if (tape.layer_inputs.size() != layers_.size() ||
        tape.pre_activations.size() != layers_.size()) {
        throw TapeError("Omlp::backward: tape does not match network depth");
    }
    if (output_grad.rows() != tape.pre_activations.back().rows() ||
        output_grad.cols() != tape.pre_activations.back().cols()) {
        throw TapeError("Omlp::backward: output gradient shape does not match tape");
    }
    MlpGradients grads;
    grads.weight_grads.resize(layers_.size());
    grads.bias_grads.resize(layers_.size());

    Matrix delta = output_grad;  // gradient w.r.t. the layer output
    for (std::size_t li = layers_.size(); li-- > 0;) {
        if (li + 1 < layers_.size()) {
            // crossing the ReLU: subgradient at 0 is 0
            const Matrix& pre = tape.pre_activations[li];
            for (std::size_t i = 0; i < delta.size(); ++i) {
                if (pre.data()[i] <= 0.0) delta.data()[i] = 0.0;
            }
        }
        const Matrix& x = tape.layer_inputs[li];
        grads.weight_grads[li] = matmul(transpose(x), delta);
        Matrix bias_grad(1, delta.cols());
        for (std::size_t i = 0; i < delta.rows(); ++i)
            for (std::size_t j = 0; j < delta.cols(); ++j) bias_grad(0, j) += delta(i, j);
        grads.bias_grads[li] = std::move(bias_grad);
        delta = matmul(delta, transpose(layers_[li].weight.value));
    }
    grads.input_grad = std::move(delta);
    return grads;
}

}  // namespace ortho
