#pragma once

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "ortho/linalg.hpp"
#include "ortho/optim.hpp"
#include "ortho/rng.hpp"

namespace ortho {

/// Channel-major feature block: C channels by S positions.
struct ChannelFeature {
    std::size_t channels = 0;
    std::size_t positions = 0;
    Matrix values;  // C x S

    static ChannelFeature make(Matrix values);
};

/// One depthwise block: per-channel elementwise affine over the position
/// axis (weight and bias are C x S, no parameter couples two channels)
/// followed by LeakyReLU(0.2).
struct DwfcBlock {
    ParamSlot weight;
    ParamSlot bias;
};

struct DwfcTape {
    std::vector<Matrix> block_inputs;       // input to each block
    std::vector<Matrix> pre_activations;    // affine outputs before LeakyReLU
    std::vector<double> pooled;             // x, the GAP vector
};

struct DwfcOutput {
    std::vector<double> x;  // pooled per-channel features
    double logit_h = 0.0;
    double logit_c = 0.0;
    DwfcTape tape;
};

struct DwfcGradients {
    std::vector<Matrix> block_weight_grads;
    std::vector<Matrix> block_bias_grads;
    Matrix head_h_grad;  // 1 x C
    Matrix head_c_grad;  // 1 x C
};

/// Depth-wise feature classifier: three depthwise blocks, global average
/// pooling over positions, and two scalar prediction heads (hazy / clear).
/// No parameter ever mixes information across channels.
class DwfcNet {
public:
    static constexpr double kLeakySlope = 0.2;
    static constexpr std::size_t kBlocks = 3;

    /// Blocks start as the identity affine (weight 1, bias 0); heads start
    /// with small seeded Gaussian weights.
    static DwfcNet create(std::size_t channels, std::size_t positions, Rng& rng);

    std::size_t channels() const { return channels_; }
    std::size_t positions() const { return positions_; }

    DwfcBlock& block(std::size_t i) { return blocks_[i]; }
    const DwfcBlock& block(std::size_t i) const { return blocks_[i]; }
    ParamSlot& head_h() { return head_h_; }
    ParamSlot& head_c() { return head_c_; }
    const ParamSlot& head_h() const { return head_h_; }
    const ParamSlot& head_c() const { return head_c_; }

    DwfcOutput forward(const ChannelFeature& feat) const;

    /// Gradients for upstream d(loss)/d(logit_h), d(loss)/d(logit_c).
    DwfcGradients backward(const DwfcTape& tape, double d_logit_h, double d_logit_c) const;

private:
    std::size_t channels_ = 0;
    std::size_t positions_ = 0;
    std::array<DwfcBlock, kBlocks> blocks_;
    ParamSlot head_h_;  // 1 x C
    ParamSlot head_c_;  // 1 x C
};

/// Sum of two stabilized binary cross-entropies on sigmoid(logit_h) and
/// sigmoid(logit_c). Labels must be complementary (y_h = 1 - y_c).
double bce_loss(double logit_h, double logit_c, int y_h, int y_c);

/// d(bce_loss)/d(logit_h), d(bce_loss)/d(logit_c) = sigmoid(l) - y.
std::pair<double, double> bce_loss_grad(double logit_h, double logit_c, int y_h, int y_c);

/// Heat vectors w_h = softmax(|theta_h .* x|), w_c = softmax(|theta_c .* x|).
/// Each is a simplex point over channels.
std::pair<std::vector<double>, std::vector<double>> heat_vectors(const DwfcNet& net,
                                                                 const std::vector<double>& x);

/// CSV export of heat vectors, one row per sample: id,w[0],...,w[C-1].
void write_heat_vectors_csv(const std::string& path,
                            const std::vector<std::pair<std::string, std::vector<double>>>& rows);

}  // namespace ortho
