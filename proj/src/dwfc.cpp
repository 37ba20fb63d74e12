#include "ortho/dwfc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace ortho {

ChannelFeature ChannelFeature::make(Matrix values) {
    if (!values.all_finite()) {
        throw ShapeError("ChannelFeature: non-finite entries");
    }
    ChannelFeature f;
    f.channels = values.rows();
    f.positions = values.cols();
    f.values = std::move(values);
    return f;
}

DwfcNet DwfcNet::create(std::size_t channels, std::size_t positions, Rng& rng) {
    if (channels == 0 || positions == 0) {
        throw DimensionError("DwfcNet::create: channels and positions must be >= 1");
    }
    DwfcNet net;
    net.channels_ = channels;
    net.positions_ = positions;
    for (auto& block : net.blocks_) {
        Matrix w(channels, positions);
        for (double& v : w.data()) v = 1.0;
        block.weight = ParamSlot::euclidean(std::move(w));
        block.bias = ParamSlot::euclidean(Matrix(channels, positions));
    }
    Matrix h(1, channels);
    Matrix c(1, channels);
    for (double& v : h.data()) v = 0.1 * rng.normal();
    for (double& v : c.data()) v = 0.1 * rng.normal();
    net.head_h_ = ParamSlot::euclidean(std::move(h));
    net.head_c_ = ParamSlot::euclidean(std::move(c));
    return net;
}

DwfcOutput DwfcNet::forward(const ChannelFeature& feat) const {
    if (feat.channels != channels_ || feat.positions != positions_) {
        throw DimensionError("DwfcNet::forward: feature is " + std::to_string(feat.channels) +
                             "x" + std::to_string(feat.positions) + ", net expects " +
                             std::to_string(channels_) + "x" + std::to_string(positions_));
    }
    DwfcOutput out;
    Matrix h = feat.values;
    for (const auto& block : blocks_) {
        out.tape.block_inputs.push_back(h);
        Matrix pre = hadamard(h, block.weight.value);
        pre = add(pre, block.bias.value);
        out.tape.pre_activations.push_back(pre);
        for (double& v : pre.data()) {
            if (v < 0.0) v *= kLeakySlope;
        }
        h = std::move(pre);
    }
    out.x.resize(channels_);
    for (std::size_t c = 0; c < channels_; ++c) {
        double sum = 0.0;
        for (std::size_t s = 0; s < positions_; ++s) sum += h(c, s);
        out.x[c] = sum / static_cast<double>(positions_);
    }
    out.tape.pooled = out.x;
    for (std::size_t c = 0; c < channels_; ++c) {
        out.logit_h += head_h_.value(0, c) * out.x[c];
        out.logit_c += head_c_.value(0, c) * out.x[c];
    }
    return out;
}

DwfcGradients DwfcNet::backward(const DwfcTape& tape, double d_logit_h, double d_logit_c) const {
    if (tape.block_inputs.size() != kBlocks || tape.pre_activations.size() != kBlocks ||
        tape.pooled.size() != channels_) {
        throw TapeError("DwfcNet::backward: tape does not match network");
    }
    DwfcGradients grads;
    grads.head_h_grad = Matrix(1, channels_);
    grads.head_c_grad = Matrix(1, channels_);
    std::vector<double> dx(channels_, 0.0);
    for (std::size_t c = 0; c < channels_; ++c) {
        grads.head_h_grad(0, c) = d_logit_h * tape.pooled[c];
        grads.head_c_grad(0, c) = d_logit_c * tape.pooled[c];
        dx[c] = d_logit_h * head_h_.value(0, c) + d_logit_c * head_c_.value(0, c);
    }

    // GAP spreads the channel gradient uniformly across positions.
    Matrix delta(channels_, positions_);
    const double inv_s = 1.0 / static_cast<double>(positions_);
    for (std::size_t c = 0; c < channels_; ++c)
        for (std::size_t s = 0; s < positions_; ++s) delta(c, s) = dx[c] * inv_s;

    grads.block_weight_grads.resize(kBlocks);
    grads.block_bias_grads.resize(kBlocks);
    for (std::size_t bi = kBlocks; bi-- > 0;) {
        const Matrix& pre = tape.pre_activations[bi];
        for (std::size_t i = 0; i < delta.size(); ++i) {
            if (pre.data()[i] < 0.0) delta.data()[i] *= kLeakySlope;
        }
        grads.block_weight_grads[bi] = hadamard(delta, tape.block_inputs[bi]);
        grads.block_bias_grads[bi] = delta;
        delta = hadamard(delta, blocks_[bi].weight.value);
    }
    return grads;
}

namespace {

// BCE with logits in log-sum-exp form: max(l,0) - y*l + log1p(exp(-|l|)).
double bce_with_logits(double logit, double y) {
    return std::max(logit, 0.0) - y * logit + std::log1p(std::exp(-std::abs(logit)));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require_labels(int y_h, int y_c) {
    if ((y_h != 0 && y_h != 1) || (y_c != 0 && y_c != 1) || y_h + y_c != 1) {
        throw LabelError("labels must be complementary binary values, got y_h=" +
                         std::to_string(y_h) + " y_c=" + std::to_string(y_c));
    }
}

}  // namespace

double bce_loss(double logit_h, double logit_c, int y_h, int y_c) {
    require_labels(y_h, y_c);
    return bce_with_logits(logit_h, static_cast<double>(y_h)) +
           bce_with_logits(logit_c, static_cast<double>(y_c));
}

std::pair<double, double> bce_loss_grad(double logit_h, double logit_c, int y_h, int y_c) {
    require_labels(y_h, y_c);
    return {sigmoid(logit_h) - static_cast<double>(y_h),
            sigmoid(logit_c) - static_cast<double>(y_c)};
}

namespace {

std::vector<double> abs_product_softmax(const Matrix& head, const std::vector<double>& x) {
    std::vector<double> scores(x.size());
    for (std::size_t c = 0; c < x.size(); ++c) scores[c] = std::abs(head(0, c) * x[c]);
    const double peak = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double& s : scores) {
        s = std::exp(s - peak);
        sum += s;
    }
    for (double& s : scores) s /= sum;
    return scores;
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> heat_vectors(const DwfcNet& net,
                                                                 const std::vector<double>& x) {
    if (x.size() != net.channels()) {
        throw DimensionError("heat_vectors: x has " + std::to_string(x.size()) +
                             " entries, net has " + std::to_string(net.channels()) + " channels");
    }
    return {abs_product_softmax(net.head_h().value, x),
            abs_product_softmax(net.head_c().value, x)};
}

void write_heat_vectors_csv(const std::string& path,
                            const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("write_heat_vectors_csv: cannot open " + path);
    for (const auto& [id, w] : rows) {
        out << id;
        for (double v : w) out << ',' << format_full(v);
        out << '\n';
    }
}

}  // namespace ortho
