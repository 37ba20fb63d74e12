#include "ortho/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace ortho {

namespace {

constexpr double kTau = 0.07;

// sub-stream ids off cfg.seed; shared by dataset generation and training so
// identical configs always see identical draws
enum Stream : std::uint64_t {
    kMixingStream = 0,
    kHazyStream = 1,
    kClearStream = 2,
    kQueryStream = 3,
    kHeadInitStream = 4,
    kClassifierInitStream = 5,
    kTrainStream = 6,
};

class FeatureSampler {
public:
    explicit FeatureSampler(const SyntheticConfig& cfg)
        : cfg_(cfg), mix_(cfg.channels, cfg.channels) {
        Rng mix_rng = Rng(cfg.seed).derive(kMixingStream);
        const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.channels));
        for (std::size_t i = 0; i < cfg.channels; ++i) {
            for (std::size_t j = 0; j < cfg.channels; ++j) {
                const double g = mix_rng.normal();  // consume uniformly
                if (i != j) mix_(i, j) = g * scale;
            }
        }
    }

    ChannelFeature sample(bool hazy, Rng& rng) const {
        const std::size_t c_count = cfg_.channels;
        const std::size_t s_count = cfg_.positions;
        Matrix raw(c_count, s_count);
        const double mean = hazy ? 1.0 : -1.0;
        for (std::size_t c = 0; c < c_count; ++c) {
            if (c < cfg_.related_channels) {
                for (std::size_t s = 0; s < s_count; ++s) raw(c, s) = mean;
            } else {
                for (std::size_t s = 0; s < s_count; ++s) raw(c, s) = rng.normal();
            }
        }
        Matrix mixed = cfg_.mixing_strength == 0.0
                           ? raw
                           : add(raw, scale(matmul(mix_, raw), cfg_.mixing_strength));
        if (cfg_.noise_sigma > 0.0) {
            for (double& v : mixed.data()) v += cfg_.noise_sigma * rng.normal();
        }
        return ChannelFeature::make(std::move(mixed));
    }

private:
    const SyntheticConfig& cfg_;
    Matrix mix_;
};

// Rows whose norm falls below 1e-3 (a path fully killed by ReLU leaves only
// the bias) are treated as degenerate: left unnormalized and given no
// gradient, since dividing by a vanishing norm amplifies the chain rule
// unboundedly.
constexpr double kDegenerateRowNorm = 1e-3;

void normalize_rows(Matrix& m, std::vector<double>& norms) {
    norms.assign(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
        const double norm = std::sqrt(s);
        norms[i] = norm;
        if (norm < kDegenerateRowNorm) continue;
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) /= norm;
    }
}

std::vector<double> matrix_row(const Matrix& m, std::size_t i) {
    std::vector<double> row(m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) row[j] = m(i, j);
    return row;
}

// d(loss)/d(raw row) from d(loss)/d(unit row): (g - <g,z> z) / norm
void unnormalize_grad_row(Matrix& target, std::size_t i, const std::vector<double>& grad,
                          const Matrix& unit_rows, double norm) {
    if (norm < kDegenerateRowNorm) return;
    double dot = 0.0;
    for (std::size_t j = 0; j < target.cols(); ++j) dot += grad[j] * unit_rows(i, j);
    for (std::size_t j = 0; j < target.cols(); ++j) {
        target(i, j) = (grad[j] - dot * unit_rows(i, j)) / norm;
    }
}

// gradient of lambda * ||W^T W - I||_F^2
Matrix orthogonality_penalty_grad(const Matrix& w, double lambda) {
    const Matrix gram_residual = sub(matmul(transpose(w), w), Matrix::identity(w.cols()));
    return scale(matmul(w, gram_residual), 4.0 * lambda);
}

NamedSlots collect_slots(const TrainedNets& nets) {
    NamedSlots slots;
    for (std::size_t l = 0; l < nets.head.layer_count(); ++l) {
        const std::string base = "head.layer" + std::to_string(l);
        slots.emplace_back(base + ".weight", nets.head.layer(l).weight);
        slots.emplace_back(base + ".bias", nets.head.layer(l).bias);
    }
    for (std::size_t b = 0; b < DwfcNet::kBlocks; ++b) {
        const std::string base = "classifier.block" + std::to_string(b);
        slots.emplace_back(base + ".weight", nets.classifier.block(b).weight);
        slots.emplace_back(base + ".bias", nets.classifier.block(b).bias);
    }
    slots.emplace_back("classifier.head_h", nets.classifier.head_h());
    slots.emplace_back("classifier.head_c", nets.classifier.head_c());
    return slots;
}

}  // namespace

std::string arm_name(TrainingArm arm) {
    switch (arm) {
        case TrainingArm::Omlp: return "omlp";
        case TrainingArm::Penalty: return "penalty";
        case TrainingArm::Unconstrained: return "unconstrained";
    }
    return "unknown";
}

void SyntheticConfig::validate() const {
    if (channels == 0 || positions == 0) {
        throw ConfigError("channels and positions must be >= 1");
    }
    if (related_channels < 1 || related_channels >= channels) {
        throw ConfigError("related_channels must satisfy 1 <= k < channels");
    }
    if (mixing_strength < 0.0 || mixing_strength >= 1.0) {
        throw ConfigError("mixing_strength must lie in [0, 1)");
    }
    if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
    if (samples_per_domain == 0) throw ConfigError("samples_per_domain must be >= 1");
    if (embed_layers == 0) throw ConfigError("embed_layers must be >= 1");
    if (schedule.base_lr < 0.0) throw ConfigError("base_lr must be >= 0");
    if (penalty_lambda < 0.0) throw ConfigError("penalty_lambda must be >= 0");
}

SyntheticDataset generate_dataset(const SyntheticConfig& cfg) {
    cfg.validate();
    const FeatureSampler sampler(cfg);
    SyntheticDataset data;
    Rng hazy_rng = Rng(cfg.seed).derive(kHazyStream);
    Rng clear_rng = Rng(cfg.seed).derive(kClearStream);
    data.hazy.reserve(cfg.samples_per_domain);
    data.clear.reserve(cfg.samples_per_domain);
    for (std::size_t i = 0; i < cfg.samples_per_domain; ++i) {
        data.hazy.push_back(sampler.sample(true, hazy_rng));
        data.clear.push_back(sampler.sample(false, clear_rng));
    }
    data.channel_related.assign(cfg.channels, false);
    for (std::size_t c = 0; c < cfg.related_channels; ++c) data.channel_related[c] = true;
    return data;
}

Matrix cosine_similarity_matrix(const Matrix& embeddings) {
    const std::size_t d = embeddings.cols();
    std::vector<double> norms(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < embeddings.rows(); ++r) {
            s += embeddings(r, j) * embeddings(r, j);
        }
        norms[j] = std::sqrt(s);
    }
    Matrix cos(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        if (norms[i] == 0.0) continue;
        cos(i, i) = 1.0;
        for (std::size_t j = i + 1; j < d; ++j) {
            if (norms[j] == 0.0) continue;
            double dot = 0.0;
            for (std::size_t r = 0; r < embeddings.rows(); ++r) {
                dot += embeddings(r, i) * embeddings(r, j);
            }
            cos(i, j) = cos(j, i) = dot / (norms[i] * norms[j]);
        }
    }
    return cos;
}

double offdiag_energy(const Matrix& cosine_sim) {
    const std::size_t d = cosine_sim.rows();
    if (d < 2) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            if (i != j) sum += std::abs(cosine_sim(i, j));
        }
    }
    return sum / static_cast<double>(d * (d - 1));
}

ExperimentReport evaluate(const TrainedNets& nets, const SyntheticDataset& data,
                          const SyntheticConfig& cfg) {
    ExperimentReport report;
    const std::size_t s_count = cfg.positions;
    const std::size_t c_count = cfg.channels;
    const std::size_t total = data.hazy.size() + data.clear.size();

    // One embedding row per (sample, position) over both domains.
    Matrix inputs(total * s_count, c_count);
    std::size_t r = 0;
    for (const auto* domain : {&data.hazy, &data.clear}) {
        for (const ChannelFeature& feat : *domain) {
            for (std::size_t s = 0; s < s_count; ++s, ++r) {
                for (std::size_t c = 0; c < c_count; ++c) inputs(r, c) = feat.values(c, s);
            }
        }
    }
    Matrix embedded = nets.head.forward(inputs).first;
    std::vector<double> norms;
    normalize_rows(embedded, norms);
    report.cosine_sim = cosine_similarity_matrix(embedded);
    report.offdiag_energy = offdiag_energy(report.cosine_sim);

    std::size_t correct = 0;
    double related_mass = 0.0;
    for (const ChannelFeature& feat : data.hazy) {
        const DwfcOutput out = nets.classifier.forward(feat);
        if (out.logit_h > out.logit_c) ++correct;
        const auto [w_h, w_c] = heat_vectors(nets.classifier, out.x);
        for (std::size_t c = 0; c < c_count; ++c) {
            if (data.channel_related[c]) related_mass += w_h[c];
        }
    }
    for (const ChannelFeature& feat : data.clear) {
        const DwfcOutput out = nets.classifier.forward(feat);
        if (!(out.logit_h > out.logit_c)) ++correct;
    }
    report.dwfc_accuracy = static_cast<double>(correct) / static_cast<double>(total);
    const double uniform_share = static_cast<double>(cfg.related_channels) /
                                 static_cast<double>(cfg.channels);
    report.heat_mass_ratio =
        (related_mass / static_cast<double>(data.hazy.size())) / uniform_share;
    return report;
}

TrainResult train(const SyntheticConfig& cfg, TrainingArm arm) {
    cfg.validate();
    if (!cfg.detach_weights) {
        throw ConfigError(
            "detach_weights=false (gradient flow into the heat vectors) is not supported");
    }

    const SyntheticDataset data = generate_dataset(cfg);
    const std::size_t n = cfg.samples_per_domain;
    const std::size_t c_count = cfg.channels;
    const std::size_t s_count = cfg.positions;

    // composite queries: related block from a fresh clear draw, unrelated
    // block copied from the paired hazy sample
    const FeatureSampler sampler(cfg);
    Rng query_rng = Rng(cfg.seed).derive(kQueryStream);
    std::vector<ChannelFeature> queries;
    queries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ChannelFeature fresh_clear = sampler.sample(false, query_rng);
        Matrix composite = data.hazy[i].values;
        for (std::size_t c = 0; c < cfg.related_channels; ++c) {
            for (std::size_t s = 0; s < s_count; ++s) {
                composite(c, s) = fresh_clear.values(c, s);
            }
        }
        queries.push_back(ChannelFeature::make(std::move(composite)));
    }

    Rng head_rng = Rng(cfg.seed).derive(kHeadInitStream);
    Rng classifier_rng = Rng(cfg.seed).derive(kClassifierInitStream);
    Rng train_rng = Rng(cfg.seed).derive(kTrainStream);

    std::vector<std::size_t> widths(cfg.embed_layers + 1, c_count);
    TrainedNets nets{
        Omlp::create(widths, head_rng,
                     arm == TrainingArm::Omlp ? ParamKind::StiefelConstrained
                                              : ParamKind::Euclidean),
        DwfcNet::create(c_count, s_count, classifier_rng)};

    std::vector<LossTracePoint> trace;
    NamedSlots last_good = collect_slots(nets);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at_epoch(cfg.schedule, epoch);
        // Fisher-Yates off the training stream
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = train_rng.uniform_below(i);
            std::swap(order[i - 1], order[j]);
        }

        double wpnce_sum = 0.0;
        double ce_sum = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const std::size_t i = order[t];
            const std::size_t j = train_rng.uniform_below(n);        // clear sample
            const std::size_t qs = train_rng.uniform_below(s_count);  // query position

            // classifier pass on both domains (labels: hazy -> y_h = 1)
            const DwfcOutput oh = nets.classifier.forward(data.hazy[i]);
            const DwfcOutput oc = nets.classifier.forward(data.clear[j]);
            const double ce = 0.5 * (bce_loss(oh.logit_h, oh.logit_c, 1, 0) +
                                     bce_loss(oc.logit_h, oc.logit_c, 0, 1));
            const auto [dhh, dhc] = bce_loss_grad(oh.logit_h, oh.logit_c, 1, 0);
            const auto [dch, dcc] = bce_loss_grad(oc.logit_h, oc.logit_c, 0, 1);
            const DwfcGradients gh = nets.classifier.backward(oh.tape, 0.5 * dhh, 0.5 * dhc);
            const DwfcGradients gc = nets.classifier.backward(oc.tape, 0.5 * dch, 0.5 * dcc);

            // heat vectors from the current classifier, one per key source
            const std::vector<double> w_h = heat_vectors(nets.classifier, oh.x).first;
            const std::vector<double> w_c = heat_vectors(nets.classifier, oc.x).second;
            const WeightPair weights = WeightPair::make(w_h, w_c);

            // embedding rows: query at qs, all hazy positions, all clear positions
            Matrix emb_in(1 + 2 * s_count, c_count);
            for (std::size_t c = 0; c < c_count; ++c) {
                emb_in(0, c) = queries[i].values(c, qs);
                for (std::size_t s = 0; s < s_count; ++s) {
                    emb_in(1 + s, c) = data.hazy[i].values(c, s);
                    emb_in(1 + s_count + s, c) = data.clear[j].values(c, s);
                }
            }
            const auto [emb_raw, emb_tape] = nets.head.forward(emb_in);
            Matrix unit = emb_raw;
            std::vector<double> norms;
            normalize_rows(unit, norms);

            std::vector<std::vector<double>> clear_keys(s_count), neg_keys;
            for (std::size_t s = 0; s < s_count; ++s) {
                clear_keys[s] = matrix_row(unit, 1 + s_count + s);
                if (s != qs) neg_keys.push_back(matrix_row(unit, 1 + s));
            }
            const EmbeddingBatch batch = EmbeddingBatch::make_unchecked(
                matrix_row(unit, 0), matrix_row(unit, 1 + qs), std::move(clear_keys),
                std::move(neg_keys));
            const WpnceGradients wg = wpnce_gradients(batch, weights, kTau);

            if (!std::isfinite(wg.loss) || !std::isfinite(ce)) {
                std::string dir = cfg.checkpoint_dir;
                if (dir.empty()) {
                    dir = (std::filesystem::temp_directory_path() /
                           ("ortho_diverged_" + std::to_string(cfg.seed)))
                              .string();
                }
                save_slots(dir, last_good);
                throw TrainingDivergedError("training loss became non-finite at epoch " +
                                                std::to_string(epoch),
                                            dir);
            }
            wpnce_sum += wg.loss;
            ce_sum += ce;

            // scatter key gradients back to rows and undo the normalization
            Matrix demb(emb_raw.rows(), c_count);
            unnormalize_grad_row(demb, 0, wg.query, unit, norms[0]);
            unnormalize_grad_row(demb, 1 + qs, wg.key_pos_hazy, unit, norms[1 + qs]);
            std::size_t neg_idx = 0;
            for (std::size_t s = 0; s < s_count; ++s) {
                unnormalize_grad_row(demb, 1 + s_count + s, wg.keys_clear[s], unit,
                                     norms[1 + s_count + s]);
                if (s != qs) {
                    unnormalize_grad_row(demb, 1 + s, wg.keys_neg_hazy[neg_idx], unit,
                                         norms[1 + s]);
                    ++neg_idx;
                }
            }
            const MlpGradients head_grads = nets.head.backward(emb_tape, demb);

            if (lr <= 0.0) continue;
            // joint: both nets step on every batch; alternating: head on odd
            // steps, classifier on even ones
            const bool update_head = cfg.joint_updates || (t % 2 == 1);
            const bool update_classifier = cfg.joint_updates || (t % 2 == 0);

            if (update_head) {
                for (std::size_t l = 0; l < nets.head.layer_count(); ++l) {
                    ParamSlot& w = nets.head.layer(l).weight;
                    switch (arm) {
                        case TrainingArm::Omlp:
                            w = cfg.optimizer == ManifoldOptimizer::Rsgd
                                    ? rsgd_step(w, head_grads.weight_grads[l], lr)
                                    : riemannian_adam_step(w, head_grads.weight_grads[l], lr);
                            break;
                        case TrainingArm::Penalty:
                            w = adam_step(w,
                                          add(head_grads.weight_grads[l],
                                              orthogonality_penalty_grad(w.value,
                                                                         cfg.penalty_lambda)),
                                          lr);
                            break;
                        case TrainingArm::Unconstrained:
                            w = adam_step(w, head_grads.weight_grads[l], lr);
                            break;
                    }
                    ParamSlot& b = nets.head.layer(l).bias;
                    b = adam_step(b, head_grads.bias_grads[l], lr);
                }
            }
            if (update_classifier) {
                for (std::size_t bi = 0; bi < DwfcNet::kBlocks; ++bi) {
                    DwfcBlock& block = nets.classifier.block(bi);
                    block.weight = adam_step(
                        block.weight,
                        add(gh.block_weight_grads[bi], gc.block_weight_grads[bi]), lr);
                    block.bias = adam_step(
                        block.bias, add(gh.block_bias_grads[bi], gc.block_bias_grads[bi]), lr);
                }
                nets.classifier.head_h() = adam_step(
                    nets.classifier.head_h(), add(gh.head_h_grad, gc.head_h_grad), lr);
                nets.classifier.head_c() = adam_step(
                    nets.classifier.head_c(), add(gh.head_c_grad, gc.head_c_grad), lr);
            }
        }

        trace.push_back({epoch, wpnce_sum / static_cast<double>(n),
                         ce_sum / static_cast<double>(n)});
        last_good = collect_slots(nets);
    }

    TrainResult result{std::move(nets), {}};
    result.report = evaluate(result.nets, data, cfg);
    result.report.loss_trace = std::move(trace);
    return result;
}

}  // namespace ortho
