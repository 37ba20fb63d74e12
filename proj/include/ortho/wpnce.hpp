#pragma once

#include <cstddef>
#include <vector>

#include "ortho/errors.hpp"

namespace ortho {

/// Query embedding plus its repartitioned keys, all unit L2 norm:
/// one same-position hazy key, at least one clear-domain key, and any number
/// of other-position hazy keys.
struct EmbeddingBatch {
    std::vector<double> query;
    std::vector<double> key_pos_hazy;                 // z_{+-}
    std::vector<std::vector<double>> keys_clear;      // z_{-+}
    std::vector<std::vector<double>> keys_neg_hazy;   // z_{--}

    static EmbeddingBatch make(std::vector<double> query, std::vector<double> key_pos_hazy,
                               std::vector<std::vector<double>> keys_clear,
                               std::vector<std::vector<double>> keys_neg_hazy);

    /// Skips the unit-norm checks; for finite-difference probes that nudge
    /// entries off the sphere.
    static EmbeddingBatch make_unchecked(std::vector<double> query,
                                         std::vector<double> key_pos_hazy,
                                         std::vector<std::vector<double>> keys_clear,
                                         std::vector<std::vector<double>> keys_neg_hazy);

    std::size_t dim() const { return query.size(); }
};

/// Per-channel heat weights for hazy- and clear-sourced keys; both simplex
/// points (nonnegative, sum 1).
struct WeightPair {
    std::vector<double> w_h;
    std::vector<double> w_c;

    static WeightPair make(std::vector<double> w_h, std::vector<double> w_c);
    static WeightPair uniform(std::size_t dim);
};

/// Role assignment for one query position over indexed hazy/clear patch sets:
/// the hazy patch at the query position is the positive hazy key, remaining
/// hazy patches are negatives, every clear patch is a clear key.
struct RepartitionRoles {
    std::size_t positive_hazy = 0;
    std::vector<std::size_t> negative_hazy;
    std::vector<std::size_t> clear_keys;
};

RepartitionRoles repartition(std::size_t query_index, const std::vector<std::size_t>& hazy_patches,
                             const std::vector<std::size_t>& clear_patches);

/// Weighted mutual information l(w, z1, z2) = exp(sum_d w_d z2_d z1_d / tau).
double weighted_mi(const std::vector<double>& w, const std::vector<double>& z1,
                   const std::vector<double>& z2, double tau = 0.07);

/// P = l(w_h, z, z_{+-}) + sum_n l(w_c, z, z_{-+}^n).
double positive_mass(const EmbeddingBatch& batch, const WeightPair& weights, double tau = 0.07);

/// N = l(1-w_h, z, z_{+-}) + sum_n l(1, z, z_{--}^n) + sum_n l(1-w_c, z, z_{-+}^n).
double negative_mass(const EmbeddingBatch& batch, const WeightPair& weights, double tau = 0.07);

/// -log(P / (P + N)).
double wpnce_loss(const EmbeddingBatch& batch, const WeightPair& weights, double tau = 0.07);

/// Unweighted InfoNCE baseline over one positive and a list of negatives.
double patchnce_loss(const std::vector<double>& z, const std::vector<double>& z_pos,
                     const std::vector<std::vector<double>>& z_negs, double tau = 0.07);

struct WpnceGradients {
    double loss = 0.0;
    std::vector<double> query;
    std::vector<double> key_pos_hazy;
    std::vector<std::vector<double>> keys_clear;
    std::vector<std::vector<double>> keys_neg_hazy;
};

/// Analytic gradient of wpnce_loss with respect to the query and every key;
/// the heat weights are treated as constants.
WpnceGradients wpnce_gradients(const EmbeddingBatch& batch, const WeightPair& weights,
                               double tau = 0.07);

}  // namespace ortho
