#include "ortho/wpnce.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

namespace ortho {

namespace {

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

void require_unit(const std::vector<double>& v, const char* role) {
    if (std::abs(norm2(v) - 1.0) >= 1e-10) {
        throw ShapeError(std::string("EmbeddingBatch: ") + role + " is not unit norm (|" +
                         std::to_string(norm2(v)) + " - 1| >= 1e-10)");
    }
}

void require_dim(const std::vector<double>& v, std::size_t dim, const char* role) {
    if (v.size() != dim) {
        throw DimensionError(std::string("EmbeddingBatch: ") + role + " has dimension " +
                             std::to_string(v.size()) + ", expected " + std::to_string(dim));
    }
}

EmbeddingBatch assemble(std::vector<double> query, std::vector<double> key_pos_hazy,
                        std::vector<std::vector<double>> keys_clear,
                        std::vector<std::vector<double>> keys_neg_hazy) {
    EmbeddingBatch b;
    b.query = std::move(query);
    b.key_pos_hazy = std::move(key_pos_hazy);
    b.keys_clear = std::move(keys_clear);
    b.keys_neg_hazy = std::move(keys_neg_hazy);
    return b;
}

}  // namespace

EmbeddingBatch EmbeddingBatch::make(std::vector<double> query, std::vector<double> key_pos_hazy,
                                    std::vector<std::vector<double>> keys_clear,
                                    std::vector<std::vector<double>> keys_neg_hazy) {
    const std::size_t dim = query.size();
    if (dim == 0) throw DimensionError("EmbeddingBatch: empty query");
    if (keys_clear.empty()) {
        throw DimensionError("EmbeddingBatch: need at least one clear key");
    }
    require_dim(key_pos_hazy, dim, "positive hazy key");
    require_unit(query, "query");
    require_unit(key_pos_hazy, "positive hazy key");
    for (const auto& k : keys_clear) {
        require_dim(k, dim, "clear key");
        require_unit(k, "clear key");
    }
    for (const auto& k : keys_neg_hazy) {
        require_dim(k, dim, "negative hazy key");
        require_unit(k, "negative hazy key");
    }
    return assemble(std::move(query), std::move(key_pos_hazy), std::move(keys_clear),
                    std::move(keys_neg_hazy));
}

EmbeddingBatch EmbeddingBatch::make_unchecked(std::vector<double> query,
                                              std::vector<double> key_pos_hazy,
                                              std::vector<std::vector<double>> keys_clear,
                                              std::vector<std::vector<double>> keys_neg_hazy) {
    return assemble(std::move(query), std::move(key_pos_hazy), std::move(keys_clear),
                    std::move(keys_neg_hazy));
}

WeightPair WeightPair::make(std::vector<double> w_h, std::vector<double> w_c) {
    if (w_h.size() != w_c.size() || w_h.empty()) {
        throw DimensionError("WeightPair: w_h and w_c must have equal nonzero dimension");
    }
    for (const auto* w : {&w_h, &w_c}) {
        double sum = 0.0;
        for (double v : *w) {
            if (v < 0.0) throw ParameterError("WeightPair: negative entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) >= 1e-12) {
            throw ParameterError("WeightPair: entries sum to " + std::to_string(sum) +
                                 ", not 1 within 1e-12");
        }
    }
    WeightPair p;
    p.w_h = std::move(w_h);
    p.w_c = std::move(w_c);
    return p;
}

WeightPair WeightPair::uniform(std::size_t dim) {
    std::vector<double> w(dim, 1.0 / static_cast<double>(dim));
    WeightPair p;
    p.w_h = w;
    p.w_c = std::move(w);
    return p;
}

RepartitionRoles repartition(std::size_t query_index, const std::vector<std::size_t>& hazy_patches,
                             const std::vector<std::size_t>& clear_patches) {
    const auto it = std::find(hazy_patches.begin(), hazy_patches.end(), query_index);
    if (it == hazy_patches.end()) {
        throw IndexError("repartition: query position " + std::to_string(query_index) +
                         " not present in the hazy patch set");
    }
    if (clear_patches.empty()) {
        throw IndexError("repartition: no clear patches; positive mass would be undefined");
    }
    RepartitionRoles roles;
    roles.positive_hazy = query_index;
    for (std::size_t idx : hazy_patches) {
        if (idx != query_index) roles.negative_hazy.push_back(idx);
    }
    roles.clear_keys = clear_patches;
    return roles;
}

namespace {

void require_tau(double tau) {
    if (!(tau > 0.0)) throw ParameterError("temperature tau must be > 0");
}

// sum_d w_d * z2_d * z1_d
double weighted_dot(const std::vector<double>& w, const std::vector<double>& z1,
                    const std::vector<double>& z2) {
    double s = 0.0;
    for (std::size_t d = 0; d < w.size(); ++d) s += w[d] * z2[d] * z1[d];
    return s;
}

double plain_dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) s += a[d] * b[d];
    return s;
}

void require_weights_dim(const EmbeddingBatch& batch, const WeightPair& weights) {
    if (weights.w_h.size() != batch.dim()) {
        throw DimensionError("weights dimension " + std::to_string(weights.w_h.size()) +
                             " does not match embeddings " + std::to_string(batch.dim()));
    }
}

std::vector<double> complement(const std::vector<double>& w) {
    std::vector<double> c(w.size());
    for (std::size_t d = 0; d < w.size(); ++d) c[d] = 1.0 - w[d];
    return c;
}

}  // namespace

double weighted_mi(const std::vector<double>& w, const std::vector<double>& z1,
                   const std::vector<double>& z2, double tau) {
    require_tau(tau);
    if (w.size() != z1.size() || z1.size() != z2.size()) {
        throw DimensionError("weighted_mi: dimension mismatch");
    }
    return std::exp(weighted_dot(w, z1, z2) / tau);
}

double positive_mass(const EmbeddingBatch& batch, const WeightPair& weights, double tau) {
    require_tau(tau);
    require_weights_dim(batch, weights);
    double mass = std::exp(weighted_dot(weights.w_h, batch.query, batch.key_pos_hazy) / tau);
    for (const auto& zc : batch.keys_clear) {
        mass += std::exp(weighted_dot(weights.w_c, batch.query, zc) / tau);
    }
    return mass;
}

double negative_mass(const EmbeddingBatch& batch, const WeightPair& weights, double tau) {
    require_tau(tau);
    require_weights_dim(batch, weights);
    const std::vector<double> one_minus_wh = complement(weights.w_h);
    const std::vector<double> one_minus_wc = complement(weights.w_c);
    double mass = std::exp(weighted_dot(one_minus_wh, batch.query, batch.key_pos_hazy) / tau);
    for (const auto& zn : batch.keys_neg_hazy) {
        mass += std::exp(plain_dot(batch.query, zn) / tau);  // weight = all-ones vector
    }
    for (const auto& zc : batch.keys_clear) {
        mass += std::exp(weighted_dot(one_minus_wc, batch.query, zc) / tau);
    }
    return mass;
}

double wpnce_loss(const EmbeddingBatch& batch, const WeightPair& weights, double tau) {
    const double p = positive_mass(batch, weights, tau);
    const double n = negative_mass(batch, weights, tau);
    return std::log(p + n) - std::log(p);
}

double patchnce_loss(const std::vector<double>& z, const std::vector<double>& z_pos,
                     const std::vector<std::vector<double>>& z_negs, double tau) {
    require_tau(tau);
    if (z.size() != z_pos.size()) throw DimensionError("patchnce_loss: dimension mismatch");
    if (z_negs.empty()) {
        std::cerr << "patchnce_loss: no negatives, loss degenerates to 0\n";
        return 0.0;
    }
    const double pos = std::exp(plain_dot(z, z_pos) / tau);
    double denom = pos;
    for (const auto& zn : z_negs) {
        if (zn.size() != z.size()) throw DimensionError("patchnce_loss: dimension mismatch");
        denom += std::exp(plain_dot(z, zn) / tau);
    }
    return std::log(denom) - std::log(pos);
}

WpnceGradients wpnce_gradients(const EmbeddingBatch& batch, const WeightPair& weights,
                               double tau) {
    require_tau(tau);
    require_weights_dim(batch, weights);
    const std::size_t dim = batch.dim();
    const double inv_tau = 1.0 / tau;
    const std::vector<double> one_minus_wh = complement(weights.w_h);
    const std::vector<double> one_minus_wc = complement(weights.w_c);

    // exponential terms
    const double a = std::exp(weighted_dot(weights.w_h, batch.query, batch.key_pos_hazy) / tau);
    std::vector<double> b(batch.keys_clear.size());
    for (std::size_t n = 0; n < b.size(); ++n) {
        b[n] = std::exp(weighted_dot(weights.w_c, batch.query, batch.keys_clear[n]) / tau);
    }
    const double c = std::exp(weighted_dot(one_minus_wh, batch.query, batch.key_pos_hazy) / tau);
    std::vector<double> dneg(batch.keys_neg_hazy.size());
    for (std::size_t m = 0; m < dneg.size(); ++m) {
        dneg[m] = std::exp(plain_dot(batch.query, batch.keys_neg_hazy[m]) / tau);
    }
    std::vector<double> g(batch.keys_clear.size());
    for (std::size_t n = 0; n < g.size(); ++n) {
        g[n] = std::exp(weighted_dot(one_minus_wc, batch.query, batch.keys_clear[n]) / tau);
    }

    double p = a;
    for (double v : b) p += v;
    double nmass = c;
    for (double v : dneg) nmass += v;
    for (double v : g) nmass += v;

    // dL/d(term in P) and dL/d(term in N) for L = log(P+N) - log(P)
    const double dP = 1.0 / (p + nmass) - 1.0 / p;
    const double dN = 1.0 / (p + nmass);

    WpnceGradients out;
    out.loss = std::log(p + nmass) - std::log(p);
    out.query.assign(dim, 0.0);
    out.key_pos_hazy.assign(dim, 0.0);
    out.keys_clear.assign(batch.keys_clear.size(), std::vector<double>(dim, 0.0));
    out.keys_neg_hazy.assign(batch.keys_neg_hazy.size(), std::vector<double>(dim, 0.0));

    for (std::size_t d = 0; d < dim; ++d) {
        const double zd = batch.query[d];
        const double posd = batch.key_pos_hazy[d];
        double dq = dP * a * weights.w_h[d] * posd + dN * c * one_minus_wh[d] * posd;
        out.key_pos_hazy[d] =
            inv_tau * (dP * a * weights.w_h[d] * zd + dN * c * one_minus_wh[d] * zd);
        for (std::size_t n = 0; n < batch.keys_clear.size(); ++n) {
            const double kd = batch.keys_clear[n][d];
            dq += dP * b[n] * weights.w_c[d] * kd + dN * g[n] * one_minus_wc[d] * kd;
            out.keys_clear[n][d] =
                inv_tau * (dP * b[n] * weights.w_c[d] * zd + dN * g[n] * one_minus_wc[d] * zd);
        }
        for (std::size_t m = 0; m < batch.keys_neg_hazy.size(); ++m) {
            dq += dN * dneg[m] * batch.keys_neg_hazy[m][d];
            out.keys_neg_hazy[m][d] = inv_tau * dN * dneg[m] * zd;
        }
        out.query[d] = inv_tau * dq;
    }
    return out;
}

}  // namespace ortho
