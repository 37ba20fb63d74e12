#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "ortho/bench.hpp"
#include "test_util.hpp"

using namespace ortho;
using namespace ortho::testutil;

namespace {

SyntheticConfig small_config() {
    SyntheticConfig cfg;
    cfg.samples_per_domain = 96;
    cfg.epochs = 4;
    cfg.schedule = Schedule{1e-3, 2, 2};
    return cfg;
}

double channel_mean(const ChannelFeature& feat, std::size_t c) {
    double sum = 0.0;
    for (std::size_t s = 0; s < feat.positions; ++s) sum += feat.values(c, s);
    return sum / static_cast<double>(feat.positions);
}

}  // namespace

TEST_CASE("config validation") {
    SyntheticConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.related_channels = 16;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SyntheticConfig{};
    cfg.mixing_strength = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SyntheticConfig{};
    cfg.noise_sigma = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("dataset structure without mixing and noise") {
    SyntheticConfig cfg = small_config();
    cfg.mixing_strength = 0.0;
    cfg.noise_sigma = 0.0;
    const SyntheticDataset data = generate_dataset(cfg);
    REQUIRE(data.hazy.size() == cfg.samples_per_domain);
    REQUIRE(data.clear.size() == cfg.samples_per_domain);

    // related channels differ by exactly 2 mu across domains
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t c = 0; c < cfg.related_channels; ++c) {
            CHECK(channel_mean(data.hazy[i], c) == doctest::Approx(1.0));
            CHECK(channel_mean(data.clear[i], c) == doctest::Approx(-1.0));
        }
    }

    // content channels share their distribution across domains
    double hazy_sum = 0.0, clear_sum = 0.0, hazy_sq = 0.0, clear_sq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < cfg.samples_per_domain; ++i) {
        for (std::size_t c = cfg.related_channels; c < cfg.channels; ++c) {
            for (std::size_t s = 0; s < cfg.positions; ++s) {
                const double h = data.hazy[i].values(c, s);
                const double cl = data.clear[i].values(c, s);
                hazy_sum += h;
                clear_sum += cl;
                hazy_sq += h * h;
                clear_sq += cl * cl;
                ++count;
            }
        }
    }
    const double n = static_cast<double>(count);  // 96*12*8 = 9216 draws per domain
    CHECK(std::abs(hazy_sum / n) < 0.05);
    CHECK(std::abs(clear_sum / n) < 0.05);
    CHECK(hazy_sq / n == doctest::Approx(1.0).epsilon(0.08));
    CHECK(clear_sq / n == doctest::Approx(1.0).epsilon(0.08));

    CHECK(data.channel_related ==
          std::vector<bool>{true, true, true, true, false, false, false, false, false, false,
                            false, false, false, false, false, false});
}

TEST_CASE("dataset is deterministic under the seed") {
    SyntheticConfig cfg = small_config();
    const SyntheticDataset a = generate_dataset(cfg);
    const SyntheticDataset b = generate_dataset(cfg);
    REQUIRE(a.hazy.size() == b.hazy.size());
    for (std::size_t i = 0; i < a.hazy.size(); ++i) {
        CHECK(a.hazy[i].values == b.hazy[i].values);
        CHECK(a.clear[i].values == b.clear[i].values);
    }
}

TEST_CASE("per-channel threshold classifier separates the domains") {
    SyntheticConfig cfg;  // defaults: sigma = 0.05, eps = 0.1
    cfg.samples_per_domain = 256;
    const SyntheticDataset data = generate_dataset(cfg);
    std::size_t correct = 0;
    for (const ChannelFeature& feat : data.hazy) {
        if (channel_mean(feat, 0) > 0.0) ++correct;
    }
    for (const ChannelFeature& feat : data.clear) {
        if (channel_mean(feat, 0) <= 0.0) ++correct;
    }
    const double accuracy = static_cast<double>(correct) / (2.0 * cfg.samples_per_domain);
    CHECK(accuracy >= 0.95);
}

TEST_CASE("cosine similarity matrix closed forms") {
    // orthogonal columns -> identity
    Matrix ortho_cols{{1, 0}, {-1, 0}, {0, 1}, {0, 1}};
    CHECK(matrix_close(cosine_similarity_matrix(ortho_cols), Matrix::identity(2), 1e-15));

    // duplicated column -> off-diagonal 1
    Matrix dup{{1, 1}, {2, 2}, {-1, -1}};
    Matrix cos_dup = cosine_similarity_matrix(dup);
    CHECK(cos_dup(0, 1) == doctest::Approx(1.0));

    // hand dot product: columns [1,1] and [1,-1]
    Matrix hand{{1, 1}, {1, -1}};
    CHECK(cosine_similarity_matrix(hand)(0, 1) == doctest::Approx(0.0));

    // zero column -> zero entries, including its diagonal
    Matrix with_zero{{1, 0}, {1, 0}};
    Matrix cz = cosine_similarity_matrix(with_zero);
    CHECK(cz(1, 1) == 0.0);
    CHECK(cz(0, 1) == 0.0);
    CHECK(cz(0, 0) == 1.0);

    CHECK(offdiag_energy(Matrix::identity(5)) == 0.0);
    CHECK(offdiag_energy(cos_dup) == doctest::Approx(1.0));
}

TEST_CASE("evaluate on untrained nets") {
    SyntheticConfig cfg = small_config();
    const SyntheticDataset data = generate_dataset(cfg);
    Rng rng(1);
    TrainedNets nets{Omlp::create({cfg.channels, cfg.channels}, rng),
                     DwfcNet::create(cfg.channels, cfg.positions, rng)};

    // zero heads give |theta .* x| = 0, so heat vectors are uniform and the
    // related-channel mass equals the uniform share exactly
    nets.classifier.head_h().value = Matrix(1, cfg.channels);
    nets.classifier.head_c().value = Matrix(1, cfg.channels);
    const ExperimentReport report = evaluate(nets, data, cfg);
    CHECK(report.heat_mass_ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.offdiag_energy >= 0.0);
    CHECK(report.offdiag_energy <= 1.0);
}

TEST_CASE("random logits score near chance on balanced data") {
    SyntheticConfig cfg = small_config();
    cfg.samples_per_domain = 512;
    const SyntheticDataset data = generate_dataset(cfg);
    Rng rng(2024);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.hazy.size(); ++i) {
        if (rng.normal() > rng.normal()) ++correct;  // predict hazy
    }
    for (std::size_t i = 0; i < data.clear.size(); ++i) {
        if (!(rng.normal() > rng.normal())) ++correct;
    }
    const double accuracy = static_cast<double>(correct) / (2.0 * cfg.samples_per_domain);
    CHECK(accuracy > 0.45);
    CHECK(accuracy < 0.55);
}

TEST_CASE("epochs=0 run reports the untrained state") {
    SyntheticConfig cfg = small_config();
    cfg.epochs = 0;
    const TrainResult a = train(cfg);
    CHECK(a.report.loss_trace.empty());
    CHECK(a.report.offdiag_energy > 0.0);
    // untrained weights are exactly the seeded initialization
    const TrainResult b = train(cfg);
    CHECK(a.report.offdiag_energy == b.report.offdiag_energy);
    CHECK(a.report.cosine_sim == b.report.cosine_sim);
}

TEST_CASE("training is deterministic and improves the classifier") {
    SyntheticConfig cfg = small_config();
    const TrainResult a = train(cfg);
    const TrainResult b = train(cfg);
    CHECK(a.report.cosine_sim == b.report.cosine_sim);
    CHECK(a.report.dwfc_accuracy == b.report.dwfc_accuracy);
    CHECK(a.report.heat_mass_ratio == b.report.heat_mass_ratio);
    REQUIRE(a.report.loss_trace.size() == cfg.epochs);
    CHECK(a.report.dwfc_accuracy >= 0.9);
    // cross-entropy falls over training
    CHECK(a.report.loss_trace.back().ce < a.report.loss_trace.front().ce);
    // Stiefel weights stayed on the manifold
    for (std::size_t l = 0; l < a.nets.head.layer_count(); ++l) {
        CHECK(a.nets.head.layer(l).weight.as_stiefel().drift() < 1e-8);
    }
}

TEST_CASE("manifold arm beats the unconstrained arm on channel relevance") {
    SyntheticConfig cfg = small_config();
    cfg.samples_per_domain = 192;
    cfg.epochs = 8;
    cfg.schedule = Schedule{1e-3, 4, 4};
    const double manifold = train(cfg, TrainingArm::Omlp).report.offdiag_energy;
    const double unconstrained = train(cfg, TrainingArm::Unconstrained).report.offdiag_energy;
    CHECK(manifold < unconstrained);
}

TEST_CASE("divergent training saves a checkpoint and names it") {
    SyntheticConfig cfg = small_config();
    cfg.samples_per_domain = 16;
    cfg.epochs = 1;
    cfg.penalty_lambda = 1e308;  // overflows the penalty gradient into NaN
    cfg.checkpoint_dir =
        (std::filesystem::temp_directory_path() / "ortho_diverge_test").string();
    std::filesystem::remove_all(cfg.checkpoint_dir);
    try {
        train(cfg, TrainingArm::Penalty);
        FAIL("expected TrainingDivergedError");
    } catch (const TrainingDivergedError& e) {
        CHECK(e.checkpoint_path == cfg.checkpoint_dir);
        CHECK(std::filesystem::exists(std::filesystem::path(cfg.checkpoint_dir) /
                                      "head.layer0.weight.value.csv"));
    }
    std::filesystem::remove_all(cfg.checkpoint_dir);
}

TEST_CASE("unsupported weight gradient flow is rejected") {
    SyntheticConfig cfg = small_config();
    cfg.detach_weights = false;
    CHECK_THROWS_AS(train(cfg), ConfigError);
}
