#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "ortho/optim.hpp"
#include "test_util.hpp"

using namespace ortho;
using namespace ortho::testutil;

namespace {

// f(Theta) = -tr(Theta^T A Theta), the Rayleigh test objective
double rayleigh_objective(const Matrix& a, const Matrix& theta) {
    return -trace(matmul(transpose(theta), matmul(a, theta)));
}

Matrix rayleigh_grad(const Matrix& a, const Matrix& theta) {
    return scale(matmul(a, theta), -2.0);
}

}  // namespace

TEST_CASE("rsgd_step basics") {
    Rng rng(211);
    StiefelPoint theta = random_point(6, 3, rng);
    ParamSlot slot = ParamSlot::stiefel(theta);

    ParamSlot unchanged = rsgd_step(slot, Matrix(6, 3), 0.1);
    CHECK(matrix_close(unchanged.value, slot.value, 1e-15));
    CHECK(unchanged.step_count == 1);

    ParamSlot stepped = rsgd_step(slot, gaussian_matrix(6, 3, rng), 0.05);
    CHECK(stepped.as_stiefel().drift() < 1e-10);

    ParamSlot euclid = ParamSlot::euclidean(Matrix(6, 3));
    CHECK_THROWS_AS(rsgd_step(euclid, Matrix(6, 3), 0.1), KindError);
    CHECK_THROWS_AS(rsgd_step(slot, Matrix(6, 3), 0.0), ParameterError);
}

TEST_CASE("rsgd on the p=1 Rayleigh problem") {
    const Matrix a = Matrix::diagonal({3, 1});

    // exactly at the unstable critical point e2 the Riemannian gradient
    // vanishes, so the step is a no-op
    ParamSlot at_e2 = ParamSlot::stiefel(StiefelPoint::make(Matrix{{0}, {1}}));
    ParamSlot stuck = rsgd_step(at_e2, rayleigh_grad(a, at_e2.value), 1e-2);
    CHECK(matrix_close(stuck.value, at_e2.value, 1e-14));

    // from a perturbed start the objective strictly decreases and the point
    // moves toward +-e1
    const double s = 1.0 / std::sqrt(1.0 + 0.01);
    Matrix start{{0.1 * s}, {1.0 * s}};
    ParamSlot slot = ParamSlot::stiefel(StiefelPoint::make(start));
    const double f0 = rayleigh_objective(a, slot.value);
    double prev_align = std::abs(slot.value(0, 0));
    for (int i = 0; i < 600; ++i) {
        slot = rsgd_step(slot, rayleigh_grad(a, slot.value), 1e-2);
    }
    const double f1 = rayleigh_objective(a, slot.value);
    CHECK(f1 < f0);
    CHECK(std::abs(slot.value(0, 0)) > prev_align);
    CHECK(f1 == doctest::Approx(-3.0).epsilon(1e-6));  // optimum = -(top eigenvalue)
}

TEST_CASE("rsgd gamma/gradient scaling equivalence") {
    Rng rng(223);
    StiefelPoint theta = random_point(8, 3, rng);
    Matrix g = gaussian_matrix(8, 3, rng);
    ParamSlot slot = ParamSlot::stiefel(theta);
    ParamSlot a = rsgd_step(slot, g, 1e-2);
    ParamSlot b = rsgd_step(slot, scale(g, 2.0), 5e-3);
    CHECK(max_abs_diff(a.value, b.value) < 1e-12);
}

TEST_CASE("rsgd strictly decreases the Rayleigh objective from non-critical points") {
    Rng rng(227);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 3 + rng.uniform_below(5);
        const std::size_t p = 1 + rng.uniform_below(n - 1);
        Matrix a = random_symmetric(n, rng);
        ParamSlot slot = ParamSlot::stiefel(random_point(n, p, rng));
        const Matrix grad = rayleigh_grad(a, slot.value);
        // random points are non-critical with probability one; guard anyway
        if (frob_norm(project_to_tangent(slot.as_stiefel(), grad).z()) < 1e-8) continue;
        const double before = rayleigh_objective(a, slot.value);
        ParamSlot after = rsgd_step(slot, grad, 1e-3);
        CHECK(rayleigh_objective(a, after.value) < before);
    }
}

TEST_CASE("adam_step first-step identity and basics") {
    // first step moves by about -lr * sign(g) when |g| >> eps
    Matrix value(1, 4);
    ParamSlot slot = ParamSlot::euclidean(value);
    Matrix g{{0.5, -3.0, 10.0, -0.01}};
    const double lr = 1e-3;
    ParamSlot out = adam_step(slot, g, lr);
    for (std::size_t j = 0; j < 4; ++j) {
        const double sign = g(0, j) > 0 ? 1.0 : -1.0;
        CHECK(out.value(0, j) == doctest::Approx(-lr * sign).epsilon(1e-5));
    }
    CHECK(out.step_count == 1);

    // zero gradient from init does not move
    ParamSlot still = adam_step(slot, Matrix(1, 4), lr);
    CHECK(matrix_close(still.value, slot.value, 0.0));

    // deterministic under identical inputs
    ParamSlot again = adam_step(slot, g, lr);
    CHECK(again.value == out.value);

    ParamSlot stiefel_slot = ParamSlot::stiefel(StiefelPoint::make(Matrix::identity(3)));
    CHECK_THROWS_AS(adam_step(stiefel_slot, Matrix::identity(3), lr), KindError);
    CHECK_THROWS_AS(adam_step(slot, Matrix(2, 2), lr), DimensionError);
}

TEST_CASE("riemannian_adam_step keeps the constraint") {
    Rng rng(229);
    ParamSlot slot = ParamSlot::stiefel(random_point(10, 4, rng));

    ParamSlot unchanged = riemannian_adam_step(slot, Matrix(10, 4), 1e-3);
    CHECK(matrix_close(unchanged.value, slot.value, 1e-15));

    for (int i = 0; i < 1000; ++i) {
        slot = riemannian_adam_step(slot, gaussian_matrix(10, 4, rng), 1e-3);
    }
    CHECK(slot.as_stiefel().drift() < 1e-8);

    ParamSlot euclid = ParamSlot::euclidean(Matrix(10, 4));
    CHECK_THROWS_AS(riemannian_adam_step(euclid, Matrix(10, 4), 1e-3), KindError);
}

TEST_CASE("rsgd and riemannian adam find the same Rayleigh optimum") {
    const Matrix a = Matrix::diagonal({5, 3, 1});
    const double optimum = -8.0;  // -(5 + 3), top-2 eigenvalue sum
    Rng rng(233);
    StiefelPoint start = random_point(3, 2, rng);

    ParamSlot sgd = ParamSlot::stiefel(start);
    ParamSlot adam = ParamSlot::stiefel(start);
    for (int i = 0; i < 4000; ++i) {
        sgd = rsgd_step(sgd, rayleigh_grad(a, sgd.value), 1e-2);
        adam = riemannian_adam_step(adam, rayleigh_grad(a, adam.value), 1e-2);
    }
    CHECK(rayleigh_objective(a, sgd.value) == doctest::Approx(optimum).epsilon(1e-8));
    CHECK(rayleigh_objective(a, adam.value) == doctest::Approx(optimum).epsilon(1e-6));
}

TEST_CASE("learning-rate schedule") {
    Schedule s;  // defaults: 2e-4, hold 200, decay 200
    CHECK(lr_at_epoch(s, 0) == doctest::Approx(2e-4));
    CHECK(lr_at_epoch(s, 199) == doctest::Approx(2e-4));
    CHECK(lr_at_epoch(s, 300) == doctest::Approx(1e-4));
    CHECK(lr_at_epoch(s, 400) == 0.0);
    CHECK(lr_at_epoch(s, 1000) == 0.0);
    for (std::size_t e = 0; e < 410; ++e) {
        CHECK(lr_at_epoch(s, e) >= 0.0);
        if (e > 0) CHECK(lr_at_epoch(s, e) <= lr_at_epoch(s, e - 1));
    }
}

TEST_CASE("checkpoint bundle round trip") {
    Rng rng(239);
    ParamSlot slot = ParamSlot::stiefel(random_point(5, 2, rng));
    slot = rsgd_step(slot, gaussian_matrix(5, 2, rng), 1e-2);
    slot.adam_m = gaussian_matrix(5, 2, rng);
    slot.adam_v = gaussian_matrix(5, 2, rng);

    const std::string dir =
        (std::filesystem::temp_directory_path() / "ortho_ckpt_test").string();
    save_slot(dir, "layer0.weight", slot);
    ParamSlot loaded = load_slot(dir, "layer0.weight");
    CHECK(loaded.kind == slot.kind);
    CHECK(loaded.step_count == slot.step_count);
    CHECK(loaded.value == slot.value);
    CHECK(loaded.adam_m == slot.adam_m);
    CHECK(loaded.adam_v == slot.adam_v);
    std::filesystem::remove_all(dir);
}
