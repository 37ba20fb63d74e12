#include <cmath>

#include "doctest.h"
#include "ortho/omlp.hpp"
#include "test_util.hpp"

using namespace ortho;
using namespace ortho::testutil;

namespace {

// scalar probe functional L = <output, R>, so dL/d(output) = R
double probe_loss(const Omlp& net, const Matrix& input, const Matrix& r) {
    return frob_inner(net.forward(input).first, r);
}

// smallest |pre-activation| over the layers that feed a ReLU
double kink_margin(const Omlp& net, const Matrix& input) {
    const ActivationTape tape = net.forward(input).second;
    double margin = 1e300;
    for (std::size_t l = 0; l + 1 < tape.pre_activations.size(); ++l) {
        for (double v : tape.pre_activations[l].data()) {
            margin = std::min(margin, std::abs(v));
        }
    }
    return margin;
}

Matrix input_away_from_kinks(const Omlp& net, std::size_t batch, Rng& rng) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        Matrix candidate = gaussian_matrix(batch, net.d_in(), rng);
        if (kink_margin(net, candidate) > 1e-3) return candidate;
    }
    FAIL("could not find an input away from ReLU kinks");
    return Matrix();
}

void check_gradients_fd(Omlp& net, const Matrix& input, double rel_tol,
                        std::size_t max_coords_per_slot, Rng& rng) {
    const Matrix r = gaussian_matrix(input.rows(), net.d_out(), rng);
    const auto [output, tape] = net.forward(input);
    const MlpGradients grads = net.backward(tape, r);
    const double h = 1e-6;

    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        for (int which = 0; which < 2; ++which) {
            Matrix& param =
                which == 0 ? net.layer(l).weight.value : net.layer(l).bias.value;
            const Matrix& analytic =
                which == 0 ? grads.weight_grads[l] : grads.bias_grads[l];
            const std::size_t total = param.size();
            const std::size_t ncheck = std::min(total, max_coords_per_slot);
            for (std::size_t k = 0; k < ncheck; ++k) {
                const std::size_t idx =
                    total <= max_coords_per_slot ? k : rng.uniform_below(total);
                const double saved = param.data()[idx];
                param.data()[idx] = saved + h;
                const double up = probe_loss(net, input, r);
                param.data()[idx] = saved - h;
                const double down = probe_loss(net, input, r);
                param.data()[idx] = saved;
                const double fd = (up - down) / (2.0 * h);
                REQUIRE(grad_close(analytic.data()[idx], fd, rel_tol));
            }
        }
    }

    // input gradient through the same probe
    Matrix in = input;
    for (std::size_t k = 0; k < std::min<std::size_t>(in.size(), max_coords_per_slot); ++k) {
        const std::size_t idx = rng.uniform_below(in.size());
        const double saved = in.data()[idx];
        in.data()[idx] = saved + h;
        const double up = probe_loss(net, in, r);
        in.data()[idx] = saved - h;
        const double down = probe_loss(net, in, r);
        in.data()[idx] = saved;
        const double fd = (up - down) / (2.0 * h);
        REQUIRE(grad_close(grads.input_grad.data()[idx], fd, rel_tol));
    }
}

}  // namespace

TEST_CASE("forward closed forms") {
    Rng rng(307);

    // zero input, zero biases -> zero output
    Omlp net = Omlp::create({4, 4, 4}, rng);
    Matrix out = net.forward(Matrix(3, 4)).first;
    CHECK(frob_norm(out) == 0.0);

    // single square layer with identity weight and zero bias is the identity
    Omlp id_net = Omlp::create({3, 3}, rng);
    id_net.layer(0).weight.value = Matrix::identity(3);
    Matrix x = gaussian_matrix(2, 3, rng);
    CHECK(matrix_close(id_net.forward(x).first, x, 0.0));

    // hand affine evaluation: 3->2, bias [0.5,-0.5], input [1,2,7]
    Omlp affine = Omlp::create({3, 2}, rng);
    affine.layer(0).weight.value = Matrix{{1, 0}, {0, 1}, {0, 0}};
    affine.layer(0).bias.value = Matrix{{0.5, -0.5}};
    Matrix result = affine.forward(Matrix{{1, 2, 7}}).first;
    CHECK(result(0, 0) == doctest::Approx(1.5));
    CHECK(result(0, 1) == doctest::Approx(1.5));

    CHECK_THROWS_AS(net.forward(Matrix(3, 5)), DimensionError);
}

TEST_CASE("construction constraints") {
    Rng rng(311);
    CHECK_THROWS_AS(Omlp::create({4}, rng), DimensionError);
    CHECK_THROWS_AS(Omlp::create({4, 8}, rng), DimensionError);  // widths must not grow
    Omlp net = Omlp::create({8, 4, 2}, rng);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        CHECK(net.layer(l).weight.kind == ParamKind::StiefelConstrained);
        CHECK(net.layer(l).weight.as_stiefel().drift() < 1e-12);
        CHECK(frob_norm(net.layer(l).bias.value) == 0.0);
    }
}

TEST_CASE("backward closed forms") {
    Rng rng(313);
    Omlp net = Omlp::create({5, 3}, rng);
    Matrix x = gaussian_matrix(4, 5, rng);
    const auto [out, tape] = net.forward(x);

    // zero upstream gradient -> all gradients zero
    MlpGradients zero = net.backward(tape, Matrix(4, 3));
    CHECK(frob_norm(zero.weight_grads[0]) == 0.0);
    CHECK(frob_norm(zero.bias_grads[0]) == 0.0);
    CHECK(frob_norm(zero.input_grad) == 0.0);

    // single linear layer: weight grad == input^T x output_grad
    Matrix og = gaussian_matrix(4, 3, rng);
    MlpGradients grads = net.backward(tape, og);
    CHECK(matrix_close(grads.weight_grads[0], matmul(transpose(x), og), 1e-14));

    CHECK_THROWS_AS(net.backward(tape, Matrix(4, 2)), TapeError);
}

TEST_CASE("gradients match central finite differences") {
    Rng rng(317);
    const std::size_t widths_pool[3] = {4, 16, 256};
    for (std::size_t depth = 1; depth <= 3; ++depth) {
        for (std::size_t w : widths_pool) {
            std::vector<std::size_t> widths(depth + 1, w);
            Omlp net = Omlp::create(widths, rng);
            Matrix input = input_away_from_kinks(net, 2, rng);
            check_gradients_fd(net, input, 1e-5, w >= 256 ? 8 : 20, rng);
        }
    }
}

TEST_CASE("orthogonal weights act isometrically") {
    Rng rng(331);

    // square orthogonal layer preserves norms exactly
    Omlp square = Omlp::create({6, 6}, rng);
    Matrix x = gaussian_matrix(1, 6, rng);
    Matrix y = square.forward(x).first;
    CHECK(std::abs(frob_norm(y) - frob_norm(x)) < 1e-10);

    // tall layer contracts, with equality on the row space of W^T
    Omlp tall = Omlp::create({6, 3}, rng);
    Matrix any = gaussian_matrix(1, 6, rng);
    CHECK(frob_norm(tall.forward(any).first) <= frob_norm(any) + 1e-12);
    Matrix coeffs = gaussian_matrix(1, 3, rng);
    Matrix in_row_space = matmul(coeffs, transpose(tall.layer(0).weight.value));
    CHECK(std::abs(frob_norm(tall.forward(in_row_space).first) - frob_norm(in_row_space)) <
          1e-10);
}

TEST_CASE("weights stay on the manifold through optimizer steps") {
    Rng rng(337);
    Omlp net = Omlp::create({8, 4, 4}, rng);
    for (int step = 0; step < 50; ++step) {
        Matrix input = gaussian_matrix(3, 8, rng);
        const auto [out, tape] = net.forward(input);
        MlpGradients grads = net.backward(tape, gaussian_matrix(3, 4, rng));
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            net.layer(l).weight = rsgd_step(net.layer(l).weight, grads.weight_grads[l], 1e-2);
            net.layer(l).bias = adam_step(net.layer(l).bias, grads.bias_grads[l], 1e-3);
        }
    }
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        CHECK(net.layer(l).weight.as_stiefel().drift() < 1e-8);
    }
}
