#include "ortho/stiefel.hpp"

#include <cmath>
#include <string>

namespace ortho {

namespace {

double orthonormality_drift(const Matrix& theta) {
    const Matrix gram = matmul(transpose(theta), theta);
    return frob_norm(sub(gram, Matrix::identity(theta.cols())));
}

}  // namespace

StiefelPoint StiefelPoint::make(Matrix theta, bool repair) {
    if (theta.rows() < theta.cols() || theta.cols() == 0) {
        throw DimensionError("StiefelPoint: need n >= p >= 1, got " + std::to_string(theta.rows()) +
                             "x" + std::to_string(theta.cols()));
    }
    double drift = orthonormality_drift(theta);
    if (drift >= kConstructionTol) {
        if (!repair) {
            throw ShapeError("StiefelPoint: columns not orthonormal (drift " +
                             std::to_string(drift) + ")");
        }
        theta = qr_orthonormalize(theta);
    }
    return StiefelPoint(std::move(theta));
}

double StiefelPoint::drift() const { return orthonormality_drift(theta_); }

TangentVector TangentVector::make(StiefelPoint at, Matrix z) {
    if (z.rows() != at.n() || z.cols() != at.p()) {
        throw DimensionError("TangentVector: z is " + std::to_string(z.rows()) + "x" +
                             std::to_string(z.cols()) + ", base point is " +
                             std::to_string(at.n()) + "x" + std::to_string(at.p()));
    }
    const Matrix tz = matmul(transpose(at.theta()), z);
    const double residual = frob_norm(add(tz, transpose(tz)));
    // rounding in the projection scales with ||z||, so the tolerance must too
    if (residual >= kConstructionTol * std::max(1.0, frob_norm(z))) {
        throw ShapeError("TangentVector: Theta^T Z + Z^T Theta residual " +
                         std::to_string(residual) + " at scale " + std::to_string(frob_norm(z)));
    }
    return TangentVector(std::move(at), std::move(z));
}

TangentVector project_to_tangent(const StiefelPoint& theta, const Matrix& euclid_grad) {
    const Matrix& t = theta.theta();
    if (euclid_grad.rows() != theta.n() || euclid_grad.cols() != theta.p()) {
        throw DimensionError("project_to_tangent: gradient is " +
                             std::to_string(euclid_grad.rows()) + "x" +
                             std::to_string(euclid_grad.cols()) + ", point is " +
                             std::to_string(theta.n()) + "x" + std::to_string(theta.p()));
    }
    // G - 1/2 Theta (Theta^T G) - 1/2 Theta (G^T Theta), applied twice: when
    // the base point carries orthonormality drift d, one application leaves a
    // tangency residual of order d * ||G||; the second shrinks it to d^2.
    Matrix z = euclid_grad;
    for (int pass = 0; pass < 2; ++pass) {
        const Matrix tz = matmul(transpose(t), z);
        z = sub(z, matmul(t, scale(add(tz, transpose(tz)), 0.5)));
    }
    return TangentVector::make(theta, std::move(z));
}

StiefelPoint retract(const StiefelPoint& theta, const TangentVector& xi) {
    if (!(xi.at() == theta)) {
        throw BasePointError("retract: tangent vector is based at a different point");
    }
    const Matrix& z = xi.z();
    const Matrix gram = add(Matrix::identity(theta.p()), matmul(transpose(z), z));
    // I + Z^T Z >= I, so the SPD precondition holds for any valid tangent.
    const Matrix factor = spd_inv_sqrt(gram);
    Matrix mapped = matmul(add(theta.theta(), z), factor);
    return StiefelPoint::make(std::move(mapped));
}

double inner(const TangentVector& z1, const TangentVector& z2) {
    if (!(z1.at() == z2.at())) {
        throw BasePointError("inner: tangent vectors have different base points");
    }
    return frob_inner(z1.z(), z2.z());
}

StiefelPoint random_point(std::size_t n, std::size_t p, Rng& rng) {
    if (n < p || p == 0) {
        throw DimensionError("random_point: need n >= p >= 1, got n=" + std::to_string(n) +
                             " p=" + std::to_string(p));
    }
    return StiefelPoint::make(qr_orthonormalize(gaussian_matrix(n, p, rng)));
}

TangentVector random_tangent(const StiefelPoint& theta, Rng& rng) {
    return project_to_tangent(theta, gaussian_matrix(theta.n(), theta.p(), rng));
}

}  // namespace ortho
