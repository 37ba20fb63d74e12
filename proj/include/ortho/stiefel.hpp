#pragma once

#include "ortho/linalg.hpp"
#include "ortho/rng.hpp"

namespace ortho {

/// A point on St(p,n): an n x p matrix with orthonormal columns.
/// Construction checks ||Theta^T Theta - I||_F < 1e-8; with repair=true a
/// drifted matrix is re-orthonormalized instead of rejected.
class StiefelPoint {
public:
    static StiefelPoint make(Matrix theta, bool repair = false);

    const Matrix& theta() const { return theta_; }
    std::size_t n() const { return theta_.rows(); }
    std::size_t p() const { return theta_.cols(); }

    bool operator==(const StiefelPoint& other) const = default;

    /// ||Theta^T Theta - I||_F, the orthonormality drift.
    double drift() const;

    static constexpr double kConstructionTol = 1e-8;

private:
    explicit StiefelPoint(Matrix theta) : theta_(std::move(theta)) {}
    Matrix theta_;
};

/// An element of the tangent space at a Stiefel point:
/// Theta^T Z + Z^T Theta = 0, checked at construction to 1e-8 relative to
/// max(1, ||Z||_F).
class TangentVector {
public:
    static TangentVector make(StiefelPoint at, Matrix z);

    const StiefelPoint& at() const { return at_; }
    const Matrix& z() const { return z_; }

    static constexpr double kConstructionTol = 1e-8;

private:
    TangentVector(StiefelPoint at, Matrix z) : at_(std::move(at)), z_(std::move(z)) {}
    StiefelPoint at_;
    Matrix z_;
};

/// Orthogonal projection of a Euclidean gradient onto the tangent space:
///   G - (1/2) Theta Theta^T G - (1/2) Theta G^T Theta.
/// The residual G - result is trace-orthogonal to the result.
TangentVector project_to_tangent(const StiefelPoint& theta, const Matrix& euclid_grad);

/// Retraction (Theta + Z)(I + Z^T Z)^{-1/2}; the output satisfies the
/// orthonormality constraint to 1e-10.
StiefelPoint retract(const StiefelPoint& theta, const TangentVector& xi);

/// Embedded metric tr(Z1^T Z2). Both vectors must share a base point.
double inner(const TangentVector& z1, const TangentVector& z2);

/// QR-orthonormalized i.i.d. Gaussian matrix.
StiefelPoint random_point(std::size_t n, std::size_t p, Rng& rng);

/// Tangent projection of an i.i.d. Gaussian matrix.
TangentVector random_tangent(const StiefelPoint& theta, Rng& rng);

}  // namespace ortho
