#pragma once

#include <cmath>
#include <vector>

#include "ortho/linalg.hpp"
#include "ortho/rng.hpp"

namespace ortho::testutil {

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

inline bool matrix_close(const Matrix& a, const Matrix& b, double tol) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    return max_abs_diff(a, b) <= tol;
}

inline Matrix random_symmetric(std::size_t n, Rng& rng) {
    Matrix m = gaussian_matrix(n, n, rng);
    return scale(add(m, transpose(m)), 0.5);
}

/// Relative agreement between an analytic and a finite-difference value,
/// with an absolute floor for near-zero gradients.
inline bool grad_close(double analytic, double fd, double rel_tol, double abs_floor = 1e-8) {
    const double diff = std::abs(analytic - fd);
    if (diff <= abs_floor) return true;
    return diff <= rel_tol * std::max(std::abs(analytic), std::abs(fd));
}

}  // namespace ortho::testutil
