#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "ortho/errors.hpp"
#include "ortho/rng.hpp"

namespace ortho {

/// Dense real64 matrix, row-major, value semantics. The single numeric
/// carrier for parameters, features and gradients throughout the library.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(const std::vector<double>& entries);
    /// n x 1 column vector.
    static Matrix column(const std::vector<double>& entries);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool operator==(const Matrix& other) const = default;

    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Elementwise and structural operations
// ---------------------------------------------------------------------------

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
/// Elementwise (Hadamard) product.
Matrix hadamard(const Matrix& a, const Matrix& b);

inline Matrix operator*(const Matrix& a, const Matrix& b) { return matmul(a, b); }
inline Matrix operator+(const Matrix& a, const Matrix& b) { return add(a, b); }
inline Matrix operator-(const Matrix& a, const Matrix& b) { return sub(a, b); }
inline Matrix operator*(double s, const Matrix& a) { return scale(a, s); }
inline Matrix operator*(const Matrix& a, double s) { return scale(a, s); }

double trace(const Matrix& a);
double frob_norm(const Matrix& a);
/// Frobenius inner product <a, b> = tr(a^T b).
double frob_inner(const Matrix& a, const Matrix& b);

double determinant(const Matrix& a);

// ---------------------------------------------------------------------------
// Factorizations
// ---------------------------------------------------------------------------

struct EigResult {
    std::vector<double> values;  ///< ascending
    Matrix vectors;              ///< columns; a == V diag(values) V^T
};

/// Symmetric eigendecomposition by cyclic Jacobi sweeps. Input must be
/// symmetric within 1e-12 relative tolerance; sweeps run until the
/// off-diagonal Frobenius norm falls below 1e-14 * ||a||_F (100 sweep cap).
EigResult sym_eig(const Matrix& a);

/// Inverse square root of a symmetric positive definite matrix,
/// V diag(lambda^{-1/2}) V^T. Minimum eigenvalue must exceed 1e-12.
Matrix spd_inv_sqrt(const Matrix& a);

/// Orthonormal basis for the column span (modified Gram-Schmidt with
/// reorthogonalization). Requires rows >= cols and full column rank;
/// sign convention: diagonal of the implicit R factor is nonnegative.
Matrix qr_orthonormalize(const Matrix& a);

// ---------------------------------------------------------------------------
// Random generation
// ---------------------------------------------------------------------------

/// i.i.d. standard normal entries.
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng);

// ---------------------------------------------------------------------------
// CSV interchange: one row per line, comma-separated, 17 significant digits.
// ---------------------------------------------------------------------------

void write_csv(const Matrix& a, const std::string& path);
Matrix read_csv(const std::string& path);

/// Formats one double the way the CSV layer does (17 significant digits).
std::string format_full(double v);

}  // namespace ortho
