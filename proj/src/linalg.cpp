#include "ortho/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ortho {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(op) + ": shapes " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()) + " do not match");
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                             " does not equal rows*cols = " + std::to_string(rows_ * cols_));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(const std::vector<double>& entries) {
    Matrix m(entries.size(), entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) m(i, i) = entries[i];
    return m;
}

Matrix Matrix::column(const std::vector<double>& entries) {
    return Matrix(entries.size(), 1, entries);
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                             std::to_string(b.rows()) + " do not match");
    }
    Matrix c(a.rows(), b.cols());
    // i-k-j order keeps the inner loop contiguous for row-major storage.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) {
                c(i, j) += aik * b(k, j);
            }
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "sub");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

Matrix scale(const Matrix& a, double s) {
    Matrix c = a;
    for (double& v : c.data()) v *= s;
    return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= b.data()[i];
    return c;
}

double trace(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw DimensionError("trace: matrix is " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + ", not square");
    }
    double t = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
    return t;
}

double frob_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

double frob_inner(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "frob_inner");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

double determinant(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw DimensionError("determinant: matrix not square");
    }
    const std::size_t n = a.rows();
    Matrix lu = a;
    double det = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        // partial pivot
        std::size_t pivot = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu(i, k)) > std::abs(lu(pivot, k))) pivot = i;
        if (lu(pivot, k) == 0.0) return 0.0;
        if (pivot != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu(pivot, j), lu(k, j));
            det = -det;
        }
        det *= lu(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu(i, k) / lu(k, k);
            for (std::size_t j = k; j < n; ++j) lu(i, j) -= f * lu(k, j);
        }
    }
    return det;
}

EigResult sym_eig(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw ShapeError("sym_eig: matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", not square");
    }
    const std::size_t n = a.rows();
    const double norm = frob_norm(a);
    {
        const double asym = frob_norm(sub(a, transpose(a)));
        if (asym > 1e-12 * std::max(1.0, norm)) {
            throw ShapeError("sym_eig: input asymmetric (relative residual " +
                             std::to_string(asym / std::max(1.0, norm)) + ")");
        }
    }

    Matrix b = a;
    // exact symmetrization so rotations preserve symmetry bit-for-bit
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double m = 0.5 * (b(i, j) + b(j, i));
            b(i, j) = b(j, i) = m;
        }
    Matrix v = Matrix::identity(n);

    const double stop = 1e-14 * norm;
    auto offdiag = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += b(i, j) * b(i, j);
        return std::sqrt(s);
    };

    bool converged = (norm == 0.0) || (offdiag() <= stop);
    for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = b(p, q);
                if (apq == 0.0) continue;
                const double app = b(p, p);
                const double aqq = b(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double bkp = b(k, p);
                    const double bkq = b(k, q);
                    b(k, p) = b(p, k) = c * bkp - s * bkq;
                    b(k, q) = b(q, k) = s * bkp + c * bkq;
                }
                b(p, p) = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                b(q, q) = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                b(p, q) = b(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
        converged = offdiag() <= stop;
    }
    if (!converged) {
        throw ConvergenceError("sym_eig: Jacobi sweeps did not converge in 100 sweeps");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return b(i, i) < b(j, j); });

    EigResult out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = b(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

Matrix spd_inv_sqrt(const Matrix& a) {
    EigResult eig = sym_eig(a);
    if (eig.values.front() <= 1e-12) {
        throw NotPositiveDefiniteError("spd_inv_sqrt: minimum eigenvalue " +
                                       std::to_string(eig.values.front()) + " is not > 1e-12");
    }
    const std::size_t n = a.rows();
    Matrix scaled(n, n);  // V * diag(lambda^{-1/2})
    for (std::size_t j = 0; j < n; ++j) {
        const double f = 1.0 / std::sqrt(eig.values[j]);
        for (std::size_t i = 0; i < n; ++i) scaled(i, j) = eig.vectors(i, j) * f;
    }
    Matrix result = matmul(scaled, transpose(eig.vectors));
    // kill rounding asymmetry
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double m = 0.5 * (result(i, j) + result(j, i));
            result(i, j) = result(j, i) = m;
        }
    return result;
}

Matrix qr_orthonormalize(const Matrix& a) {
    if (a.rows() < a.cols()) {
        throw DimensionError("qr_orthonormalize: need rows >= cols, got " +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    }
    const std::size_t n = a.rows();
    const std::size_t p = a.cols();
    Matrix q = a;
    for (std::size_t j = 0; j < p; ++j) {
        // Two MGS passes; the second removes the rounding residue of the
        // first, which is what gets Q^T Q to the 1e-12 contract.
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i < j; ++i) {
                double dot = 0.0;
                for (std::size_t k = 0; k < n; ++k) dot += q(k, i) * q(k, j);
                for (std::size_t k = 0; k < n; ++k) q(k, j) -= dot * q(k, i);
            }
        }
        double norm = 0.0;
        for (std::size_t k = 0; k < n; ++k) norm += q(k, j) * q(k, j);
        norm = std::sqrt(norm);
        // MGS pivot = residual column norm; R_jj = norm >= 0 by construction,
        // which is the nonnegative-diagonal sign convention.
        if (norm < 1e-12) {
            throw RankError("qr_orthonormalize: rank-deficient at column " + std::to_string(j) +
                            " (pivot " + std::to_string(norm) + ")");
        }
        for (std::size_t k = 0; k < n; ++k) q(k, j) /= norm;
    }
    return q;
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.normal();
    return m;
}

std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const Matrix& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_csv: cannot open " + path);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (j) out << ',';
            out << format_full(a(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("write_csv: write failed for " + path);
}

Matrix read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_csv: cannot open " + path);
    std::vector<double> data;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t row_cols = 0;
        while (std::getline(ss, cell, ',')) {
            std::size_t consumed = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &consumed);
            } catch (const std::exception&) {
                throw IoError("read_csv: bad cell '" + cell + "' in " + path);
            }
            data.push_back(v);
            ++row_cols;
        }
        if (rows == 0) {
            cols = row_cols;
        } else if (row_cols != cols) {
            throw IoError("read_csv: ragged row in " + path);
        }
        ++rows;
    }
    return Matrix(rows, cols, std::move(data));
}

}  // namespace ortho
