#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "difflstm/errors.hpp"

namespace difflstm {

using Vector = std::vector<double>;

/// Dense row-major matrix. Sizes here never exceed a few hundred entries,
/// so there is no BLAS backend and no attempt at blocking.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::size_t size() const { return rows * cols; }

    bool operator==(const Matrix&) const = default;
};

/// Deterministic xoshiro256** generator seeded through splitmix64.
/// The algorithm is fixed; identical seeds give identical streams on
/// every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n). n must be > 0.
    std::size_t next_below(std::size_t n);

private:
    std::uint64_t state_[4];
};

Vector matvec(const Matrix& m, const Vector& v);

/// m^T v without materializing the transpose.
Vector matvec_transposed(const Matrix& m, const Vector& v);

Vector vec_add(const Vector& a, const Vector& b);
Vector vec_sub(const Vector& a, const Vector& b);
Vector vec_mul(const Vector& a, const Vector& b);
Vector vec_sigmoid(const Vector& a);
Vector vec_tanh(const Vector& a);

double sigmoid(double x);

/// a += s * b
void vec_axpy(Vector& a, double s, const Vector& b);

/// m += outer(u, v), with m sized u.len x v.len.
void add_outer(Matrix& m, const Vector& u, const Vector& v);

Matrix uniform_init(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi);
Vector uniform_init_vec(Rng& rng, std::size_t len, double lo, double hi);

bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

} // namespace difflstm
