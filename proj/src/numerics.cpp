#include "difflstm/numerics.hpp"

#include <cmath>
#include <string>

namespace difflstm {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

void check_same_len(const Vector& a, const Vector& b, const char* op) {
    if (a.size() != b.size()) {
        throw ShapeError(std::string(op) + ": length mismatch " +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
}

} // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) {
        w = splitmix64(s);
    }
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

std::size_t Rng::next_below(std::size_t n) {
    // Modulo bias is negligible for n << 2^64 but reject anyway.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
}

Vector matvec(const Matrix& m, const Vector& v) {
    if (m.cols != v.size()) {
        throw ShapeError("matvec: matrix cols " + std::to_string(m.cols) +
                         " != vector len " + std::to_string(v.size()));
    }
    Vector out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double acc = 0.0;
        const double* row = m.data.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) {
            acc += row[j] * v[j];
        }
        out[i] = acc;
    }
    return out;
}

Vector matvec_transposed(const Matrix& m, const Vector& v) {
    if (m.rows != v.size()) {
        throw ShapeError("matvec_transposed: matrix rows " + std::to_string(m.rows) +
                         " != vector len " + std::to_string(v.size()));
    }
    Vector out(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.data.data() + i * m.cols;
        const double vi = v[i];
        for (std::size_t j = 0; j < m.cols; ++j) {
            out[j] += row[j] * vi;
        }
    }
    return out;
}

Vector vec_add(const Vector& a, const Vector& b) {
    check_same_len(a, b, "vec_add");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Vector vec_sub(const Vector& a, const Vector& b) {
    check_same_len(a, b, "vec_sub");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Vector vec_mul(const Vector& a, const Vector& b) {
    check_same_len(a, b, "vec_mul");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

double sigmoid(double x) {
    // Split on sign to avoid overflow in exp for large |x|.
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Vector vec_sigmoid(const Vector& a) {
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = sigmoid(a[i]);
    return out;
}

Vector vec_tanh(const Vector& a) {
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::tanh(a[i]);
    return out;
}

void vec_axpy(Vector& a, double s, const Vector& b) {
    check_same_len(a, b, "vec_axpy");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

void add_outer(Matrix& m, const Vector& u, const Vector& v) {
    if (m.rows != u.size() || m.cols != v.size()) {
        throw ShapeError("add_outer: shape mismatch");
    }
    for (std::size_t i = 0; i < u.size(); ++i) {
        double* row = m.data.data() + i * m.cols;
        for (std::size_t j = 0; j < v.size(); ++j) {
            row[j] += u[i] * v[j];
        }
    }
}

Matrix uniform_init(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
    if (!(lo < hi)) {
        throw ParamError("uniform_init: lo must be < hi");
    }
    Matrix m(rows, cols);
    for (auto& x : m.data) x = rng.uniform(lo, hi);
    return m;
}

Vector uniform_init_vec(Rng& rng, std::size_t len, double lo, double hi) {
    if (!(lo < hi)) {
        throw ParamError("uniform_init_vec: lo must be < hi");
    }
    Vector v(len);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

bool all_finite(const Vector& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

bool all_finite(const Matrix& m) {
    return all_finite(m.data);
}

} // namespace difflstm
