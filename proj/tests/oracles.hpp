// Test-only reference implementations, written as straight-line scalar code
// so they stay independent of the library's vectorized paths.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracles {

// Plain scalar-loop matrix-vector product over row-major storage.
inline std::vector<double> matvec(const std::vector<double>& m, std::size_t rows,
                                  std::size_t cols, const std::vector<double>& v) {
    std::vector<double> out(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            out[i] += m[i * cols + j] * v[j];
        }
    }
    return out;
}

// One LSTM step with scalar input, spelled out gate by gate.
struct ScalarCellWeights {
    std::vector<double> ui, uf, uo, ug; // hidden (input_dim = 1)
    std::vector<double> wi, wf, wo, wg; // hidden x hidden row-major
    std::vector<double> bi, bf, bo, bg; // hidden
};

struct ScalarCellState {
    std::vector<double> h, c;
};

inline ScalarCellState scalar_cell_step(const ScalarCellWeights& w, double x,
                                        const ScalarCellState& s) {
    const std::size_t n = w.ui.size();
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    ScalarCellState out;
    out.h.resize(n);
    out.c.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        double zi = w.ui[k] * x + w.bi[k];
        double zf = w.uf[k] * x + w.bf[k];
        double zo = w.uo[k] * x + w.bo[k];
        double zg = w.ug[k] * x + w.bg[k];
        for (std::size_t j = 0; j < n; ++j) {
            zi += w.wi[k * n + j] * s.h[j];
            zf += w.wf[k * n + j] * s.h[j];
            zo += w.wo[k * n + j] * s.h[j];
            zg += w.wg[k * n + j] * s.h[j];
        }
        const double i = sig(zi);
        const double f = sig(zf);
        const double o = sig(zo);
        const double g = std::tanh(zg);
        out.c[k] = f * s.c[k] + i * g;
        out.h[k] = o * std::tanh(out.c[k]);
    }
    return out;
}

// Central differences, defined only for interior samples.
inline std::vector<double> central_difference(const std::vector<double>& x, double dt) {
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        out[i] = (x[i + 1] - x[i - 1]) / (2.0 * dt);
    }
    return out;
}

// Column-wise RMSE with one flat loop.
inline std::vector<double> rmse_per_step(const std::vector<double>& pred,
                                         const std::vector<double>& target,
                                         std::size_t rows, std::size_t cols) {
    std::vector<double> out(cols, 0.0);
    for (std::size_t k = 0; k < cols; ++k) {
        double ss = 0.0;
        for (std::size_t t = 0; t < rows; ++t) {
            const double e = pred[t * cols + k] - target[t * cols + k];
            ss += e * e;
        }
        out[k] = std::sqrt(ss / static_cast<double>(rows));
    }
    return out;
}

} // namespace oracles
