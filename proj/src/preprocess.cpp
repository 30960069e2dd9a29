#include "difflstm/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace difflstm {

namespace {

// Solves the small symmetric system G x = rhs in place (partial pivoting).
Vector solve_dense(Matrix g, Vector rhs) {
    const std::size_t n = g.rows;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(g(i, k)) > std::abs(g(piv, k))) piv = i;
        }
        if (std::abs(g(piv, k)) < 1e-14) {
            throw NumericError("solve_dense: singular system");
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(g(k, j), g(piv, j));
            std::swap(rhs[k], rhs[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double m = g(i, k) / g(k, k);
            for (std::size_t j = k; j < n; ++j) g(i, j) -= m * g(k, j);
            rhs[i] -= m * rhs[k];
        }
    }
    Vector x(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double acc = rhs[ii];
        for (std::size_t j = ii + 1; j < n; ++j) acc -= g(ii, j) * x[j];
        x[ii] = acc / g(ii, ii);
    }
    return x;
}

// Convolution weights for the first derivative at the window center.
Vector savgol_derivative_weights(std::size_t window, std::size_t polyorder) {
    const long long h = static_cast<long long>(window / 2);
    const std::size_t m = polyorder + 1;
    // Moment matrix G_{a,b} = sum_j j^(a+b) over offsets j = -h..h.
    Matrix g(m, m);
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
            double s = 0.0;
            for (long long j = -h; j <= h; ++j) {
                s += std::pow(static_cast<double>(j), static_cast<double>(a + b));
            }
            g(a, b) = s;
        }
    }
    Vector e1(m, 0.0);
    e1[1] = 1.0; // pick out the linear coefficient of the local fit
    const Vector v = solve_dense(std::move(g), std::move(e1));
    Vector w(window, 0.0);
    for (long long j = -h; j <= h; ++j) {
        double acc = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            acc += v[a] * std::pow(static_cast<double>(j), static_cast<double>(a));
        }
        w[static_cast<std::size_t>(j + h)] = acc;
    }
    return w;
}

} // namespace

ScaleParams fit_scale(const Vector& values, double target_lo, double target_hi) {
    if (values.size() < 2) throw ParamError("fit_scale: need at least 2 values");
    if (!(target_hi > target_lo)) throw ParamError("fit_scale: target_hi must exceed target_lo");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (!(*hi > *lo)) throw ParamError("fit_scale: constant series has degenerate range");
    return ScaleParams{*lo, *hi, target_lo, target_hi};
}

Series apply_scale(const ScaleParams& p, const Series& s) {
    Series out = s;
    for (auto& x : out.values) x = p.scale(x);
    return out;
}

Series apply_unscale(const ScaleParams& p, const Series& s) {
    Series out = s;
    for (auto& x : out.values) x = p.unscale(x);
    return out;
}

Series savitzky_golay_derivative(const Series& s, const SavGolSpec& spec) {
    if (spec.window % 2 == 0 || spec.window <= spec.polyorder || spec.polyorder < 1) {
        throw ParamError("savitzky_golay: window must be odd and exceed polyorder >= 1");
    }
    if (s.size() < spec.window) {
        throw ParamError("savitzky_golay: series shorter than window");
    }
    const Vector w = savgol_derivative_weights(spec.window, spec.polyorder);
    const long long n = static_cast<long long>(s.size());
    const long long h = static_cast<long long>(spec.window / 2);

    auto mirrored = [&](long long idx) -> double {
        if (idx < 0) idx = -idx;
        if (idx >= n) idx = 2 * (n - 1) - idx;
        return s.values[static_cast<std::size_t>(idx)];
    };

    Series out = s;
    out.name = s.name + "_savgol";
    out.derivative_of = s.name;
    for (long long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long long j = -h; j <= h; ++j) {
            acc += w[static_cast<std::size_t>(j + h)] * mirrored(i + j);
        }
        out.values[static_cast<std::size_t>(i)] = acc / spec.dt;
    }
    return out;
}

FnnResult false_nearest_neighbors(const Series& s, std::size_t T, std::size_t d_max,
                                  double rtol, double threshold) {
    if (T == 0 || d_max == 0) throw ParamError("fnn: T and d_max must be > 0");
    if (s.size() < d_max * T + 1) {
        throw ParamError("fnn: series too short, need at least " +
                         std::to_string(d_max * T + 1) + " samples");
    }
    const Vector& x = s.values;
    FnnResult res;
    for (std::size_t d = 1; d <= d_max; ++d) {
        // Points embeddable in d dims whose (d+1)-th coordinate also exists.
        const std::size_t m = x.size() - d * T;
        std::size_t false_count = 0, counted = 0;
        for (std::size_t i = 0; i < m; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_j = m;
            for (std::size_t j = 0; j < m; ++j) {
                if (j == i) continue;
                double dist2 = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    const double diff = x[i + k * T] - x[j + k * T];
                    dist2 += diff * diff;
                }
                if (dist2 < best) {
                    best = dist2;
                    best_j = j;
                }
            }
            if (best_j == m) continue;
            const double dist = std::sqrt(best);
            const double extension = std::abs(x[i + d * T] - x[best_j + d * T]);
            ++counted;
            if (dist < 1e-12) {
                if (extension > 1e-12) ++false_count;
            } else if (extension / dist > rtol) {
                ++false_count;
            }
        }
        const double frac = counted ? static_cast<double>(false_count) / counted : 1.0;
        res.fractions.push_back(frac);
        if (frac < threshold) {
            res.dim = d;
            res.converged = true;
            return res;
        }
    }
    res.dim = d_max;
    res.converged = false;
    return res;
}

WindowedDataset build_windows(const Series& values, const Series& diffs,
                              const EmbeddingSpec& spec) {
    if (spec.D < 2 || spec.T < 1 || spec.H < 1) {
        throw ParamError("build_windows: need D >= 2, T >= 1, H >= 1");
    }
    if (values.size() != diffs.size()) {
        throw ShapeError("build_windows: value and differential series lengths differ");
    }
    const std::size_t needed = (spec.D - 1) * spec.T + spec.H + 1;
    if (values.size() < needed) {
        throw ParamError("build_windows: series length " + std::to_string(values.size()) +
                         " below required minimum " + std::to_string(needed));
    }
    const std::size_t N = values.size() - 1;
    const std::size_t M = N - (spec.D - 1) * spec.T - spec.H;

    WindowedDataset ds;
    ds.spec = spec;
    ds.X = Matrix(M + 1, spec.D);
    ds.Xd = Matrix(M + 1, spec.D - 1);
    ds.Y = Matrix(M + 1, spec.H);
    ds.Yd = Matrix(M + 1, spec.H);

    const Vector& x = values.values;
    const Vector& xd = diffs.values;
    for (std::size_t t = 0; t <= M; ++t) {
        for (std::size_t j = 0; j < spec.D; ++j) ds.X(t, j) = x[t + j * spec.T];
        for (std::size_t j = 0; j + 1 < spec.D; ++j) ds.Xd(t, j) = xd[t + j * spec.T];
        for (std::size_t k = 1; k <= spec.H; ++k) {
            ds.Y(t, k - 1) = x[t + (spec.D - 1) * spec.T + k];
            ds.Yd(t, k - 1) = xd[t + (spec.D - 2) * spec.T + k];
        }
    }
    return ds;
}

std::pair<WindowedDataset, WindowedDataset>
split_train_test(const WindowedDataset& ds, double train_frac) {
    if (!(train_frac > 0.0 && train_frac < 1.0)) {
        throw ParamError("split_train_test: train_frac must be in (0, 1)");
    }
    const std::size_t n = ds.count();
    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * train_frac));
    if (n_train == 0 || n_train == n) {
        throw ParamError("split_train_test: split would leave an empty partition");
    }

    auto slice = [&ds](std::size_t begin, std::size_t count) {
        WindowedDataset out;
        out.spec = ds.spec;
        auto take = [begin, count](const Matrix& m) {
            Matrix r(count, m.cols);
            std::copy(m.data.begin() + static_cast<long>(begin * m.cols),
                      m.data.begin() + static_cast<long>((begin + count) * m.cols),
                      r.data.begin());
            return r;
        };
        out.X = take(ds.X);
        out.Xd = take(ds.Xd);
        out.Y = take(ds.Y);
        out.Yd = take(ds.Yd);
        return out;
    };
    return {slice(0, n_train), slice(n_train, n - n_train)};
}

Vector read_csv_column(const std::string& path, std::size_t column) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    Vector out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        std::string wanted;
        bool found = false;
        while (std::getline(ss, cell, ',')) {
            if (col++ == column) {
                wanted = cell;
                found = true;
                break;
            }
        }
        if (!found) throw IoError(path + ": row has no column " + std::to_string(column));
        try {
            std::size_t pos = 0;
            const double v = std::stod(wanted, &pos);
            out.push_back(v);
        } catch (const std::exception&) {
            if (first) {
                first = false;
                continue; // header row
            }
            throw IoError(path + ": non-numeric cell '" + wanted + "'");
        }
        first = false;
    }
    if (out.empty()) throw IoError(path + ": no numeric rows");
    return out;
}

} // namespace difflstm
