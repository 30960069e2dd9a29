#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "difflstm/series.hpp"

namespace difflstm {

/// Affine map from an observed data range onto a target interval.
struct ScaleParams {
    double data_min = 0.0;
    double data_max = 1.0;
    double target_lo = -0.5;
    double target_hi = 0.5;

    double scale(double x) const {
        return target_lo + (x - data_min) / (data_max - data_min) * (target_hi - target_lo);
    }
    double unscale(double y) const {
        return data_min + (y - target_lo) / (target_hi - target_lo) * (data_max - data_min);
    }
};

struct EmbeddingSpec {
    std::size_t D = 5; // embedding dimension (input window length)
    std::size_t T = 1; // time lag in samples
    std::size_t H = 10; // prediction horizon
};

/// Aligned input windows, differential input windows and multi-horizon
/// targets for both streams. Row t of X is (x_t, x_{t+T}, ..., x_{t+(D-1)T});
/// row t of Xd has the D-1 leading differential samples; Y and Yd hold the
/// H-step targets of each stream.
struct WindowedDataset {
    EmbeddingSpec spec;
    Matrix X;  // (M+1) x D
    Matrix Xd; // (M+1) x (D-1)
    Matrix Y;  // (M+1) x H
    Matrix Yd; // (M+1) x H

    std::size_t count() const { return X.rows; }
};

struct SavGolSpec {
    std::size_t window = 5;   // odd
    std::size_t polyorder = 3;
    double dt = 1.0;
};

struct FnnResult {
    std::size_t dim = 0;               // selected embedding dimension
    std::vector<double> fractions;     // false-neighbor fraction per tested D (1..d_max)
    bool converged = false;            // false when no D dropped below threshold
};

ScaleParams fit_scale(const Vector& values, double target_lo, double target_hi);

Series apply_scale(const ScaleParams& p, const Series& s);
Series apply_unscale(const ScaleParams& p, const Series& s);

/// First-derivative estimate via local least-squares polynomial fits.
/// Mirror-pads by window/2 samples at each end so the output length equals
/// the input length; interior estimates are exact for polynomials of degree
/// <= polyorder.
Series savitzky_golay_derivative(const Series& s, const SavGolSpec& spec);

/// Kennel false-nearest-neighbor criterion: a neighbor is false when the
/// distance growth ratio from D to D+1 dimensions exceeds rtol. Returns the
/// smallest D in 1..d_max whose false fraction drops below threshold.
FnnResult false_nearest_neighbors(const Series& s, std::size_t T, std::size_t d_max,
                                  double rtol = 10.0, double threshold = 0.01);

WindowedDataset build_windows(const Series& values, const Series& diffs,
                              const EmbeddingSpec& spec);

std::pair<WindowedDataset, WindowedDataset>
split_train_test(const WindowedDataset& ds, double train_frac);

/// Reads one column of a CSV file. A non-numeric first row is treated as a
/// header and skipped.
Vector read_csv_column(const std::string& path, std::size_t column = 0);

} // namespace difflstm
