#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "difflstm/preprocess.hpp"

namespace difflstm {

/// One gate of the shared cell: input weights u (hidden x input_dim),
/// recurrent weights w (hidden x hidden) and bias b (hidden).
struct GateWeights {
    Matrix u;
    Matrix w;
    Vector b;
};

/// Linear output head: w is (horizon x head_in), b is (horizon).
struct Head {
    Matrix w;
    Vector b;
};

/// All weights of the model. One cell serves both streams; the two heads
/// read the concatenation of the final hidden states of the original and
/// differential passes.
struct ModelParams {
    std::size_t input_dim = 1;
    std::size_t hidden = 10;
    std::size_t horizon = 10;

    GateWeights gate_i, gate_f, gate_o, gate_g;
    Head head_orig, head_diff;

    std::size_t head_in() const { return 2 * hidden; }

    std::size_t cell_param_count() const;
    std::size_t head_param_count() const; // per head
    std::size_t param_count() const;

    /// Zero-valued parameters with the given shape.
    static ModelParams zeros(std::size_t input_dim, std::size_t hidden, std::size_t horizon);
    /// Uniform init in [-scale, scale).
    static ModelParams init(std::size_t input_dim, std::size_t hidden, std::size_t horizon,
                            Rng& rng, double scale);

    Vector flatten() const;
    void load_flat(const Vector& flat);
};

/// Gradients share the parameter layout.
using ParamGrads = ModelParams;

struct CellState {
    Vector h;
    Vector c;
    static CellState zeros(std::size_t hidden) {
        return {Vector(hidden, 0.0), Vector(hidden, 0.0)};
    }
};

struct Prediction {
    Vector y;  // H forecasts of the original series
    Vector yd; // H forecasts of the differential series
};

struct TrainConfig {
    double lambda = 1.0;
    double learning_rate = 0.005;
    std::size_t epochs = 300;
    std::size_t batch_size = 32;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    std::optional<double> grad_clip;
};

/// Everything forward() records that backward() needs.
struct StepTrace {
    Vector x;      // step input
    Vector i, f, o, g;
    Vector c, tanh_c;
    Vector h;
    Vector c_prev, h_prev;
};

struct Tape {
    std::vector<StepTrace> orig;
    std::vector<StepTrace> diff;
    Vector features; // [h_final ; h_bar_final]
    Prediction pred;
};

CellState cell_step(const ModelParams& p, const Vector& input, const CellState& s);

/// Runs the shared cell over both windows (scalar steps, states zeroed per
/// window) and applies the two linear heads.
Tape forward(const ModelParams& p, const Vector& x_window, const Vector& xd_window);

/// Composite loss for one window: MSE(y) + lambda * MSE(yd), each normalized
/// by H.
double loss(const Prediction& pred, const Vector& target_y, const Vector& target_yd,
            double lambda);

/// Batch composite loss over the given window rows, normalized by count * H.
double batch_loss(const ModelParams& p, const WindowedDataset& ds, double lambda);

ParamGrads backward(const ModelParams& p, const Tape& tape,
                    const Vector& dloss_dy, const Vector& dloss_dyd);

struct AdamState {
    Vector m, v;
    std::size_t t = 0;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(ModelParams& params, const ParamGrads& grads, AdamState& state,
               const TrainConfig& cfg);

struct TrainResult {
    ModelParams params;
    Vector loss_history; // composite train loss per epoch
};

TrainResult train(const WindowedDataset& ds, const TrainConfig& cfg,
                  std::size_t hidden = 10);

/// Per-window predictions for the whole dataset, both streams.
std::pair<Matrix, Matrix> predict(const ModelParams& p, const WindowedDataset& ds);

void save_model(const ModelParams& p, const std::string& path);
ModelParams load_model(const std::string& path);

} // namespace difflstm
