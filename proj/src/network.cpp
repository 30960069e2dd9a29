#include "difflstm/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace difflstm {

namespace {

constexpr int kModelVersion = 1;

void append(Vector& out, const Vector& v) {
    out.insert(out.end(), v.begin(), v.end());
}

void append(Vector& out, const Matrix& m) {
    append(out, m.data);
}

std::size_t take(const Vector& flat, std::size_t pos, Vector& v) {
    std::copy(flat.begin() + static_cast<long>(pos),
              flat.begin() + static_cast<long>(pos + v.size()), v.begin());
    return pos + v.size();
}

std::size_t take(const Vector& flat, std::size_t pos, Matrix& m) {
    return take(flat, pos, m.data);
}

} // namespace

std::size_t ModelParams::cell_param_count() const {
    return 4 * (hidden * input_dim + hidden * hidden + hidden);
}

std::size_t ModelParams::head_param_count() const {
    return horizon * head_in() + horizon;
}

std::size_t ModelParams::param_count() const {
    return cell_param_count() + 2 * head_param_count();
}

ModelParams ModelParams::zeros(std::size_t input_dim, std::size_t hidden, std::size_t horizon) {
    ModelParams p;
    p.input_dim = input_dim;
    p.hidden = hidden;
    p.horizon = horizon;
    auto gate = [&] {
        return GateWeights{Matrix(hidden, input_dim), Matrix(hidden, hidden),
                           Vector(hidden, 0.0)};
    };
    p.gate_i = gate();
    p.gate_f = gate();
    p.gate_o = gate();
    p.gate_g = gate();
    p.head_orig = Head{Matrix(horizon, p.head_in()), Vector(horizon, 0.0)};
    p.head_diff = Head{Matrix(horizon, p.head_in()), Vector(horizon, 0.0)};
    return p;
}

ModelParams ModelParams::init(std::size_t input_dim, std::size_t hidden, std::size_t horizon,
                              Rng& rng, double scale) {
    ModelParams p = zeros(input_dim, hidden, horizon);
    auto fill_gate = [&](GateWeights& g) {
        g.u = uniform_init(rng, hidden, input_dim, -scale, scale);
        g.w = uniform_init(rng, hidden, hidden, -scale, scale);
        g.b = uniform_init_vec(rng, hidden, -scale, scale);
    };
    fill_gate(p.gate_i);
    fill_gate(p.gate_f);
    fill_gate(p.gate_o);
    fill_gate(p.gate_g);
    p.head_orig.w = uniform_init(rng, horizon, p.head_in(), -scale, scale);
    p.head_orig.b = uniform_init_vec(rng, horizon, -scale, scale);
    p.head_diff.w = uniform_init(rng, horizon, p.head_in(), -scale, scale);
    p.head_diff.b = uniform_init_vec(rng, horizon, -scale, scale);
    return p;
}

Vector ModelParams::flatten() const {
    Vector out;
    out.reserve(param_count());
    for (const GateWeights* g : {&gate_i, &gate_f, &gate_o, &gate_g}) {
        append(out, g->u);
        append(out, g->w);
        append(out, g->b);
    }
    for (const Head* h : {&head_orig, &head_diff}) {
        append(out, h->w);
        append(out, h->b);
    }
    return out;
}

void ModelParams::load_flat(const Vector& flat) {
    if (flat.size() != param_count()) {
        throw ShapeError("load_flat: expected " + std::to_string(param_count()) +
                         " values, got " + std::to_string(flat.size()));
    }
    std::size_t pos = 0;
    for (GateWeights* g : {&gate_i, &gate_f, &gate_o, &gate_g}) {
        pos = take(flat, pos, g->u);
        pos = take(flat, pos, g->w);
        pos = take(flat, pos, g->b);
    }
    for (Head* h : {&head_orig, &head_diff}) {
        pos = take(flat, pos, h->w);
        pos = take(flat, pos, h->b);
    }
}

namespace {

StepTrace traced_step(const ModelParams& p, const Vector& input, const CellState& s) {
    StepTrace t;
    t.x = input;
    t.c_prev = s.c;
    t.h_prev = s.h;
    auto gate_pre = [&](const GateWeights& g) {
        Vector pre = matvec(g.u, input);
        const Vector rec = matvec(g.w, s.h);
        for (std::size_t k = 0; k < pre.size(); ++k) pre[k] += rec[k] + g.b[k];
        return pre;
    };
    t.i = vec_sigmoid(gate_pre(p.gate_i));
    t.f = vec_sigmoid(gate_pre(p.gate_f));
    t.o = vec_sigmoid(gate_pre(p.gate_o));
    t.g = vec_tanh(gate_pre(p.gate_g));
    t.c = vec_add(vec_mul(t.f, s.c), vec_mul(t.i, t.g));
    t.tanh_c = vec_tanh(t.c);
    t.h = vec_mul(t.o, t.tanh_c);
    return t;
}

void check_gates_finite(const StepTrace& t) {
    struct Named {
        const Vector* v;
        const char* name;
    };
    for (const Named n : {Named{&t.i, "input gate"}, Named{&t.f, "forget gate"},
                          Named{&t.o, "output gate"}, Named{&t.g, "candidate state"},
                          Named{&t.c, "cell state"}, Named{&t.h, "hidden state"}}) {
        if (!all_finite(*n.v)) {
            throw NumericError(std::string("cell_step: non-finite ") + n.name);
        }
    }
}

// Runs the cell over a sequence of scalar inputs, recording every step.
std::vector<StepTrace> run_stream(const ModelParams& p, const Vector& window) {
    CellState s = CellState::zeros(p.hidden);
    std::vector<StepTrace> steps;
    steps.reserve(window.size());
    for (double x : window) {
        StepTrace t = traced_step(p, Vector{x}, s);
        s.h = t.h;
        s.c = t.c;
        steps.push_back(std::move(t));
    }
    return steps;
}

// BPTT through one stream; accumulates shared-cell gradients into `g` and
// consumes the gradient w.r.t. the final hidden state.
void backward_stream(const ModelParams& p, const std::vector<StepTrace>& steps,
                     Vector dh, ParamGrads& g) {
    Vector dc(p.hidden, 0.0);
    for (std::size_t idx = steps.size(); idx-- > 0;) {
        const StepTrace& t = steps[idx];
        for (std::size_t k = 0; k < p.hidden; ++k) {
            dc[k] += dh[k] * t.o[k] * (1.0 - t.tanh_c[k] * t.tanh_c[k]);
        }
        Vector dzi(p.hidden), dzf(p.hidden), dzo(p.hidden), dzg(p.hidden);
        for (std::size_t k = 0; k < p.hidden; ++k) {
            const double di = dc[k] * t.g[k];
            const double df = dc[k] * t.c_prev[k];
            const double dg = dc[k] * t.i[k];
            const double dout = dh[k] * t.tanh_c[k];
            dzi[k] = di * t.i[k] * (1.0 - t.i[k]);
            dzf[k] = df * t.f[k] * (1.0 - t.f[k]);
            dzo[k] = dout * t.o[k] * (1.0 - t.o[k]);
            dzg[k] = dg * (1.0 - t.g[k] * t.g[k]);
        }
        auto accumulate = [&](GateWeights& gw, const Vector& dz) {
            add_outer(gw.u, dz, t.x);
            add_outer(gw.w, dz, t.h_prev);
            for (std::size_t k = 0; k < p.hidden; ++k) gw.b[k] += dz[k];
        };
        accumulate(g.gate_i, dzi);
        accumulate(g.gate_f, dzf);
        accumulate(g.gate_o, dzo);
        accumulate(g.gate_g, dzg);

        Vector dh_prev = matvec_transposed(p.gate_i.w, dzi);
        vec_axpy(dh_prev, 1.0, matvec_transposed(p.gate_f.w, dzf));
        vec_axpy(dh_prev, 1.0, matvec_transposed(p.gate_o.w, dzo));
        vec_axpy(dh_prev, 1.0, matvec_transposed(p.gate_g.w, dzg));
        dh = std::move(dh_prev);
        for (std::size_t k = 0; k < p.hidden; ++k) dc[k] *= t.f[k];
    }
}

Vector row(const Matrix& m, std::size_t r) {
    return Vector(m.data.begin() + static_cast<long>(r * m.cols),
                  m.data.begin() + static_cast<long>((r + 1) * m.cols));
}

} // namespace

CellState cell_step(const ModelParams& p, const Vector& input, const CellState& s) {
    if (input.size() != p.input_dim) {
        throw ShapeError("cell_step: input length " + std::to_string(input.size()) +
                         " != input_dim " + std::to_string(p.input_dim));
    }
    StepTrace t = traced_step(p, input, s);
    check_gates_finite(t);
    return {std::move(t.h), std::move(t.c)};
}

Tape forward(const ModelParams& p, const Vector& x_window, const Vector& xd_window) {
    if (p.input_dim != 1) {
        throw ShapeError("forward: window mode requires scalar-step cell");
    }
    if (xd_window.size() + 1 != x_window.size()) {
        throw ShapeError("forward: differential window must have D-1 entries");
    }
    Tape tape;
    tape.orig = run_stream(p, x_window);
    tape.diff = run_stream(p, xd_window);

    tape.features.reserve(p.head_in());
    append(tape.features, tape.orig.back().h);
    append(tape.features, tape.diff.back().h);

    tape.pred.y = vec_add(matvec(p.head_orig.w, tape.features), p.head_orig.b);
    tape.pred.yd = vec_add(matvec(p.head_diff.w, tape.features), p.head_diff.b);
    return tape;
}

double loss(const Prediction& pred, const Vector& target_y, const Vector& target_yd,
            double lambda) {
    if (pred.y.size() != target_y.size() || pred.yd.size() != target_yd.size()) {
        throw ShapeError("loss: prediction/target length mismatch");
    }
    double se = 0.0, sed = 0.0;
    for (std::size_t k = 0; k < pred.y.size(); ++k) {
        const double e = pred.y[k] - target_y[k];
        se += e * e;
    }
    for (std::size_t k = 0; k < pred.yd.size(); ++k) {
        const double e = pred.yd[k] - target_yd[k];
        sed += e * e;
    }
    const double h = static_cast<double>(pred.y.size());
    return se / h + lambda * sed / h;
}

double batch_loss(const ModelParams& p, const WindowedDataset& ds, double lambda) {
    double total = 0.0;
    for (std::size_t t = 0; t < ds.count(); ++t) {
        const Tape tape = forward(p, row(ds.X, t), row(ds.Xd, t));
        total += loss(tape.pred, row(ds.Y, t), row(ds.Yd, t), lambda);
    }
    return total / static_cast<double>(ds.count());
}

ParamGrads backward(const ModelParams& p, const Tape& tape,
                    const Vector& dloss_dy, const Vector& dloss_dyd) {
    ParamGrads g = ModelParams::zeros(p.input_dim, p.hidden, p.horizon);

    add_outer(g.head_orig.w, dloss_dy, tape.features);
    for (std::size_t k = 0; k < p.horizon; ++k) g.head_orig.b[k] += dloss_dy[k];
    add_outer(g.head_diff.w, dloss_dyd, tape.features);
    for (std::size_t k = 0; k < p.horizon; ++k) g.head_diff.b[k] += dloss_dyd[k];

    Vector dfeat = matvec_transposed(p.head_orig.w, dloss_dy);
    vec_axpy(dfeat, 1.0, matvec_transposed(p.head_diff.w, dloss_dyd));

    const Vector dh_orig(dfeat.begin(), dfeat.begin() + static_cast<long>(p.hidden));
    const Vector dh_diff(dfeat.begin() + static_cast<long>(p.hidden), dfeat.end());

    backward_stream(p, tape.orig, dh_orig, g);
    backward_stream(p, tape.diff, dh_diff, g);
    return g;
}

void adam_step(ModelParams& params, const ParamGrads& grads, AdamState& state,
               const TrainConfig& cfg) {
    Vector w = params.flatten();
    Vector g = grads.flatten();
    if (w.size() != g.size() || w.size() != state.m.size()) {
        throw ShapeError("adam_step: parameter/gradient/state size mismatch");
    }

    if (cfg.grad_clip) {
        double norm2 = 0.0;
        for (double x : g) norm2 += x * x;
        const double norm = std::sqrt(norm2);
        if (norm > *cfg.grad_clip) {
            const double s = *cfg.grad_clip / norm;
            for (double& x : g) x *= s;
        }
    }

    state.t += 1;
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < w.size(); ++k) {
        state.m[k] = b1 * state.m[k] + (1.0 - b1) * g[k];
        state.v[k] = b2 * state.v[k] + (1.0 - b2) * g[k] * g[k];
        const double mhat = state.m[k] / corr1;
        const double vhat = state.v[k] / corr2;
        w[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        if (!std::isfinite(w[k])) {
            throw NumericError("adam_step: non-finite parameter update");
        }
    }
    params.load_flat(w);
}

TrainResult train(const WindowedDataset& ds, const TrainConfig& cfg, std::size_t hidden) {
    if (ds.count() == 0) throw ParamError("train: empty dataset");
    if (!(cfg.learning_rate > 0.0)) throw ParamError("train: learning_rate must be > 0");
    if (cfg.adam_beta1 < 0.0 || cfg.adam_beta1 >= 1.0 ||
        cfg.adam_beta2 < 0.0 || cfg.adam_beta2 >= 1.0) {
        throw ParamError("train: Adam betas must be in [0, 1)");
    }
    if (cfg.batch_size == 0) throw ParamError("train: batch_size must be > 0");

    Rng rng(cfg.seed);
    const double init_scale = 1.0 / std::sqrt(static_cast<double>(hidden));
    TrainResult result{ModelParams::init(1, hidden, ds.spec.H, rng, init_scale), {}};
    ModelParams& p = result.params;
    AdamState opt(p.param_count());

    const std::size_t n = ds.count();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with the run's own stream; order is part of the
        // deterministic trajectory.
        for (std::size_t i = n; i-- > 1;) {
            std::swap(order[i], order[rng.next_below(i + 1)]);
        }

        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t bsz = std::min(cfg.batch_size, n - start);
            std::vector<ParamGrads> window_grads(bsz);
            Vector window_losses(bsz, 0.0);
            const double norm = 1.0 / (static_cast<double>(bsz) * static_cast<double>(ds.spec.H));

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
            for (long long bi = 0; bi < static_cast<long long>(bsz); ++bi) {
                const std::size_t t = order[start + static_cast<std::size_t>(bi)];
                const Tape tape = forward(p, row(ds.X, t), row(ds.Xd, t));
                const Vector ty = row(ds.Y, t);
                const Vector tyd = row(ds.Yd, t);
                Vector dy(ds.spec.H), dyd(ds.spec.H);
                for (std::size_t k = 0; k < ds.spec.H; ++k) {
                    dy[k] = 2.0 * (tape.pred.y[k] - ty[k]) * norm;
                    dyd[k] = 2.0 * cfg.lambda * (tape.pred.yd[k] - tyd[k]) * norm;
                }
                window_grads[static_cast<std::size_t>(bi)] = backward(p, tape, dy, dyd);
                window_losses[static_cast<std::size_t>(bi)] =
                    loss(tape.pred, ty, tyd, cfg.lambda);
            }

            // Fixed-order reduction keeps the trajectory independent of the
            // thread count.
            ParamGrads grads = ModelParams::zeros(1, hidden, ds.spec.H);
            Vector acc = grads.flatten();
            for (const ParamGrads& wg : window_grads) {
                const Vector f = wg.flatten();
                for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += f[k];
            }
            grads.load_flat(acc);
            adam_step(p, grads, opt, cfg);

            double batch_mean = 0.0;
            for (double l : window_losses) batch_mean += l;
            epoch_loss += batch_mean / static_cast<double>(bsz);
            ++n_batches;
        }
        const double mean_loss = epoch_loss / static_cast<double>(n_batches);
        if (!std::isfinite(mean_loss)) {
            const double last = result.loss_history.empty() ? 0.0 : result.loss_history.back();
            throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                               ", last finite loss " + std::to_string(last));
        }
        result.loss_history.push_back(mean_loss);
    }
    return result;
}

std::pair<Matrix, Matrix> predict(const ModelParams& p, const WindowedDataset& ds) {
    if (ds.spec.H != p.horizon || ds.spec.D != ds.Xd.cols + 1) {
        throw ShapeError("predict: dataset spec does not match model");
    }
    Matrix y(ds.count(), p.horizon);
    Matrix yd(ds.count(), p.horizon);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long long t = 0; t < static_cast<long long>(ds.count()); ++t) {
        const std::size_t r = static_cast<std::size_t>(t);
        const Tape tape = forward(p, row(ds.X, r), row(ds.Xd, r));
        std::copy(tape.pred.y.begin(), tape.pred.y.end(),
                  y.data.begin() + static_cast<long>(r * p.horizon));
        std::copy(tape.pred.yd.begin(), tape.pred.yd.end(),
                  yd.data.begin() + static_cast<long>(r * p.horizon));
    }
    return {std::move(y), std::move(yd)};
}

void save_model(const ModelParams& p, const std::string& path) {
    nlohmann::ordered_json j;
    j["format"] = "difflstm-model";
    j["version"] = kModelVersion;
    j["input_dim"] = p.input_dim;
    j["hidden"] = p.hidden;
    j["horizon"] = p.horizon;
    j["params"] = p.flatten();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for " + path);
}

ModelParams load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt model file " + path + ": " + e.what());
    }
    if (j.value("format", "") != "difflstm-model") {
        throw IoError(path + ": not a model file");
    }
    if (j.value("version", -1) != kModelVersion) {
        throw IoError(path + ": unsupported model version " +
                      std::to_string(j.value("version", -1)));
    }
    ModelParams p = ModelParams::zeros(j.at("input_dim").get<std::size_t>(),
                                       j.at("hidden").get<std::size_t>(),
                                       j.at("horizon").get<std::size_t>());
    p.load_flat(j.at("params").get<Vector>());
    return p;
}

} // namespace difflstm
