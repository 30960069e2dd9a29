#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "difflstm/harness.hpp"

namespace {

using namespace difflstm;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitCompareFail = 4;

void write_series_csv(const std::string& path, const Series& values, const Series& diffs) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    out << "value,differential\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        out << values.values[i] << "," << diffs.values[i] << "\n";
    }
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

// Criterion-style gradient check on a toy model; returns the max relative
// error over `trials` random draws.
double gradcheck_max_error(std::uint64_t seed, int trials) {
    Rng rng(seed);
    const std::size_t hidden = 3, D = 4, H = 2;
    const double lambdas[] = {0.0, 1.0, 0.3};
    double worst = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        const double lambda = lambdas[trial % 3];
        ModelParams p = ModelParams::init(1, hidden, H, rng, 0.5);
        Vector xw(D), xdw(D - 1), ty(H), tyd(H);
        for (auto& v : xw) v = rng.uniform(-0.5, 0.5);
        for (auto& v : xdw) v = rng.uniform(-0.5, 0.5);
        for (auto& v : ty) v = rng.uniform(-0.5, 0.5);
        for (auto& v : tyd) v = rng.uniform(-0.5, 0.5);

        const Tape tape = forward(p, xw, xdw);
        Vector dy(H), dyd(H);
        for (std::size_t k = 0; k < H; ++k) {
            dy[k] = 2.0 * (tape.pred.y[k] - ty[k]) / static_cast<double>(H);
            dyd[k] = 2.0 * lambda * (tape.pred.yd[k] - tyd[k]) / static_cast<double>(H);
        }
        const Vector analytic = backward(p, tape, dy, dyd).flatten();

        Vector flat = p.flatten();
        const double eps = 1e-5;
        for (std::size_t i = 0; i < flat.size(); ++i) {
            const double saved = flat[i];
            flat[i] = saved + eps;
            p.load_flat(flat);
            const double lp = loss(forward(p, xw, xdw).pred, ty, tyd, lambda);
            flat[i] = saved - eps;
            p.load_flat(flat);
            const double lm = loss(forward(p, xw, xdw).pred, ty, tyd, lambda);
            flat[i] = saved;
            p.load_flat(flat);
            const double numeric = (lp - lm) / (2.0 * eps);
            const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
            worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
        }
    }
    return worst;
}

int run_generate(const std::string& system, const std::string& out_path,
                 std::size_t samples, double dt, std::size_t warmup) {
    ExperimentConfig cfg;
    if (system == "mackey-glass" || system == "mackey_glass") {
        cfg.dataset = "mackey_glass";
        if (samples) cfg.mackey_glass.n_samples = samples;
        if (dt > 0) cfg.mackey_glass.dt = dt;
        cfg.mackey_glass.warmup = warmup;
    } else if (system == "lorenz") {
        cfg.dataset = "lorenz";
        if (samples) cfg.lorenz.n_samples = samples;
        if (dt > 0) cfg.lorenz.dt = dt;
        cfg.lorenz.warmup = warmup;
    } else if (system == "rossler") {
        cfg.dataset = "rossler";
        if (samples) cfg.rossler.n_samples = samples;
        if (dt > 0) cfg.rossler.dt = dt;
        cfg.rossler.warmup = warmup;
    } else {
        throw ParamError("unknown system '" + system + "'");
    }
    const auto [values, diffs] = load_dataset(cfg);
    write_series_csv(out_path, values, diffs);
    std::cout << "wrote " << values.size() << " samples to " << out_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diff-LSTM forecasting library and benchmark harness"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Generate a chaotic series CSV");
    std::string gen_system = "mackey-glass", gen_out = "series.csv";
    std::size_t gen_samples = 0, gen_warmup = 0;
    double gen_dt = 0.0;
    gen->add_option("--system", gen_system, "mackey-glass | lorenz | rossler");
    gen->add_option("--out", gen_out, "output CSV path")->required();
    gen->add_option("--samples", gen_samples, "number of samples");
    gen->add_option("--dt", gen_dt, "integration/sampling step");
    gen->add_option("--warmup", gen_warmup, "transient samples to discard");

    // prepare
    auto* prep = app.add_subcommand("prepare", "Window a CSV series into a dataset");
    std::string prep_in, prep_out = "dataset.json", prep_diff = "savgol";
    std::size_t prep_D = 5, prep_T = 1, prep_H = 10, prep_col = 0;
    std::size_t prep_window = 5, prep_poly = 3;
    double prep_dt = 1.0;
    prep->add_option("--in", prep_in, "input CSV")->required();
    prep->add_option("--out", prep_out, "output JSON dataset");
    prep->add_option("--D", prep_D, "embedding dimension");
    prep->add_option("--T", prep_T, "time lag");
    prep->add_option("--H", prep_H, "prediction horizon");
    prep->add_option("--diff", prep_diff, "analytic (CSV column 1) | savgol");
    prep->add_option("--column", prep_col, "value column index");
    prep->add_option("--savgol-window", prep_window, "Savitzky-Golay window");
    prep->add_option("--savgol-polyorder", prep_poly, "Savitzky-Golay polynomial order");
    prep->add_option("--dt", prep_dt, "sample spacing for derivative units");

    // train
    auto* tr = app.add_subcommand("train", "Train one model from an experiment config");
    std::string tr_config, tr_model = "model.json";
    tr->add_option("--config", tr_config, "experiment config JSON")->required();
    tr->add_option("--out", tr_model, "model output path");

    // benchmark
    auto* bench = app.add_subcommand("benchmark", "Run a multi-seed experiment");
    std::string bench_config, bench_reference, bench_out, bench_sweep;
    double bench_slack = 0.015;
    bool bench_serial = false;
    bench->add_option("--config", bench_config, "experiment config JSON")->required();
    bench->add_option("--reference", bench_reference, "reference table JSON");
    bench->add_option("--slack", bench_slack, "allowed mean excess over reference");
    bench->add_option("--out", bench_out, "output directory (overrides config)");
    bench->add_option("--lambda-sweep", bench_sweep, "comma-separated lambda values");
    bench->add_flag("--serial", bench_serial, "disable parallel runs");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient check");
    std::uint64_t gc_seed = 7;
    int gc_trials = 50;
    gc->add_option("--seed", gc_seed, "RNG seed");
    gc->add_option("--trials", gc_trials, "number of random configurations");

    // fnn
    auto* fnn = app.add_subcommand("fnn", "False-nearest-neighbor embedding dimension");
    std::string fnn_in;
    std::size_t fnn_dmax = 10, fnn_T = 1, fnn_col = 0;
    double fnn_rtol = 10.0, fnn_threshold = 0.01;
    fnn->add_option("--in", fnn_in, "input CSV")->required();
    fnn->add_option("--dmax", fnn_dmax, "maximum dimension to test");
    fnn->add_option("--T", fnn_T, "time lag");
    fnn->add_option("--rtol", fnn_rtol, "distance growth ratio threshold");
    fnn->add_option("--threshold", fnn_threshold, "false-neighbor fraction threshold");
    fnn->add_option("--column", fnn_col, "value column index");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed()) {
            return run_generate(gen_system, gen_out, gen_samples, gen_dt, gen_warmup);
        }
        if (prep->parsed()) {
            Series values{read_csv_column(prep_in, prep_col), prep_dt, "csv", {}};
            Series diffs;
            if (prep_diff == "analytic") {
                diffs = Series{read_csv_column(prep_in, 1), prep_dt, "csv_diff", "csv"};
            } else if (prep_diff == "savgol") {
                diffs = savitzky_golay_derivative(values, {prep_window, prep_poly, prep_dt});
            } else {
                throw ParamError("--diff must be analytic or savgol");
            }
            const WindowedDataset ds =
                build_windows(values, diffs, {prep_D, prep_T, prep_H});
            json j;
            j["spec"] = {{"D", prep_D}, {"T", prep_T}, {"H", prep_H}};
            j["X"] = matrix_to_json(ds.X);
            j["Xd"] = matrix_to_json(ds.Xd);
            j["Y"] = matrix_to_json(ds.Y);
            j["Yd"] = matrix_to_json(ds.Yd);
            std::ofstream out(prep_out);
            if (!out) throw IoError("cannot write " + prep_out);
            out << j.dump(2) << "\n";
            std::cout << "wrote " << ds.count() << " windows to " << prep_out << "\n";
            return kExitOk;
        }
        if (tr->parsed()) {
            const ExperimentConfig cfg = ExperimentConfig::load(tr_config);
            const auto [values, diffs] = load_dataset(cfg);
            const PreparedData data = prepare_data(cfg, values, diffs);
            TrainConfig tc = cfg.train;
            tc.seed = cfg.base_seed;
            const TrainResult result = train(data.train, tc, cfg.hidden);
            save_model(result.params, tr_model);
            std::cout << "final train loss "
                      << (result.loss_history.empty() ? 0.0 : result.loss_history.back())
                      << ", model saved to " << tr_model << "\n";
            return kExitOk;
        }
        if (bench->parsed()) {
            ExperimentConfig cfg = ExperimentConfig::load(bench_config);
            if (!bench_out.empty()) cfg.output_dir = bench_out;

            std::vector<double> lambdas;
            if (!bench_sweep.empty()) {
                std::stringstream ss(bench_sweep);
                std::string tok;
                while (std::getline(ss, tok, ',')) lambdas.push_back(std::stod(tok));
            } else {
                lambdas.push_back(cfg.train.lambda);
            }

            bool all_pass = true;
            for (double lambda : lambdas) {
                cfg.train.lambda = lambda;
                const RunReport report = run_experiment(cfg, !bench_serial);
                if (lambdas.size() > 1) {
                    std::cout << "lambda=" << lambda << " test_rmse mean="
                              << report.find("test_rmse")->mean << "\n";
                } else {
                    emit_reports(report, cfg.output_dir);
                    std::cout << "test_rmse mean=" << report.find("test_rmse")->mean
                              << " (" << report.runs.size() - report.failed << "/"
                              << report.runs.size() << " runs ok)\n";
                }
                if (!bench_reference.empty()) {
                    std::ifstream rin(bench_reference);
                    if (!rin) throw IoError("cannot open reference " + bench_reference);
                    json ref;
                    rin >> ref;
                    const CompareResult cmp = compare_to_reference(report, ref, bench_slack);
                    for (const auto& line : cmp.lines) std::cout << line << "\n";
                    if (!cmp.pass) all_pass = false;
                }
            }
            return all_pass ? kExitOk : kExitCompareFail;
        }
        if (gc->parsed()) {
            const double worst = gradcheck_max_error(gc_seed, gc_trials);
            std::cout << "max relative gradient error over " << gc_trials
                      << " configurations: " << worst << "\n";
            if (worst >= 1e-4) {
                std::cerr << "gradient check FAILED\n";
                return kExitNumeric;
            }
            std::cout << "gradient check passed\n";
            return kExitOk;
        }
        if (fnn->parsed()) {
            Series s{read_csv_column(fnn_in, fnn_col), 1.0, "csv", {}};
            const FnnResult res =
                false_nearest_neighbors(s, fnn_T, fnn_dmax, fnn_rtol, fnn_threshold);
            for (std::size_t d = 0; d < res.fractions.size(); ++d) {
                std::cout << "D=" << d + 1 << " false fraction " << res.fractions[d] << "\n";
            }
            std::cout << "selected D=" << res.dim
                      << (res.converged ? "" : " (threshold never reached)") << "\n";
            return kExitOk;
        }
    } catch (const ParamError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}
