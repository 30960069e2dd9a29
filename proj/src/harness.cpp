#include "difflstm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace difflstm {

namespace {

// Two-sided 95% Student-t quantiles, df = 1..30; normal value beyond.
constexpr double kT975[30] = {
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
    2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
    2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};

double ci_multiplier(std::size_t n, bool student_t) {
    if (!student_t) return 1.96;
    const std::size_t df = n - 1;
    if (df == 0) return 0.0;
    if (df <= 30) return kT975[df - 1];
    return 1.96;
}

} // namespace

std::pair<Series, Series> load_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset == "mackey_glass") {
        auto [v, d] = generate_mackey_glass(cfg.mackey_glass);
        if (cfg.diff_method == "savgol") {
            SavGolSpec sg = cfg.savgol;
            sg.dt = v.dt;
            d = savitzky_golay_derivative(v, sg);
        }
        return {v, d};
    }
    if (cfg.dataset == "lorenz" || cfg.dataset == "rossler") {
        auto [v, d] = cfg.dataset == "lorenz" ? generate_lorenz(cfg.lorenz)
                                              : generate_rossler(cfg.rossler);
        if (cfg.diff_method == "savgol") {
            SavGolSpec sg = cfg.savgol;
            sg.dt = v.dt;
            d = savitzky_golay_derivative(v, sg);
        }
        return {v, d};
    }
    if (cfg.dataset.rfind("csv:", 0) == 0) {
        const std::string path = cfg.dataset.substr(4);
        Series v{read_csv_column(path, cfg.csv_column), 1.0,
                 std::filesystem::path(path).stem().string(), {}};
        SavGolSpec sg = cfg.savgol;
        sg.dt = 1.0;
        return {v, savitzky_golay_derivative(v, sg)};
    }
    throw ParamError("unknown dataset '" + cfg.dataset + "'");
}

PreparedData prepare_data(const ExperimentConfig& cfg, const Series& values,
                          const Series& diffs) {
    const EmbeddingSpec& e = cfg.embedding;
    const std::size_t needed = (e.D - 1) * e.T + e.H + 1;
    if (values.size() < needed) {
        throw ParamError("series too short for embedding: need " + std::to_string(needed));
    }
    const std::size_t n_windows = values.size() - (e.D - 1) * e.T - e.H;
    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(n_windows) * cfg.train_frac));
    // Last sample any training window touches.
    const std::size_t fit_end = cfg.scale_full_series
                                    ? values.size()
                                    : std::min(values.size(), n_train + (e.D - 1) * e.T + e.H);

    const Vector fit_values(values.values.begin(),
                            values.values.begin() + static_cast<long>(fit_end));
    const Vector fit_diffs(diffs.values.begin(),
                           diffs.values.begin() + static_cast<long>(fit_end));

    PreparedData out;
    out.value_scale = fit_scale(fit_values, -0.5, 0.5);
    out.diff_scale = fit_scale(fit_diffs, -0.5, 0.5);

    const Series sv = apply_scale(out.value_scale, values);
    const Series sd = apply_scale(out.diff_scale, diffs);
    const WindowedDataset ds = build_windows(sv, sd, e);
    std::tie(out.train, out.test) = split_train_test(ds, cfg.train_frac);
    return out;
}

namespace {

Matrix unscale_matrix(const ScaleParams& p, const Matrix& m) {
    Matrix out = m;
    for (double& x : out.data) x = p.unscale(x);
    return out;
}

RunResult execute_run(const ExperimentConfig& cfg, const PreparedData& data,
                      std::uint64_t seed) {
    RunResult r;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        TrainConfig tc = cfg.train;
        tc.seed = seed;
        const TrainResult trained = train(data.train, tc, cfg.hidden);
        r.final_loss = trained.loss_history.empty() ? 0.0 : trained.loss_history.back();

        auto score = [&](const WindowedDataset& ds, double& rmse, double& diff_rmse,
                         Vector* steps, Vector* diff_steps) {
            const auto [py, pyd] = predict(trained.params, ds);
            const Matrix uy = unscale_matrix(data.value_scale, py);
            const Matrix uyd = unscale_matrix(data.diff_scale, pyd);
            const Matrix ty = unscale_matrix(data.value_scale, ds.Y);
            const Matrix tyd = unscale_matrix(data.diff_scale, ds.Yd);
            rmse = rmse_overall(uy, ty);
            diff_rmse = rmse_overall(uyd, tyd);
            if (steps) *steps = rmse_per_step(uy, ty);
            if (diff_steps) *diff_steps = rmse_per_step(uyd, tyd);
        };
        score(data.train, r.train_rmse, r.diff_train_rmse, nullptr, nullptr);
        score(data.test, r.test_rmse, r.diff_test_rmse, &r.step_rmse, &r.diff_step_rmse);
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

Aggregate aggregate(const Vector& xs, bool student_t) {
    Aggregate a;
    a.n = xs.size();
    if (xs.empty()) return a;
    a.min = *std::min_element(xs.begin(), xs.end());
    a.max = *std::max_element(xs.begin(), xs.end());
    double sum = 0.0;
    for (double x : xs) sum += x;
    a.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - a.mean) * (x - a.mean);
        a.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        a.sd_valid = true;
        const double half =
            ci_multiplier(xs.size(), student_t) * a.sd / std::sqrt(static_cast<double>(xs.size()));
        a.ci_lo = a.mean - half;
        a.ci_hi = a.mean + half;
    } else {
        a.ci_lo = a.ci_hi = a.mean;
    }
    return a;
}

json aggregate_to_json(const Aggregate& a) {
    json j;
    j["mean"] = a.mean;
    if (a.sd_valid) {
        j["sd"] = a.sd;
    } else {
        j["sd"] = nullptr;
    }
    j["ci_lo"] = a.ci_lo;
    j["ci_hi"] = a.ci_hi;
    j["min"] = a.min;
    j["max"] = a.max;
    j["n"] = a.n;
    return j;
}

std::string effective_output_dir(const std::string& configured) {
    if (const char* env = std::getenv("DIFFLSTM_OUTPUT_DIR")) {
        if (*env) return env;
    }
    return configured;
}

} // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    c.dataset = j.value("dataset", c.dataset);
    if (j.contains("mackey_glass")) {
        const auto& g = j["mackey_glass"];
        c.mackey_glass.alpha = g.value("alpha", c.mackey_glass.alpha);
        c.mackey_glass.beta = g.value("beta", c.mackey_glass.beta);
        c.mackey_glass.c = g.value("c", c.mackey_glass.c);
        c.mackey_glass.tau = g.value("tau", c.mackey_glass.tau);
        c.mackey_glass.x0 = g.value("x0", c.mackey_glass.x0);
        c.mackey_glass.dt = g.value("dt", c.mackey_glass.dt);
        c.mackey_glass.n_samples = g.value("n_samples", c.mackey_glass.n_samples);
        c.mackey_glass.warmup = g.value("warmup", c.mackey_glass.warmup);
    }
    if (j.contains("lorenz")) {
        const auto& g = j["lorenz"];
        c.lorenz.sigma = g.value("sigma", c.lorenz.sigma);
        c.lorenz.rho = g.value("rho", c.lorenz.rho);
        c.lorenz.beta = g.value("beta", c.lorenz.beta);
        c.lorenz.x0 = g.value("x0", c.lorenz.x0);
        c.lorenz.g0 = g.value("g0", c.lorenz.g0);
        c.lorenz.z0 = g.value("z0", c.lorenz.z0);
        c.lorenz.dt = g.value("dt", c.lorenz.dt);
        c.lorenz.n_samples = g.value("n_samples", c.lorenz.n_samples);
        c.lorenz.warmup = g.value("warmup", c.lorenz.warmup);
    }
    if (j.contains("rossler")) {
        const auto& g = j["rossler"];
        c.rossler.a = g.value("a", c.rossler.a);
        c.rossler.b = g.value("b", c.rossler.b);
        c.rossler.c = g.value("c", c.rossler.c);
        c.rossler.x0 = g.value("x0", c.rossler.x0);
        c.rossler.g0 = g.value("g0", c.rossler.g0);
        c.rossler.z0 = g.value("z0", c.rossler.z0);
        c.rossler.dt = g.value("dt", c.rossler.dt);
        c.rossler.n_samples = g.value("n_samples", c.rossler.n_samples);
        c.rossler.warmup = g.value("warmup", c.rossler.warmup);
    }
    if (j.contains("savgol")) {
        const auto& g = j["savgol"];
        c.savgol.window = g.value("window", c.savgol.window);
        c.savgol.polyorder = g.value("polyorder", c.savgol.polyorder);
    }
    c.csv_column = j.value("csv_column", c.csv_column);
    c.diff_method = j.value("diff_method", c.diff_method);
    if (j.contains("embedding")) {
        const auto& g = j["embedding"];
        c.embedding.D = g.value("D", c.embedding.D);
        c.embedding.T = g.value("T", c.embedding.T);
        c.embedding.H = g.value("H", c.embedding.H);
    }
    c.train_frac = j.value("train_frac", c.train_frac);
    if (j.contains("train")) {
        const auto& g = j["train"];
        c.train.lambda = g.value("lambda", c.train.lambda);
        c.train.learning_rate = g.value("learning_rate", c.train.learning_rate);
        c.train.epochs = g.value("epochs", c.train.epochs);
        c.train.batch_size = g.value("batch_size", c.train.batch_size);
        c.train.adam_beta1 = g.value("adam_beta1", c.train.adam_beta1);
        c.train.adam_beta2 = g.value("adam_beta2", c.train.adam_beta2);
        c.train.adam_eps = g.value("adam_eps", c.train.adam_eps);
        if (g.contains("grad_clip") && !g["grad_clip"].is_null()) {
            c.train.grad_clip = g["grad_clip"].get<double>();
        }
    }
    c.hidden = j.value("hidden", c.hidden);
    c.n_runs = j.value("n_runs", c.n_runs);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.scale_full_series = j.value("scale_full_series", c.scale_full_series);
    c.student_t_ci = j.value("student_t_ci", c.student_t_ci);
    if (c.n_runs == 0) throw ParamError("config: n_runs must be >= 1");
    if (!(c.train_frac > 0.0 && c.train_frac < 1.0)) {
        throw ParamError("config: train_frac must be in (0, 1)");
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParamError("config parse error in " + path + ": " + e.what());
    }
    return from_json(j);
}

json ExperimentConfig::to_json() const {
    json j;
    j["dataset"] = dataset;
    j["mackey_glass"] = {{"alpha", mackey_glass.alpha}, {"beta", mackey_glass.beta},
                         {"c", mackey_glass.c},         {"tau", mackey_glass.tau},
                         {"x0", mackey_glass.x0},       {"dt", mackey_glass.dt},
                         {"n_samples", mackey_glass.n_samples},
                         {"warmup", mackey_glass.warmup}};
    j["lorenz"] = {{"sigma", lorenz.sigma}, {"rho", lorenz.rho}, {"beta", lorenz.beta},
                   {"x0", lorenz.x0},       {"g0", lorenz.g0},   {"z0", lorenz.z0},
                   {"dt", lorenz.dt},       {"n_samples", lorenz.n_samples},
                   {"warmup", lorenz.warmup}};
    j["rossler"] = {{"a", rossler.a}, {"b", rossler.b}, {"c", rossler.c},
                    {"x0", rossler.x0}, {"g0", rossler.g0}, {"z0", rossler.z0},
                    {"dt", rossler.dt}, {"n_samples", rossler.n_samples},
                    {"warmup", rossler.warmup}};
    j["savgol"] = {{"window", savgol.window}, {"polyorder", savgol.polyorder}};
    j["csv_column"] = csv_column;
    j["diff_method"] = diff_method;
    j["embedding"] = {{"D", embedding.D}, {"T", embedding.T}, {"H", embedding.H}};
    j["train_frac"] = train_frac;
    j["train"] = {{"lambda", train.lambda},
                  {"learning_rate", train.learning_rate},
                  {"epochs", train.epochs},
                  {"batch_size", train.batch_size},
                  {"adam_beta1", train.adam_beta1},
                  {"adam_beta2", train.adam_beta2},
                  {"adam_eps", train.adam_eps},
                  {"grad_clip", train.grad_clip ? json(*train.grad_clip) : json(nullptr)}};
    j["hidden"] = hidden;
    j["n_runs"] = n_runs;
    j["base_seed"] = base_seed;
    j["output_dir"] = output_dir;
    j["scale_full_series"] = scale_full_series;
    j["student_t_ci"] = student_t_ci;
    return j;
}

const Aggregate* RunReport::find(const std::string& key) const {
    for (const auto& [k, a] : aggregates) {
        if (k == key) return &a;
    }
    return nullptr;
}

Vector rmse_per_step(const Matrix& predictions, const Matrix& targets) {
    if (predictions.rows != targets.rows || predictions.cols != targets.cols) {
        throw ShapeError("rmse_per_step: shape mismatch");
    }
    Vector out(predictions.cols, 0.0);
    for (std::size_t k = 0; k < predictions.cols; ++k) {
        double ss = 0.0;
        for (std::size_t t = 0; t < predictions.rows; ++t) {
            const double e = predictions(t, k) - targets(t, k);
            ss += e * e;
        }
        out[k] = std::sqrt(ss / static_cast<double>(predictions.rows));
    }
    return out;
}

double rmse_overall(const Matrix& predictions, const Matrix& targets) {
    if (predictions.rows != targets.rows || predictions.cols != targets.cols) {
        throw ShapeError("rmse_overall: shape mismatch");
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < predictions.data.size(); ++i) {
        const double e = predictions.data[i] - targets.data[i];
        ss += e * e;
    }
    return std::sqrt(ss / static_cast<double>(predictions.data.size()));
}

RunReport run_experiment(const ExperimentConfig& cfg, bool parallel_runs) {
    const auto [values, diffs] = load_dataset(cfg);
    const PreparedData data = prepare_data(cfg, values, diffs);

    RunReport report;
    report.config_echo = cfg.to_json();
    report.runs.resize(cfg.n_runs);

    if (parallel_runs) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (long long r = 0; r < static_cast<long long>(cfg.n_runs); ++r) {
            report.runs[static_cast<std::size_t>(r)] =
                execute_run(cfg, data, cfg.base_seed + static_cast<std::uint64_t>(r));
        }
    } else {
        for (std::size_t r = 0; r < cfg.n_runs; ++r) {
            report.runs[r] = execute_run(cfg, data, cfg.base_seed + r);
        }
    }

    for (const RunResult& r : report.runs) {
        if (!r.ok) ++report.failed;
    }

    const std::size_t H = cfg.embedding.H;
    auto collect = [&](auto getter) {
        Vector xs;
        for (const RunResult& r : report.runs) {
            if (r.ok) xs.push_back(getter(r));
        }
        return aggregate(xs, cfg.student_t_ci);
    };

    report.aggregates.emplace_back("train_rmse",
                                   collect([](const RunResult& r) { return r.train_rmse; }));
    report.aggregates.emplace_back("test_rmse",
                                   collect([](const RunResult& r) { return r.test_rmse; }));
    for (std::size_t k = 0; k < H; ++k) {
        report.aggregates.emplace_back(
            "step_" + std::to_string(k + 1),
            collect([k](const RunResult& r) { return r.step_rmse[k]; }));
    }
    report.aggregates.emplace_back(
        "diff_train_rmse", collect([](const RunResult& r) { return r.diff_train_rmse; }));
    report.aggregates.emplace_back(
        "diff_test_rmse", collect([](const RunResult& r) { return r.diff_test_rmse; }));
    for (std::size_t k = 0; k < H; ++k) {
        report.aggregates.emplace_back(
            "diff_step_" + std::to_string(k + 1),
            collect([k](const RunResult& r) { return r.diff_step_rmse[k]; }));
    }
    return report;
}

CompareResult compare_to_reference(const RunReport& report, const json& reference,
                                   double slack) {
    if (!reference.contains("metrics")) {
        throw ParamError("reference table has no 'metrics' object");
    }
    std::vector<std::string> missing;
    CompareResult res;
    for (const auto& [key, entry] : reference["metrics"].items()) {
        const Aggregate* a = report.find(key);
        if (!a || a->n == 0) {
            missing.push_back(key);
            continue;
        }
        const double ref_mean = entry.at("mean").get<double>();
        const bool pass = a->mean <= ref_mean + slack;
        if (!pass) res.pass = false;
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-16s %s  report=%.6f reference=%.6f slack=%.6f",
                      key.c_str(), pass ? "PASS" : "FAIL", a->mean, ref_mean, slack);
        res.lines.emplace_back(buf);
    }
    if (!missing.empty()) {
        std::string msg = "metrics absent from report:";
        for (const auto& k : missing) msg += " " + k;
        throw ParamError(msg);
    }
    return res;
}

json report_to_json(const RunReport& report) {
    json j;
    j["config"] = report.config_echo;
    j["n_runs"] = report.runs.size();
    j["failed"] = report.failed;
    json runs = json::array();
    for (std::size_t i = 0; i < report.runs.size(); ++i) {
        const RunResult& r = report.runs[i];
        json jr;
        jr["run"] = i;
        jr["ok"] = r.ok;
        if (!r.ok) {
            jr["error"] = r.error;
        } else {
            jr["train_rmse"] = r.train_rmse;
            jr["test_rmse"] = r.test_rmse;
            jr["diff_train_rmse"] = r.diff_train_rmse;
            jr["diff_test_rmse"] = r.diff_test_rmse;
            jr["step_rmse"] = r.step_rmse;
            jr["diff_step_rmse"] = r.diff_step_rmse;
            jr["final_loss"] = r.final_loss;
        }
        runs.push_back(std::move(jr));
    }
    j["runs"] = std::move(runs);
    json agg;
    for (const auto& [key, a] : report.aggregates) {
        agg[key] = aggregate_to_json(a);
    }
    j["aggregates"] = std::move(agg);
    return j;
}

void emit_reports(const RunReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path out_dir = effective_output_dir(dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    {
        const fs::path p = out_dir / "report.json";
        std::ofstream out(p);
        if (!out) throw IoError("cannot write " + p.string());
        out << report_to_json(report).dump(2) << "\n";
    }
    {
        const fs::path p = out_dir / "runs.csv";
        std::ofstream out(p);
        if (!out) throw IoError("cannot write " + p.string());
        out.precision(17);
        out << "run,metric,value\n";
        for (std::size_t i = 0; i < report.runs.size(); ++i) {
            const RunResult& r = report.runs[i];
            if (!r.ok) {
                out << i << ",failed,1\n";
                continue;
            }
            out << i << ",train_rmse," << r.train_rmse << "\n";
            out << i << ",test_rmse," << r.test_rmse << "\n";
            out << i << ",diff_train_rmse," << r.diff_train_rmse << "\n";
            out << i << ",diff_test_rmse," << r.diff_test_rmse << "\n";
            for (std::size_t k = 0; k < r.step_rmse.size(); ++k) {
                out << i << ",step_" << k + 1 << "," << r.step_rmse[k] << "\n";
            }
            for (std::size_t k = 0; k < r.diff_step_rmse.size(); ++k) {
                out << i << ",diff_step_" << k + 1 << "," << r.diff_step_rmse[k] << "\n";
            }
            out << i << ",final_loss," << r.final_loss << "\n";
            out << i << ",wall_seconds," << r.wall_seconds << "\n";
        }
    }
    {
        const fs::path p = out_dir / "plot.csv";
        std::ofstream out(p);
        if (!out) throw IoError("cannot write " + p.string());
        out.precision(17);
        out << "series,step,mean,ci_lo,ci_hi\n";
        for (const auto& [key, a] : report.aggregates) {
            const bool diff = key.rfind("diff_step_", 0) == 0;
            const bool orig = !diff && key.rfind("step_", 0) == 0;
            if (!diff && !orig) continue;
            const std::string step = key.substr(diff ? 10 : 5);
            out << (diff ? "differential" : "original") << "," << step << "," << a.mean << ","
                << a.ci_lo << "," << a.ci_hi << "\n";
        }
    }
}

} // namespace difflstm
