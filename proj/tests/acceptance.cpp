// Acceptance checks for the full pipeline. Each criterion prints exactly one
// [PASS]/[FAIL] line; the process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "difflstm/dynamics.hpp"
#include "difflstm/harness.hpp"
#include "difflstm/network.hpp"
#include "difflstm/preprocess.hpp"
#include "oracles.hpp"

using namespace difflstm;

namespace {

struct Criterion {
    std::string name;
    std::function<bool(std::string&)> run;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Composite-loss gradient for one window via central differences over every
// parameter, compared against backward(). Returns the max relative error.
double gradcheck_one(std::size_t hidden, std::size_t D, std::size_t H, double lambda,
                     std::uint64_t seed) {
    Rng rng(seed);
    ModelParams p = ModelParams::init(1, hidden, H, rng, 0.5);
    Vector x = uniform_init_vec(rng, D, -0.5, 0.5);
    Vector xd = uniform_init_vec(rng, D - 1, -0.5, 0.5);
    Vector ty = uniform_init_vec(rng, H, -0.5, 0.5);
    Vector tyd = uniform_init_vec(rng, H, -0.5, 0.5);

    const Tape tape = forward(p, x, xd);
    Vector dy(H), dyd(H);
    for (std::size_t k = 0; k < H; ++k) {
        dy[k] = 2.0 * (tape.pred.y[k] - ty[k]) / static_cast<double>(H);
        dyd[k] = lambda * 2.0 * (tape.pred.yd[k] - tyd[k]) / static_cast<double>(H);
    }
    const Vector analytic = backward(p, tape, dy, dyd).flatten();

    Vector flat = p.flatten();
    const double eps = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double keep = flat[i];
        flat[i] = keep + eps;
        p.load_flat(flat);
        const double lp = loss(forward(p, x, xd).pred, ty, tyd, lambda);
        flat[i] = keep - eps;
        p.load_flat(flat);
        const double lm = loss(forward(p, x, xd).pred, ty, tyd, lambda);
        flat[i] = keep;
        const double numeric = (lp - lm) / (2.0 * eps);
        const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
        worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
    }
    p.load_flat(flat);
    return worst;
}

ExperimentConfig benchmark_config(const std::string& dataset) {
    ExperimentConfig cfg;
    cfg.dataset = dataset;
    cfg.n_runs = 5;
    cfg.base_seed = 1;
    cfg.embedding = {5, 1, 10};
    cfg.train_frac = 0.6;
    cfg.hidden = 10;
    cfg.train.lambda = 1.0;
    cfg.train.learning_rate = 0.005;
    cfg.train.epochs = 300;
    cfg.train.batch_size = 32;
    if (dataset == "mackey_glass") {
        cfg.mackey_glass.n_samples = 1000;
        cfg.mackey_glass.warmup = 300;
    } else if (dataset == "lorenz") {
        cfg.lorenz.n_samples = 1000;
        cfg.lorenz.warmup = 300;
        cfg.train.epochs = 600;
    } else if (dataset == "rossler") {
        cfg.rossler.n_samples = 1000;
        cfg.rossler.warmup = 300;
        cfg.train.epochs = 1200;
    }
    return cfg;
}

bool check_mean(const RunReport& report, const std::string& key, double bound,
                std::string& msg) {
    const Aggregate* a = report.find(key);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s mean %.6f (bound %.6f, %zu/%zu runs ok)", key.c_str(),
                  a->mean, bound, a->n, report.runs.size());
    if (!msg.empty()) msg += "; ";
    msg += buf;
    return a->n > 0 && a->mean <= bound;
}

} // namespace

int main() {
    std::vector<Criterion> criteria;

    criteria.push_back({"analytic gradients match finite differences (50 configs)",
                        [](std::string& msg) {
                            const auto t0 = std::chrono::steady_clock::now();
                            const double lambdas[] = {0.0, 1.0, 0.3};
                            double worst = 0.0;
                            for (int trial = 0; trial < 50; ++trial) {
                                worst = std::max(worst, gradcheck_one(3, 4, 2, lambdas[trial % 3],
                                                                      100 + trial));
                            }
                            const double secs = seconds_since(t0);
                            char buf[120];
                            std::snprintf(buf, sizeof(buf),
                                          "max rel error %.3e in %.2fs (need < 1e-4, < 10s)",
                                          worst, secs);
                            msg = buf;
                            return worst < 1e-4 && secs < 10.0;
                        }});

    criteria.push_back({"parameter counts 480 / 210 / 210 / 900",
                        [](std::string& msg) {
                            const ModelParams p = ModelParams::zeros(1, 10, 10);
                            char buf[120];
                            std::snprintf(buf, sizeof(buf), "cell %zu, heads %zu each, total %zu",
                                          p.cell_param_count(), p.head_param_count(),
                                          p.param_count());
                            msg = buf;
                            return p.cell_param_count() == 480 && p.head_param_count() == 210 &&
                                   p.param_count() == 900;
                        }});

    criteria.push_back({"rk4 empirical convergence order >= 3.9",
                        [](std::string& msg) {
                            auto f = [](const Vector& s) { return s; };
                            auto err = [&](double dt) {
                                Vector s{1.0};
                                const int n = static_cast<int>(std::llround(1.0 / dt));
                                for (int i = 0; i < n; ++i) s = rk4_step(f, s, dt);
                                return std::abs(s[0] - std::exp(1.0));
                            };
                            const double order1 = std::log2(err(0.1) / err(0.05));
                            const double order2 = std::log2(err(0.05) / err(0.025));
                            char buf[120];
                            std::snprintf(buf, sizeof(buf), "orders %.3f, %.3f", order1, order2);
                            msg = buf;
                            return order1 >= 3.9 && order2 >= 3.9;
                        }});

    criteria.push_back(
        {"generator differentials agree with central differences (scaled)",
         [](std::string& msg) {
             double worst_overall = 0.0;
             auto scaled_error = [&](const Series& values, const Series& diffs) {
                 const ScaleParams sp = fit_scale(diffs.values, -0.5, 0.5);
                 const auto cd = oracles::central_difference(values.values, values.dt);
                 double worst = 0.0;
                 for (std::size_t i = 200; i + 1 < values.size(); ++i) {
                     worst = std::max(worst,
                                      std::abs(sp.scale(diffs.values[i]) - sp.scale(cd[i])));
                 }
                 worst_overall = std::max(worst_overall, worst);
             };
             MackeyGlassParams mg;
             mg.n_samples = 1500;
             const auto [mv, md] = generate_mackey_glass(mg);
             scaled_error(mv, md);
             const auto [lv, ld] = generate_lorenz(LorenzParams{});
             scaled_error(lv, ld);
             const auto [rv, rd] = generate_rossler(RosslerParams{});
             scaled_error(rv, rd);
             char buf[120];
             std::snprintf(buf, sizeof(buf), "max scaled error %.3e (need < 0.05)",
                           worst_overall);
             msg = buf;
             return worst_overall < 0.05;
         }});

    criteria.push_back({"savitzky-golay derivative exact on cubics",
                        [](std::string& msg) {
                            const double dt = 0.1;
                            Series s{{}, dt, "cubic", {}};
                            for (int i = 0; i < 60; ++i) {
                                const double t = i * dt;
                                s.values.push_back(2.0 * t * t * t - t * t + 4.0 * t - 1.0);
                            }
                            const Series d = savitzky_golay_derivative(s, {5, 3, dt});
                            double worst = 0.0;
                            for (std::size_t i = 2; i + 2 < d.size(); ++i) {
                                const double t = i * dt;
                                const double exact = 6.0 * t * t - 2.0 * t + 4.0;
                                worst = std::max(worst, std::abs(d.values[i] - exact));
                            }
                            char buf[120];
                            std::snprintf(buf, sizeof(buf), "max interior error %.3e (need <= 1e-8)",
                                          worst);
                            msg = buf;
                            return worst <= 1e-8;
                        }});

    criteria.push_back({"mackey-glass benchmark: test RMSE <= 0.065, step-1 <= 0.010",
                        [](std::string& msg) {
                            const RunReport r = run_experiment(benchmark_config("mackey_glass"));
                            const bool a = check_mean(r, "test_rmse", 0.065, msg);
                            const bool b = check_mean(r, "step_1", 0.010, msg);
                            return a && b;
                        }});

    criteria.push_back({"lorenz benchmark: test RMSE <= 0.020",
                        [](std::string& msg) {
                            const RunReport r = run_experiment(benchmark_config("lorenz"));
                            return check_mean(r, "test_rmse", 0.020, msg);
                        }});

    criteria.push_back({"rossler benchmark: test RMSE <= 0.025",
                        [](std::string& msg) {
                            const RunReport r = run_experiment(benchmark_config("rossler"));
                            return check_mean(r, "test_rmse", 0.025, msg);
                        }});

    criteria.push_back({"mackey-glass differential forecast: step-1 <= 0.005",
                        [](std::string& msg) {
                            const RunReport r = run_experiment(benchmark_config("mackey_glass"));
                            return check_mean(r, "diff_step_1", 0.005, msg);
                        }});

    criteria.push_back(
        {"lambda = 0 degenerates to the plain forecasting loss",
         [](std::string& msg) {
             Rng rng(5);
             const std::size_t H = 4;
             ModelParams p = ModelParams::init(1, 6, H, rng, 0.4);
             const Vector x = uniform_init_vec(rng, 5, -0.5, 0.5);
             const Vector xd = uniform_init_vec(rng, 4, -0.5, 0.5);
             const Vector ty = uniform_init_vec(rng, H, -0.5, 0.5);
             const Vector tyd = uniform_init_vec(rng, H, -0.5, 0.5);
             const Tape tape = forward(p, x, xd);

             double mse_orig = 0.0;
             for (std::size_t k = 0; k < H; ++k) {
                 const double e = tape.pred.y[k] - ty[k];
                 mse_orig += e * e;
             }
             mse_orig /= static_cast<double>(H);
             const double loss_gap = std::abs(loss(tape.pred, ty, tyd, 0.0) - mse_orig);

             Vector dy(H), dyd(H, 0.0);
             for (std::size_t k = 0; k < H; ++k) {
                 dy[k] = 2.0 * (tape.pred.y[k] - ty[k]) / static_cast<double>(H);
             }
             const ParamGrads g = backward(p, tape, dy, dyd);
             double diff_head_norm = 0.0;
             for (double v : g.head_diff.w.data) diff_head_norm += std::abs(v);
             for (double v : g.head_diff.b) diff_head_norm += std::abs(v);

             char buf[140];
             std::snprintf(buf, sizeof(buf),
                           "loss gap %.3e (need <= 1e-12), diff-head grad L1 %.3e (need 0)",
                           loss_gap, diff_head_norm);
             msg = buf;
             return loss_gap <= 1e-12 && diff_head_norm == 0.0;
         }});

    criteria.push_back({"false nearest neighbors on lorenz selects D in {3,4,5}",
                        [](std::string& msg) {
                            LorenzParams p;
                            p.dt = 0.05; // lag of 2 samples = 0.1 time units
                            p.n_samples = 3000;
                            p.warmup = 500;
                            const auto [values, diffs] = generate_lorenz(p);
                            const FnnResult res =
                                false_nearest_neighbors(values, 2, 8, 10.0, 0.01);
                            char buf[120];
                            std::snprintf(buf, sizeof(buf), "D = %zu (converged: %s)", res.dim,
                                          res.converged ? "yes" : "no");
                            msg = buf;
                            return res.converged && res.dim >= 3 && res.dim <= 5;
                        }});

    criteria.push_back({"identical configs produce byte-identical reports",
                        [](std::string& msg) {
                            ExperimentConfig cfg = benchmark_config("mackey_glass");
                            cfg.mackey_glass.n_samples = 150;
                            cfg.mackey_glass.warmup = 100;
                            cfg.train.epochs = 5;
                            cfg.n_runs = 2;
                            const std::string a = report_to_json(run_experiment(cfg)).dump(2);
                            const std::string b = report_to_json(run_experiment(cfg)).dump(2);
                            msg = a == b ? "reports identical" : "reports differ";
                            return a == b;
                        }});

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string msg;
        bool ok = false;
        try {
            ok = criteria[i].run(msg);
        } catch (const std::exception& e) {
            msg = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %zu: %s — %s\n", ok ? "PASS" : "FAIL", i + 1,
                    criteria[i].name.c_str(), msg.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    if (failures > 0) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
