// Compares wall time of the OpenMP-parallel experiment runner against the
// serial reference path and verifies the two produce identical reports.

#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "difflstm/harness.hpp"

using namespace difflstm;

namespace {

double time_runs(const ExperimentConfig& cfg, bool parallel, std::string& digest) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunReport report = run_experiment(cfg, parallel);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    digest = report_to_json(report).dump();
    return secs;
}

} // namespace

int main(int argc, char** argv) {
    ExperimentConfig cfg;
    cfg.dataset = "mackey_glass";
    cfg.mackey_glass.n_samples = 400;
    cfg.mackey_glass.warmup = 100;
    cfg.train.epochs = 30;
    cfg.n_runs = 8;
    if (argc > 1) cfg = ExperimentConfig::load(argv[1]);

#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP not enabled; both paths run serially\n");
#endif

    std::string serial_digest, parallel_digest;
    const double t_serial = time_runs(cfg, false, serial_digest);
    const double t_parallel = time_runs(cfg, true, parallel_digest);

    std::printf("%-10s %10s %10s\n", "path", "seconds", "speedup");
    std::printf("%-10s %10.3f %10s\n", "serial", t_serial, "1.00x");
    std::printf("%-10s %10.3f %9.2fx\n", "parallel", t_parallel, t_serial / t_parallel);

    if (serial_digest != parallel_digest) {
        std::printf("ERROR: serial and parallel reports differ\n");
        return 1;
    }
    std::printf("serial and parallel reports are byte-identical\n");
    return 0;
}
