#pragma once

#include <cstddef>
#include <functional>
#include <utility>

#include "difflstm/series.hpp"

namespace difflstm {

struct MackeyGlassParams {
    double alpha = 0.2;
    // Sign carried by the parameter; the chaotic regime needs decay, so the
    // default is -0.1 even though the printed form of the equation has +0.1.
    double beta = -0.1;
    double c = 10.0;
    double tau = 17.0;
    double x0 = 1.2;
    double dt = 0.1;
    std::size_t n_samples = 1000;
    std::size_t warmup = 0;
};

struct LorenzParams {
    double sigma = 10.0;
    double rho = 28.0;
    double beta = 8.0 / 3.0;
    double x0 = 1.0, g0 = 1.0, z0 = 1.0;
    // Sampling resolution at which the benchmark protocol reproduces the
    // reference error bands; also keeps sampled differentials consistent
    // with finite differences of the sampled values.
    double dt = 0.005;
    std::size_t n_samples = 1000;
    std::size_t warmup = 0;
};

struct RosslerParams {
    double a = 0.15;
    double b = 0.20;
    double c = 10.0;
    double x0 = 1.0, g0 = 1.0, z0 = 1.0;
    double dt = 0.01; // see LorenzParams::dt
    std::size_t n_samples = 1000;
    std::size_t warmup = 0;
};

/// One classical fourth-order Runge-Kutta step for an autonomous field.
Vector rk4_step(const std::function<Vector(const Vector&)>& f,
                const Vector& state, double dt);

/// Returns (value series, analytic differential series), equal lengths.
std::pair<Series, Series> generate_mackey_glass(const MackeyGlassParams& p);
std::pair<Series, Series> generate_lorenz(const LorenzParams& p);
std::pair<Series, Series> generate_rossler(const RosslerParams& p);

} // namespace difflstm
