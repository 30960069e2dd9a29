#include "difflstm/dynamics.hpp"

#include <cmath>
#include <string>

namespace difflstm {

namespace {

constexpr double kDivergenceLimit = 1e6;

void check_divergence(double x, std::size_t sample, const char* system) {
    if (!std::isfinite(x) || std::abs(x) > kDivergenceLimit) {
        throw NumericError(std::string(system) + ": trajectory diverged at sample " +
                           std::to_string(sample));
    }
}

// Shared driver for the 3-d flows: integrates with RK4, records the
// x-coordinate and its analytic derivative (first component of the field).
std::pair<Series, Series> integrate_flow(const std::function<Vector(const Vector&)>& field,
                                         Vector state, double dt,
                                         std::size_t n_samples, std::size_t warmup,
                                         const std::string& name) {
    if (n_samples == 0) throw ParamError(name + ": n_samples must be > 0");
    if (!(dt > 0.0)) throw ParamError(name + ": dt must be > 0");

    Series values{{}, dt, name, {}};
    Series diffs{{}, dt, name + "_diff", name};
    values.values.reserve(n_samples);
    diffs.values.reserve(n_samples);

    const std::size_t total = warmup + n_samples;
    for (std::size_t i = 0; i < total; ++i) {
        if (i >= warmup) {
            check_divergence(state[0], i - warmup, name.c_str());
            values.values.push_back(state[0]);
            diffs.values.push_back(field(state)[0]);
        }
        state = rk4_step(field, state, dt);
    }
    return {std::move(values), std::move(diffs)};
}

} // namespace

Vector rk4_step(const std::function<Vector(const Vector&)>& f,
                const Vector& state, double dt) {
    const Vector k1 = f(state);

    Vector tmp = state;
    vec_axpy(tmp, dt / 2.0, k1);
    const Vector k2 = f(tmp);

    tmp = state;
    vec_axpy(tmp, dt / 2.0, k2);
    const Vector k3 = f(tmp);

    tmp = state;
    vec_axpy(tmp, dt, k3);
    const Vector k4 = f(tmp);

    Vector out = state;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double incr = k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i];
        if (!std::isfinite(incr)) {
            throw NumericError("rk4_step: non-finite derivative at component " +
                               std::to_string(i));
        }
        out[i] += dt / 6.0 * incr;
    }
    return out;
}

std::pair<Series, Series> generate_mackey_glass(const MackeyGlassParams& p) {
    if (!(p.dt > 0.0) || !(p.tau > 0.0)) {
        throw ParamError("mackey_glass: dt and tau must be > 0");
    }
    const double ratio = p.tau / p.dt;
    const std::size_t delay = static_cast<std::size_t>(std::llround(ratio));
    if (delay == 0 || std::abs(ratio - static_cast<double>(delay)) > 1e-9) {
        throw ParamError("mackey_glass: tau/dt must be a positive integer");
    }
    if (p.n_samples == 0) throw ParamError("mackey_glass: n_samples must be > 0");

    auto rhs = [&p](double x, double x_del) {
        return p.beta * x + p.alpha * x_del / (1.0 + std::pow(x_del, p.c));
    };

    const std::size_t total = p.warmup + p.n_samples;
    // History at grid points; index n holds x(n*dt). x(t)=0 for t<0.
    std::vector<double> hist(total + 1, 0.0);
    hist[0] = p.x0;

    auto delayed = [&hist, delay](std::size_t n, double frac) -> double {
        // x((n - delay + frac)*dt) with frac in {0, 0.5, 1}; values before
        // t=0 are zero, intermediate points interpolated linearly.
        const long long base = static_cast<long long>(n) - static_cast<long long>(delay);
        auto at = [&hist](long long idx) -> double {
            return idx < 0 ? 0.0 : hist[static_cast<std::size_t>(idx)];
        };
        if (frac == 0.0) return at(base);
        if (frac == 1.0) return at(base + 1);
        return (1.0 - frac) * at(base) + frac * at(base + 1);
    };

    for (std::size_t n = 0; n < total; ++n) {
        const double x = hist[n];
        const double h = p.dt;
        const double k1 = rhs(x, delayed(n, 0.0));
        const double k2 = rhs(x + h / 2.0 * k1, delayed(n, 0.5));
        const double k3 = rhs(x + h / 2.0 * k2, delayed(n, 0.5));
        const double k4 = rhs(x + h * k3, delayed(n, 1.0));
        const double next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check_divergence(next, n + 1, "mackey_glass");
        hist[n + 1] = next;
    }

    Series values{{}, p.dt, "mackey_glass", {}};
    Series diffs{{}, p.dt, "mackey_glass_diff", "mackey_glass"};
    values.values.reserve(p.n_samples);
    diffs.values.reserve(p.n_samples);
    for (std::size_t n = p.warmup; n < total; ++n) {
        values.values.push_back(hist[n]);
        diffs.values.push_back(rhs(hist[n], delayed(n, 0.0)));
    }
    return {std::move(values), std::move(diffs)};
}

std::pair<Series, Series> generate_lorenz(const LorenzParams& p) {
    auto field = [&p](const Vector& s) -> Vector {
        return {p.sigma * (s[1] - s[0]),
                s[0] * (p.rho - s[2]) - s[1],
                s[0] * s[1] - p.beta * s[2]};
    };
    return integrate_flow(field, {p.x0, p.g0, p.z0}, p.dt, p.n_samples, p.warmup, "lorenz");
}

std::pair<Series, Series> generate_rossler(const RosslerParams& p) {
    auto field = [&p](const Vector& s) -> Vector {
        return {-s[1] - s[2],
                s[0] + p.a * s[1],
                p.b + (s[0] - p.c) * s[2]};
    };
    return integrate_flow(field, {p.x0, p.g0, p.z0}, p.dt, p.n_samples, p.warmup, "rossler");
}

} // namespace difflstm
