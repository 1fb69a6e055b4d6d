// ode.hpp: classical fourth-order Runge-Kutta on a sample grid with global
// step halving. Used as the independent oracle for every closed form in the
// dynamics module.
#pragma once

#include "phrm/types.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace phrm::ode {

struct Rk4Options {
    double initial_step = 1e-2;
    // Accept once halving the step changes every sample by less than this.
    double tolerance = 1e-8;
    int max_halvings = 14;
};

template <typename State>
struct Rk4Result {
    std::vector<State> samples;  // one per grid point
    double step = 0.0;           // nominal step of the accepted pass
    double richardson = 0.0;     // max sample change of the last halving
    int halvings = 0;
};

template <typename State, typename Rhs>
State rk4_step(const Rhs& f, double t, const State& y, double h) {
    const State k1 = f(t, y);
    const State k2 = f(t + 0.5 * h, State(y + (0.5 * h) * k1));
    const State k3 = f(t + 0.5 * h, State(y + (0.5 * h) * k2));
    const State k4 = f(t + h, State(y + h * k3));
    return State(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

inline void check_grid(std::span<const double> t_grid) {
    if (t_grid.empty()) throw ArgumentError("ode: empty time grid");
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > t_grid[i - 1])) {
            throw ArgumentError("ode: time grid must be strictly increasing");
        }
    }
}

// Integrates with a fixed nominal step: each grid interval is split into
// ceil(dt / step) equal substeps so every grid point is hit exactly.
template <typename State, typename Rhs>
std::vector<State> integrate_fixed(const Rhs& f, const State& y0, std::span<const double> t_grid,
                                   double step) {
    check_grid(t_grid);
    std::vector<State> out;
    out.reserve(t_grid.size());
    out.push_back(y0);
    State y = y0;
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const double span = t_grid[i] - t_grid[i - 1];
        const auto n = static_cast<long>(std::max(1.0, std::ceil(span / step - 1e-9)));
        const double h = span / static_cast<double>(n);
        for (long s = 0; s < n; ++s) {
            y = rk4_step(f, t_grid[i - 1] + static_cast<double>(s) * h, y, h);
        }
        out.push_back(y);
    }
    return out;
}

// Halves the step until successive passes agree at every sample to within
// opt.tolerance (max-entry norm). Throws OracleError if that never happens.
template <typename State, typename Rhs>
Rk4Result<State> integrate(const Rhs& f, const State& y0, std::span<const double> t_grid,
                           const Rk4Options& opt = {}) {
    check_grid(t_grid);
    Rk4Result<State> result;
    if (t_grid.size() == 1) {
        result.samples = {y0};
        return result;
    }
    double step = opt.initial_step;
    auto coarse = integrate_fixed(f, y0, t_grid, step);
    double last = 0.0;
    for (int k = 1; k <= opt.max_halvings; ++k) {
        step *= 0.5;
        auto fine = integrate_fixed(f, y0, t_grid, step);
        last = 0.0;
        for (std::size_t i = 0; i < fine.size(); ++i) {
            last = std::max(last, max_abs(fine[i] - coarse[i]));
        }
        if (!std::isfinite(last)) break;
        if (last < opt.tolerance) {
            result.samples = std::move(fine);
            result.step = step;
            result.richardson = last;
            result.halvings = k;
            return result;
        }
        coarse = std::move(fine);
    }
    throw OracleError("ode: step halving did not converge (last change " + std::to_string(last) +
                      ", step " + std::to_string(step) + ")");
}

}  // namespace phrm::ode
