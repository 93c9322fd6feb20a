#pragma once

// Safeguarded Newton iteration for increasing scalar functions on a bracket.

#include <cmath>
#include <string>

#include "errors.hpp"

namespace blslab::roots {

struct Tolerance {
    double x_rel = 1e-14;
    double f_abs = 0.0;
    int max_iterations = 200;
};

/// Root of an increasing h on [lo, hi] with h(lo) <= 0 <= h(hi). `fdf(x)`
/// returns {h(x), h'(x)}; Newton steps that leave the bracket fall back to
/// bisection.
template <class FdF>
double newton_bracketed(FdF&& fdf, double lo, double hi, const Tolerance& tol = {}) {
    if (!(lo < hi)) throw RootFindingError("newton_bracketed: empty bracket");
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < tol.max_iterations; ++it) {
        const auto [h, dh] = fdf(x);
        if (!std::isfinite(h)) throw RootFindingError("newton_bracketed: non-finite function value");
        if (std::fabs(h) <= tol.f_abs) return x;
        if (h < 0.0) lo = x;
        else hi = x;
        if (hi - lo <= tol.x_rel * std::fmax(std::fabs(lo), std::fabs(hi))) return 0.5 * (lo + hi);
        if (dh > 0.0 && std::isfinite(dh)) {
            const double step = h / dh;
            if (std::fabs(step) <= 0.25 * tol.x_rel * std::fabs(x)) return x - step;
            const double next = x - step;
            x = (next > lo && next < hi) ? next : 0.5 * (lo + hi);
        } else {
            x = 0.5 * (lo + hi);
        }
    }
    throw RootFindingError("newton_bracketed: no convergence after " + std::to_string(tol.max_iterations) +
                           " iterations");
}

/// Expand hi geometrically until pred(hi) holds; returns hi.
template <class Pred>
double expand_upper(Pred&& pred, double hi, double factor = 2.0, int max_steps = 2000) {
    for (int i = 0; i < max_steps; ++i) {
        if (pred(hi)) return hi;
        hi *= factor;
        if (!std::isfinite(hi)) break;
    }
    throw RootFindingError("expand_upper: could not bracket the root");
}

} // namespace blslab::roots
