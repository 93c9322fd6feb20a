#pragma once

// Quasi-Newton (BFGS) minimization with a strong-Wolfe line search, followed
// by optional Newton polishing with a finite-difference Hessian of the
// analytic gradient.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace blslab::opt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Objective value and gradient at a point. Returning a non-finite value (or
/// throwing) marks the point as infeasible; the line search then backs off.
struct Evaluation {
    double value = std::numeric_limits<double>::infinity();
    Vec gradient;
};

using Objective = std::function<Evaluation(const Vec&)>;

struct Settings {
    double gradient_tol = 1e-10;  // stop when ||grad||_inf falls below this
    double relative_f_tol = 1e-15; // stall detection on successive values
    int max_iterations = 500;
    int newton_polish_steps = 6;
};

struct Outcome {
    Vec x;
    double value = std::numeric_limits<double>::infinity();
    Vec gradient;
    double grad_norm = std::numeric_limits<double>::infinity();
    int iterations = 0;
    int evaluations = 0;
    std::string message;
};

namespace detail {

inline Evaluation safe_eval(const Objective& f, const Vec& x, int& count) {
    ++count;
    try {
        Evaluation e = f(x);
        if (!std::isfinite(e.value) || !e.gradient.allFinite()) e.value = std::numeric_limits<double>::infinity();
        return e;
    } catch (const std::exception&) {
        return {};
    }
}

// Minimizer of the cubic interpolating (a, fa, ga) and (b, fb, gb), clamped
// into the interior of [min(a,b), max(a,b)].
inline double cubic_min(double a, double fa, double ga, double b, double fb, double gb) {
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    double t = 0.5 * (a + b);
    if (disc >= 0.0 && std::isfinite(disc)) {
        const double d2 = std::copysign(std::sqrt(disc), b - a);
        const double denom = gb - ga + 2.0 * d2;
        if (denom != 0.0) t = b - (b - a) * (gb + d2 - d1) / denom;
    }
    const double margin = 0.1 * (hi - lo);
    if (!(t > lo + margin && t < hi - margin)) t = 0.5 * (lo + hi);
    return t;
}

struct LineResult {
    double step = 0.0;
    Evaluation eval;
    bool ok = false;
};

// Strong-Wolfe line search (Nocedal & Wright, Alg. 3.5/3.6).
inline LineResult wolfe_search(const Objective& f, const Vec& x, const Evaluation& e0, const Vec& dir, double step0,
                               int& count) {
    constexpr double c1 = 1e-4;
    constexpr double c2 = 0.9;
    const double f0 = e0.value;
    const double g0 = e0.gradient.dot(dir);
    LineResult out;
    if (!(g0 < 0.0)) return out;

    auto phi = [&](double a, Evaluation& e) {
        e = safe_eval(f, x + a * dir, count);
        return std::isfinite(e.value) ? e.gradient.dot(dir) : std::numeric_limits<double>::quiet_NaN();
    };

    double a_prev = 0.0, f_prev = f0, g_prev = g0;
    double a = step0;
    Evaluation e;
    auto zoom = [&](double lo, double flo, double glo, double hi, double fhi, double ghi) {
        for (int k = 0; k < 60; ++k) {
            const double aj = std::isfinite(fhi) ? cubic_min(lo, flo, glo, hi, fhi, ghi) : 0.5 * (lo + hi);
            Evaluation ej;
            const double gj = phi(aj, ej);
            if (!std::isfinite(ej.value) || ej.value > f0 + c1 * aj * g0 || ej.value >= flo) {
                hi = aj;
                fhi = ej.value;
                ghi = gj;
            } else {
                if (std::fabs(gj) <= -c2 * g0) return LineResult{aj, ej, true};
                if (gj * (hi - lo) >= 0.0) {
                    hi = lo;
                    fhi = flo;
                    ghi = glo;
                }
                lo = aj;
                flo = ej.value;
                glo = gj;
            }
            if (std::fabs(hi - lo) <= 1e-16 * std::max(1.0, std::fabs(lo))) break;
        }
        // Accept the best sufficient-decrease point found, if any.
        if (lo > 0.0) {
            Evaluation el;
            phi(lo, el);
            if (std::isfinite(el.value) && el.value < f0) return LineResult{lo, el, true};
        }
        return LineResult{};
    };

    for (int i = 0; i < 60; ++i) {
        const double g = phi(a, e);
        if (!std::isfinite(e.value)) {
            // infeasible: shrink toward the last good point
            a = a_prev + 0.25 * (a - a_prev);
            if (a - a_prev < 1e-16) return out;
            continue;
        }
        if (e.value > f0 + c1 * a * g0 || (i > 0 && e.value >= f_prev)) {
            return zoom(a_prev, f_prev, g_prev, a, e.value, g);
        }
        if (std::fabs(g) <= -c2 * g0) return LineResult{a, e, true};
        if (g >= 0.0) return zoom(a, e.value, g, a_prev, f_prev, g_prev);
        a_prev = a;
        f_prev = e.value;
        g_prev = g;
        a *= 2.0;
    }
    return out;
}

} // namespace detail

/// Central-difference Hessian of an analytic gradient, symmetrized.
inline Mat gradient_jacobian(const Objective& f, const Vec& x, int& count, double rel_step = 1e-5) {
    const auto n = x.size();
    Mat h(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double step = rel_step * std::max(1.0, std::fabs(x[j]));
        Vec xp = x, xm = x;
        xp[j] += step;
        xm[j] -= step;
        const Evaluation ep = detail::safe_eval(f, xp, count);
        const Evaluation em = detail::safe_eval(f, xm, count);
        if (!std::isfinite(ep.value) || !std::isfinite(em.value)) return Mat();
        h.col(j) = (ep.gradient - em.gradient) / (2.0 * step);
    }
    return 0.5 * (h + h.transpose());
}

inline Outcome minimize_bfgs(const Objective& f, const Vec& x0, const Settings& s = {}) {
    Outcome out;
    int count = 0;
    Vec x = x0;
    Evaluation e = detail::safe_eval(f, x, count);
    if (!std::isfinite(e.value)) {
        out.x = x0;
        out.message = "objective is not finite at the starting point";
        out.evaluations = count;
        return out;
    }
    const auto n = x.size();
    Mat hinv = Mat::Identity(n, n);
    bool scaled = false;
    int stalls = 0;
    int it = 0;
    out.message = "iteration limit reached";
    for (; it < s.max_iterations; ++it) {
        if (e.gradient.lpNorm<Eigen::Infinity>() <= s.gradient_tol) {
            out.message = "gradient tolerance reached";
            break;
        }
        Vec dir = -hinv * e.gradient;
        if (!(dir.dot(e.gradient) < 0.0)) {
            hinv = Mat::Identity(n, n);
            dir = -e.gradient;
        }
        const double step0 = scaled ? 1.0 : std::min(1.0, 1.0 / std::max(1e-300, e.gradient.lpNorm<Eigen::Infinity>()));
        detail::LineResult ls = detail::wolfe_search(f, x, e, dir, step0, count);
        if (!ls.ok) {
            if (hinv.isIdentity()) {
                out.message = "line search failed";
                break;
            }
            hinv = Mat::Identity(n, n); // restart from steepest descent
            scaled = false;
            continue;
        }
        const Vec sv = ls.step * dir;
        const Vec yv = ls.eval.gradient - e.gradient;
        const double sy = sv.dot(yv);
        const double f_old = e.value;
        x += sv;
        e = std::move(ls.eval);
        if (sy > 1e-300) {
            if (!scaled) {
                hinv = Mat::Identity(n, n) * (sy / yv.squaredNorm());
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Mat I = Mat::Identity(n, n);
            hinv = (I - rho * sv * yv.transpose()) * hinv * (I - rho * yv * sv.transpose()) + rho * sv * sv.transpose();
        }
        if (std::fabs(f_old - e.value) <= s.relative_f_tol * std::max(1.0, std::fabs(e.value))) {
            if (++stalls >= 3) {
                out.message = "objective stalled";
                ++it;
                break;
            }
        } else {
            stalls = 0;
        }
    }

    // Newton polish: near the optimum the quadratic model is accurate, which
    // drives the gradient to rounding level.
    for (int k = 0; k < s.newton_polish_steps; ++k) {
        const double gnorm = e.gradient.lpNorm<Eigen::Infinity>();
        if (gnorm <= 1e-3 * s.gradient_tol) break;
        const Mat h = gradient_jacobian(f, x, count);
        if (h.size() == 0) break;
        Eigen::LLT<Mat> llt(h);
        if (llt.info() != Eigen::Success) break;
        const Vec d = llt.solve(-e.gradient);
        double a = 1.0;
        bool moved = false;
        for (int b = 0; b < 30; ++b, a *= 0.5) {
            Evaluation en = detail::safe_eval(f, x + a * d, count);
            if (std::isfinite(en.value) && en.gradient.lpNorm<Eigen::Infinity>() < gnorm &&
                en.value <= e.value + 1e-12 * std::max(1.0, std::fabs(e.value))) {
                x += a * d;
                e = std::move(en);
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }

    out.x = x;
    out.value = e.value;
    out.gradient = e.gradient;
    out.grad_norm = e.gradient.lpNorm<Eigen::Infinity>();
    out.iterations = it;
    out.evaluations = count;
    return out;
}

} // namespace blslab::opt
