#pragma once

// Globally adaptive 10/21-point Gauss-Kronrod quadrature with optional interior
// breakpoints. Semi-infinite ranges are mapped by x = a + t/(1-t).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace blslab::quad {

struct Options {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_subintervals = 4000;
};

struct Result {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 11> kronrod_nodes = {
    0.00000000000000000e+00, 1.48874338981631211e-01, 2.94392862701460198e-01, 4.33395394129247191e-01,
    5.62757134668604683e-01, 6.79409568299024406e-01, 7.80817726586416897e-01, 8.65063366688984511e-01,
    9.30157491355708226e-01, 9.73906528517171720e-01, 9.95657163025808081e-01,
};
inline constexpr std::array<double, 11> kronrod_weights = {
    1.49445554002916906e-01, 1.47739104901338491e-01, 1.42775938577060081e-01, 1.34709217311473326e-01,
    1.23491976262065851e-01, 1.09387158802297642e-01, 9.31254545836976055e-02, 7.50396748109199528e-02,
    5.47558965743519960e-02, 3.25581623079647275e-02, 1.16946388673718743e-02,
};
// Gauss weights for the odd Kronrod nodes 1, 3, 5, 7, 9.
inline constexpr std::array<double, 5> gauss_weights = {
    2.95524224714752870e-01, 2.69266719309996355e-01, 2.19086362515982044e-01,
    1.49451349150580593e-01, 6.66713443086881376e-02,
};

enum class Map { Finite, FromLeft, ToRight };

struct Segment {
    double lo;
    double hi;
    Map map;
    double anchor;
    double value;
    double error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
double mapped_eval(F& f, Map map, double anchor, double t) {
    if (map == Map::Finite) return f(t);
    const double s = 1.0 - t;
    const double jac = 1.0 / (s * s);
    const double x = (map == Map::FromLeft) ? anchor + t / s : anchor - t / s;
    const double v = f(x);
    if (v == 0.0) return 0.0;
    return v * jac;
}

// One 21-point Kronrod rule with the QUADPACK error heuristic.
template <class F>
void kronrod21(F& f, Segment& seg) {
    const double center = 0.5 * (seg.lo + seg.hi);
    const double half = 0.5 * (seg.hi - seg.lo);
    std::array<double, 21> fv{};
    fv[0] = mapped_eval(f, seg.map, seg.anchor, center);
    double resk = kronrod_weights[0] * fv[0];
    double resg = 0.0;
    double resabs = std::fabs(resk);
    for (int j = 1; j <= 10; ++j) {
        const double dx = half * kronrod_nodes[j];
        const double f1 = mapped_eval(f, seg.map, seg.anchor, center - dx);
        const double f2 = mapped_eval(f, seg.map, seg.anchor, center + dx);
        fv[2 * j - 1] = f1;
        fv[2 * j] = f2;
        resk += kronrod_weights[j] * (f1 + f2);
        resabs += kronrod_weights[j] * (std::fabs(f1) + std::fabs(f2));
        if (j % 2 == 1) resg += gauss_weights[(j - 1) / 2] * (f1 + f2);
    }
    const double mean = 0.5 * resk;
    double resasc = kronrod_weights[0] * std::fabs(fv[0] - mean);
    for (int j = 1; j <= 10; ++j) {
        resasc += kronrod_weights[j] * (std::fabs(fv[2 * j - 1] - mean) + std::fabs(fv[2 * j] - mean));
    }
    const double ahalf = std::fabs(half);
    resasc *= ahalf;
    resabs *= ahalf;
    double err = std::fabs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::fmin(1.0, std::pow(200.0 * err / resasc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::fmax(50.0 * eps * resabs, err);
    seg.value = resk * half;
    seg.error = err;
    if (!std::isfinite(seg.value)) throw IntegrationError("integrand returned a non-finite value");
}

} // namespace detail

/// Integrate f over [a, b]; either end may be infinite. Breakpoints strictly
/// inside (a, b) are used to seed the subdivision. Never throws on missed
/// tolerance; check Result::converged.
template <class F>
Result integrate_checked(F&& f, double a, double b, const Options& opt = {}, std::span<const double> breakpoints = {}) {
    using detail::Map;
    using detail::Segment;
    Result out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    std::vector<double> cuts{a};
    for (double p : breakpoints) {
        if (p > a && p < b) cuts.push_back(p);
    }
    cuts.push_back(b);
    std::sort(cuts.begin() + 1, cuts.end() - 1);
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<Segment> heap;
    double total = 0.0;
    double total_err = 0.0;
    int evals = 0;
    auto push = [&](Segment s) {
        detail::kronrod21(f, s);
        evals += 21;
        total += s.value;
        total_err += s.error;
        heap.push(s);
    };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i];
        const double hi = cuts[i + 1];
        if (std::isinf(lo) && std::isinf(hi)) {
            push({0.0, 1.0, Map::FromLeft, 0.0, 0, 0});
            push({0.0, 1.0, Map::ToRight, 0.0, 0, 0});
        } else if (std::isinf(hi)) {
            push({0.0, 1.0, Map::FromLeft, lo, 0, 0});
        } else if (std::isinf(lo)) {
            push({0.0, 1.0, Map::ToRight, hi, 0, 0});
        } else {
            push({lo, hi, Map::Finite, 0.0, 0, 0});
        }
    }

    auto tolerance = [&] { return std::fmax(opt.abs_tol, opt.rel_tol * std::fabs(total)); };
    int count = static_cast<int>(heap.size());
    while (total_err > tolerance() && count < opt.max_subintervals) {
        Segment worst = heap.top();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (!(mid > worst.lo && mid < worst.hi)) break; // cannot refine further in double precision
        heap.pop();
        total -= worst.value;
        total_err -= worst.error;
        push({worst.lo, mid, worst.map, worst.anchor, 0, 0});
        push({mid, worst.hi, worst.map, worst.anchor, 0, 0});
        ++count;
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    total = 0.0;
    total_err = 0.0;
    while (!heap.empty()) {
        total += heap.top().value;
        total_err += heap.top().error;
        heap.pop();
    }
    out.value = sign * total;
    out.error = total_err;
    out.evaluations = evals;
    out.converged = total_err <= std::fmax(opt.abs_tol, opt.rel_tol * std::fabs(total));
    return out;
}

/// As integrate_checked, but throws IntegrationError when the tolerance is missed.
template <class F>
double integrate(F&& f, double a, double b, const Options& opt = {}, std::span<const double> breakpoints = {}) {
    const Result r = integrate_checked(f, a, b, opt, breakpoints);
    if (!r.converged) {
        throw IntegrationError("adaptive quadrature missed tolerance: estimated error " + std::to_string(r.error) +
                               " on value " + std::to_string(r.value));
    }
    return r.value;
}

/// int_a^inf f(x) dx, split at b > a: [a, b] directly and [b, inf) through
/// x = 1/v so that algebraic tails become endpoint singularities at v = 0.
/// Dyadic cuts accumulate toward a and toward v = 0.
template <class F>
Result integrate_upper(F&& f, double a, const Options& opt = {}, double b = std::numeric_limits<double>::quiet_NaN()) {
    if (std::isnan(b)) b = (a > 0.0) ? 2.0 * a : a + 1.0;
    std::vector<double> body_cuts;
    std::vector<double> tail_cuts;
    for (int k = 1; k <= 50; ++k) {
        body_cuts.push_back(a + (b - a) * std::ldexp(1.0, -k));
        tail_cuts.push_back(std::ldexp(1.0 / b, -k));
    }
    auto tail = [&](double v) {
        if (v <= 0.0) return 0.0;
        const double x = 1.0 / v;
        if (std::isinf(x)) return 0.0;
        const double y = f(x);
        return y == 0.0 ? 0.0 : y / (v * v);
    };
    Options piece = opt;
    piece.abs_tol = 0.5 * opt.abs_tol;
    const Result body = integrate_checked(f, a, b, piece, body_cuts);
    const Result rest = integrate_checked(tail, 0.0, 1.0 / b, piece, tail_cuts);
    Result out;
    out.value = body.value + rest.value;
    out.error = body.error + rest.error;
    out.evaluations = body.evaluations + rest.evaluations;
    out.converged = out.error <= std::fmax(opt.abs_tol, opt.rel_tol * std::fabs(out.value));
    return out;
}

/// center +/- scale * 2^k for k in [kmin, kmax], plus center itself.
inline std::vector<double> dyadic_breakpoints(double center = 0.0, double scale = 1.0, int kmin = -3, int kmax = 10) {
    std::vector<double> pts{center};
    for (int k = kmin; k <= kmax; ++k) {
        const double d = scale * std::ldexp(1.0, k);
        pts.push_back(center - d);
        pts.push_back(center + d);
    }
    std::sort(pts.begin(), pts.end());
    return pts;
}

} // namespace blslab::quad
