#pragma once

// Law of the squared Mahalanobis distance d^2 = Z1^2 + Z2^2 of the spherical
// base vector: density pi * g(x) / Z on x > 0.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "errors.hpp"
#include "generators.hpp"
#include "quadrature.hpp"
#include "roots.hpp"
#include "specfun.hpp"

namespace blslab {

namespace detail {

inline quad::Options radial_quad_options() {
    quad::Options opt;
    opt.abs_tol = 1e-14;
    opt.rel_tol = 1e-11;
    opt.max_subintervals = 20000;
    return opt;
}

inline double checked(const quad::Result& r, const char* what) {
    if (!r.converged) throw IntegrationError(std::string(what) + ": quadrature missed tolerance");
    return r.value;
}

} // namespace detail

inline double mahalanobis_pdf(const GeneratorSpec& spec, double x) {
    if (!(x > 0.0)) throw DomainError("mahalanobis_pdf: argument must be positive");
    return std::exp(std::log(specfun::pi) + log_g(spec, x) - spec.log_partition());
}

/// P(d^2 <= x) by quadrature of the density, with no closed-form shortcut.
inline double mahalanobis_cdf_quadrature(const GeneratorSpec& spec, double x) {
    if (!(x >= 0.0)) throw DomainError("mahalanobis_cdf: argument must be nonnegative");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    const double scale = specfun::pi / std::exp(spec.log_partition());
    auto gx = [&](double u) { return u > 0.0 ? g(spec, u) : 0.0; };
    std::vector<double> cuts;
    for (int k = 1; k <= 60; ++k) cuts.push_back(std::ldexp(x, -k));
    const double lower = scale * detail::checked(quad::integrate_checked(gx, 0.0, x, detail::radial_quad_options(), cuts),
                                                 "mahalanobis_cdf");
    if (lower <= 0.5) return lower;
    const double upper =
        scale * detail::checked(quad::integrate_upper(gx, x, detail::radial_quad_options()), "mahalanobis_cdf");
    return 1.0 - upper;
}

/// P(d^2 > x) by quadrature of the density, with no closed-form shortcut.
inline double mahalanobis_sf_quadrature(const GeneratorSpec& spec, double x) {
    if (!(x >= 0.0)) throw DomainError("mahalanobis_sf: argument must be nonnegative");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    const double scale = specfun::pi / std::exp(spec.log_partition());
    auto gx = [&](double u) { return u > 0.0 ? g(spec, u) : 0.0; };
    const double upper =
        scale * detail::checked(quad::integrate_upper(gx, x, detail::radial_quad_options()), "mahalanobis_sf");
    if (upper <= 0.5) return upper;
    return 1.0 - mahalanobis_cdf_quadrature(spec, x);
}

/// P(d^2 <= x); chi-square(2) and 2*F(2, nu) closed forms for the Gaussian
/// and Student-t generators.
inline double mahalanobis_cdf(const GeneratorSpec& spec, double x) {
    if (!(x >= 0.0)) throw DomainError("mahalanobis_cdf: argument must be nonnegative");
    switch (spec.id()) {
    case GeneratorId::LogNormal: return -std::expm1(-0.5 * x);
    case GeneratorId::LogStudentT: return specfun::f_cdf(0.5 * x, 2.0, spec.nu());
    default: return mahalanobis_cdf_quadrature(spec, x);
    }
}

inline double mahalanobis_sf(const GeneratorSpec& spec, double x) {
    if (!(x >= 0.0)) throw DomainError("mahalanobis_sf: argument must be nonnegative");
    switch (spec.id()) {
    case GeneratorId::LogNormal: return std::exp(-0.5 * x);
    case GeneratorId::LogStudentT: return std::exp(-0.5 * spec.nu() * std::log1p(x / spec.nu()));
    default: return mahalanobis_sf_quadrature(spec, x);
    }
}

namespace detail {

// Solve P(d^2 <= x) = p for p <= 1/2, or P(d^2 > x) = q for q < 1/2, in y = log x.
template <class Prob>
double invert_radial(const GeneratorSpec& spec, double target, bool upper, Prob&& prob) {
    auto h = [&](double y) {
        const double x = std::exp(y);
        const double v = prob(x) - target;
        return upper ? -v : v;
    };
    double lo = 0.0;
    double hi = 0.0;
    if (h(0.0) < 0.0) {
        hi = roots::expand_upper([&](double y) { return h(y) >= 0.0; }, 1.0, 2.0, 200);
        lo = hi / 2.0;
        if (hi == 1.0) lo = 0.0;
    } else {
        lo = -roots::expand_upper([&](double y) { return h(-y) <= 0.0; }, 1.0, 2.0, 200);
        hi = lo / 2.0;
        if (lo == -1.0) hi = 0.0;
    }
    roots::Tolerance tol;
    tol.x_rel = 1e-15;
    tol.f_abs = 1e-15 * target;
    return std::exp(roots::newton_bracketed(
        [&](double y) {
            const double x = std::exp(y);
            return std::pair{h(y), x * mahalanobis_pdf(spec, x)};
        },
        lo, hi, tol));
}

} // namespace detail

/// x with P(d^2 > x) = q.
inline double mahalanobis_quantile_upper(const GeneratorSpec& spec, double q) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("mahalanobis_quantile: probability must lie in (0, 1)");
    switch (spec.id()) {
    case GeneratorId::LogNormal: return -2.0 * std::log(q);
    case GeneratorId::LogStudentT: return spec.nu() * std::expm1(-2.0 / spec.nu() * std::log(q));
    default: break;
    }
    if (q < 0.5) {
        return detail::invert_radial(spec, q, true, [&](double x) { return mahalanobis_sf(spec, x); });
    }
    return detail::invert_radial(spec, 1.0 - q, false, [&](double x) { return mahalanobis_cdf(spec, x); });
}

/// x with P(d^2 <= x) = p.
inline double mahalanobis_quantile(const GeneratorSpec& spec, double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("mahalanobis_quantile: probability must lie in (0, 1)");
    switch (spec.id()) {
    case GeneratorId::LogNormal: return -2.0 * std::log1p(-p);
    case GeneratorId::LogStudentT: return spec.nu() * std::expm1(-2.0 / spec.nu() * std::log1p(-p));
    default: break;
    }
    if (p <= 0.5) {
        return detail::invert_radial(spec, p, false, [&](double x) { return mahalanobis_cdf(spec, x); });
    }
    return detail::invert_radial(spec, 1.0 - p, true, [&](double x) { return mahalanobis_sf(spec, x); });
}

/// Draws d^2 by inverse transform. Closed-form inversion for the Gaussian and
/// Student-t generators; otherwise a table of 2048 log-spaced nodes between the
/// 1e-6 and 1 - 1e-9 quantiles with Hermite interpolation, refined by Newton
/// steps on the exact local integral. Draws outside the table use the full
/// quantile solver. Immutable after construction.
class RadialSampler {
public:
    static constexpr int table_nodes = 2048;

    explicit RadialSampler(GeneratorSpec spec) : spec_(std::move(spec)) {
        if (!spec_.has_closed_radial_law()) build_table();
    }

    const GeneratorSpec& spec() const { return spec_; }

    /// d^2 with P(d^2 > x) = u for u in (0, 1).
    double upper_quantile(double u) const {
        switch (spec_.id()) {
        case GeneratorId::LogNormal: return -2.0 * std::log(u);
        case GeneratorId::LogStudentT: return spec_.nu() * std::expm1(-2.0 / spec_.nu() * std::log(u));
        default: break;
        }
        if (u < 0.5) {
            if (u < sf_.back()) return mahalanobis_quantile_upper(spec_, u);
            return refine(u, true);
        }
        const double p = 1.0 - u; // exact for u >= 1/2
        if (p < cdf_.front()) return mahalanobis_quantile(spec_, p);
        return refine(p, false);
    }

    const std::vector<double>& nodes() const { return x_; }
    /// P(d^2 > x) at the nodes, accumulated from the upper end.
    const std::vector<double>& node_sf() const { return sf_; }

private:
    void build_table() {
        const double x_lo = mahalanobis_quantile(spec_, 1e-6);
        const double x_hi = mahalanobis_quantile_upper(spec_, 1e-9);
        x_.resize(table_nodes);
        const double step = std::log(x_hi / x_lo) / (table_nodes - 1);
        for (int k = 0; k < table_nodes; ++k) x_[k] = x_lo * std::exp(step * k);
        x_.front() = x_lo;
        x_.back() = x_hi;
        pdf_.resize(table_nodes);
        for (int k = 0; k < table_nodes; ++k) pdf_[k] = mahalanobis_pdf(spec_, x_[k]);
        std::vector<double> piece(table_nodes - 1);
        for (int k = 0; k + 1 < table_nodes; ++k) piece[k] = mass(x_[k], x_[k + 1]);
        cdf_.resize(table_nodes);
        sf_.resize(table_nodes);
        cdf_[0] = mahalanobis_cdf(spec_, x_lo);
        for (int k = 1; k < table_nodes; ++k) cdf_[k] = cdf_[k - 1] + piece[k - 1];
        sf_[table_nodes - 1] = mahalanobis_sf(spec_, x_hi);
        for (int k = table_nodes - 2; k >= 0; --k) sf_[k] = sf_[k + 1] + piece[k];
    }

    // Probability mass of (a, b) under the radial law.
    double mass(double a, double b) const {
        auto f = [&](double x) { return mahalanobis_pdf(spec_, x); };
        quad::Options opt;
        opt.abs_tol = 0.0;
        opt.rel_tol = 1e-13;
        return quad::integrate_checked(f, a, b, opt).value;
    }

    // Solve cdf(x) = target (upper == false) or sf(x) = target (upper == true)
    // starting from the table interval that brackets the target.
    double refine(double target, bool upper) const {
        std::size_t k;
        if (upper) {
            // sf_ is decreasing; find k with sf_[k] >= target > sf_[k+1]
            auto it = std::lower_bound(sf_.rbegin(), sf_.rend(), target);
            k = static_cast<std::size_t>(sf_.rend() - it) - 1;
        } else {
            auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
            k = static_cast<std::size_t>(it - cdf_.begin()) - 1;
        }
        k = std::min<std::size_t>(k, x_.size() - 2);
        const double a = x_[k];
        const double b = x_[k + 1];
        // Anchor probability measured from node k in the direction of increasing x.
        const double delta = upper ? sf_[k] - target : target - cdf_[k];
        const double width = upper ? sf_[k] - sf_[k + 1] : cdf_[k + 1] - cdf_[k];
        // Cubic Hermite interpolation of x as a function of accumulated mass.
        const double s = std::clamp(delta / width, 0.0, 1.0);
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        const double h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s);
        const double h11 = s * s * (s - 1);
        double x = h00 * a + h10 * width / pdf_[k] + h01 * b + h11 * width / pdf_[k + 1];
        if (!(x > a && x < b)) x = a + s * (b - a);
        double lo = a;
        double hi = b;
        for (int it = 0; it < 20; ++it) {
            const double resid = mass(a, x) - delta;
            if (resid < 0.0) lo = x;
            else hi = x;
            const double step = resid / mahalanobis_pdf(spec_, x);
            if (std::fabs(step) <= 1e-14 * x) return x - step;
            double next = x - step;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            x = next;
        }
        return x;
    }

    GeneratorSpec spec_;
    std::vector<double> x_;
    std::vector<double> pdf_;
    std::vector<double> cdf_;
    std::vector<double> sf_;
};

} // namespace blslab
