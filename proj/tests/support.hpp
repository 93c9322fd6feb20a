#pragma once

// Shared fixtures and independent numerical oracles for the test suites.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "blslab/bls.hpp"
#include "blslab/quadrature.hpp"
#include "blslab/specfun.hpp"

namespace testsupport {

using namespace blslab;

/// Every family at the parameter values used throughout the suites.
inline std::vector<GeneratorSpec> default_specs() {
    return {
        GeneratorSpec::log_normal(),         GeneratorSpec::log_student_t(3.0),
        GeneratorSpec::log_student_t(7.0),   GeneratorSpec::log_pearson_vii(5.0, 22.0),
        GeneratorSpec::log_hyperbolic(2.0),  GeneratorSpec::log_laplace(),
        GeneratorSpec::log_slash(4.0),       GeneratorSpec::log_slash(5.0),
        GeneratorSpec::log_power_exponential(0.3), GeneratorSpec::log_power_exponential(0.5),
        GeneratorSpec::log_logistic(),
    };
}

/// One representative per family.
inline std::vector<GeneratorSpec> one_per_family() {
    return {
        GeneratorSpec::log_normal(),       GeneratorSpec::log_student_t(4.0), GeneratorSpec::log_pearson_vii(5.0, 22.0),
        GeneratorSpec::log_hyperbolic(2.0), GeneratorSpec::log_laplace(),      GeneratorSpec::log_slash(4.0),
        GeneratorSpec::log_power_exponential(0.3), GeneratorSpec::log_logistic(),
    };
}

inline quad::Options loose(double abs_tol, double rel_tol) {
    quad::Options o;
    o.abs_tol = abs_tol;
    o.rel_tol = rel_tol;
    o.max_subintervals = 20000;
    return o;
}

/// int over R^2 of joint_pdf(e^x1, e^x2) e^{x1 + x2}: nested adaptive quadrature
/// on infinite ranges in log coordinates. Breakpoints follow the location and
/// scale of the law so the peak is resolved.
inline double integrate_joint_pdf(const BLSParams& theta, const GeneratorSpec& spec) {
    const double inf = std::numeric_limits<double>::infinity();
    const double mu1 = std::log(theta.eta1);
    const double mu2 = std::log(theta.eta2);
    const auto cuts1 = quad::dyadic_breakpoints(mu1, theta.sigma1, -3, 12);
    const double cond_scale = theta.sigma2 * std::sqrt(1.0 - theta.rho * theta.rho);
    auto inner = [&](double x1) {
        const double center = mu2 + theta.rho * theta.sigma2 / theta.sigma1 * (x1 - mu1);
        const auto cuts2 = quad::dyadic_breakpoints(center, cond_scale, -3, 12);
        auto f = [&](double x2) {
            // e^x leaves the double range beyond |x| ~ 700; heavy-tailed laws
            // still carry mass there, so use the log-scale density directly.
            if (std::fabs(x1) > 700.0 || std::fabs(x2) > 700.0) return bes_pdf(theta, spec, x1, x2);
            return std::exp(joint_log_pdf(theta, spec, {std::exp(x1), std::exp(x2)}) + x1 + x2);
        };
        return quad::integrate(f, -inf, inf, loose(1e-12, 1e-9), cuts2);
    };
    return quad::integrate(inner, -inf, inf, loose(1e-9, 1e-9), cuts1);
}

/// P(Z1 in (a, b), rho Z1 + sqrt(1-rho^2) Z2 in (c, d)) for the spherical base:
/// direct 2-D quadrature of g(z1^2 + z2^2)/Z, in the inner variable u = rho z1 + s z2.
inline double strip_probability(const GeneratorSpec& spec, double rho, double a, double b, double c, double d) {
    const double s = std::sqrt(1.0 - rho * rho);
    const double inv_z = std::exp(-spec.log_partition());
    auto inner = [&](double z1) {
        auto f = [&](double u) {
            const double z2 = (u - rho * z1) / s;
            return g(spec, z1 * z1 + z2 * z2) / s;
        };
        return quad::integrate(f, c, d, loose(1e-14, 1e-11), quad::dyadic_breakpoints(rho * z1, s, -3, 12));
    };
    return inv_z * quad::integrate(inner, a, b, loose(1e-13, 1e-10), quad::dyadic_breakpoints(0.0, 1.0, -3, 12));
}

/// One-sample Kolmogorov-Smirnov statistic.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf&& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, f - i / n, (i + 1) / n - f});
    }
    return d;
}

/// Asymptotic Kolmogorov distribution tail P(sqrt(n) D > x), with the
/// small-sample correction of Stephens.
inline double ks_pvalue(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double x = (sn + 0.12 + 0.11 / sn) * d;
    double sum = 0.0;
    for (int k = 1; k < 200; ++k) {
        const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * x * x);
        sum += term;
        if (std::fabs(term) < 1e-16) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

} // namespace testsupport
