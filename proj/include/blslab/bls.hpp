#pragma once

// Bivariate log-symmetric distributions: T_i = eta_i * exp(sigma_i * X_i)
// where (X1, X2) is elliptically symmetric with generator g and correlation rho.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "generators.hpp"
#include "quadrature.hpp"
#include "radial.hpp"
#include "rng.hpp"
#include "roots.hpp"
#include "specfun.hpp"

namespace blslab {

/// theta = (eta1, eta2, sigma1, sigma2, rho).
struct BLSParams {
    double eta1 = 1.0;
    double eta2 = 1.0;
    double sigma1 = 1.0;
    double sigma2 = 1.0;
    double rho = 0.0;

    bool valid() const {
        auto pos = [](double v) { return v > 0.0 && std::isfinite(v); };
        return pos(eta1) && pos(eta2) && pos(sigma1) && pos(sigma2) && rho > -1.0 && rho < 1.0;
    }

    void validate() const {
        if (!valid()) {
            throw DomainError("invalid parameters: need eta, sigma > 0 and |rho| < 1");
        }
    }

    /// Validated construction.
    static BLSParams make(double eta1, double eta2, double sigma1, double sigma2, double rho) {
        BLSParams p{eta1, eta2, sigma1, sigma2, rho};
        p.validate();
        return p;
    }

    double eta(int component) const { return component == 1 ? eta1 : eta2; }
    double sigma(int component) const { return component == 1 ? sigma1 : sigma2; }

    friend bool operator==(const BLSParams&, const BLSParams&) = default;
};

struct ObservationPair {
    double t1 = 1.0;
    double t2 = 1.0;
};

struct StandardizedPair {
    double zt1 = 0.0;
    double zt2 = 0.0;
};

/// Interval (lo, hi) with 0 <= lo < hi <= inf.
struct BorelInterval {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();

    void validate() const {
        if (!(lo >= 0.0 && hi > lo)) throw DomainError("interval must satisfy 0 <= lo < hi");
    }
};

/// n x 2 array of strictly positive observation pairs.
class SampleMatrix {
public:
    SampleMatrix() = default;
    explicit SampleMatrix(std::vector<ObservationPair> rows) : rows_(std::move(rows)) {
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const auto& r = rows_[i];
            if (!(r.t1 > 0.0 && r.t2 > 0.0 && std::isfinite(r.t1) && std::isfinite(r.t2))) {
                throw DomainError("observation " + std::to_string(i + 1) + " is not a positive finite pair");
            }
        }
    }

    std::size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }
    const ObservationPair& operator[](std::size_t i) const { return rows_[i]; }
    auto begin() const { return rows_.begin(); }
    auto end() const { return rows_.end(); }
    const std::vector<ObservationPair>& rows() const { return rows_; }

private:
    std::vector<ObservationPair> rows_;
};

// ---------------------------------------------------------------------------
// Standardization and Mahalanobis distance
// ---------------------------------------------------------------------------

inline StandardizedPair standardize(const BLSParams& theta, const ObservationPair& obs) {
    if (!(obs.t1 > 0.0 && obs.t2 > 0.0)) throw DomainError("observations must be strictly positive");
    return {(std::log(obs.t1) - std::log(theta.eta1)) / theta.sigma1,
            (std::log(obs.t2) - std::log(theta.eta2)) / theta.sigma2};
}

inline ObservationPair destandardize(const BLSParams& theta, const StandardizedPair& z) {
    return {theta.eta1 * std::exp(theta.sigma1 * z.zt1), theta.eta2 * std::exp(theta.sigma2 * z.zt2)};
}

inline double quadratic_form(double z1, double z2, double rho) {
    return (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / (1.0 - rho * rho);
}

inline double mahalanobis_sq(const BLSParams& theta, const ObservationPair& obs) {
    const auto z = standardize(theta, obs);
    return quadratic_form(z.zt1, z.zt2, theta.rho);
}

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

/// log density of (log T1, log T2) at (x1, x2).
inline double bes_log_pdf(const BLSParams& theta, const GeneratorSpec& spec, double x1, double x2) {
    const double z1 = (x1 - std::log(theta.eta1)) / theta.sigma1;
    const double z2 = (x2 - std::log(theta.eta2)) / theta.sigma2;
    return log_g(spec, quadratic_form(z1, z2, theta.rho)) - std::log(theta.sigma1) - std::log(theta.sigma2) -
           0.5 * std::log1p(-theta.rho * theta.rho) - spec.log_partition();
}

inline double bes_pdf(const BLSParams& theta, const GeneratorSpec& spec, double x1, double x2) {
    return std::exp(bes_log_pdf(theta, spec, x1, x2));
}

inline double joint_log_pdf(const BLSParams& theta, const GeneratorSpec& spec, const ObservationPair& obs) {
    if (!(obs.t1 > 0.0 && obs.t2 > 0.0)) throw DomainError("joint_pdf: support is t1, t2 > 0");
    const double x1 = std::log(obs.t1);
    const double x2 = std::log(obs.t2);
    return bes_log_pdf(theta, spec, x1, x2) - x1 - x2;
}

inline double joint_pdf(const BLSParams& theta, const GeneratorSpec& spec, const ObservationPair& obs) {
    return std::exp(joint_log_pdf(theta, spec, obs));
}

// ---------------------------------------------------------------------------
// Marginal law of Z1 (shared by Z2 and by rho*Z1 + sqrt(1-rho^2)*Z2)
// ---------------------------------------------------------------------------

namespace detail {

inline quad::Options marginal_options() {
    quad::Options opt;
    opt.abs_tol = 1e-14;
    opt.rel_tol = 1e-11;
    opt.max_subintervals = 20000;
    return opt;
}

} // namespace detail

/// f_Z1(z) = (2/Z) int_0^inf g(z^2 + v^2) dv.
inline double marginal_pdf_z(const GeneratorSpec& spec, double z) {
    if (!std::isfinite(z)) {
        if (std::isnan(z)) throw DomainError("marginal_pdf_z: NaN argument");
        return 0.0;
    }
    const double z2 = z * z;
    auto f = [&](double v) { return g(spec, z2 + v * v); };
    auto r = quad::integrate_upper(f, 0.0, detail::marginal_options());
    return 2.0 * detail::checked(r, "marginal_pdf_z") / std::exp(spec.log_partition());
}

/// P(Z1 > z).
inline double marginal_sf_z(const GeneratorSpec& spec, double z) {
    if (std::isnan(z)) throw DomainError("marginal_sf_z: NaN argument");
    if (z == 0.0) return 0.5;
    if (std::isinf(z)) return z > 0.0 ? 0.0 : 1.0;
    const double a = std::fabs(z);
    // P(Z1 > a) = (1/Z) int_{a^2}^inf g(x) acos(a / sqrt(x)) dx
    auto f = [&](double x) {
        const double c = std::min(1.0, a / std::sqrt(x));
        return g(spec, x) * std::acos(c);
    };
    const double tail =
        detail::checked(quad::integrate_upper(f, a * a, detail::marginal_options()), "marginal_sf_z") /
        std::exp(spec.log_partition());
    return z > 0.0 ? tail : 1.0 - tail;
}

inline double marginal_cdf_z(const GeneratorSpec& spec, double z) {
    return marginal_sf_z(spec, -z);
}

/// P(lo < Z1 < hi) without cancellation in either tail.
inline double marginal_interval_prob_z(const GeneratorSpec& spec, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    if (lo >= 0.0) return marginal_sf_z(spec, lo) - marginal_sf_z(spec, hi);
    if (hi <= 0.0) return marginal_sf_z(spec, -hi) - marginal_sf_z(spec, -lo);
    return 1.0 - marginal_sf_z(spec, hi) - marginal_sf_z(spec, -lo);
}

/// Q_{Z1}(p).
inline double marginal_quantile_z(const GeneratorSpec& spec, double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("marginal_quantile: probability must lie in (0, 1)");
    if (p == 0.5) return 0.0;
    const double q = std::min(p, 1.0 - p); // tail probability
    const double hi = roots::expand_upper([&](double z) { return marginal_sf_z(spec, z) <= q; }, 1.0);
    roots::Tolerance tol;
    tol.x_rel = 1e-14;
    tol.f_abs = 1e-15 * q;
    const double z = roots::newton_bracketed(
        [&](double x) { return std::pair{q - marginal_sf_z(spec, x), marginal_pdf_z(spec, x)}; }, 0.0, hi, tol);
    return p > 0.5 ? z : -z;
}

/// Q_{T_i}(p) = eta_i * exp(sigma_i * Q_{Z1}(p)).
inline double marginal_quantile(const BLSParams& theta, const GeneratorSpec& spec, int component, double p) {
    if (component != 1 && component != 2) throw DomainError("component must be 1 or 2");
    return theta.eta(component) * std::exp(theta.sigma(component) * marginal_quantile_z(spec, p));
}

/// Density of T_i at t.
inline double marginal_pdf(const BLSParams& theta, const GeneratorSpec& spec, int component, double t) {
    if (component != 1 && component != 2) throw DomainError("component must be 1 or 2");
    if (!(t > 0.0)) throw DomainError("marginal_pdf: support is t > 0");
    const double s = theta.sigma(component);
    return marginal_pdf_z(spec, (std::log(t) - std::log(theta.eta(component))) / s) / (t * s);
}

// ---------------------------------------------------------------------------
// Joint CDF
// ---------------------------------------------------------------------------

/// P(T1 <= t1, T2 <= t2) by nested quadrature in standardized coordinates,
/// truncated at the radius whose radial tail probability is 1e-10.
inline double joint_cdf(const BLSParams& theta, const GeneratorSpec& spec, const ObservationPair& obs) {
    if (!(obs.t1 > 0.0 && obs.t2 > 0.0)) throw DomainError("joint_cdf: support is t1, t2 > 0");
    const double a = std::isinf(obs.t1) ? std::numeric_limits<double>::infinity()
                                        : (std::log(obs.t1) - std::log(theta.eta1)) / theta.sigma1;
    const double b = std::isinf(obs.t2) ? std::numeric_limits<double>::infinity()
                                        : (std::log(obs.t2) - std::log(theta.eta2)) / theta.sigma2;
    const double rho = theta.rho;
    const double s = std::sqrt(1.0 - rho * rho);
    const double radius = std::sqrt(mahalanobis_quantile_upper(spec, 1e-10));
    const double z_hi = std::min(a, radius);
    if (z_hi <= -radius) return 0.0;
    const double inv_z = std::exp(-spec.log_partition());
    const int kmax = std::max(2, static_cast<int>(std::ceil(std::log2(radius))) + 1);
    const auto cuts = quad::dyadic_breakpoints(0.0, 1.0, -4, kmax);

    quad::Options inner_opt;
    inner_opt.abs_tol = 1e-13;
    inner_opt.rel_tol = 1e-10;
    inner_opt.max_subintervals = 20000;
    auto inner = [&](double z) {
        const double w_max = std::sqrt(std::max(0.0, radius * radius - z * z));
        const double c = std::isinf(b) ? w_max : std::min(w_max, (b - rho * z) / s);
        if (c <= -w_max) return 0.0;
        auto f = [&](double w) { return g(spec, z * z + w * w); };
        return quad::integrate(f, -w_max, c, inner_opt, cuts);
    };
    quad::Options outer_opt;
    outer_opt.abs_tol = 1e-9;
    outer_opt.rel_tol = 1e-9;
    outer_opt.max_subintervals = 20000;
    std::vector<double> outer_cuts = cuts;
    if (!std::isinf(b) && std::fabs(rho) > 0.0) {
        // The inner limit c(z) meets the circle edge; its kinks sit where
        // (b - rho z)/s = +-sqrt(R^2 - z^2).
        const double disc = radius * radius - b * b;
        if (disc > 0.0) {
            const double root = s * std::sqrt(disc);
            outer_cuts.push_back(rho * b + root);
            outer_cuts.push_back(rho * b - root);
        }
        outer_cuts.push_back(b / rho);
    }
    const double value = quad::integrate(inner, -radius, z_hi, outer_opt, outer_cuts) * inv_z;
    return std::clamp(value, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// n draws through T1 = eta1 exp(sigma1 Z1), T2 = eta2 exp(sigma2 (rho Z1 + sqrt(1-rho^2) Z2)),
/// (Z1, Z2) = R (cos A, sin A), R^2 from the radial law, A uniform on [0, 2 pi).
inline SampleMatrix sample(const BLSParams& theta, const RadialSampler& radial, std::size_t n, std::uint64_t seed) {
    theta.validate();
    if (n == 0) throw DomainError("sample: n must be at least 1");
    Rng rng(seed);
    std::vector<ObservationPair> rows;
    rows.reserve(n);
    const double s = std::sqrt(1.0 - theta.rho * theta.rho);
    const double mu1 = std::log(theta.eta1);
    const double mu2 = std::log(theta.eta2);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::sqrt(radial.upper_quantile(rng.uniform()));
        const double angle = 2.0 * specfun::pi * rng.uniform();
        const double z1 = r * std::cos(angle);
        const double z2 = r * std::sin(angle);
        ObservationPair obs{std::exp(mu1 + theta.sigma1 * z1), std::exp(mu2 + theta.sigma2 * (theta.rho * z1 + s * z2))};
        // Far tails of heavy-tailed generators can leave the double range.
        obs.t1 = std::clamp(obs.t1, std::numeric_limits<double>::min(), std::numeric_limits<double>::max());
        obs.t2 = std::clamp(obs.t2, std::numeric_limits<double>::min(), std::numeric_limits<double>::max());
        rows.push_back(obs);
    }
    return SampleMatrix(std::move(rows));
}

inline SampleMatrix sample(const BLSParams& theta, const GeneratorSpec& spec, std::size_t n, std::uint64_t seed) {
    return sample(theta, RadialSampler(spec), n, seed);
}

// ---------------------------------------------------------------------------
// Conditional laws
// ---------------------------------------------------------------------------

/// Density of T2 at t2 given T1 = t1.
inline double conditional_pdf_t2_given_t1(const BLSParams& theta, const GeneratorSpec& spec, double t1, double t2) {
    const auto z = standardize(theta, {t1, t2});
    const double s = std::sqrt(1.0 - theta.rho * theta.rho);
    const double w = (z.zt2 - theta.rho * z.zt1) / s;
    const double f_cond = g(spec, z.zt1 * z.zt1 + w * w) / (std::exp(spec.log_partition()) * marginal_pdf_z(spec, z.zt1));
    return f_cond / (t2 * theta.sigma2 * s);
}

enum class ConditionalMethod {
    Auto,       // closed forms for the Gaussian and Student-t generators
    Quadrature, // general formula for every generator
};

/// Density of T1 at t1 given T2 in B.
inline double conditional_pdf_t1_given_t2_in(const BLSParams& theta, const GeneratorSpec& spec, double t1,
                                             const BorelInterval& B, ConditionalMethod method = ConditionalMethod::Auto) {
    B.validate();
    if (!(t1 > 0.0)) throw DomainError("conditional density: support is t1 > 0");
    const double z1 = (std::log(t1) - std::log(theta.eta1)) / theta.sigma1;
    const double rho = theta.rho;
    const double s = std::sqrt(1.0 - rho * rho);
    const double mu2 = std::log(theta.eta2);
    const double b0_lo = B.lo > 0.0 ? (std::log(B.lo) - mu2) / theta.sigma2 : -std::numeric_limits<double>::infinity();
    const double b0_hi = std::isinf(B.hi) ? std::numeric_limits<double>::infinity() : (std::log(B.hi) - mu2) / theta.sigma2;
    const double br_lo = std::isinf(b0_lo) ? b0_lo : (b0_lo - rho * z1) / s;
    const double br_hi = std::isinf(b0_hi) ? b0_hi : (b0_hi - rho * z1) / s;
    const double jac = 1.0 / (t1 * theta.sigma1);

    auto normal_interval = [](double lo, double hi) {
        if (lo >= 0.0) return 0.5 * (std::erfc(lo / std::numbers::sqrt2) - std::erfc(hi / std::numbers::sqrt2));
        if (hi <= 0.0) return 0.5 * (std::erfc(-hi / std::numbers::sqrt2) - std::erfc(-lo / std::numbers::sqrt2));
        return 1.0 - 0.5 * std::erfc(hi / std::numbers::sqrt2) - 0.5 * std::erfc(-lo / std::numbers::sqrt2);
    };
    auto t_interval = [](double lo, double hi, double nu) {
        if (lo >= 0.0) return specfun::student_t_sf(lo, nu) - specfun::student_t_sf(hi, nu);
        if (hi <= 0.0) return specfun::student_t_sf(-hi, nu) - specfun::student_t_sf(-lo, nu);
        return 1.0 - specfun::student_t_sf(hi, nu) - specfun::student_t_sf(-lo, nu);
    };

    double numer = 0.0;
    double denom = 0.0;
    if (method == ConditionalMethod::Auto && spec.id() == GeneratorId::LogNormal) {
        denom = normal_interval(b0_lo, b0_hi);
        numer = specfun::std_normal_pdf(z1) * normal_interval(br_lo, br_hi);
    } else if (method == ConditionalMethod::Auto && spec.id() == GeneratorId::LogStudentT) {
        const double nu = spec.nu();
        const double k = std::sqrt((nu + 1.0) / (nu + z1 * z1));
        denom = t_interval(b0_lo, b0_hi, nu);
        numer = specfun::student_t_pdf(z1, nu) * t_interval(k * br_lo, k * br_hi, nu + 1.0);
    } else {
        denom = marginal_interval_prob_z(spec, b0_lo, b0_hi);
        // (1/Z) int_{B_rho} g(z1^2 + w^2) dw, split at 0 so infinite ends map cleanly.
        auto f = [&](double w) { return g(spec, z1 * z1 + w * w); };
        auto piece = [&](double lo, double hi) {
            if (!(hi > lo)) return 0.0;
            return detail::checked(
                quad::integrate_checked(f, lo, hi, detail::marginal_options(), quad::dyadic_breakpoints(0.0, 1.0, -4, 12)),
                "conditional density");
        };
        numer = (piece(br_lo, std::min(br_hi, 0.0)) + piece(std::max(br_lo, 0.0), br_hi)) /
                std::exp(spec.log_partition());
    }
    if (!(denom > std::numeric_limits<double>::min())) {
        throw ZeroProbabilityError("P(T2 in B) underflows; the conditional density is undefined");
    }
    return jac * numer / denom;
}

// ---------------------------------------------------------------------------
// Moments and correlation
// ---------------------------------------------------------------------------

/// E(T_i^r) = eta_i^r * vartheta(sigma_i^2 r^2) where the characteristic generator exists.
inline std::optional<double> moment(const BLSParams& theta, const GeneratorSpec& spec, int component, double r) {
    if (component != 1 && component != 2) throw DomainError("component must be 1 or 2");
    const double s = theta.sigma(component);
    const auto v = characteristic_generator(spec, s * s * r * r);
    if (!v) return std::nullopt;
    return std::pow(theta.eta(component), r) * *v;
}

/// Whether E(T1^2) and E(T2^2) are finite, i.e. E exp(2 sigma_i Z1) < inf.
inline bool second_moments_finite(const BLSParams& theta, const GeneratorSpec& spec) {
    const double m = 2.0 * std::max(theta.sigma1, theta.sigma2);
    switch (spec.id()) {
    case GeneratorId::LogNormal:
    case GeneratorId::LogLogistic: return true;
    case GeneratorId::LogStudentT:
    case GeneratorId::LogPearsonVII:
    case GeneratorId::LogSlash: return false;
    case GeneratorId::LogHyperbolic: return m < spec.nu();             // g ~ exp(-nu r)
    case GeneratorId::LogLaplace: return m < std::numbers::sqrt2;       // g ~ exp(-sqrt(2) r)
    case GeneratorId::LogPowerExponential: return spec.xi() < 1.0 || m < 0.5; // g ~ exp(-r^{2/(1+xi)}/2)
    }
    return false;
}

struct CorrelationEstimate {
    double value = 0.0;
    double std_error = 0.0; // 0 for the closed form
    bool closed_form = false;
};

/// Pearson correlation of (T1, T2): closed form for the Gaussian generator,
/// Monte Carlo with a batch-means standard error when second moments exist,
/// nullopt otherwise.
inline std::optional<CorrelationEstimate> correlation(const BLSParams& theta, const GeneratorSpec& spec,
                                                      std::size_t mc_draws = 200000, std::uint64_t seed = 1) {
    theta.validate();
    if (spec.id() == GeneratorId::LogNormal) {
        const double num = std::expm1(theta.sigma1 * theta.sigma2 * theta.rho);
        const double den = std::sqrt(std::expm1(theta.sigma1 * theta.sigma1) * std::expm1(theta.sigma2 * theta.sigma2));
        return CorrelationEstimate{num / den, 0.0, true};
    }
    if (!second_moments_finite(theta, spec)) return std::nullopt;
    constexpr std::size_t batches = 20;
    if (mc_draws < 10 * batches) throw DomainError("correlation: need at least 200 Monte Carlo draws");
    const SampleMatrix draws = sample(theta, spec, mc_draws, seed);
    auto corr = [&](std::size_t lo, std::size_t hi) {
        double m1 = 0, m2 = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            m1 += draws[i].t1;
            m2 += draws[i].t2;
        }
        const double n = static_cast<double>(hi - lo);
        m1 /= n;
        m2 /= n;
        double c12 = 0, c11 = 0, c22 = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double d1 = draws[i].t1 - m1;
            const double d2 = draws[i].t2 - m2;
            c12 += d1 * d2;
            c11 += d1 * d1;
            c22 += d2 * d2;
        }
        return c12 / std::sqrt(c11 * c22);
    };
    const std::size_t per = mc_draws / batches;
    std::vector<double> b(batches);
    for (std::size_t k = 0; k < batches; ++k) b[k] = corr(k * per, (k + 1) * per);
    double mean = 0;
    for (double v : b) mean += v;
    mean /= batches;
    double var = 0;
    for (double v : b) var += (v - mean) * (v - mean);
    var /= (batches - 1);
    return CorrelationEstimate{corr(0, mc_draws), std::sqrt(var / batches), false};
}

// ---------------------------------------------------------------------------
// Parameter maps under transformations of T
// ---------------------------------------------------------------------------

/// Law of (c1 T1, c2 T2).
inline BLSParams transform_scale(const BLSParams& theta, double c1, double c2) {
    if (!(c1 > 0.0 && c2 > 0.0)) throw DomainError("transform_scale: factors must be positive");
    return BLSParams::make(c1 * theta.eta1, c2 * theta.eta2, theta.sigma1, theta.sigma2, theta.rho);
}

/// Law of (T1^c1, T2^c2): eta_i^c_i, |c_i| sigma_i, sign(c1 c2) rho.
inline BLSParams transform_power(const BLSParams& theta, double c1, double c2) {
    if (c1 == 0.0 || c2 == 0.0 || !std::isfinite(c1) || !std::isfinite(c2)) {
        throw DomainError("transform_power: exponents must be finite and nonzero");
    }
    const double sign = (c1 > 0.0) == (c2 > 0.0) ? 1.0 : -1.0;
    return BLSParams::make(std::pow(theta.eta1, c1), std::pow(theta.eta2, c2), std::fabs(c1) * theta.sigma1,
                           std::fabs(c2) * theta.sigma2, sign * theta.rho);
}

/// theta with both medians set to 1: the common law of (T1/eta1, T2/eta2)
/// and of its reciprocal.
inline BLSParams reciprocal_standardized(const BLSParams& theta) {
    return BLSParams::make(1.0, 1.0, theta.sigma1, theta.sigma2, theta.rho);
}

} // namespace blslab
