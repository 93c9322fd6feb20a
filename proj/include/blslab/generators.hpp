#pragma once

// Density-generator families g_c for bivariate log-symmetric laws.
//
// Each family supplies g(x), log g(x), the log-derivative r(x) = g'(x)/g(x)
// and the closed-form partition function Z = pi * int_0^inf g(u) du.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"

namespace blslab {

enum class GeneratorId {
    LogNormal,
    LogStudentT,
    LogPearsonVII,
    LogHyperbolic,
    LogLaplace,
    LogSlash,
    LogPowerExponential,
    LogLogistic,
};

inline constexpr std::array<GeneratorId, 8> all_generators = {
    GeneratorId::LogNormal,  GeneratorId::LogStudentT, GeneratorId::LogPearsonVII,       GeneratorId::LogHyperbolic,
    GeneratorId::LogLaplace, GeneratorId::LogSlash,    GeneratorId::LogPowerExponential, GeneratorId::LogLogistic,
};

/// Lowercase identifier used on the command line and in output files.
inline std::string_view cli_name(GeneratorId id) {
    switch (id) {
    case GeneratorId::LogNormal: return "lognormal";
    case GeneratorId::LogStudentT: return "logt";
    case GeneratorId::LogPearsonVII: return "logpvii";
    case GeneratorId::LogHyperbolic: return "loghyperbolic";
    case GeneratorId::LogLaplace: return "loglaplace";
    case GeneratorId::LogSlash: return "logslash";
    case GeneratorId::LogPowerExponential: return "logpexp";
    case GeneratorId::LogLogistic: return "loglogistic";
    }
    return "unknown";
}

inline std::optional<GeneratorId> parse_generator(std::string_view name) {
    for (GeneratorId id : all_generators) {
        if (cli_name(id) == name) return id;
    }
    return std::nullopt;
}

/// Extra shape parameters. Only the fields used by the family may be set:
/// nu (Student-t, hyperbolic, slash), xi (Pearson VII, power-exponential),
/// theta (Pearson VII).
struct GeneratorParams {
    std::optional<double> nu{};
    std::optional<double> xi{};
    std::optional<double> theta{};

    friend bool operator==(const GeneratorParams&, const GeneratorParams&) = default;
};

/// Which extra parameters a family takes.
struct ParamSlots {
    bool nu = false;
    bool xi = false;
    bool theta = false;
};

inline ParamSlots param_slots(GeneratorId id) {
    switch (id) {
    case GeneratorId::LogStudentT:
    case GeneratorId::LogHyperbolic:
    case GeneratorId::LogSlash: return {true, false, false};
    case GeneratorId::LogPearsonVII: return {false, true, true};
    case GeneratorId::LogPowerExponential: return {false, true, false};
    default: return {};
    }
}

/// A validated, immutable generator family with frozen extra parameters.
class GeneratorSpec {
public:
    GeneratorSpec(GeneratorId id, GeneratorParams params = {}) : id_(id), params_(params) {
        validate();
        log_partition_ = compute_log_partition();
    }

    static GeneratorSpec log_normal() { return GeneratorSpec(GeneratorId::LogNormal); }
    static GeneratorSpec log_student_t(double nu) { return {GeneratorId::LogStudentT, {.nu = nu}}; }
    static GeneratorSpec log_pearson_vii(double xi, double theta) {
        return {GeneratorId::LogPearsonVII, {.xi = xi, .theta = theta}};
    }
    static GeneratorSpec log_hyperbolic(double nu) { return {GeneratorId::LogHyperbolic, {.nu = nu}}; }
    static GeneratorSpec log_laplace() { return GeneratorSpec(GeneratorId::LogLaplace); }
    static GeneratorSpec log_slash(double nu) { return {GeneratorId::LogSlash, {.nu = nu}}; }
    static GeneratorSpec log_power_exponential(double xi) { return {GeneratorId::LogPowerExponential, {.xi = xi}}; }
    static GeneratorSpec log_logistic() { return GeneratorSpec(GeneratorId::LogLogistic); }

    GeneratorId id() const { return id_; }
    const GeneratorParams& params() const { return params_; }
    double nu() const { return params_.nu.value_or(0.0); }
    double xi() const { return params_.xi.value_or(0.0); }
    double theta() const { return params_.theta.value_or(0.0); }

    /// Closed-form log partition function.
    double log_partition() const { return log_partition_; }

    bool has_characteristic_generator() const { return id_ == GeneratorId::LogNormal; }
    bool has_closed_radial_law() const { return id_ == GeneratorId::LogNormal || id_ == GeneratorId::LogStudentT; }

    /// True when g(x) itself diverges as x -> 0+, which makes the likelihood
    /// unbounded as (eta1, eta2) approaches any observation.
    bool density_unbounded_at_zero() const { return id_ == GeneratorId::LogLaplace; }

    /// True when r(x) diverges as x -> 0+.
    bool r_singular_at_zero() const {
        return id_ == GeneratorId::LogLaplace || (id_ == GeneratorId::LogPowerExponential && xi() > 0.0);
    }

    /// e.g. "logt(nu=4)"
    std::string describe() const {
        std::ostringstream os;
        os.precision(12);
        os << cli_name(id_);
        const std::string extra = extra_string();
        if (extra != "-") os << '(' << extra << ')';
        return os.str();
    }

    /// "nu=4", "xi=5;theta=22" or "-" for families without extra parameters.
    std::string extra_string() const {
        std::ostringstream os;
        os.precision(12);
        bool first = true;
        auto put = [&](const char* name, const std::optional<double>& v) {
            if (!v) return;
            if (!first) os << ';';
            os << name << '=' << *v;
            first = false;
        };
        put("nu", params_.nu);
        put("xi", params_.xi);
        put("theta", params_.theta);
        return first ? std::string("-") : os.str();
    }

    friend bool operator==(const GeneratorSpec& a, const GeneratorSpec& b) {
        return a.id_ == b.id_ && a.params_ == b.params_;
    }

private:
    void validate() const {
        const ParamSlots slots = param_slots(id_);
        auto require = [&](bool wanted, const std::optional<double>& v, const char* name) {
            if (wanted && !v) throw DomainError(std::string(cli_name(id_)) + " requires parameter " + name);
            if (!wanted && v) throw DomainError(std::string(cli_name(id_)) + " does not take parameter " + name);
            if (v && !std::isfinite(*v)) throw DomainError(std::string("parameter ") + name + " must be finite");
        };
        require(slots.nu, params_.nu, "nu");
        require(slots.xi, params_.xi, "xi");
        require(slots.theta, params_.theta, "theta");
        switch (id_) {
        case GeneratorId::LogStudentT:
        case GeneratorId::LogHyperbolic:
            if (!(nu() > 0.0)) throw DomainError("nu must be > 0");
            break;
        case GeneratorId::LogSlash:
            if (!(nu() > 1.0)) throw DomainError("slash nu must be > 1");
            break;
        case GeneratorId::LogPearsonVII:
            if (!(xi() > 1.0)) throw DomainError("Pearson VII xi must be > 1");
            if (!(theta() > 0.0)) throw DomainError("Pearson VII theta must be > 0");
            break;
        case GeneratorId::LogPowerExponential:
            if (!(xi() > -1.0 && xi() <= 1.0)) throw DomainError("power-exponential xi must lie in (-1, 1]");
            break;
        default: break;
        }
    }

    double compute_log_partition() const {
        using specfun::ln_gamma;
        const double log_pi = std::log(specfun::pi);
        switch (id_) {
        case GeneratorId::LogNormal: return std::log(2.0 * specfun::pi);
        case GeneratorId::LogStudentT:
            return ln_gamma(0.5 * nu()) + std::log(nu()) + log_pi - ln_gamma(0.5 * (nu() + 2.0));
        case GeneratorId::LogPearsonVII: return ln_gamma(xi() - 1.0) + std::log(theta()) + log_pi - ln_gamma(xi());
        case GeneratorId::LogHyperbolic:
            return std::log(2.0 * specfun::pi) + std::log(nu() + 1.0) - nu() - 2.0 * std::log(nu());
        case GeneratorId::LogLaplace: return log_pi;
        case GeneratorId::LogSlash: return log_pi - std::log(nu() - 1.0) + 0.5 * (3.0 - nu()) * std::log(2.0);
        case GeneratorId::LogPowerExponential:
            return (xi() + 1.0) * std::log(2.0) + std::log1p(xi()) + ln_gamma(1.0 + xi()) + log_pi;
        case GeneratorId::LogLogistic: return std::log(0.5 * specfun::pi);
        }
        return 0.0;
    }

    GeneratorId id_;
    GeneratorParams params_;
    double log_partition_ = 0.0;
};

namespace detail {

// Slash helpers with s = (nu+1)/2, y = x/2:
//   g(x) = x^{-s} gamma(s, x/2) = 2^{-s} e^{-y} T(s, y)   (series branch, finite at 0)
inline double slash_shape(const GeneratorSpec& spec) { return 0.5 * (spec.nu() + 1.0); }

inline double slash_log_g(const GeneratorSpec& spec, double x) {
    const double s = slash_shape(spec);
    const double y = 0.5 * x;
    if (y < s + 1.0) return -s * std::log(2.0) - y + std::log(specfun::detail::gamma_series_sum(s, y));
    return -s * std::log(x) + specfun::log_lower_incomplete_gamma(s, y);
}

inline double slash_r(const GeneratorSpec& spec, double x) {
    const double s = slash_shape(spec);
    const double y = 0.5 * x;
    if (y < s + 1.0) {
        // r = -(1/(2T)) * sum_{n>=1} y^{n-1} / prod_{k=1}^{n} (s+k); free of cancellation near 0.
        const double t = specfun::detail::gamma_series_sum(s, y);
        double term = 1.0 / (s + 1.0);
        double sum = term;
        for (int n = 2; n < 100000; ++n) {
            term *= y / (s + n);
            sum += term;
            if (term < 1e-17 * sum) break;
        }
        return -sum / (2.0 * t);
    }
    const double log_ratio = (s - 1.0) * std::log(y) - y - specfun::log_lower_incomplete_gamma(s, y);
    return -s / x + 0.5 * std::exp(log_ratio);
}

inline void check_nonnegative(double x) {
    if (!(x >= 0.0)) throw DomainError("density generator argument must be nonnegative");
}

} // namespace detail

/// log g_c(x) for x >= 0 (+inf at 0 for the Laplace generator).
inline double log_g(const GeneratorSpec& spec, double x) {
    detail::check_nonnegative(x);
    switch (spec.id()) {
    case GeneratorId::LogNormal: return -0.5 * x;
    case GeneratorId::LogStudentT: return -0.5 * (spec.nu() + 2.0) * std::log1p(x / spec.nu());
    case GeneratorId::LogPearsonVII: return -spec.xi() * std::log1p(x / spec.theta());
    case GeneratorId::LogHyperbolic: return -spec.nu() * std::sqrt(1.0 + x);
    case GeneratorId::LogLaplace: {
        if (x == 0.0) return std::numeric_limits<double>::infinity();
        const double v = std::sqrt(2.0 * x);
        return std::log(specfun::bessel_k0_scaled(v)) - v;
    }
    case GeneratorId::LogSlash: return detail::slash_log_g(spec, x);
    case GeneratorId::LogPowerExponential: return -0.5 * std::pow(x, 1.0 / (1.0 + spec.xi()));
    case GeneratorId::LogLogistic: return -x - 2.0 * std::log1p(std::exp(-x));
    }
    return 0.0;
}

/// g_c(x) for x >= 0.
inline double g(const GeneratorSpec& spec, double x) {
    return std::exp(log_g(spec, x));
}

/// r(x) = g_c'(x) / g_c(x).
inline double r(const GeneratorSpec& spec, double x) {
    if (!(x >= 0.0)) throw DomainError("r: argument must be nonnegative");
    if (x == 0.0 && spec.r_singular_at_zero()) {
        throw SingularityError(std::string("r is singular at 0 for ") + spec.describe());
    }
    switch (spec.id()) {
    case GeneratorId::LogNormal: return -0.5;
    case GeneratorId::LogStudentT: return -(spec.nu() + 2.0) / (2.0 * (spec.nu() + x));
    case GeneratorId::LogPearsonVII: return -spec.xi() / (spec.theta() + x);
    case GeneratorId::LogHyperbolic: return -spec.nu() / (2.0 * std::sqrt(1.0 + x));
    case GeneratorId::LogLaplace: {
        const double v = std::sqrt(2.0 * x);
        return -specfun::bessel_k1_scaled(v) / (v * specfun::bessel_k0_scaled(v));
    }
    case GeneratorId::LogSlash: return detail::slash_r(spec, x);
    case GeneratorId::LogPowerExponential: {
        const double xi = spec.xi();
        if (x == 0.0) return xi < 0.0 ? 0.0 : -0.5; // xi == 0 is the Gaussian case
        return -std::pow(x, -xi / (xi + 1.0)) / (2.0 * (xi + 1.0));
    }
    case GeneratorId::LogLogistic: return -std::tanh(0.5 * x);
    }
    return 0.0;
}

/// Closed-form partition function Z_gc.
inline double partition_closed(const GeneratorSpec& spec) {
    return std::exp(spec.log_partition());
}

/// pi * int_0^inf g_c(u) du by adaptive quadrature. The body u in [0, 1] is
/// integrated directly and the tail through u = 1/v, v in (0, 1], so algebraic
/// tails become integrable endpoint singularities at v = 0.
inline double partition_numeric(const GeneratorSpec& spec) {
    auto body = [&](double u) { return u > 0.0 ? g(spec, u) : 0.0; };
    auto tail = [&](double v) {
        if (v <= 0.0) return 0.0;
        const double u = 1.0 / v;
        if (std::isinf(u)) return 0.0;
        const double lg = log_g(spec, u) - 2.0 * std::log(v);
        return std::exp(lg);
    };
    // Dyadic cuts toward 0 resolve the Laplace log singularity and slowly
    // decaying tails.
    std::vector<double> cuts;
    for (int k = 1; k <= 40; ++k) cuts.push_back(std::ldexp(1.0, -k));
    quad::Options opt;
    opt.abs_tol = 0.0;
    opt.rel_tol = 1e-12;
    opt.max_subintervals = 20000;
    const quad::Result rb = quad::integrate_checked(body, 0.0, 1.0, opt, cuts);
    const quad::Result rt = quad::integrate_checked(tail, 0.0, 1.0, opt, cuts);
    const double total = rb.value + rt.value;
    if (!(rb.error + rt.error <= 1e-9 * total)) {
        throw IntegrationError("partition_numeric: quadrature missed tolerance for " + spec.describe());
    }
    return specfun::pi * total;
}

/// Characteristic generator, available only for the Gaussian generator.
inline std::optional<double> characteristic_generator(const GeneratorSpec& spec, double x) {
    if (!spec.has_characteristic_generator()) return std::nullopt;
    return std::exp(0.5 * x);
}

} // namespace blslab
