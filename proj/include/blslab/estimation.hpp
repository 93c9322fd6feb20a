#pragma once

// Maximum-likelihood fitting of theta = (eta1, eta2, sigma1, sigma2, rho) for a
// fixed generator family, standard errors from the observed information, and
// profile likelihood over the family's extra parameters.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "bls.hpp"
#include "errors.hpp"
#include "generators.hpp"
#include "optimize.hpp"
#include "parallel.hpp"

namespace blslab {

/// Number of counted parameters in AIC/BIC. Profiled extra generator
/// parameters are not counted.
inline constexpr int counted_parameters = 5;

/// Parameter order used by every five-vector in this module.
inline constexpr std::array<const char*, 5> parameter_names = {"eta1", "eta2", "sigma1", "sigma2", "rho"};

using Vector5 = std::array<double, 5>;

inline Vector5 to_array(const BLSParams& p) { return {p.eta1, p.eta2, p.sigma1, p.sigma2, p.rho}; }
inline BLSParams from_array(const Vector5& v) { return {v[0], v[1], v[2], v[3], v[4]}; }

struct FitResult {
    BLSParams theta_hat;
    /// NaN entries when the observed information was not positive definite.
    Vector5 std_errors{};
    double log_lik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    std::size_t n_obs = 0;
    bool converged = false;
    int iterations = 0;
    double grad_norm = 0.0;
    GeneratorSpec spec = GeneratorSpec::log_normal();
    std::string message;
};

inline double aic(double log_lik) { return -2.0 * log_lik + 2.0 * counted_parameters; }
inline double bic(double log_lik, std::size_t n) {
    return -2.0 * log_lik + counted_parameters * std::log(static_cast<double>(n));
}

namespace detail {

inline void require_observations(const SampleMatrix& data, std::size_t minimum, const char* who) {
    if (data.size() < minimum) {
        throw DomainError(std::string(who) + ": need at least " + std::to_string(minimum) + " observations");
    }
}

// Log-data, computed once per fit.
struct LogData {
    std::vector<double> y1;
    std::vector<double> y2;
    double sum_log = 0.0; // sum of log(t1 * t2)

    explicit LogData(const SampleMatrix& data) {
        y1.reserve(data.size());
        y2.reserve(data.size());
        for (const auto& o : data) {
            y1.push_back(std::log(o.t1));
            y2.push_back(std::log(o.t2));
            sum_log += y1.back() + y2.back();
        }
    }
    std::size_t size() const { return y1.size(); }
};

// Sum of log g(x_i) and, optionally, the five score components.
struct KernelSums {
    double sum_log_g = 0.0;
    Vector5 score{};
};

inline KernelSums kernel(const BLSParams& th, const GeneratorSpec& spec, const LogData& d, bool with_score) {
    const double n = static_cast<double>(d.size());
    const double rho = th.rho;
    const double one_m = 1.0 - rho * rho;
    const double le1 = std::log(th.eta1);
    const double le2 = std::log(th.eta2);
    KernelSums k;
    double s_e1 = 0.0, s_e2 = 0.0, s_s1 = 0.0, s_s2 = 0.0, s_r = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double z1 = (d.y1[i] - le1) / th.sigma1;
        const double z2 = (d.y2[i] - le2) / th.sigma2;
        const double x = quadratic_form(z1, z2, rho);
        k.sum_log_g += log_g(spec, x);
        if (!with_score) continue;
        const double gr = r(spec, x);
        s_e1 += (rho * z2 - z1) * gr;
        s_e2 += (rho * z1 - z2) * gr;
        s_s1 += z1 * (rho * z2 - z1) * gr;
        s_s2 += z2 * (rho * z1 - z2) * gr;
        s_r += (rho * z1 - z2) * (rho * z2 - z1) * gr;
    }
    if (with_score) {
        k.score[0] = 2.0 / (th.sigma1 * th.eta1 * one_m) * s_e1;
        k.score[1] = 2.0 / (th.sigma2 * th.eta2 * one_m) * s_e2;
        k.score[2] = -n / th.sigma1 + 2.0 / (th.sigma1 * one_m) * s_s1;
        k.score[3] = -n / th.sigma2 + 2.0 / (th.sigma2 * one_m) * s_s2;
        k.score[4] = n * rho / one_m - 2.0 / (one_m * one_m) * s_r;
    }
    return k;
}

inline double full_log_lik(const BLSParams& th, const GeneratorSpec& spec, const LogData& d, double sum_log_g) {
    const double n = static_cast<double>(d.size());
    return -n * std::log(th.sigma1) - n * std::log(th.sigma2) - 0.5 * n * std::log1p(-th.rho * th.rho) + sum_log_g -
           n * spec.log_partition() - d.sum_log;
}

// Unconstrained coordinates u = (log eta1, log eta2, log sigma1, log sigma2, atanh rho).
inline opt::Vec to_unconstrained(const BLSParams& p) {
    opt::Vec u(5);
    u << std::log(p.eta1), std::log(p.eta2), std::log(p.sigma1), std::log(p.sigma2), std::atanh(p.rho);
    return u;
}

inline BLSParams from_unconstrained(const opt::Vec& u) {
    return {std::exp(u[0]), std::exp(u[1]), std::exp(u[2]), std::exp(u[3]), std::tanh(u[4])};
}

// Chain-rule factors d theta_j / d u_j.
inline Vector5 jacobian_diagonal(const BLSParams& p) {
    return {p.eta1, p.eta2, p.sigma1, p.sigma2, 1.0 - p.rho * p.rho};
}

inline double median(std::vector<double> v) {
    const std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
    const double hi = v[m];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m));
    return 0.5 * (lo + hi);
}

inline double robust_scale(const std::vector<double>& y) {
    const double med = median(y);
    std::vector<double> dev(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) dev[i] = std::fabs(y[i] - med);
    double s = 1.4826 * median(dev);
    if (s > 0.0) return s;
    // More than half the values tie; fall back to the plain standard deviation.
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    s = std::sqrt(ss / static_cast<double>(y.size()));
    return s > 0.0 ? s : 1e-3;
}

inline double sample_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

} // namespace detail

/// Full log-likelihood sum_i log f(t_i; theta), including -n log Z and the
/// Jacobian term -sum_i log(t1_i t2_i).
inline double log_likelihood(const BLSParams& theta, const GeneratorSpec& spec, const SampleMatrix& data) {
    theta.validate();
    detail::require_observations(data, 1, "log_likelihood");
    const detail::LogData d(data);
    return detail::full_log_lik(theta, spec, d, detail::kernel(theta, spec, d, false).sum_log_g);
}

/// Log-likelihood without the additive constant:
/// -n log sigma1 - n log sigma2 - (n/2) log(1 - rho^2) + sum_i log g(x_i).
inline double log_likelihood_kernel(const BLSParams& theta, const GeneratorSpec& spec, const SampleMatrix& data) {
    theta.validate();
    detail::require_observations(data, 1, "log_likelihood_kernel");
    const detail::LogData d(data);
    const double n = static_cast<double>(d.size());
    return -n * std::log(theta.sigma1) - n * std::log(theta.sigma2) - 0.5 * n * std::log1p(-theta.rho * theta.rho) +
           detail::kernel(theta, spec, d, false).sum_log_g;
}

/// (d/d eta1, d/d eta2, d/d sigma1, d/d sigma2, d/d rho) of the log-likelihood.
/// Throws SingularityError when some x_i = 0 for a family with r singular at 0.
inline Vector5 score(const BLSParams& theta, const GeneratorSpec& spec, const SampleMatrix& data) {
    theta.validate();
    detail::require_observations(data, 1, "score");
    const detail::LogData d(data);
    return detail::kernel(theta, spec, d, true).score;
}

/// The two default starting points: componentwise median, MAD-based scale and
/// correlation of the log-data; then the same values perturbed by 20%.
inline std::array<BLSParams, 2> default_initializations(const SampleMatrix& data) {
    detail::require_observations(data, 2, "default_initializations");
    const detail::LogData d(data);
    BLSParams p;
    p.eta1 = std::exp(detail::median(d.y1));
    p.eta2 = std::exp(detail::median(d.y2));
    p.sigma1 = detail::robust_scale(d.y1);
    p.sigma2 = detail::robust_scale(d.y2);
    p.rho = std::clamp(detail::sample_correlation(d.y1, d.y2), -0.95, 0.95);
    BLSParams q{p.eta1 * 1.2, p.eta2 * 0.8, p.sigma1 * 1.2, p.sigma2 * 0.8, p.rho * 0.8};
    return {p, q};
}

struct FitOptions {
    /// Infinity norm of the gradient of -loglik/n in the unconstrained
    /// coordinates below which a fit counts as converged.
    double converged_grad_tol = 1e-6;
    /// Target for the optimizer itself; it keeps going past the convergence
    /// threshold to tighten the estimates.
    double target_grad_tol = 1e-10;
    int max_iterations = 500;
    bool compute_standard_errors = true;
};

inline Vector5 standard_errors(const FitResult& fit, const SampleMatrix& data);

namespace detail {

inline std::size_t nearest_observation(const BLSParams& th, const LogData& d) {
    std::size_t best = 0;
    double best_x = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double x = quadratic_form((d.y1[i] - std::log(th.eta1)) / th.sigma1,
                                        (d.y2[i] - std::log(th.eta2)) / th.sigma2, th.rho);
        if (x < best_x) {
            best_x = x;
            best = i;
        }
    }
    return best;
}

inline FitResult fit_from(const SampleMatrix& data, const GeneratorSpec& spec, const LogData& d,
                          const BLSParams& start, const FitOptions& o) {
    const double n = static_cast<double>(d.size());
    opt::Objective objective = [&](const opt::Vec& u) {
        const BLSParams th = from_unconstrained(u);
        opt::Evaluation e;
        if (!th.valid()) return e;
        const KernelSums k = kernel(th, spec, d, true);
        e.value = -full_log_lik(th, spec, d, k.sum_log_g) / n;
        const Vector5 jac = jacobian_diagonal(th);
        e.gradient.resize(5);
        for (int j = 0; j < 5; ++j) e.gradient[j] = -k.score[j] * jac[j] / n;
        return e;
    };
    opt::Settings s;
    s.gradient_tol = o.target_grad_tol;
    s.max_iterations = o.max_iterations;
    const opt::Outcome res = opt::minimize_bfgs(objective, to_unconstrained(start), s);

    FitResult fit;
    fit.spec = spec;
    fit.n_obs = d.size();
    fit.iterations = res.iterations;
    fit.grad_norm = res.grad_norm;
    fit.message = res.message;
    fit.std_errors.fill(std::numeric_limits<double>::quiet_NaN());
    fit.theta_hat = from_unconstrained(res.x);
    if (!std::isfinite(res.value) || !fit.theta_hat.valid()) {
        fit.converged = false;
        fit.log_lik = -std::numeric_limits<double>::infinity();
        fit.aic = fit.bic = std::numeric_limits<double>::infinity();
        return fit;
    }
    fit.log_lik = -res.value * n;
    fit.aic = aic(fit.log_lik);
    fit.bic = bic(fit.log_lik, d.size());
    fit.converged = res.grad_norm <= o.converged_grad_tol;
    if (!fit.converged && spec.density_unbounded_at_zero()) {
        const std::size_t k = nearest_observation(fit.theta_hat, d);
        const double x = quadratic_form((d.y1[k] - std::log(fit.theta_hat.eta1)) / fit.theta_hat.sigma1,
                                        (d.y2[k] - std::log(fit.theta_hat.eta2)) / fit.theta_hat.sigma2,
                                        fit.theta_hat.rho);
        if (x < 1e-10) {
            fit.message = "log-likelihood unbounded: estimate collapsed onto observation " + std::to_string(k + 1);
        }
    }
    if (fit.converged && o.compute_standard_errors) {
        try {
            fit.std_errors = standard_errors(fit, data);
        } catch (const SingularInformationError& err) {
            fit.message += std::string("; ") + err.what();
        }
    }
    return fit;
}

} // namespace detail

/// Maximum-likelihood fit by BFGS in (log eta1, log eta2, log sigma1,
/// log sigma2, atanh rho) with the analytic score. Without an explicit start
/// the first default initialization is used, and the second one only when the
/// first does not converge; the better of the two is returned.
inline FitResult fit_mle(const SampleMatrix& data, const GeneratorSpec& spec,
                         const std::optional<BLSParams>& init = std::nullopt, const FitOptions& options = {}) {
    detail::require_observations(data, 5, "fit_mle");
    const detail::LogData d(data);
    if (init) {
        init->validate();
        return detail::fit_from(data, spec, d, *init, options);
    }
    const auto starts = default_initializations(data);
    FitResult first = detail::fit_from(data, spec, d, starts[0], options);
    if (first.converged) return first;
    FitResult second = detail::fit_from(data, spec, d, starts[1], options);
    if (second.converged && !first.converged) return second;
    return second.log_lik > first.log_lik ? second : first;
}

/// Square roots of the diagonal of the inverse observed information, with the
/// Hessian of -loglik taken by central differences of the analytic score in
/// the original coordinates.
inline Vector5 standard_errors(const FitResult& fit, const SampleMatrix& data) {
    if (!fit.converged) throw DomainError("standard_errors: fit did not converge");
    detail::require_observations(data, 5, "standard_errors");
    const detail::LogData d(data);
    const BLSParams th = fit.theta_hat;
    const Vector5 base = to_array(th);
    constexpr double rel = 6e-6; // about cbrt(machine epsilon)
    Eigen::Matrix<double, 5, 5> h;
    for (int j = 0; j < 5; ++j) {
        double step = rel * std::fabs(base[j]);
        if (j == 4) step = rel * (1.0 - std::fabs(th.rho));
        Vector5 plus = base, minus = base;
        plus[j] += step;
        minus[j] -= step;
        const Vector5 sp = detail::kernel(from_array(plus), fit.spec, d, true).score;
        const Vector5 sm = detail::kernel(from_array(minus), fit.spec, d, true).score;
        for (int i = 0; i < 5; ++i) h(i, j) = -(sp[i] - sm[i]) / (2.0 * step);
    }
    const Eigen::Matrix<double, 5, 5> info = 0.5 * (h + h.transpose());
    Eigen::LLT<Eigen::Matrix<double, 5, 5>> llt(info);
    if (llt.info() != Eigen::Success || !info.allFinite()) {
        throw SingularInformationError("observed information is not positive definite");
    }
    const Eigen::Matrix<double, 5, 5> cov = llt.solve(Eigen::Matrix<double, 5, 5>::Identity());
    Vector5 se{};
    for (int j = 0; j < 5; ++j) {
        if (!(cov(j, j) > 0.0)) throw SingularInformationError("observed information is not positive definite");
        se[j] = std::sqrt(cov(j, j));
    }
    return se;
}

/// Wald z statistics estimate / SE.
inline Vector5 wald_z(const FitResult& fit) {
    const Vector5 est = to_array(fit.theta_hat);
    Vector5 z{};
    for (int j = 0; j < 5; ++j) z[j] = est[j] / fit.std_errors[j];
    return z;
}

// ---------------------------------------------------------------------------
// Profile likelihood over extra generator parameters
// ---------------------------------------------------------------------------

struct ProfilePoint {
    GeneratorParams params;
    std::optional<FitResult> fit; // empty when the fit threw
    std::string error;
};

struct ProfileResult {
    GeneratorParams params;
    FitResult fit;
    std::vector<ProfilePoint> points; // in ascending parameter order
};

/// Lexicographic order on (nu, xi, theta); unset fields sort first.
inline bool params_less(const GeneratorParams& a, const GeneratorParams& b) {
    auto key = [](const std::optional<double>& v) { return v.value_or(-std::numeric_limits<double>::infinity()); };
    if (key(a.nu) != key(b.nu)) return key(a.nu) < key(b.nu);
    if (key(a.xi) != key(b.xi)) return key(a.xi) < key(b.xi);
    return key(a.theta) < key(b.theta);
}

/// Fits every grid point and returns the one with the largest maximized
/// log-likelihood among converged fits. Log-likelihoods within 1e-9 of each
/// other count as tied and the smaller parameter value wins.
inline ProfileResult profile_fit(const SampleMatrix& data, GeneratorId family, std::vector<GeneratorParams> grid,
                                 int threads = 1, const FitOptions& options = {}) {
    if (grid.empty()) throw DomainError("profile_fit: empty grid");
    std::sort(grid.begin(), grid.end(), params_less);
    for (const auto& gp : grid) GeneratorSpec(family, gp); // validate before spending time
    std::vector<ProfilePoint> points(grid.size());
    parallel_for(grid.size(), resolve_threads(threads), [&](std::size_t i) {
        points[i].params = grid[i];
        try {
            points[i].fit = fit_mle(data, GeneratorSpec(family, grid[i]), std::nullopt, options);
        } catch (const std::exception& e) {
            points[i].error = e.what();
        }
    });
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& f = points[i].fit;
        if (!f || !f->converged) continue;
        if (!best || f->log_lik > points[*best].fit->log_lik + 1e-9) best = i;
    }
    if (!best) {
        std::string why = "profile_fit: no grid point produced a converged fit";
        for (const auto& p : points) {
            if (!p.error.empty()) {
                why += " (" + p.error + ")";
                break;
            }
        }
        throw EstimationError(why);
    }
    ProfileResult out;
    out.params = points[*best].params;
    out.fit = *points[*best].fit;
    out.points = std::move(points);
    return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json params_json(const BLSParams& p) {
    return {{"eta1", p.eta1}, {"eta2", p.eta2}, {"sigma1", p.sigma1}, {"sigma2", p.sigma2}, {"rho", p.rho}};
}

inline nlohmann::json spec_json(const GeneratorSpec& spec) {
    nlohmann::json j;
    j["family"] = std::string(cli_name(spec.id()));
    const auto& gp = spec.params();
    if (gp.nu) j["nu"] = *gp.nu;
    if (gp.xi) j["xi"] = *gp.xi;
    if (gp.theta) j["theta"] = *gp.theta;
    return j;
}

/// theta_hat, std_errors (null where unavailable), wald_significant (|z| > 1.96),
/// log_lik, aic, bic, n_obs, converged, iterations, grad_norm, message, spec.
inline nlohmann::json to_json(const FitResult& fit) {
    nlohmann::json se;
    nlohmann::json sig;
    const Vector5 z = wald_z(fit);
    for (int j = 0; j < 5; ++j) {
        if (std::isfinite(fit.std_errors[j])) {
            se[parameter_names[j]] = fit.std_errors[j];
            sig[parameter_names[j]] = std::fabs(z[j]) > 1.96;
        } else {
            se[parameter_names[j]] = nullptr;
            sig[parameter_names[j]] = nullptr;
        }
    }
    nlohmann::json j;
    j["theta_hat"] = params_json(fit.theta_hat);
    j["std_errors"] = se;
    j["wald_significant"] = sig;
    j["log_lik"] = fit.log_lik;
    j["aic"] = fit.aic;
    j["bic"] = fit.bic;
    j["n_obs"] = fit.n_obs;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["grad_norm"] = fit.grad_norm;
    j["message"] = fit.message;
    j["spec"] = spec_json(fit.spec);
    return j;
}

} // namespace blslab
