#pragma once

// Bias/MSE simulation study: for every (n, rho) cell, draw samples from the
// chosen model, fit by maximum likelihood, and summarize the estimation error.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bls.hpp"
#include "errors.hpp"
#include "estimation.hpp"
#include "parallel.hpp"
#include "radial.hpp"
#include "rng.hpp"

namespace blslab {

struct MCConfig {
    GeneratorSpec spec = GeneratorSpec::log_normal();
    /// rho is taken from rho_values; the field here is ignored.
    BLSParams true_theta{1.0, 1.0, 0.5, 0.5, 0.0};
    std::vector<std::size_t> sample_sizes{25, 50, 100, 150};
    std::vector<double> rho_values{0.0, 0.25, 0.5, 0.75, 0.95};
    std::size_t replications = 300;
    std::uint64_t master_seed = 1;
    /// Worker count; 0 means BLSLAB_THREADS or the hardware concurrency.
    /// Results do not depend on it.
    int threads = 0;

    void validate() const {
        if (replications < 1) throw DomainError("replications must be at least 1");
        if (sample_sizes.empty() || rho_values.empty()) throw DomainError("need at least one sample size and one rho");
        for (std::size_t n : sample_sizes) {
            if (n < 10) throw DomainError("sample sizes must be at least 10");
        }
        for (double r : rho_values) {
            if (!(r > -1.0 && r < 1.0)) throw DomainError("rho values must lie in (-1, 1)");
        }
        BLSParams t = true_theta;
        t.rho = 0.0;
        t.validate();
    }

    /// Seed of replication `rep` in cell (n_index, rho_index).
    std::uint64_t replication_seed(std::size_t n_index, std::size_t rho_index, std::size_t rep) const {
        return mix_seed({master_seed, n_index, rho_index, rep});
    }
};

struct BiasMse {
    double bias = 0.0;
    double mse = 0.0;
};

/// bias = mean(estimates) - truth, mse = mean((estimates - truth)^2), summed in
/// the given order.
inline BiasMse bias_mse(const std::vector<double>& estimates, double truth) {
    if (estimates.empty()) throw DomainError("bias_mse: no estimates");
    double s = 0.0, s2 = 0.0;
    for (double e : estimates) {
        const double d = e - truth;
        s += d;
        s2 += d * d;
    }
    const double n = static_cast<double>(estimates.size());
    return {s / n, s2 / n};
}

struct MCCell {
    std::size_t n = 0;
    double rho = 0.0;
    std::array<BiasMse, 5> stats{};
    std::size_t successes = 0;
    std::size_t failures = 0;
    /// More than 2% of the replications failed.
    bool failure_alarm = false;
};

struct MCReport {
    GeneratorSpec spec = GeneratorSpec::log_normal();
    BLSParams true_theta;
    std::size_t replications = 0;
    std::uint64_t master_seed = 0;
    std::vector<MCCell> cells; // n-major, rho-minor, in config order

    friend bool operator==(const MCReport&, const MCReport&);
};

inline bool operator==(const BiasMse& a, const BiasMse& b) { return a.bias == b.bias && a.mse == b.mse; }
inline bool operator==(const MCCell& a, const MCCell& b) {
    return a.n == b.n && a.rho == b.rho && a.stats == b.stats && a.successes == b.successes &&
           a.failures == b.failures && a.failure_alarm == b.failure_alarm;
}
inline bool operator==(const MCReport& a, const MCReport& b) {
    return a.spec == b.spec && a.true_theta == b.true_theta && a.replications == b.replications &&
           a.master_seed == b.master_seed && a.cells == b.cells;
}

inline MCReport run_study(const MCConfig& config) {
    config.validate();
    const RadialSampler radial(config.spec);
    const std::size_t n_cells = config.sample_sizes.size() * config.rho_values.size();
    const std::size_t reps = config.replications;

    struct Slot {
        Vector5 estimate{};
        bool ok = false;
    };
    std::vector<Slot> slots(n_cells * reps);
    FitOptions fit_options;
    fit_options.compute_standard_errors = false;

    parallel_for(slots.size(), resolve_threads(config.threads), [&](std::size_t k) {
        const std::size_t cell = k / reps;
        const std::size_t rep = k % reps;
        const std::size_t ni = cell / config.rho_values.size();
        const std::size_t ri = cell % config.rho_values.size();
        BLSParams theta = config.true_theta;
        theta.rho = config.rho_values[ri];
        try {
            const SampleMatrix data =
                sample(theta, radial, config.sample_sizes[ni], config.replication_seed(ni, ri, rep));
            const FitResult fit = fit_mle(data, config.spec, std::nullopt, fit_options);
            if (fit.converged) {
                slots[k].estimate = to_array(fit.theta_hat);
                slots[k].ok = true;
            }
        } catch (const std::exception&) {
            slots[k].ok = false;
        }
    });

    MCReport report;
    report.spec = config.spec;
    report.true_theta = config.true_theta;
    report.replications = reps;
    report.master_seed = config.master_seed;
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
        MCCell c;
        c.n = config.sample_sizes[cell / config.rho_values.size()];
        c.rho = config.rho_values[cell % config.rho_values.size()];
        BLSParams theta = config.true_theta;
        theta.rho = c.rho;
        const Vector5 truth = to_array(theta);
        std::array<std::vector<double>, 5> est;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            const Slot& s = slots[cell * reps + rep];
            if (!s.ok) {
                ++c.failures;
                continue;
            }
            ++c.successes;
            for (int j = 0; j < 5; ++j) est[j].push_back(s.estimate[j]);
        }
        for (int j = 0; j < 5; ++j) {
            if (est[j].empty()) {
                c.stats[j] = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
            } else {
                c.stats[j] = bias_mse(est[j], truth[j]);
            }
        }
        c.failure_alarm = static_cast<double>(c.failures) > 0.02 * static_cast<double>(reps);
        report.cells.push_back(c);
    }
    return report;
}

/// Columns: n, rho, then bias/mse for eta1, eta2, sigma1, sigma2, rho, then
/// the number of successful and failed fits.
inline void write_tsv(std::ostream& os, const MCReport& report) {
    os << "n\trho";
    for (const char* p : parameter_names) os << '\t' << p << "_bias\t" << p << "_mse";
    os << "\tfits\tfailed\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.6f", v);
        return std::string(buf);
    };
    for (const auto& c : report.cells) {
        os << c.n << '\t' << num(c.rho);
        for (const auto& s : c.stats) os << '\t' << num(s.bias) << '\t' << num(s.mse);
        os << '\t' << c.successes << '\t' << c.failures << '\n';
    }
}

inline nlohmann::json to_json(const MCReport& report) {
    nlohmann::json j;
    j["spec"] = spec_json(report.spec);
    j["true_theta"] = {{"eta1", report.true_theta.eta1},
                       {"eta2", report.true_theta.eta2},
                       {"sigma1", report.true_theta.sigma1},
                       {"sigma2", report.true_theta.sigma2}};
    j["replications"] = report.replications;
    j["master_seed"] = report.master_seed;
    j["cells"] = nlohmann::json::array();
    for (const auto& c : report.cells) {
        nlohmann::json cj;
        cj["n"] = c.n;
        cj["rho"] = c.rho;
        for (int k = 0; k < 5; ++k) {
            cj[parameter_names[k]] = {{"bias", c.stats[k].bias}, {"mse", c.stats[k].mse}};
        }
        cj["fits"] = c.successes;
        cj["failed"] = c.failures;
        cj["failure_alarm"] = c.failure_alarm;
        j["cells"].push_back(cj);
    }
    return j;
}

} // namespace blslab
