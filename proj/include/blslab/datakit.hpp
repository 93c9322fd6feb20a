#pragma once

// Applied-analysis helpers: CSV ingestion, descriptive statistics, multi-family
// model comparison, and Mahalanobis QQ export.

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bls.hpp"
#include "errors.hpp"
#include "estimation.hpp"
#include "generators.hpp"
#include "radial.hpp"

namespace blslab {

struct Dataset {
    SampleMatrix pairs;
    std::array<std::string, 2> labels{"t1", "t2"};
    std::string source = "synthetic";

    std::size_t size() const { return pairs.size(); }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline double parse_field(const std::string& field, std::size_t row, int column) {
    const std::string where = "row " + std::to_string(row) + ", column " + std::to_string(column);
    if (field.empty()) throw ParseError("missing value at " + where, row);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end != field.c_str() + field.size() || errno == ERANGE || !std::isfinite(v)) {
        throw ParseError("not a finite number at " + where + ": '" + field + "'", row);
    }
    if (!(v > 0.0)) throw ParseError("value must be strictly positive at " + where, row);
    return v;
}

} // namespace detail

/// Reads a comma-separated file with one header line and two positive numeric
/// columns. Data rows are numbered from 1; blank lines are skipped.
inline Dataset parse_csv(std::istream& in, const std::string& source = "stream") {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty input: expected a header line", 0);
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3); // UTF-8 BOM
    const auto header = detail::split_commas(line);
    if (header.size() != 2) throw ParseError("header must name exactly two columns", 0);
    Dataset ds;
    ds.labels = {header[0], header[1]};
    ds.source = source;
    std::vector<ObservationPair> rows;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        const auto fields = detail::split_commas(line);
        if (fields.size() != 2) {
            throw ParseError("row " + std::to_string(row) + ": expected 2 fields, found " +
                                 std::to_string(fields.size()),
                             row);
        }
        rows.push_back({detail::parse_field(fields[0], row, 1), detail::parse_field(fields[1], row, 2)});
    }
    if (rows.empty()) throw ParseError("no data rows", 0);
    ds.pairs = SampleMatrix(std::move(rows));
    return ds;
}

inline Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path, 0);
    return parse_csv(in, path);
}

/// Writes the header and rows with 17 significant digits, so a reload
/// reproduces every value exactly.
inline void write_csv(std::ostream& os, const Dataset& ds) {
    os << ds.labels[0] << ',' << ds.labels[1] << '\n';
    char buf[80];
    for (const auto& o : ds.pairs) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", o.t1, o.t2);
        os << buf;
    }
}

inline void save_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_csv(out, ds);
}

// ---------------------------------------------------------------------------
// Descriptive statistics
// ---------------------------------------------------------------------------

struct ColumnSummary {
    std::size_t n = 0;
    double minimum = 0.0;
    double median = 0.0;
    double mean = 0.0;
    double maximum = 0.0;
    /// Standard deviation with the n - 1 denominator (0 when n = 1).
    double sd = 0.0;
    double cv_percent = 0.0;
    /// m3 / m2^{3/2} with 1/n central moments; empty for a constant column.
    std::optional<double> skewness;
    /// m4 / m2^2 - 3 with 1/n central moments; empty for a constant column.
    std::optional<double> kurtosis_excess;
};

struct SummaryStats {
    std::array<std::string, 2> labels;
    std::array<ColumnSummary, 2> columns;
};

inline ColumnSummary summarize_column(std::vector<double> v) {
    ColumnSummary s;
    s.n = v.size();
    std::sort(v.begin(), v.end()); // fixed summation order, so row order does not matter
    s.minimum = v.front();
    s.maximum = v.back();
    const std::size_t m = v.size() / 2;
    s.median = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    double sum = 0.0;
    for (double x : v) sum += x;
    const double n = static_cast<double>(v.size());
    s.mean = sum / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : v) {
        const double d = x - s.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    s.sd = v.size() > 1 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
    s.cv_percent = 100.0 * s.sd / s.mean;
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 > 0.0) {
        s.skewness = m3 / std::pow(m2, 1.5);
        s.kurtosis_excess = m4 / (m2 * m2) - 3.0;
    }
    return s;
}

inline SummaryStats summarize(const Dataset& ds) {
    if (ds.pairs.empty()) throw DomainError("summarize: empty dataset");
    std::vector<double> a, b;
    for (const auto& o : ds.pairs) {
        a.push_back(o.t1);
        b.push_back(o.t2);
    }
    return {ds.labels, {summarize_column(std::move(a)), summarize_column(std::move(b))}};
}

/// Columns: variable, n, minimum, median, mean, maximum, sd, cv, cs, ck.
inline void write_summary_tsv(std::ostream& os, const SummaryStats& s) {
    os << "variable\tn\tminimum\tmedian\tmean\tmaximum\tsd\tcv\tcs\tck\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.3f", v);
        return std::string(buf);
    };
    auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : std::string("NA"); };
    for (int k = 0; k < 2; ++k) {
        const auto& c = s.columns[k];
        os << s.labels[k] << '\t' << c.n << '\t' << num(c.minimum) << '\t' << num(c.median) << '\t' << num(c.mean)
           << '\t' << num(c.maximum) << '\t' << num(c.sd) << '\t' << num(c.cv_percent) << '\t' << opt(c.skewness)
           << '\t' << opt(c.kurtosis_excess) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Model comparison
// ---------------------------------------------------------------------------

/// Extra-parameter grids used when the caller supplies none: nu in 2..15
/// (Student-t), xi in 2..8 by 1 crossed with theta in 10..34 by 4
/// (Pearson VII), nu in 1..6 (hyperbolic), nu in 2..10 (slash), xi in
/// -0.5..1 by 0.01 (power-exponential). Empty for families without extra
/// parameters.
inline std::vector<GeneratorParams> default_grid(GeneratorId id) {
    std::vector<GeneratorParams> g;
    switch (id) {
    case GeneratorId::LogStudentT:
        for (int nu = 2; nu <= 15; ++nu) g.push_back({.nu = double(nu)});
        break;
    case GeneratorId::LogPearsonVII:
        for (int xi = 2; xi <= 8; ++xi)
            for (int th = 10; th <= 34; th += 4) g.push_back({.xi = double(xi), .theta = double(th)});
        break;
    case GeneratorId::LogHyperbolic:
        for (int nu = 1; nu <= 6; ++nu) g.push_back({.nu = double(nu)});
        break;
    case GeneratorId::LogSlash:
        for (int nu = 2; nu <= 10; ++nu) g.push_back({.nu = double(nu)});
        break;
    case GeneratorId::LogPowerExponential:
        for (int k = -50; k <= 100; ++k) g.push_back({.xi = k / 100.0});
        break;
    default: break;
    }
    return g;
}

struct ModelRow {
    GeneratorId family = GeneratorId::LogNormal;
    std::optional<FitResult> fit; // converged fit; empty on failure
    GeneratorParams profiled;
    std::string error;
    std::size_t aic_rank = 0; // 1-based among converged fits, 0 on failure
    std::size_t bic_rank = 0;
    bool best_aic = false;
};

struct ModelComparison {
    std::size_t n_obs = 0;
    std::vector<ModelRow> rows; // in the order the families were requested
};

namespace detail {

inline std::size_t family_order(GeneratorId id) {
    for (std::size_t k = 0; k < all_generators.size(); ++k) {
        if (all_generators[k] == id) return k;
    }
    return all_generators.size();
}

inline void assign_ranks(std::vector<ModelRow>& rows, bool by_aic) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].fit) idx.push_back(i);
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const double va = by_aic ? rows[a].fit->aic : rows[a].fit->bic;
        const double vb = by_aic ? rows[b].fit->aic : rows[b].fit->bic;
        if (va != vb) return va < vb;
        return family_order(rows[a].family) < family_order(rows[b].family);
    });
    for (std::size_t r = 0; r < idx.size(); ++r) {
        (by_aic ? rows[idx[r]].aic_rank : rows[idx[r]].bic_rank) = r + 1;
    }
}

} // namespace detail

/// Fits every requested family: a plain fit for families without extra
/// parameters, a profile fit over the grid otherwise. Families whose fit fails
/// or does not converge keep a row with the error message and no rank. Ranks
/// order converged fits by AIC (and BIC), ties broken by family enumeration
/// order.
inline ModelComparison compare_models(const Dataset& ds, const std::vector<GeneratorId>& families,
                                      const std::map<GeneratorId, std::vector<GeneratorParams>>& grids = {},
                                      int threads = 0) {
    if (families.empty()) throw DomainError("compare_models: no families requested");
    ModelComparison out;
    out.n_obs = ds.size();
    for (GeneratorId id : families) {
        ModelRow row;
        row.family = id;
        try {
            std::vector<GeneratorParams> grid;
            if (auto it = grids.find(id); it != grids.end()) grid = it->second;
            else grid = default_grid(id);
            if (grid.empty()) {
                const GeneratorSpec spec(id);
                FitResult fit = fit_mle(ds.pairs, spec);
                if (fit.converged) row.fit = std::move(fit);
                else row.error = fit.message;
            } else {
                ProfileResult p = profile_fit(ds.pairs, id, grid, threads);
                row.profiled = p.params;
                row.fit = std::move(p.fit);
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        out.rows.push_back(std::move(row));
    }
    detail::assign_ranks(out.rows, true);
    detail::assign_ranks(out.rows, false);
    for (auto& r : out.rows) r.best_aic = r.aic_rank == 1;
    return out;
}

/// Columns: family, eta1, se_eta1, eta2, se_eta2, sigma1, se_sigma1, sigma2,
/// se_sigma2, rho, se_rho, extra, loglik, aic, bic. Failed families print NA.
inline void write_comparison_tsv(std::ostream& os, const ModelComparison& mc) {
    os << "family\teta1\tse_eta1\teta2\tse_eta2\tsigma1\tse_sigma1\tsigma2\tse_sigma2\trho\tse_rho\textra\tloglik\taic\tbic\n";
    char buf[64];
    auto num = [&](double v, const char* fmt) {
        if (!std::isfinite(v)) return std::string("NA");
        std::snprintf(buf, sizeof buf, fmt, v);
        return std::string(buf);
    };
    for (const auto& r : mc.rows) {
        os << cli_name(r.family);
        if (!r.fit) {
            for (int k = 0; k < 14; ++k) os << "\tNA";
            os << '\n';
            continue;
        }
        const Vector5 est = to_array(r.fit->theta_hat);
        for (int j = 0; j < 5; ++j) os << '\t' << num(est[j], "%.4f") << '\t' << num(r.fit->std_errors[j], "%.4f");
        os << '\t' << r.fit->spec.extra_string() << '\t' << num(r.fit->log_lik, "%.3f") << '\t'
           << num(r.fit->aic, "%.2f") << '\t' << num(r.fit->bic, "%.2f") << '\n';
    }
}

inline nlohmann::json to_json(const ModelComparison& mc) {
    nlohmann::json j;
    j["n_obs"] = mc.n_obs;
    j["models"] = nlohmann::json::array();
    for (const auto& r : mc.rows) {
        nlohmann::json m;
        m["family"] = std::string(cli_name(r.family));
        if (r.fit) {
            m["fit"] = to_json(*r.fit);
            m["extra"] = r.fit->spec.extra_string();
            m["aic_rank"] = r.aic_rank;
            m["bic_rank"] = r.bic_rank;
            m["best_aic"] = r.best_aic;
        } else {
            m["error"] = r.error;
        }
        j["models"].push_back(m);
    }
    return j;
}

// ---------------------------------------------------------------------------
// Mahalanobis QQ diagnostics
// ---------------------------------------------------------------------------

struct QQData {
    std::string reference; // e.g. "logt(nu=4)"
    std::vector<double> theoretical;
    std::vector<double> empirical;
};

/// Sorted squared Mahalanobis distances under the fitted parameters against
/// the reference quantiles at plotting positions (i - 0.5)/n.
inline QQData qq_mahalanobis(const Dataset& ds, const FitResult& fit) {
    if (!fit.converged) throw DomainError("qq_mahalanobis: fit did not converge");
    if (ds.pairs.empty()) throw DomainError("qq_mahalanobis: empty dataset");
    QQData q;
    q.reference = fit.spec.describe();
    for (const auto& o : ds.pairs) q.empirical.push_back(mahalanobis_sq(fit.theta_hat, o));
    std::sort(q.empirical.begin(), q.empirical.end());
    const double n = static_cast<double>(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        q.theoretical.push_back(mahalanobis_quantile(fit.spec, (static_cast<double>(i) + 0.5) / n));
    }
    return q;
}

/// Ordinary least-squares slope of empirical on theoretical quantiles.
inline double qq_slope(const QQData& q) {
    const double n = static_cast<double>(q.theoretical.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < q.theoretical.size(); ++i) {
        mx += q.theoretical[i];
        my += q.empirical[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < q.theoretical.size(); ++i) {
        sxy += (q.theoretical[i] - mx) * (q.empirical[i] - my);
        sxx += (q.theoretical[i] - mx) * (q.theoretical[i] - mx);
    }
    return sxy / sxx;
}

/// Two columns: theoretical, empirical.
inline void write_qq_tsv(std::ostream& os, const QQData& q) {
    os << "theoretical\tempirical\n";
    char buf[80];
    for (std::size_t i = 0; i < q.theoretical.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g\t%.10g\n", q.theoretical[i], q.empirical[i]);
        os << buf;
    }
}

} // namespace blslab
