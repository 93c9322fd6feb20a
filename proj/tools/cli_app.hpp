#pragma once

// The blslab command line: subcommand definitions and dispatch. Kept in a
// header so the test suite can drive it in-process.

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "blslab/blslab.hpp"

namespace blslab::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_numerical = 2;

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Flag value parsing
// ---------------------------------------------------------------------------

inline double parse_number(const std::string& s, const std::string& flag) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
        throw UsageError(flag + ": '" + s + "' is not a number");
    }
    return v;
}

inline std::vector<double> parse_list(const std::string& s, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(item, flag));
    if (out.empty()) throw UsageError(flag + ": empty list");
    return out;
}

inline std::vector<std::size_t> parse_sizes(const std::string& s, const std::string& flag) {
    std::vector<std::size_t> out;
    for (double v : parse_list(s, flag)) {
        if (!(v >= 1.0) || v != std::floor(v)) throw UsageError(flag + ": expected positive integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

/// "a:b" (step 1), "a:b:step", or a comma-separated list.
inline std::vector<double> parse_grid(const std::string& s, const std::string& flag) {
    if (s.find(':') == std::string::npos) return parse_list(s, flag);
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() < 2 || parts.size() > 3) throw UsageError(flag + ": expected a:b or a:b:step");
    const double a = parse_number(parts[0], flag);
    const double b = parse_number(parts[1], flag);
    const double step = parts.size() == 3 ? parse_number(parts[2], flag) : 1.0;
    if (!(step > 0.0) || b < a) throw UsageError(flag + ": need a <= b and step > 0");
    const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
    if (count > 100000) throw UsageError(flag + ": grid too large");
    std::vector<double> out;
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back(std::round((a + static_cast<double>(k) * step) * 1e12) / 1e12);
    }
    return out;
}

inline BLSParams parse_theta(const std::string& s) {
    const auto v = parse_list(s, "--theta");
    if (v.size() != 5) throw UsageError("--theta: expected eta1,eta2,sigma1,sigma2,rho");
    BLSParams p{v[0], v[1], v[2], v[3], v[4]};
    p.validate();
    return p;
}

inline ObservationPair parse_point(const std::string& s, const std::string& flag) {
    const auto v = parse_list(s, flag);
    if (v.size() != 2) throw UsageError(flag + ": expected t1,t2");
    return {v[0], v[1]};
}

inline std::string format(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

// ---------------------------------------------------------------------------
// Model selection flags
// ---------------------------------------------------------------------------

struct ModelFlags {
    std::string model = "lognormal";
    std::optional<double> nu, xi, theta_gen;
    std::string nu_grid, xi_grid, theta_gen_grid;

    void add_to(CLI::App* sub, bool with_grids) {
        sub->add_option("--model", model,
                        "generator family: lognormal, logt, logpvii, loghyperbolic, loglaplace, logslash, logpexp, "
                        "loglogistic")
            ->capture_default_str();
        sub->add_option("--nu", nu, "extra parameter nu (logt, loghyperbolic, logslash)");
        sub->add_option("--xi", xi, "extra parameter xi (logpvii, logpexp)");
        sub->add_option("--theta-gen", theta_gen, "extra parameter theta of logpvii (distinct from --theta)");
        if (with_grids) {
            sub->add_option("--nu-grid", nu_grid, "profile grid for nu: a:b, a:b:step or a comma list");
            sub->add_option("--xi-grid", xi_grid, "profile grid for xi: a:b, a:b:step or a comma list");
            sub->add_option("--theta-gen-grid", theta_gen_grid, "profile grid for the logpvii theta");
        }
    }

    GeneratorId family() const {
        const auto id = parse_generator(model);
        if (!id) throw UsageError("--model: unknown family '" + model + "'");
        return *id;
    }

    /// The fixed generator, or nothing when some extra parameter is left to a
    /// profile grid.
    std::optional<GeneratorSpec> fixed_spec() const {
        const GeneratorId id = family();
        const GeneratorSpec probe_defaults = default_spec(id);
        GeneratorParams p;
        const auto& need = probe_defaults.params();
        if (need.nu) {
            if (!nu) return std::nullopt;
            p.nu = nu;
        } else if (nu) {
            throw UsageError("--nu does not apply to " + model);
        }
        if (need.xi) {
            if (!xi) return std::nullopt;
            p.xi = xi;
        } else if (xi) {
            throw UsageError("--xi does not apply to " + model);
        }
        if (need.theta) {
            if (!theta_gen) return std::nullopt;
            p.theta = theta_gen;
        } else if (theta_gen) {
            throw UsageError("--theta-gen does not apply to " + model);
        }
        return GeneratorSpec(id, p);
    }

    GeneratorSpec require_spec() const {
        auto s = fixed_spec();
        if (!s) throw UsageError("--model " + model + " needs its extra parameters (--nu, --xi, --theta-gen)");
        return *s;
    }

    /// Grid over the parameters that were not fixed; defaults apply when no
    /// grid flag is given.
    std::vector<GeneratorParams> grid() const {
        const GeneratorId id = family();
        const auto need = default_spec(id).params();
        const bool any_grid = !nu_grid.empty() || !xi_grid.empty() || !theta_gen_grid.empty();
        if (!any_grid && !nu && !xi && !theta_gen) return default_grid(id);
        auto axis = [&](bool needed, const std::optional<double>& fixed, const std::string& g,
                        const char* name) -> std::vector<std::optional<double>> {
            if (!needed) {
                if (fixed || !g.empty()) throw UsageError(std::string("--") + name + " does not apply to " + model);
                return {std::nullopt};
            }
            if (fixed && !g.empty()) throw UsageError(std::string("give either --") + name + " or its grid");
            if (fixed) return {fixed};
            if (g.empty()) throw UsageError(std::string("--") + name + "-grid is required for " + model);
            std::vector<std::optional<double>> out;
            for (double v : parse_grid(g, std::string("--") + name + "-grid")) out.push_back(v);
            return out;
        };
        const auto nus = axis(need.nu.has_value(), nu, nu_grid, "nu");
        const auto xis = axis(need.xi.has_value(), xi, xi_grid, "xi");
        const auto ths = axis(need.theta.has_value(), theta_gen, theta_gen_grid, "theta-gen");
        std::vector<GeneratorParams> out;
        for (const auto& a : nus)
            for (const auto& b : xis)
                for (const auto& c : ths) out.push_back({a, b, c});
        return out;
    }

    static GeneratorSpec default_spec(GeneratorId id) {
        switch (id) {
        case GeneratorId::LogStudentT: return GeneratorSpec::log_student_t(4);
        case GeneratorId::LogPearsonVII: return GeneratorSpec::log_pearson_vii(5, 22);
        case GeneratorId::LogHyperbolic: return GeneratorSpec::log_hyperbolic(2);
        case GeneratorId::LogSlash: return GeneratorSpec::log_slash(4);
        case GeneratorId::LogPowerExponential: return GeneratorSpec::log_power_exponential(0.3);
        default: return GeneratorSpec(id);
        }
    }
};

struct Fitted {
    FitResult fit;
    std::optional<ProfileResult> profile;
};

inline Fitted fit_model(const Dataset& ds, const ModelFlags& m, int threads) {
    Fitted out;
    if (auto spec = m.fixed_spec()) {
        out.fit = fit_mle(ds.pairs, *spec);
        return out;
    }
    out.profile = profile_fit(ds.pairs, m.family(), m.grid(), threads);
    out.fit = out.profile->fit;
    return out;
}

// ---------------------------------------------------------------------------
// The application
// ---------------------------------------------------------------------------

class Application {
public:
    Application() : app_("Bivariate log-symmetric distributions: evaluation, sampling, fitting and simulation", "blslab") {
        app_.require_subcommand(1);
        app_.set_version_flag("--version", std::string(version));
        build_eval();
        build_sample();
        build_fit();
        build_simulate();
        build_diagnose();
        build_summary();
        build_compare();
        for (CLI::App* sub : app_.get_subcommands({})) {
            sub->add_option("--manifest", manifest_path_,
                            "write the run manifest here (default: <output>.manifest.json when --out is given)");
        }
    }

    CLI::App& app() { return app_; }

    /// Runs one command line (without the program name). Returns the exit code.
    int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
        std::vector<const char*> argv{"blslab"};
        for (const auto& a : args) argv.push_back(a.c_str());
        try {
            app_.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::CallForHelp&) {
            out << help_for_parsed();
            return exit_ok;
        } catch (const CLI::CallForAllHelp&) {
            out << app_.help("", CLI::AppFormatMode::All);
            return exit_ok;
        } catch (const CLI::CallForVersion&) {
            out << version << '\n';
            return exit_ok;
        } catch (const CLI::ParseError& e) {
            err << "error: " << e.what() << "\n\n" << help_for_parsed();
            return exit_usage;
        }
        CLI::App* sub = app_.get_subcommands().front();
        const auto start = std::chrono::steady_clock::now();
        int code = exit_ok;
        try {
            code = handlers_.at(sub->get_name())(out, err);
        } catch (const UsageError& e) {
            err << "usage error: " << e.what() << '\n';
            return exit_usage;
        } catch (const ParseError& e) {
            err << "input error: " << e.what() << '\n';
            return exit_usage;
        } catch (const SingularityError& e) {
            err << "numerical failure: " << e.what() << '\n';
            return exit_numerical;
        } catch (const DomainError& e) {
            err << "invalid argument: " << e.what() << '\n';
            return exit_usage;
        } catch (const std::exception& e) {
            err << "numerical failure: " << e.what() << '\n';
            return exit_numerical;
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::string target = manifest_path_;
        if (target.empty() && !primary_output_.empty()) target = primary_output_ + ".manifest.json";
        if (!target.empty()) {
            std::ofstream mf(target);
            if (!mf) {
                err << "cannot write manifest " << target << '\n';
                return exit_usage;
            }
            mf << manifest(*sub, args, seconds).dump(2) << '\n';
        }
        return code;
    }

    /// Subcommand, every flag with its effective value, seed, version and
    /// duration of the run.
    nlohmann::json manifest(const CLI::App& sub, const std::vector<std::string>& args, double seconds) const {
        nlohmann::json j;
        j["tool"] = "blslab";
        j["version"] = version;
        j["subcommand"] = sub.get_name();
        j["argv"] = args;
        nlohmann::json flags = nlohmann::json::object();
        for (const CLI::Option* opt : sub.get_options()) {
            const std::string name = opt->get_name();
            if (name == "--help" || name == "--manifest") continue;
            if (opt->count() > 0) {
                const auto& r = opt->results();
                flags[name] = r.size() == 1 ? nlohmann::json(r[0]) : nlohmann::json(r);
            } else {
                flags[name] = opt->get_default_str().empty() ? nlohmann::json(nullptr)
                                                             : nlohmann::json(opt->get_default_str());
            }
        }
        j["flags"] = flags;
        j["seed"] = seed_used_ ? nlohmann::json(*seed_used_) : nlohmann::json(nullptr);
        j["wall_clock_seconds"] = seconds;
        return j;
    }

private:
    using Handler = std::function<int(std::ostream&, std::ostream&)>;

    std::string help_for_parsed() const {
        const auto subs = app_.get_subcommands();
        return subs.empty() ? app_.help() : subs.front()->help();
    }

    /// Writes through `fn` to the named file, or to `out` when path is empty.
    template <class F>
    void emit(const std::string& path, std::ostream& out, F&& fn) {
        if (path.empty()) {
            fn(out);
            return;
        }
        std::ofstream f(path);
        if (!f) throw UsageError("cannot write " + path);
        fn(f);
        if (primary_output_.empty()) primary_output_ = path;
    }

    CLI::App* add_threads(CLI::App* sub) {
        sub->add_option("--threads", threads_, "worker threads; 0 uses BLSLAB_THREADS or all cores")
            ->capture_default_str();
        return sub;
    }

    void build_eval() {
        CLI::App* sub = app_.add_subcommand("eval", "evaluate densities, the joint CDF and marginal quantiles");
        model_eval_.add_to(sub, false);
        sub->add_option("--theta", eval_theta_, "parameters eta1,eta2,sigma1,sigma2,rho")->required();
        sub->add_option("--pdf", eval_pdf_, "joint density at t1,t2 (repeatable)");
        sub->add_option("--logpdf", eval_logpdf_, "joint log-density at t1,t2 (repeatable)");
        sub->add_option("--cdf", eval_cdf_, "joint CDF at t1,t2 (repeatable)");
        sub->add_option("--quantile", eval_quantile_, "marginal quantiles of T1 and T2 at probabilities p1,p2,...");
        sub->add_option("--grid", eval_grid_, "export the density on a square lo:hi:count grid as TSV");
        sub->add_option("--grid-space", eval_grid_space_,
                        "grid density: bls (t1, t2 > 0) or bes (log-scale x1, x2)")
            ->check(CLI::IsMember({"bls", "bes"}))
            ->capture_default_str();
        sub->add_option("--digits", eval_digits_, "significant digits printed")
            ->check(CLI::Range(1, 17))
            ->capture_default_str();
        sub->add_option("--out", eval_out_, "write the grid TSV here instead of stdout");
        handlers_["eval"] = [this](std::ostream& out, std::ostream&) { return run_eval(out); };
    }

    int run_eval(std::ostream& out) {
        const GeneratorSpec spec = model_eval_.require_spec();
        const BLSParams theta = parse_theta(eval_theta_);
        if (eval_pdf_.empty() && eval_logpdf_.empty() && eval_cdf_.empty() && eval_quantile_.empty() &&
            eval_grid_.empty()) {
            throw UsageError("eval: give at least one of --pdf, --logpdf, --cdf, --quantile, --grid");
        }
        const int d = eval_digits_;
        for (const auto& s : eval_pdf_) {
            const auto p = parse_point(s, "--pdf");
            out << "pdf\t" << format(p.t1, d) << '\t' << format(p.t2, d) << '\t'
                << format(joint_pdf(theta, spec, p), d) << '\n';
        }
        for (const auto& s : eval_logpdf_) {
            const auto p = parse_point(s, "--logpdf");
            out << "logpdf\t" << format(p.t1, d) << '\t' << format(p.t2, d) << '\t'
                << format(joint_log_pdf(theta, spec, p), d) << '\n';
        }
        for (const auto& s : eval_cdf_) {
            const auto p = parse_point(s, "--cdf");
            out << "cdf\t" << format(p.t1, d) << '\t' << format(p.t2, d) << '\t'
                << format(joint_cdf(theta, spec, p), d) << '\n';
        }
        if (!eval_quantile_.empty()) {
            for (double p : parse_list(eval_quantile_, "--quantile")) {
                out << "quantile\t" << format(p, d) << '\t' << format(marginal_quantile(theta, spec, 1, p), d)
                    << '\t' << format(marginal_quantile(theta, spec, 2, p), d) << '\n';
            }
        }
        if (!eval_grid_.empty()) {
            const auto g = parse_list_colon(eval_grid_);
            const bool bes = eval_grid_space_ == "bes";
            if (!bes && !(g.lo > 0.0)) throw UsageError("--grid: the bls grid needs lo > 0");
            emit(eval_out_, out, [&](std::ostream& os) {
                os << (bes ? "x1\tx2\tpdf\n" : "t1\tt2\tpdf\n");
                for (std::size_t i = 0; i < g.count; ++i) {
                    for (std::size_t j = 0; j < g.count; ++j) {
                        const double a = g.at(i), b = g.at(j);
                        const double v = bes ? bes_pdf(theta, spec, a, b) : joint_pdf(theta, spec, {a, b});
                        os << format(a, d) << '\t' << format(b, d) << '\t' << format(v, d) << '\n';
                    }
                }
            });
        }
        return exit_ok;
    }

    struct Axis {
        double lo, hi;
        std::size_t count;
        double at(std::size_t i) const {
            return count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
        }
    };

    static Axis parse_list_colon(const std::string& s) {
        std::vector<double> v;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ':')) v.push_back(parse_number(item, "--grid"));
        if (v.size() != 3 || !(v[1] > v[0]) || v[2] < 1 || v[2] != std::floor(v[2]) || v[2] > 2000) {
            throw UsageError("--grid: expected lo:hi:count with lo < hi and 1 <= count <= 2000");
        }
        return {v[0], v[1], static_cast<std::size_t>(v[2])};
    }

    void build_sample() {
        CLI::App* sub = app_.add_subcommand("sample", "draw a pseudo-random sample and write it as CSV");
        model_sample_.add_to(sub, false);
        sub->add_option("--theta", sample_theta_, "parameters eta1,eta2,sigma1,sigma2,rho")->required();
        sub->add_option("--n", sample_n_, "sample size")->required()->check(CLI::PositiveNumber);
        sub->add_option("--seed", sample_seed_, "random seed")->capture_default_str();
        sub->add_option("--labels", sample_labels_, "CSV header as name1,name2")->capture_default_str();
        sub->add_option("--out", sample_out_, "output CSV (default stdout)");
        handlers_["sample"] = [this](std::ostream& out, std::ostream&) {
            Dataset ds;
            ds.pairs = sample(parse_theta(sample_theta_), model_sample_.require_spec(), sample_n_, sample_seed_);
            const auto comma = sample_labels_.find(',');
            if (comma == std::string::npos) throw UsageError("--labels: expected name1,name2");
            ds.labels = {sample_labels_.substr(0, comma), sample_labels_.substr(comma + 1)};
            seed_used_ = sample_seed_;
            emit(sample_out_, out, [&](std::ostream& os) { write_csv(os, ds); });
            return exit_ok;
        };
    }

    void build_fit() {
        CLI::App* sub = app_.add_subcommand("fit", "maximum-likelihood fit of one family; profiles extra parameters");
        model_fit_.add_to(sub, true);
        sub->add_option("--data", fit_data_, "input CSV with a header and two positive columns")->required();
        sub->add_option("--out", fit_out_, "output JSON (default stdout)");
        add_threads(sub);
        handlers_["fit"] = [this](std::ostream& out, std::ostream& err) {
            const Dataset ds = load_csv(fit_data_);
            const Fitted f = fit_model(ds, model_fit_, threads_);
            nlohmann::json j = to_json(f.fit);
            if (f.profile) {
                nlohmann::json prof = nlohmann::json::array();
                for (const auto& p : f.profile->points) {
                    nlohmann::json pj = spec_json(GeneratorSpec(model_fit_.family(), p.params));
                    if (p.fit && p.fit->converged) pj["log_lik"] = p.fit->log_lik;
                    else pj["error"] = p.fit ? p.fit->message : p.error;
                    prof.push_back(pj);
                }
                j["profile"] = prof;
            }
            emit(fit_out_, out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
            if (!f.fit.converged) {
                err << "numerical failure: fit did not converge: " << f.fit.message << '\n';
                return exit_numerical;
            }
            return exit_ok;
        };
    }

    void build_simulate() {
        CLI::App* sub = app_.add_subcommand("simulate", "Monte Carlo bias and MSE of the ML estimators");
        model_sim_.add_to(sub, false);
        sub->add_option("--theta", sim_theta_, "true eta1,eta2,sigma1,sigma2 (rho comes from --rho)")
            ->capture_default_str();
        sub->add_option("--n", sim_n_, "comma-separated sample sizes")->capture_default_str();
        sub->add_option("--rho", sim_rho_, "comma-separated correlation values")->capture_default_str();
        sub->add_option("--reps", sim_reps_, "replications per cell")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--seed", sim_seed_, "master seed")->capture_default_str();
        sub->add_option("--out", sim_out_, "output TSV (default stdout)");
        sub->add_option("--json", sim_json_, "also write the report as JSON here");
        add_threads(sub);
        handlers_["simulate"] = [this](std::ostream& out, std::ostream& err) {
            MCConfig c;
            c.spec = model_sim_.require_spec();
            const auto t = parse_list(sim_theta_, "--theta");
            if (t.size() != 4) throw UsageError("--theta: expected eta1,eta2,sigma1,sigma2");
            c.true_theta = {t[0], t[1], t[2], t[3], 0.0};
            c.sample_sizes = parse_sizes(sim_n_, "--n");
            c.rho_values = parse_list(sim_rho_, "--rho");
            c.replications = sim_reps_;
            c.master_seed = sim_seed_;
            c.threads = threads_;
            seed_used_ = sim_seed_;
            const MCReport report = run_study(c);
            emit(sim_out_, out, [&](std::ostream& os) { write_tsv(os, report); });
            if (!sim_json_.empty()) emit(sim_json_, out, [&](std::ostream& os) { os << to_json(report).dump(2) << '\n'; });
            for (const auto& cell : report.cells) {
                if (cell.failure_alarm) {
                    err << "warning: n=" << cell.n << " rho=" << cell.rho << ": " << cell.failures << " of "
                        << report.replications << " fits failed\n";
                }
            }
            return exit_ok;
        };
    }

    void build_diagnose() {
        CLI::App* sub = app_.add_subcommand("diagnose", "Mahalanobis QQ data of a fitted family as TSV");
        model_diag_.add_to(sub, true);
        sub->add_option("--data", diag_data_, "input CSV with a header and two positive columns")->required();
        sub->add_option("--out", diag_out_, "output TSV (default stdout)");
        add_threads(sub);
        handlers_["diagnose"] = [this](std::ostream& out, std::ostream& err) {
            const Dataset ds = load_csv(diag_data_);
            const Fitted f = fit_model(ds, model_diag_, threads_);
            if (!f.fit.converged) {
                err << "numerical failure: fit did not converge: " << f.fit.message << '\n';
                return exit_numerical;
            }
            const QQData q = qq_mahalanobis(ds, f.fit);
            emit(diag_out_, out, [&](std::ostream& os) { write_qq_tsv(os, q); });
            err << "reference " << q.reference << ", least-squares slope " << format(qq_slope(q), 4) << '\n';
            return exit_ok;
        };
    }

    void build_summary() {
        CLI::App* sub = app_.add_subcommand("summary", "descriptive statistics of both columns");
        sub->add_option("--data", sum_data_, "input CSV with a header and two positive columns")->required();
        sub->add_option("--out", sum_out_, "output TSV (default stdout)");
        handlers_["summary"] = [this](std::ostream& out, std::ostream&) {
            const SummaryStats s = summarize(load_csv(sum_data_));
            emit(sum_out_, out, [&](std::ostream& os) { write_summary_tsv(os, s); });
            return exit_ok;
        };
    }

    void build_compare() {
        CLI::App* sub = app_.add_subcommand("compare", "fit several families and rank them by AIC and BIC");
        sub->add_option("--data", cmp_data_, "input CSV with a header and two positive columns")->required();
        sub->add_option("--families", cmp_families_, "comma-separated families (default: all eight)");
        sub->add_option("--out", cmp_out_, "output TSV (default stdout)");
        sub->add_option("--json", cmp_json_, "also write the comparison as JSON here");
        add_threads(sub);
        handlers_["compare"] = [this](std::ostream& out, std::ostream& err) {
            std::vector<GeneratorId> fams;
            if (cmp_families_.empty()) {
                fams.assign(all_generators.begin(), all_generators.end());
            } else {
                std::stringstream ss(cmp_families_);
                std::string name;
                while (std::getline(ss, name, ',')) {
                    const auto id = parse_generator(name);
                    if (!id) throw UsageError("--families: unknown family '" + name + "'");
                    fams.push_back(*id);
                }
            }
            const ModelComparison mc = compare_models(load_csv(cmp_data_), fams, {}, threads_);
            emit(cmp_out_, out, [&](std::ostream& os) { write_comparison_tsv(os, mc); });
            if (!cmp_json_.empty()) emit(cmp_json_, out, [&](std::ostream& os) { os << to_json(mc).dump(2) << '\n'; });
            bool any = false;
            for (const auto& r : mc.rows) {
                if (!r.fit) err << "warning: " << cli_name(r.family) << ": " << r.error << '\n';
                any = any || r.fit.has_value();
            }
            return any ? exit_ok : exit_numerical;
        };
    }

    CLI::App app_;
    std::map<std::string, Handler> handlers_;
    std::string manifest_path_;
    std::string primary_output_;
    std::optional<std::uint64_t> seed_used_;
    int threads_ = 0;

    ModelFlags model_eval_, model_sample_, model_fit_, model_sim_, model_diag_;
    std::string eval_theta_;
    std::vector<std::string> eval_pdf_, eval_logpdf_, eval_cdf_;
    std::string eval_quantile_, eval_grid_, eval_grid_space_ = "bls", eval_out_;
    int eval_digits_ = 12;

    std::string sample_theta_, sample_labels_ = "t1,t2", sample_out_;
    std::size_t sample_n_ = 0;
    std::uint64_t sample_seed_ = 1;

    std::string fit_data_, fit_out_;

    std::string sim_theta_ = "1,1,0.5,0.5", sim_n_ = "25,50,100,150", sim_rho_ = "0,0.25,0.5,0.75,0.95";
    std::size_t sim_reps_ = 300;
    std::uint64_t sim_seed_ = 1;
    std::string sim_out_, sim_json_;

    std::string diag_data_, diag_out_;
    std::string sum_data_, sum_out_;
    std::string cmp_data_, cmp_families_, cmp_out_, cmp_json_;
};

} // namespace blslab::cli
