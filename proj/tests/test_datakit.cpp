#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "blslab/datakit.hpp"

using namespace blslab;

namespace {

Dataset from_sample(const SampleMatrix& m) {
    Dataset ds;
    ds.pairs = m;
    return ds;
}

std::size_t parse_error_row(const std::string& text) {
    std::istringstream in(text);
    try {
        parse_csv(in);
    } catch (const ParseError& e) {
        return e.row();
    }
    ADD_FAILURE() << "no ParseError for: " << text;
    return 999;
}

} // namespace

TEST(Csv, SingleRow) {
    std::istringstream in("t1,t2\n1.0,2.0\n");
    const Dataset ds = parse_csv(in);
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds.pairs[0].t1, 1.0);
    EXPECT_EQ(ds.pairs[0].t2, 2.0);
    EXPECT_EQ(ds.labels[0], "t1");
    EXPECT_EQ(ds.labels[1], "t2");
}

TEST(Csv, ErrorsNameTheRow) {
    EXPECT_EQ(parse_error_row("t1,t2\n0,1\n"), 1u);
    EXPECT_EQ(parse_error_row("t1,t2\n1,1\n2,2\n3,-4\n"), 3u);
    EXPECT_EQ(parse_error_row("t1,t2\n1,1\n,2\n"), 2u);
    EXPECT_EQ(parse_error_row("t1,t2\n1,abc\n"), 1u);
    EXPECT_EQ(parse_error_row("t1,t2\n1,2,3\n"), 1u);
    EXPECT_EQ(parse_error_row("t1,t2\n1,nan\n"), 1u);
    EXPECT_EQ(parse_error_row("t1,t2\n"), 0u);
    EXPECT_EQ(parse_error_row(""), 0u);
}

TEST(Csv, ToleratesCrlfBlankLinesAndBom) {
    std::istringstream in("\xEF\xBB\xBF" "a, b\r\n1.5, 2\r\n\r\n3,4\r\n");
    const Dataset ds = parse_csv(in);
    ASSERT_EQ(ds.size(), 2u);
    EXPECT_EQ(ds.labels[0], "a");
    EXPECT_EQ(ds.labels[1], "b");
    EXPECT_EQ(ds.pairs[1].t2, 4.0);
}

TEST(Csv, FixtureLoadsAndRoundTrips) {
    const std::string path = std::string(BLSLAB_DATA_DIR) + "/lognormal_n15.csv";
    const Dataset ds = load_csv(path);
    ASSERT_EQ(ds.size(), 15u);
    const auto tmp = std::filesystem::temp_directory_path() / "blslab_roundtrip.csv";
    save_csv(tmp.string(), ds);
    const Dataset back = load_csv(tmp.string());
    std::filesystem::remove(tmp);
    ASSERT_EQ(back.size(), ds.size());
    EXPECT_EQ(back.labels, ds.labels);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        EXPECT_EQ(back.pairs[i].t1, ds.pairs[i].t1);
        EXPECT_EQ(back.pairs[i].t2, ds.pairs[i].t2);
    }
}

TEST(Csv, FixtureMatchesGenerator) {
    // data/lognormal_n15.csv is sample(theta = (1, 1, 0.5, 0.5, 0.5), LogNormal, 15, seed 20240601).
    const Dataset ds = load_csv(std::string(BLSLAB_DATA_DIR) + "/lognormal_n15.csv");
    const auto m = sample({1.0, 1.0, 0.5, 0.5, 0.5}, GeneratorSpec::log_normal(), 15, 20240601);
    for (std::size_t i = 0; i < 15; ++i) {
        EXPECT_EQ(ds.pairs[i].t1, m[i].t1);
        EXPECT_EQ(ds.pairs[i].t2, m[i].t2);
    }
}

TEST(Csv, RandomRoundTripIsExact) {
    const Dataset ds = from_sample(sample({2.0, 0.3, 1.7, 0.2, -0.4}, GeneratorSpec::log_slash(3), 200, 5));
    std::stringstream io;
    write_csv(io, ds);
    const Dataset back = parse_csv(io);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        EXPECT_EQ(back.pairs[i].t1, ds.pairs[i].t1);
        EXPECT_EQ(back.pairs[i].t2, ds.pairs[i].t2);
    }
}

TEST(Summary, HandComputedColumn) {
    // {1,2,3,4,10}: deviations -3,-2,-1,0,6; m2 = 10, m3 = 36, m4 = 278.8.
    const auto s = summarize_column({10, 2, 4, 1, 3});
    EXPECT_EQ(s.n, 5u);
    EXPECT_EQ(s.minimum, 1.0);
    EXPECT_EQ(s.maximum, 10.0);
    EXPECT_EQ(s.median, 3.0);
    EXPECT_DOUBLE_EQ(s.mean, 4.0);
    EXPECT_DOUBLE_EQ(s.sd, std::sqrt(12.5));
    EXPECT_DOUBLE_EQ(s.cv_percent, 100.0 * std::sqrt(12.5) / 4.0);
    ASSERT_TRUE(s.skewness && s.kurtosis_excess);
    EXPECT_NEAR(*s.skewness, 36.0 / std::pow(10.0, 1.5), 1e-14);
    EXPECT_NEAR(*s.kurtosis_excess, -0.212, 1e-14);
}

TEST(Summary, TwoPointAndSymmetricColumns) {
    const auto s = summarize_column({1, 3});
    EXPECT_EQ(s.mean, 2.0);
    EXPECT_EQ(s.median, 2.0);
    EXPECT_DOUBLE_EQ(s.sd, std::numbers::sqrt2);
    const auto sym = summarize_column({1, 2, 3});
    ASSERT_TRUE(sym.skewness);
    EXPECT_EQ(*sym.skewness, 0.0);
}

TEST(Summary, ConstantColumnFlagsHigherMoments) {
    const auto s = summarize_column({7, 7, 7, 7});
    EXPECT_EQ(s.sd, 0.0);
    EXPECT_EQ(s.cv_percent, 0.0);
    EXPECT_FALSE(s.skewness);
    EXPECT_FALSE(s.kurtosis_excess);
    std::ostringstream os;
    Dataset ds;
    ds.pairs = SampleMatrix({{7, 1}, {7, 2}, {7, 4}});
    write_summary_tsv(os, summarize(ds));
    EXPECT_NE(os.str().find("\tNA\tNA\n"), std::string::npos);
}

TEST(Summary, InvariantToRowOrder) {
    const auto m = sample({1.0, 2.0, 0.7, 0.3, 0.6}, GeneratorSpec::log_student_t(4), 101, 17);
    std::vector<ObservationPair> rows = m.rows();
    const SummaryStats a = summarize(from_sample(m));
    std::reverse(rows.begin(), rows.end());
    std::rotate(rows.begin(), rows.begin() + 37, rows.end());
    const SummaryStats b = summarize(from_sample(SampleMatrix(rows)));
    for (int k = 0; k < 2; ++k) {
        EXPECT_EQ(a.columns[k].mean, b.columns[k].mean);
        EXPECT_EQ(a.columns[k].sd, b.columns[k].sd);
        EXPECT_EQ(*a.columns[k].skewness, *b.columns[k].skewness);
        EXPECT_EQ(*a.columns[k].kurtosis_excess, *b.columns[k].kurtosis_excess);
        EXPECT_EQ(a.columns[k].median, b.columns[k].median);
    }
}

TEST(DefaultGrid, Shapes) {
    EXPECT_EQ(default_grid(GeneratorId::LogStudentT).size(), 14u);
    EXPECT_EQ(default_grid(GeneratorId::LogHyperbolic).size(), 6u);
    EXPECT_EQ(default_grid(GeneratorId::LogSlash).size(), 9u);
    const auto pe = default_grid(GeneratorId::LogPowerExponential);
    ASSERT_EQ(pe.size(), 151u);
    EXPECT_EQ(*pe.front().xi, -0.5);
    EXPECT_EQ(*pe.back().xi, 1.0);
    EXPECT_EQ(*pe[80].xi, 0.3);
    const auto pvii = default_grid(GeneratorId::LogPearsonVII);
    EXPECT_NE(std::find(pvii.begin(), pvii.end(), GeneratorParams{.xi = 5.0, .theta = 22.0}), pvii.end());
    EXPECT_TRUE(default_grid(GeneratorId::LogNormal).empty());
    for (GeneratorId id : all_generators) {
        for (const auto& p : default_grid(id)) EXPECT_NO_THROW(GeneratorSpec(id, p));
    }
}

TEST(Compare, SingleFamilyCountsFiveParameters) {
    const Dataset ds = from_sample(sample({1, 1, 0.5, 0.5, 0.3}, GeneratorSpec::log_normal(), 80, 3));
    const ModelComparison mc = compare_models(ds, {GeneratorId::LogNormal});
    ASSERT_EQ(mc.rows.size(), 1u);
    ASSERT_TRUE(mc.rows[0].fit);
    EXPECT_DOUBLE_EQ(mc.rows[0].fit->aic, -2.0 * mc.rows[0].fit->log_lik + 10.0);
    EXPECT_DOUBLE_EQ(mc.rows[0].fit->bic, -2.0 * mc.rows[0].fit->log_lik + 5.0 * std::log(80.0));
    EXPECT_EQ(mc.rows[0].aic_rank, 1u);
    EXPECT_TRUE(mc.rows[0].best_aic);
}

TEST(Compare, RanksArePermutationsAndTableLayout) {
    const Dataset ds = from_sample(sample({1, 1, 0.5, 0.5, 0.3}, GeneratorSpec::log_student_t(4), 60, 8));
    const std::vector<GeneratorId> fams{GeneratorId::LogNormal, GeneratorId::LogStudentT, GeneratorId::LogLogistic,
                                        GeneratorId::LogSlash};
    const ModelComparison mc = compare_models(ds, fams, {}, 2);
    std::vector<std::size_t> aic, bic;
    std::size_t best = 0;
    for (const auto& r : mc.rows) {
        ASSERT_TRUE(r.fit) << r.error;
        aic.push_back(r.aic_rank);
        bic.push_back(r.bic_rank);
        best += r.best_aic;
    }
    std::sort(aic.begin(), aic.end());
    std::sort(bic.begin(), bic.end());
    EXPECT_EQ(aic, (std::vector<std::size_t>{1, 2, 3, 4}));
    EXPECT_EQ(bic, aic); // every model has k = 5, so the two orders coincide
    EXPECT_EQ(best, 1u);

    std::ostringstream os;
    write_comparison_tsv(os, mc);
    std::istringstream in(os.str());
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "family\teta1\tse_eta1\teta2\tse_eta2\tsigma1\tse_sigma1\tsigma2\tse_sigma2\trho\tse_rho\textra\t"
                      "loglik\taic\tbic");
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 14);
    }
    EXPECT_EQ(rows, 4);
    const auto j = to_json(mc);
    EXPECT_EQ(j["models"].size(), 4u);
    EXPECT_EQ(j["models"][1]["family"], "logt");
}

TEST(Compare, TiesBreakByFamilyOrder) {
    std::vector<ModelRow> rows(3);
    rows[0].family = GeneratorId::LogLogistic;
    rows[1].family = GeneratorId::LogNormal;
    rows[2].family = GeneratorId::LogSlash;
    for (auto& r : rows) {
        r.fit = FitResult{};
        r.fit->aic = 100.0;
        r.fit->bic = 104.0;
    }
    rows[2].fit->aic = 99.0;
    detail::assign_ranks(rows, true);
    EXPECT_EQ(rows[2].aic_rank, 1u);
    EXPECT_EQ(rows[1].aic_rank, 2u);
    EXPECT_EQ(rows[0].aic_rank, 3u);
    detail::assign_ranks(rows, false);
    EXPECT_EQ(rows[1].bic_rank, 1u);
    EXPECT_EQ(rows[2].bic_rank, 2u);
    EXPECT_EQ(rows[0].bic_rank, 3u);
}

TEST(Compare, FailuresKeepARowWithoutRank) {
    const Dataset ds = from_sample(sample({1, 1, 0.5, 0.5, 0.3}, GeneratorSpec::log_normal(), 40, 4));
    std::map<GeneratorId, std::vector<GeneratorParams>> grids;
    grids[GeneratorId::LogStudentT] = {{.nu = -1.0}}; // invalid grid
    const ModelComparison mc = compare_models(ds, {GeneratorId::LogStudentT, GeneratorId::LogNormal}, grids);
    ASSERT_EQ(mc.rows.size(), 2u);
    EXPECT_FALSE(mc.rows[0].fit);
    EXPECT_FALSE(mc.rows[0].error.empty());
    EXPECT_EQ(mc.rows[0].aic_rank, 0u);
    EXPECT_EQ(mc.rows[1].aic_rank, 1u);
    std::ostringstream os;
    write_comparison_tsv(os, mc);
    EXPECT_NE(os.str().find("logt\tNA\tNA"), std::string::npos);
    EXPECT_TRUE(to_json(mc)["models"][0].contains("error"));
    EXPECT_THROW(compare_models(ds, {}), DomainError);
}

TEST(Compare, LaplaceDataSelectsLaplace) {
    // Selection frequency over 25 seeds with every family competing.
    const std::vector<GeneratorId> fams(all_generators.begin(), all_generators.end());
    int first = 0;
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const Dataset ds = from_sample(sample({1, 1, 0.5, 0.5, 0.5}, GeneratorSpec::log_laplace(), 200, seed));
        const ModelComparison mc = compare_models(ds, fams);
        for (const auto& r : mc.rows) {
            if (r.best_aic && r.family == GeneratorId::LogLaplace) ++first;
        }
    }
    EXPECT_GE(first, 20) << "LogLaplace ranked first by AIC in " << first << " of 25 seeds";
}

TEST(Qq, LogNormalSelfConsistency) {
    const Dataset ds = from_sample(sample({1, 1, 0.5, 0.5, 0.4}, GeneratorSpec::log_normal(), 1000, 21));
    const FitResult fit = fit_mle(ds.pairs, GeneratorSpec::log_normal());
    ASSERT_TRUE(fit.converged);
    const QQData q = qq_mahalanobis(ds, fit);
    ASSERT_EQ(q.theoretical.size(), 1000u);
    EXPECT_TRUE(std::is_sorted(q.empirical.begin(), q.empirical.end()));
    EXPECT_TRUE(std::adjacent_find(q.theoretical.begin(), q.theoretical.end(), std::greater_equal<>()) ==
                q.theoretical.end());
    for (std::size_t i = 0; i < 1000; i += 97) {
        const double p = (i + 0.5) / 1000.0;
        EXPECT_NEAR(q.theoretical[i], -2.0 * std::log1p(-p), 1e-12 * (1.0 + q.theoretical[i]));
    }
    const double slope = qq_slope(q);
    EXPECT_GE(slope, 0.9);
    EXPECT_LE(slope, 1.1);
    EXPECT_EQ(q.reference, "lognormal");
}

TEST(Qq, SingleObservationUsesTheMedian) {
    Dataset ds;
    ds.pairs = SampleMatrix({{2.0, 0.5}});
    FitResult fit;
    fit.converged = true;
    fit.spec = GeneratorSpec::log_student_t(4);
    fit.theta_hat = {1.0, 1.0, 0.5, 0.5, 0.2};
    const QQData q = qq_mahalanobis(ds, fit);
    ASSERT_EQ(q.theoretical.size(), 1u);
    EXPECT_DOUBLE_EQ(q.theoretical[0], mahalanobis_quantile(fit.spec, 0.5));
    EXPECT_DOUBLE_EQ(q.empirical[0], mahalanobis_sq(fit.theta_hat, ds.pairs[0]));
    std::ostringstream os;
    write_qq_tsv(os, q);
    EXPECT_EQ(os.str().substr(0, 22), "theoretical\tempirical\n");
    fit.converged = false;
    EXPECT_THROW(qq_mahalanobis(ds, fit), DomainError);
}
