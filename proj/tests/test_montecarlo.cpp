#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "blslab/montecarlo.hpp"

using namespace blslab;

TEST(BiasMse, Examples) {
    auto r = bias_mse({1, 1, 1}, 1);
    EXPECT_EQ(r.bias, 0.0);
    EXPECT_EQ(r.mse, 0.0);
    r = bias_mse({0.9, 1.1}, 1);
    EXPECT_NEAR(r.bias, 0.0, 1e-15);
    EXPECT_NEAR(r.mse, 0.01, 1e-15);
    r = bias_mse({1.2}, 1);
    EXPECT_NEAR(r.bias, 0.2, 1e-15);
    EXPECT_NEAR(r.mse, 0.04, 1e-15);
    EXPECT_THROW(bias_mse({}, 1), DomainError);
}

TEST(MCConfig, Validation) {
    MCConfig c;
    c.replications = 0;
    EXPECT_THROW(c.validate(), DomainError);
    c = MCConfig{};
    c.sample_sizes = {9};
    EXPECT_THROW(c.validate(), DomainError);
    c = MCConfig{};
    c.rho_values = {1.0};
    EXPECT_THROW(c.validate(), DomainError);
    EXPECT_NO_THROW(MCConfig{}.validate());
}

TEST(MCConfig, SeedsUniqueAcrossCells) {
    MCConfig c;
    std::set<std::uint64_t> seen;
    for (std::size_t ni = 0; ni < 4; ++ni)
        for (std::size_t ri = 0; ri < 5; ++ri)
            for (std::size_t rep = 0; rep < 1000; ++rep) seen.insert(c.replication_seed(ni, ri, rep));
    EXPECT_EQ(seen.size(), 4u * 5u * 1000u);
}

TEST(RunStudy, SingleReplicationIsTheFitError) {
    MCConfig c;
    c.spec = GeneratorSpec::log_student_t(5);
    c.sample_sizes = {40};
    c.rho_values = {0.3};
    c.replications = 1;
    c.master_seed = 99;
    const MCReport rep = run_study(c);
    ASSERT_EQ(rep.cells.size(), 1u);
    BLSParams th = c.true_theta;
    th.rho = 0.3;
    const auto data = sample(th, RadialSampler(c.spec), 40, c.replication_seed(0, 0, 0));
    FitOptions o;
    o.compute_standard_errors = false;
    const FitResult fit = fit_mle(data, c.spec, std::nullopt, o);
    ASSERT_TRUE(fit.converged);
    const Vector5 est = to_array(fit.theta_hat);
    const Vector5 truth = to_array(th);
    for (int j = 0; j < 5; ++j) {
        EXPECT_EQ(rep.cells[0].stats[j].bias, est[j] - truth[j]);
        EXPECT_EQ(rep.cells[0].stats[j].mse, (est[j] - truth[j]) * (est[j] - truth[j]));
    }
}

TEST(RunStudy, DeterministicAcrossThreadCounts) {
    MCConfig c;
    c.spec = GeneratorSpec::log_slash(4);
    c.sample_sizes = {25, 50};
    c.rho_values = {0.0, 0.5};
    c.replications = 20;
    c.master_seed = 7;
    c.threads = 1;
    const MCReport a = run_study(c);
    c.threads = 5;
    const MCReport b = run_study(c);
    EXPECT_TRUE(a == b);
    std::ostringstream ta, tb;
    write_tsv(ta, a);
    write_tsv(tb, b);
    EXPECT_EQ(ta.str(), tb.str());
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(RunStudy, LogNormalSmallBiasAndShrinkingMse) {
    MCConfig c;
    c.sample_sizes = {25, 100, 150};
    c.rho_values = {0.0};
    c.replications = 300;
    c.master_seed = 42;
    const MCReport r = run_study(c);
    ASSERT_EQ(r.cells.size(), 3u);
    EXPECT_LE(std::fabs(r.cells[1].stats[0].bias), 0.01);
    for (int j = 0; j < 5; ++j) EXPECT_LT(r.cells[2].stats[j].mse, r.cells[0].stats[j].mse) << parameter_names[j];
    for (const auto& cell : r.cells) {
        EXPECT_EQ(cell.failures, 0u);
        EXPECT_FALSE(cell.failure_alarm);
        for (const auto& s : cell.stats) EXPECT_GE(s.mse, s.bias * s.bias - 1e-12);
    }
}

TEST(RunStudy, TsvLayout) {
    MCConfig c;
    c.sample_sizes = {25, 50, 100, 150};
    c.rho_values = {0, 0.25, 0.5, 0.95};
    c.replications = 2;
    std::ostringstream os;
    write_tsv(os, run_study(c));
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "n\trho\teta1_bias\teta1_mse\teta2_bias\teta2_mse\tsigma1_bias\tsigma1_mse\tsigma2_bias\tsigma2_mse"
                    "\trho_bias\trho_mse\tfits\tfailed");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 16);
}

TEST(RunStudy, FailuresAreCountedNotDropped) {
    // LogLaplace fits often collapse onto an observation; those must show up
    // as failures with the alarm raised.
    MCConfig c;
    c.spec = GeneratorSpec::log_laplace();
    c.sample_sizes = {30};
    c.rho_values = {0.0};
    c.replications = 20;
    const MCReport r = run_study(c);
    EXPECT_EQ(r.cells[0].successes + r.cells[0].failures, 20u);
    EXPECT_GT(r.cells[0].failures, 0u);
    EXPECT_TRUE(r.cells[0].failure_alarm);
}
