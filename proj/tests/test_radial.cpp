#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "blslab/radial.hpp"
#include "support.hpp"

using namespace blslab;
using testsupport::default_specs;

TEST(MahalanobisLaw, DensityIsPiGOverZ) {
    const auto s = GeneratorSpec::log_normal();
    EXPECT_NEAR(mahalanobis_pdf(s, 2.0), 0.5 * std::exp(-1.0), 1e-15);
    EXPECT_THROW(mahalanobis_pdf(s, 0.0), DomainError);
}

TEST(MahalanobisLaw, ChiSquareAndFClosedForms) {
    const auto n = GeneratorSpec::log_normal();
    const auto t7 = GeneratorSpec::log_student_t(7.0);
    for (double x : {0.01, 0.5, 1.0, 2.0, 5.0, 20.0, 80.0}) {
        EXPECT_NEAR(mahalanobis_cdf(n, x), 1.0 - std::exp(-x / 2), 1e-12);
        EXPECT_NEAR(mahalanobis_cdf_quadrature(n, x), 1.0 - std::exp(-x / 2), 1e-10);
        EXPECT_NEAR(mahalanobis_cdf(t7, x), specfun::f_cdf(x / 2, 2.0, 7.0), 1e-12);
        EXPECT_NEAR(mahalanobis_cdf_quadrature(t7, x), specfun::f_cdf(x / 2, 2.0, 7.0), 1e-10);
    }
}

TEST(MahalanobisLaw, QuadratureMatchesOtherClosedTails) {
    // Survival functions of families whose tail integral has a closed form.
    for (double x : {0.05, 0.5, 1.0, 2.0, 5.0, 30.0}) {
        const double pvii = std::pow(1.0 + x / 22.0, 1.0 - 5.0);
        EXPECT_NEAR(mahalanobis_sf_quadrature(GeneratorSpec::log_pearson_vii(5, 22), x), pvii, 1e-10) << x;
        EXPECT_NEAR(mahalanobis_cdf_quadrature(GeneratorSpec::log_logistic(), x), std::tanh(x / 2), 1e-10) << x;
        const double v = std::sqrt(2 * x);
        EXPECT_NEAR(mahalanobis_sf_quadrature(GeneratorSpec::log_laplace(), x), v * specfun::bessel_k1(v), 1e-10) << x;
        const double nu = 2.0;
        const double s = std::sqrt(1 + x);
        const double hyp = 2 * std::exp(-nu * s) * (s / nu + 1 / (nu * nu)) * specfun::pi /
                           partition_closed(GeneratorSpec::log_hyperbolic(nu));
        EXPECT_NEAR(mahalanobis_sf_quadrature(GeneratorSpec::log_hyperbolic(nu), x), hyp, 1e-10) << x;
        for (double xi : {-0.5, 0.3, 1.0}) {
            const double pe = specfun::regularized_gamma_q(1 + xi, 0.5 * std::pow(x, 1 / (1 + xi)));
            EXPECT_NEAR(mahalanobis_sf_quadrature(GeneratorSpec::log_power_exponential(xi), x), pe, 1e-10) << xi;
        }
    }
}

TEST(MahalanobisLaw, SlashTailMatchesOracle) {
    // mpmath quadrature of pi g(u)/Z over (x, inf), nu = 4
    const auto s = GeneratorSpec::log_slash(4.0);
    const std::vector<std::pair<double, double>> cases = {
        {0.5, 0.8625673785250801756}, {1, 0.74728119653854613871}, {2, 0.56841703746147705571},
        {5, 0.27852418389674951794},  {40, 0.014862477207661502374},
    };
    for (auto [x, v] : cases) {
        EXPECT_NEAR(mahalanobis_sf(s, x), v, 1e-10);
        EXPECT_NEAR(mahalanobis_cdf(s, x), 1 - v, 1e-10);
    }
}

TEST(MahalanobisLaw, CdfMatchesDoubleIntegralForm) {
    // P(d^2 <= x) = (4/Z) int int_{z1, z2 >= 0, z1^2 + z2^2 <= x} g(z1^2 + z2^2)
    for (const auto& spec : testsupport::one_per_family()) {
        for (double x : {0.5, 1.0, 2.0, 5.0}) {
            const double rx = std::sqrt(x);
            auto inner = [&](double z1) {
                const double top = std::sqrt(std::max(0.0, x - z1 * z1));
                return quad::integrate([&](double z2) { return g(spec, z1 * z1 + z2 * z2); }, 0.0, top,
                                       testsupport::loose(1e-14, 1e-11));
            };
            const double dbl = 4.0 / partition_closed(spec) *
                               quad::integrate(inner, 0.0, rx, testsupport::loose(1e-13, 1e-10));
            EXPECT_NEAR(mahalanobis_cdf(spec, x), dbl, 1e-6) << spec.describe() << " x=" << x;
        }
    }
}

TEST(MahalanobisLaw, QuantileRoundTrip) {
    for (const auto& spec : default_specs()) {
        for (double p = 0.01; p < 0.995; p += 0.07) {
            const double x = mahalanobis_quantile(spec, p);
            EXPECT_NEAR(mahalanobis_cdf(spec, x), p, 1e-7) << spec.describe() << " p=" << p;
        }
        const double far = mahalanobis_quantile_upper(spec, 1e-10);
        EXPECT_NEAR(mahalanobis_sf(spec, far) / 1e-10, 1.0, 1e-6) << spec.describe();
    }
    EXPECT_NEAR(mahalanobis_quantile(GeneratorSpec::log_normal(), 0.3), -2 * std::log(0.7), 1e-14);
    EXPECT_THROW(mahalanobis_quantile(GeneratorSpec::log_normal(), 1.0), DomainError);
}

TEST(MahalanobisLaw, QuantileQuadraturePathMatchesClosedForm) {
    // The generic root finder, applied to the Student-t law without its shortcut.
    const auto t = GeneratorSpec::log_student_t(4.0);
    for (double p : {0.001, 0.2, 0.5, 0.9, 0.999999}) {
        const double x = detail::invert_radial(t, p, false, [&](double v) { return mahalanobis_cdf_quadrature(t, v); });
        EXPECT_NEAR(x / mahalanobis_quantile(t, p), 1.0, 1e-9) << p;
    }
}

TEST(RadialSampler, TableInversionIsAccurate) {
    for (const auto& spec : default_specs()) {
        if (spec.has_closed_radial_law()) continue;
        RadialSampler sampler(spec);
        for (double u : {0.999999, 0.9, 0.7, 0.5, 0.31, 0.05, 1e-4, 1e-8, 1e-12}) {
            const double x = sampler.upper_quantile(u);
            const double sf = mahalanobis_sf(spec, x);
            EXPECT_NEAR(sf / u, 1.0, 1e-8) << spec.describe() << " u=" << u << " ratio-1=" << sf / u - 1;
        }
    }
}
