#include <cmath>

#include <gtest/gtest.h>

#include "tmsv/distributions.hpp"

using namespace tmsv;

namespace {

// Reference values evaluated independently at 50 significant digits.
constexpr double kThermal0158P0 = 0.8635578583765112;
constexpr double kThermal0158P2 = 0.01607638861036629;
constexpr double kMultimode28M56P0 = 0.10324973585950495;
constexpr double kMultimode0158M1e4P0 = 0.8538508477332187;
constexpr double kExpMinus0158 = 0.8538497819684817;
constexpr double kPoisson28P1 = 0.1702681753506103;

} // namespace

TEST(ThermalPmf, ReferenceValues)
{
    EXPECT_NEAR(thermal_pmf(0.158, 0)[0], kThermal0158P0, 1e-15);
    EXPECT_NEAR(thermal_pmf(0.158, 2)[2], kThermal0158P2, 1e-16);
}

TEST(ThermalPmf, EmptyModeIsPointMass)
{
    const Pmf p = thermal_pmf(0.0, 5);
    ASSERT_EQ(p.size(), 6);
    EXPECT_EQ(p[0], 1.0);
    EXPECT_EQ(p.probs.tail(5).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ThermalPmf, RejectsNegativeMean)
{
    EXPECT_THROW(thermal_pmf(-0.1, 3), DomainError);
    EXPECT_THROW(thermal_pmf(0.1, -1), DomainError);
}

TEST(ThermalPmf, TailRuleKeepsTailBelowTolerance)
{
    for (double nu : {1e-6, 0.01, 0.158, 0.632, 1.0, 2.8, 10.0, 100.0}) {
        const Pmf p = thermal_pmf(nu);
        const double r = nu / (1.0 + nu);
        const double tail = std::pow(r, static_cast<double>(p.n_max() + 1));
        EXPECT_LT(tail, kDefaultTailTolerance) << "nu=" << nu;
        // One fewer term would not be enough.
        EXPECT_GE(tail / r, kDefaultTailTolerance) << "nu=" << nu;
        EXPECT_EQ(p.tail_tolerance, kDefaultTailTolerance);
    }
}

TEST(MultimodePmf, ReferenceValues)
{
    EXPECT_NEAR(multimode_pmf(2.8, 5.6, 0)[0], kMultimode28M56P0, 1e-15);
    EXPECT_NEAR(multimode_pmf(2.8, 5.6, 0)[0], std::pow(1.0 + 2.8 / 5.6, -5.6), 1e-15);
}

TEST(MultimodePmf, LargeMApproachesPoisson)
{
    const double p0 = multimode_pmf(0.158, 1e4, 0)[0];
    EXPECT_NEAR(p0, kMultimode0158M1e4P0, 1e-15);
    EXPECT_NEAR(p0, kExpMinus0158, 1e-4);
}

TEST(MultimodePmf, SingleModeIsThermal)
{
    for (double nu : {0.1, 0.158, 0.8, 2.8}) {
        const Index n_max = thermal_support(nu);
        EXPECT_LE(sup_distance(multimode_pmf(nu, 1.0, n_max), thermal_pmf(nu, n_max)), 1e-12) << "nu=" << nu;
    }
}

TEST(MultimodePmf, ZeroMeanIsPointMassForAnyM)
{
    for (double m : {0.3, 1.0, 5.6, 1e4}) {
        const Pmf p = multimode_pmf(0.0, m, 4);
        EXPECT_EQ(p[0], 1.0);
        EXPECT_EQ(p.total(), 1.0);
    }
}

TEST(MultimodePmf, RejectsNonPositiveM)
{
    EXPECT_THROW(multimode_pmf(1.0, 0.0, 3), DomainError);
    EXPECT_THROW(multimode_pmf(1.0, -2.0, 3), DomainError);
    EXPECT_THROW(multimode_pmf(-1.0, 2.0, 3), DomainError);
}

TEST(MultimodePmf, StaysFiniteWhereGammaOverflows)
{
    // n + M > 171 overflows Gamma in double precision.
    const Pmf p = multimode_pmf(150.0, 60.0, 400);
    EXPECT_TRUE(p.probs.allFinite());
    EXPECT_NEAR(p.total(), 1.0, 1e-9);
}

TEST(MultimodePmf, NonIntegerM)
{
    const Moments<double> m = pmf_moments(multimode_pmf(2.8, 5.6, 300));
    EXPECT_NEAR(m.mean, 2.8, 1e-9);
    EXPECT_NEAR(m.variance, 2.8 * (1.0 + 2.8 / 5.6), 1e-8);
}

TEST(PoissonPmf, ReferenceValues)
{
    EXPECT_NEAR(poisson_pmf(0.158, 0)[0], kExpMinus0158, 1e-15);
    EXPECT_NEAR(poisson_pmf(2.8, 1)[1], kPoisson28P1, 1e-15);
    const Pmf zero = poisson_pmf(0.0, 3);
    EXPECT_EQ(zero.probs, (Eigen::Vector4d() << 1, 0, 0, 0).finished());
    EXPECT_THROW(poisson_pmf(-1.0, 3), DomainError);
}

TEST(DetectedMean, Examples)
{
    EXPECT_NEAR(detected_mean(0.632, DetectorModel(0.25)), 0.158, 1e-15);
    EXPECT_EQ(detected_mean(0.7, DetectorModel(1.0)), 0.7);
    EXPECT_EQ(detected_mean(0.7, DetectorModel(0.0)), 0.0);
    EXPECT_THROW(DetectorModel(1.5), DomainError);
    EXPECT_THROW(DetectorModel(-0.1), DomainError);
}

TEST(TmsvParams, NuAndAlphaAgree)
{
    for (double nu : {0.0, 0.158, 0.33, 0.8, 2.8, 100.0}) {
        const auto p = TmsvParams::from_nu(nu);
        const double a2 = p.alpha_mag() * p.alpha_mag();
        EXPECT_NEAR(p.nu(), a2 / (1.0 - a2), 1e-12 * std::max(1.0, nu));
        EXPECT_LT(p.alpha_mag(), 1.0);
    }
    for (double a : {0.0, 0.3, 0.9, 0.999}) {
        const auto p = TmsvParams::from_alpha(a);
        EXPECT_NEAR(p.nu(), a * a / (1.0 - a * a), 1e-12 * std::max(1.0, p.nu()));
    }
    EXPECT_THROW(TmsvParams::from_alpha(1.0), DomainError);
    EXPECT_THROW(TmsvParams::from_nu(-0.5), DomainError);
}

TEST(BinomialThin, ThermalStaysThermal)
{
    const Pmf thinned = binomial_thin(thermal_pmf(0.632, 60), DetectorModel(0.25));
    EXPECT_LE(sup_distance(thinned, thermal_pmf(0.158, 60)), 1e-9);
}

TEST(BinomialThin, PerfectDetectorIsIdentity)
{
    const Pmf p = multimode_pmf(2.8, 5.6);
    EXPECT_EQ(binomial_thin(p, DetectorModel(1.0)).probs, p.probs);
}

TEST(BinomialThin, BlindDetectorKeepsOnlyZero)
{
    const Pmf p = thermal_pmf(0.8);
    const Pmf thinned = binomial_thin(p, DetectorModel(0.0));
    EXPECT_NEAR(thinned[0], p.total(), 1e-15);
    EXPECT_EQ(thinned.probs.tail(thinned.size() - 1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(BinomialThin, PointMassAtTwo)
{
    Pmf p;
    p.probs = Eigen::VectorXd::Zero(5);
    p.probs[2] = 1.0;
    const Pmf thinned = binomial_thin(p, DetectorModel(0.5));
    EXPECT_NEAR(thinned[0], 0.25, 1e-15);
    EXPECT_NEAR(thinned[1], 0.5, 1e-15);
    EXPECT_NEAR(thinned[2], 0.25, 1e-15);
    EXPECT_EQ(thinned[3], 0.0);
    EXPECT_EQ(thinned[4], 0.0);
}

TEST(PmfMoments, Examples)
{
    const auto thermal = pmf_moments(thermal_pmf(0.158, 60));
    EXPECT_NEAR(thermal.mean, 0.158, 1e-12);
    EXPECT_NEAR(thermal.variance, 0.158 * 1.158, 1e-12);

    const auto nb = pmf_moments(multimode_pmf(2.8, 5.6, 200));
    EXPECT_NEAR(nb.variance, 4.2, 1e-9);

    const auto zero = pmf_moments(thermal_pmf(0.0, 10));
    EXPECT_EQ(zero.mean, 0.0);
    EXPECT_EQ(zero.variance, 0.0);
}

TEST(Pmf, ScalarTypeIsATemplateParameter)
{
    const auto wide = thermal_pmf<long double>(0.158L, 20);
    const auto narrow = thermal_pmf(0.158, 20);
    for (Index n = 0; n <= 20; ++n) {
        EXPECT_NEAR(static_cast<double>(wide[n]), narrow[n], 1e-15);
    }
    const auto nb = multimode_pmf<long double>(2.8L, 5.6L, 0);
    EXPECT_NEAR(static_cast<double>(nb[0]), kMultimode28M56P0, 1e-16);
}

//---------------------------------------------------------------------------//
// Properties
//---------------------------------------------------------------------------//

TEST(PmfProperties, AutoSupportIsNormalized)
{
    for (double nu : {0.0, 0.01, 0.158, 0.5, 2.8, 7.0, 30.0}) {
        for (Pmf const& p : {thermal_pmf(nu), poisson_pmf(nu), multimode_pmf(nu, 0.4), multimode_pmf(nu, 5.6),
                             multimode_pmf(nu, 1e4)}) {
            EXPECT_LE(p.total(), 1.0 + 1e-13) << "nu=" << nu;
            EXPECT_GE(p.total(), 1.0 - kDefaultTailTolerance) << "nu=" << nu;
            EXPECT_GE(p.probs.minCoeff(), 0.0);
            EXPECT_LE(p.probs.maxCoeff(), 1.0);
        }
    }
}

TEST(PmfProperties, MultimodeMomentsMatchIdentity)
{
    for (double nu : {0.158, 1.0, 2.8}) {
        for (double m : {0.5, 1.0, 5.6, 40.0}) {
            // The auto support drops up to 1e-10 of mass, which moves the
            // variance by more than the tolerance; use a long fixed support.
            const auto mom = pmf_moments(multimode_pmf(nu, m, 600));
            EXPECT_NEAR(mom.mean, nu, 1e-8) << nu << " " << m;
            EXPECT_NEAR(mom.variance, nu * (1.0 + nu / m), 1e-7) << nu << " " << m;
        }
    }
}

TEST(PmfProperties, PoissonLimitImprovesWithM)
{
    for (double nu : {0.158, 2.8}) {
        const Index n = poisson_support(nu) + 20;
        const Pmf poisson = poisson_pmf(nu, n);
        EXPECT_LT(sup_distance(multimode_pmf(nu, 1e4, n), poisson), sup_distance(multimode_pmf(nu, 10.0, n), poisson));
    }
}

TEST(PmfProperties, ThinningClosureUpToNuThree)
{
    for (double nu : {0.05, 0.158, 0.632, 1.0, 2.0, 2.8, 3.0}) {
        const Pmf source = thermal_pmf(nu);
        for (double eta : {0.1, 0.25, 0.5, 1.0}) {
            const Pmf thinned = binomial_thin(source, DetectorModel(eta));
            EXPECT_LE(sup_distance(thinned, thermal_pmf(eta * nu, source.n_max())), 1e-9)
                << "nu=" << nu << " eta=" << eta;
        }
    }
}

TEST(PmfProperties, ThinningPreservesMassAndScalesMean)
{
    const Pmf p = multimode_pmf(2.8, 5.6);
    for (double eta : {0.1, 0.25, 0.5}) {
        const Pmf thinned = binomial_thin(p, DetectorModel(eta));
        EXPECT_NEAR(thinned.total(), p.total(), 1e-12);
        EXPECT_NEAR(pmf_moments(thinned).mean, eta * pmf_moments(p).mean, 1e-10);
    }
}
