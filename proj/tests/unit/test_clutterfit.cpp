#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "kronest/clutterfit.hpp"
#include "kronest/error.hpp"
#include "kronest/rng.hpp"

namespace kronest {
namespace {

/// log K_v(x) from K_v(x) = int_0^inf exp(-x cosh t) cosh(v t) dt, with the
/// e^{-x} factor pulled out so large arguments stay representable.
double log_bessel_quadrature(double v, double x) {
    const double h = 1e-3;
    double sum = 0.0;
    for (double t = 0.0; t < 60.0; t += h) {
        const double w = t == 0.0 ? 0.5 : 1.0;
        const double e = -x * (std::cosh(t) - 1.0) + v * t;
        if (e < -800.0 && t > 1.0) break;
        sum += w * 0.5 * (std::exp(e) + std::exp(-x * (std::cosh(t) - 1.0) - v * t));
    }
    return std::log(sum * h) - x;
}

TEST(Bessel, MatchesQuadrature) {
    for (const double v : {0.0, 0.3, 1.0, 2.5, 7.0, 30.0}) {
        for (const double x : {0.05, 0.7, 3.0, 20.0, 400.0, 2000.0}) {
            const double expect = log_bessel_quadrature(v, x);
            EXPECT_NEAR(log_bessel_k(v, x), expect, 1e-7 * std::max(1.0, std::abs(expect)))
                << "v=" << v << " x=" << x;
        }
    }
    EXPECT_NEAR(bessel_k(0.5, 2.0), std::sqrt(std::numbers::pi / 4.0) * std::exp(-2.0), 1e-14);
    EXPECT_DOUBLE_EQ(log_bessel_k(-1.5, 2.0), log_bessel_k(1.5, 2.0));
    EXPECT_THROW(log_bessel_k(1.0, 0.0), ContractViolation);
}

double integrate_pdf(Family f, const std::vector<double>& p, double upper) {
    const int n = 400000;
    const double h = upper / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += pdf_eval(f, p, (i + 0.5) * h);
    return sum * h;
}

TEST(Pdf, IntegratesToOne) {
    EXPECT_NEAR(integrate_pdf(Family::rayleigh, {2.0}, 20.0), 1.0, 1e-6);
    EXPECT_NEAR(integrate_pdf(Family::weibull, {1.7, 1.3}, 20.0), 1.0, 1e-6);
    EXPECT_NEAR(integrate_pdf(Family::k, {2.0, 1.5}, 40.0), 1.0, 1e-6);
    EXPECT_NEAR(integrate_pdf(Family::k, {0.8, 1.0}, 60.0), 1.0, 1e-4);
    // Heavy tail: the mass beyond R is (b / (b + R^2))^a.
    const double tail = std::pow(2.0 / (2.0 + 400.0 * 400.0), 3.0);
    EXPECT_NEAR(integrate_pdf(Family::igcg, {3.0, 2.0}, 400.0), 1.0 - tail, 1e-6);
}

TEST(Pdf, GaussianLimits) {
    for (const double r : {0.1, 0.8, 1.5, 3.0}) {
        const double ray = pdf_eval(Family::rayleigh, {1.3}, r);
        // The gap to the limit shrinks like 1 / shape.
        EXPECT_NEAR(pdf_eval(Family::k, {1e7, 1.3}, r), ray, 1e-5 * std::max(ray, 1e-3));
        EXPECT_NEAR(pdf_eval(Family::igcg, {1e7, 1.3e7}, r), ray, 1e-5);
        EXPECT_DOUBLE_EQ(pdf_eval(Family::k, {std::numeric_limits<double>::infinity(), 1.3}, r), ray);
    }
    EXPECT_THROW(pdf_eval(Family::weibull, {1.0}, 1.0), ConfigError);
}

TEST(Fit, RecoversParametersFromDraws) {
    Rng rng(81);
    const std::size_t n = 400000;
    {
        const FitResult f = fit_family(sample_amplitudes(Family::rayleigh, {2.0}, n, rng), Family::rayleigh);
        EXPECT_NEAR(f.params[0], 2.0, 0.02);
    }
    {
        const FitResult f = fit_family(sample_amplitudes(Family::weibull, {1.6, 0.7}, n, rng), Family::weibull);
        EXPECT_NEAR(f.params[0], 1.6, 0.03);
        EXPECT_NEAR(f.params[1], 0.7, 0.01);
        EXPECT_TRUE(f.converged);
    }
    {
        const FitResult f = fit_family(sample_amplitudes(Family::k, {2.0, 1.0}, n, rng), Family::k);
        EXPECT_NEAR(f.params[0], 2.0, 0.2);
        EXPECT_NEAR(f.params[1], 1.0, 0.02);
    }
    {
        const FitResult f = fit_family(sample_amplitudes(Family::igcg, {6.0, 5.0}, n, rng), Family::igcg);
        EXPECT_NEAR(f.params[0], 6.0, 0.6);
        EXPECT_NEAR(f.params[1] / (f.params[0] - 1.0), 1.0, 0.02);
    }
}

TEST(Fit, TrueFamilyFitsBest) {
    Rng rng(82);
    const auto amp = sample_amplitudes(Family::k, {0.7, 1.0}, 200000, rng);
    const auto hist = empirical_pdf(amp, 100);
    const double k_err = fit_family(amp, Family::k, hist).fitting_error;
    EXPECT_LT(k_err, fit_family(amp, Family::rayleigh, hist).fitting_error);
    EXPECT_LT(k_err, fit_family(amp, Family::weibull, hist).fitting_error);
}

// Misfit error is model bias and survives a finer histogram. The true family's
// residual is pure binning error, so it is left out.
TEST(Fit, MisfitErrorIsStableUnderBinDoubling) {
    Rng rng(90);
    const auto amp = sample_amplitudes(Family::k, {1.0, 1.0}, 1000000, rng);
    for (const Family f : {Family::rayleigh, Family::weibull, Family::igcg}) {
        const double a = fit_family(amp, f, empirical_pdf(amp, 100)).fitting_error;
        const double b = fit_family(amp, f, empirical_pdf(amp, 200)).fitting_error;
        EXPECT_LT(std::abs(b / a - 1.0), 0.2) << to_string(f);
    }
}

TEST(Fit, LightTailedDataTakesGaussianLimit) {
    std::vector<double> amp(500);
    for (std::size_t i = 0; i < amp.size(); ++i) amp[i] = 1.0 + 0.1 * std::sin(static_cast<double>(i));
    for (const auto fam : {Family::k, Family::igcg}) {
        const FitResult f = fit_family(amp, fam);
        EXPECT_TRUE(f.gaussian_limit);
        EXPECT_TRUE(std::isinf(f.params[0]));
        EXPECT_TRUE(std::isfinite(f.fitting_error));
    }
}

TEST(Fit, RejectsTooFewOrZeroAmplitudes) {
    EXPECT_THROW(fit_family(std::vector<double>(10, 1.0), Family::rayleigh), DimensionError);
    EXPECT_THROW(fit_family(std::vector<double>(200, 0.0), Family::rayleigh), NumericalError);
}

TEST(Histogram, IsADensity) {
    Rng rng(83);
    const auto amp = sample_amplitudes(Family::rayleigh, {1.0}, 5000, rng);
    for (const int bins : {1, 7, 100}) {
        const AmplitudeHistogram h = empirical_pdf(amp, bins);
        ASSERT_EQ(h.density.size(), static_cast<std::size_t>(bins));
        double mass = 0.0;
        for (double d : h.density) mass += d * h.width();
        EXPECT_NEAR(mass, 1.0, 1e-12);
        EXPECT_EQ(h.count, amp.size());
        EXPECT_GE(h.edges.back(), *std::max_element(amp.begin(), amp.end()));
    }
    EXPECT_THROW(empirical_pdf(amp, 0), ConfigError);
    EXPECT_THROW(empirical_pdf({}, 10), DimensionError);
}

TEST(Csv, ParsesAndRejects) {
    std::istringstream good("# amplitudes\n0.5\n\n1.25,\n  2e-1  \n");
    EXPECT_EQ(read_amplitudes_csv(good), (std::vector<double>{0.5, 1.25, 0.2}));
    std::istringstream bad("0.5\nabc\n");
    try {
        read_amplitudes_csv(bad);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 4u);
    }
    std::istringstream negative("-1\n");
    EXPECT_THROW(read_amplitudes_csv(negative), ParseError);
    EXPECT_THROW(read_amplitudes_csv(std::string("/nonexistent/amp.csv")), IoError);
}

TEST(Csv, FitTableLayout) {
    std::ostringstream out;
    FitResult f;
    f.family = Family::weibull;
    f.params = {1.5, 2.0};
    f.fitting_error = 0.25;
    write_fit_table(out, {f});
    EXPECT_EQ(out.str(), "family,param1,param2,fitting_error,gaussian_limit\nweibull,1.5,2,0.25,0\n");
}

TEST(Families, NamesRoundTrip) {
    for (const auto f : {Family::rayleigh, Family::weibull, Family::k, Family::igcg}) {
        EXPECT_EQ(parse_family(to_string(f)), f);
    }
    EXPECT_EQ(parse_family("gaussian"), Family::rayleigh);
    EXPECT_THROW(parse_family("lognormal"), ConfigError);
}

TEST(Samples, ChannelAmplitudes) {
    SampleSet s;
    s.n_p = 2;
    s.n_st = 2;
    DataMatrix y(2, 2);
    y << Complex(3, 4), Complex(0, 1), Complex(1, 0), Complex(0, -2);
    s.samples = {y};
    EXPECT_EQ(amplitudes_from_samples(s, 0), (std::vector<double>{5.0, 1.0}));
    EXPECT_EQ(amplitudes_from_samples(s).size(), 4u);
    EXPECT_THROW(amplitudes_from_samples(s, 2), DimensionError);
}

}  // namespace
}  // namespace kronest
