#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "kronest/cluttergen.hpp"

namespace kronest {

enum class Family { rayleigh, weibull, k, igcg };

std::string to_string(Family f);
Family parse_family(const std::string& name);

/// Uniform-bin amplitude density; sum(density * width) = 1.
struct AmplitudeHistogram {
    std::vector<double> edges;
    std::vector<double> density;
    std::size_t count = 0;

    double width() const { return edges.size() < 2 ? 0.0 : edges[1] - edges[0]; }
    std::vector<double> centers() const;
};

inline constexpr int kDefaultBins = 100;
inline constexpr std::size_t kMinFitSamples = 100;

/// Bins over [0, max (1 + 1e-9)].
AmplitudeHistogram empirical_pdf(const std::vector<double>& amplitudes, int bins = kDefaultBins);

/// Parameters per family:
///   rayleigh {sigma2}: p(r) = 2r/sigma2 exp(-r^2/sigma2)
///   weibull  {k, lambda}
///   k        {nu, mu}: intensity mean mu, texture shape nu
///   igcg     {a, b}: intensity p(I) = a b^a / (b + I)^(a+1)
/// A shape of +inf marks the Gaussian limit, evaluated as Rayleigh with sigma2 = m2.
struct FitResult {
    Family family = Family::rayleigh;
    std::vector<double> params;
    double fitting_error = 0.0;
    bool converged = true;
    bool gaussian_limit = false;
};

/// Method-of-moments fit; the fitting error is measured against `hist`.
FitResult fit_family(const std::vector<double>& amplitudes, Family family,
                     const AmplitudeHistogram& hist);
FitResult fit_family(const std::vector<double>& amplitudes, Family family,
                     int bins = kDefaultBins);

double pdf_eval(Family family, const std::vector<double>& params, double r);
std::vector<double> pdf_eval(Family family, const std::vector<double>& params,
                             const std::vector<double>& r);

/// Mean over bins of (empirical - fitted)^2 at the bin centres.
double fitting_error(const AmplitudeHistogram& hist, Family family,
                     const std::vector<double>& params);

/// Modified Bessel function of the second kind, real order, and its logarithm.
/// The log form stays finite where K itself under- or overflows.
double bessel_k(double nu, double x);
double log_bessel_k(double nu, double x);

/// Draws amplitudes from a fitted family (used for self-consistency checks).
std::vector<double> sample_amplitudes(Family family, const std::vector<double>& params,
                                      std::size_t n, Rng& rng);

/// One amplitude per line; blank lines and lines starting with '#' are skipped.
std::vector<double> read_amplitudes_csv(std::istream& in);
std::vector<double> read_amplitudes_csv(const std::string& path);
/// |entries| of every sample, optionally restricted to one polarization channel.
std::vector<double> amplitudes_from_samples(const SampleSet& s, int channel = -1);

/// Header `family,param1,param2,fitting_error,gaussian_limit`, one row per fit.
void write_fit_table(std::ostream& out, const std::vector<FitResult>& fits);

}  // namespace kronest
