#include "kronest/clutterfit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace kronest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
/// Beyond this texture shape the K pdf is evaluated as its Rayleigh limit.
constexpr double kRayleighShape = 1e8;

struct Moments {
    double m1 = 0.0;
    double m2 = 0.0;
    double m4 = 0.0;
};

Moments moments(const std::vector<double>& r) {
    Moments m;
    for (double v : r) {
        const double v2 = v * v;
        m.m1 += v;
        m.m2 += v2;
        m.m4 += v2 * v2;
    }
    const double n = static_cast<double>(r.size());
    m.m1 /= n;
    m.m2 /= n;
    m.m4 /= n;
    return m;
}

double rayleigh_pdf(double sigma2, double r) {
    if (r <= 0.0) return 0.0;
    return 2.0 * r / sigma2 * std::exp(-r * r / sigma2);
}

double weibull_moment_ratio(double k) {
    return std::exp(std::lgamma(1.0 + 2.0 / k) - 2.0 * std::lgamma(1.0 + 1.0 / k));
}

/// Large-argument series: K_v(x) ~ sqrt(pi / 2x) e^{-x} sum_k a_k(v) / x^k.
double log_bessel_k_large_x(double v, double x) {
    const double mu = 4.0 * v * v;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 30; ++k) {
        const double odd = static_cast<double>(2 * k - 1);
        const double next = term * (mu - odd * odd) / (static_cast<double>(k) * 8.0 * x);
        if (std::abs(next) >= std::abs(term)) break;
        term = next;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return 0.5 * std::log(std::numbers::pi / (2.0 * x)) - x + std::log(sum);
}

/// Debye uniform expansion in the order, K_v(v z).
double log_bessel_k_debye(double v, double x) {
    const double z = x / v;
    const double s = std::sqrt(1.0 + z * z);
    const double t = 1.0 / s;
    const double eta = s + std::log(z / (1.0 + s));
    const double t2 = t * t;
    const double u1 = t * (3.0 - 5.0 * t2) / 24.0;
    const double u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0;
    const double u3 =
        t * t2 * (30375.0 - 369603.0 * t2 + 765765.0 * t2 * t2 - 425425.0 * t2 * t2 * t2) /
        414720.0;
    const double series = 1.0 - u1 / v + u2 / (v * v) - u3 / (v * v * v);
    return 0.5 * std::log(std::numbers::pi / (2.0 * v)) - v * eta - 0.5 * std::log(s) +
           std::log(series);
}

/// Leading small-argument behaviour for modest orders.
double log_bessel_k_small_x(double v, double x) {
    if (v == 0.0) return std::log(-std::log(x / 2.0) - std::numbers::egamma);
    return std::lgamma(v) - std::log(2.0) + v * std::log(2.0 / x);
}

std::vector<double> require_params(Family f, const std::vector<double>& p) {
    const std::size_t want = f == Family::rayleigh ? 1 : 2;
    if (p.size() != want) {
        throw ConfigError(to_string(f) + " takes " + std::to_string(want) + " parameter(s)");
    }
    return p;
}

}  // namespace

std::string to_string(Family f) {
    switch (f) {
        case Family::rayleigh: return "rayleigh";
        case Family::weibull: return "weibull";
        case Family::k: return "k";
        case Family::igcg: return "igcg";
    }
    return "unknown";
}

Family parse_family(const std::string& name) {
    if (name == "rayleigh" || name == "gaussian") return Family::rayleigh;
    if (name == "weibull") return Family::weibull;
    if (name == "k") return Family::k;
    if (name == "igcg" || name == "ig-cg") return Family::igcg;
    throw ConfigError("unknown amplitude family '" + name + "'");
}

std::vector<double> AmplitudeHistogram::centers() const {
    std::vector<double> c;
    if (edges.size() < 2) return c;
    c.reserve(edges.size() - 1);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) c.push_back(0.5 * (edges[i] + edges[i + 1]));
    return c;
}

AmplitudeHistogram empirical_pdf(const std::vector<double>& amplitudes, int bins) {
    if (amplitudes.empty()) throw DimensionError("empirical_pdf: no amplitudes");
    if (bins < 1) throw ConfigError("empirical_pdf: bins must be >= 1");
    double top = 0.0;
    for (double v : amplitudes) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ConfigError("empirical_pdf: amplitudes must be finite and nonnegative");
        }
        top = std::max(top, v);
    }
    const double upper = top > 0.0 ? top * (1.0 + 1e-9) : 1.0;
    const double width = upper / bins;

    AmplitudeHistogram h;
    h.count = amplitudes.size();
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = i * width;
    h.edges.back() = upper;
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    for (double v : amplitudes) {
        const auto idx = std::min(static_cast<std::size_t>(v / width),
                                  static_cast<std::size_t>(bins - 1));
        ++counts[idx];
    }
    h.density.resize(counts.size());
    const double norm = static_cast<double>(h.count) * width;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        h.density[i] = static_cast<double>(counts[i]) / norm;
    }
    return h;
}

double bessel_k(double nu, double x) {
    return std::exp(log_bessel_k(nu, x));
}

double log_bessel_k(double nu, double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ContractViolation("bessel_k: need 0 < x < inf");
    const double v = std::abs(nu);
    try {
        const double k = std::cyl_bessel_k(v, x);
        if (std::isfinite(k) && k > 1e-290 && k < 1e290) return std::log(k);
    } catch (const std::exception&) {
        // Fall through to the asymptotic forms.
    }
    if (x > 2.0 * v * v + 50.0) return log_bessel_k_large_x(v, x);
    if (v >= 5.0) return log_bessel_k_debye(v, x);
    return log_bessel_k_small_x(v, x);
}

double pdf_eval(Family family, const std::vector<double>& params, double r) {
    const auto p = require_params(family, params);
    if (r < 0.0) return 0.0;
    switch (family) {
        case Family::rayleigh: return rayleigh_pdf(p[0], r);
        case Family::weibull: {
            const double k = p[0];
            const double lambda = p[1];
            if (!std::isfinite(k)) return r == lambda ? kInf : 0.0;
            if (r == 0.0) return k > 1.0 ? 0.0 : (k == 1.0 ? 1.0 / lambda : kInf);
            const double u = r / lambda;
            return k / lambda * std::pow(u, k - 1.0) * std::exp(-std::pow(u, k));
        }
        case Family::k: {
            const double nu = p[0];
            const double mu = p[1];
            if (!(nu < kRayleighShape)) return rayleigh_pdf(mu, r);
            if (r == 0.0) return nu > 0.5 ? 0.0 : kInf;
            const double c = std::sqrt(nu / mu);
            const double lp = std::log(4.0) - std::lgamma(nu) + 0.5 * (nu + 1.0) * std::log(nu / mu) +
                              nu * std::log(r) + log_bessel_k(nu - 1.0, 2.0 * r * c);
            return std::exp(lp);
        }
        case Family::igcg: {
            const double a = p[0];
            const double b = p[1];
            if (!std::isfinite(a)) return rayleigh_pdf(b, r);
            if (r == 0.0) return 0.0;
            const double lp = std::log(2.0 * r * a) + a * std::log(b) - (a + 1.0) * std::log(b + r * r);
            return std::exp(lp);
        }
    }
    return 0.0;
}

std::vector<double> pdf_eval(Family family, const std::vector<double>& params,
                             const std::vector<double>& r) {
    std::vector<double> out;
    out.reserve(r.size());
    for (double v : r) out.push_back(pdf_eval(family, params, v));
    return out;
}

double fitting_error(const AmplitudeHistogram& hist, Family family,
                     const std::vector<double>& params) {
    const auto centers = hist.centers();
    if (centers.empty()) throw DimensionError("fitting_error: empty histogram");
    double sum = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const double d = hist.density[i] - pdf_eval(family, params, centers[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(centers.size());
}

FitResult fit_family(const std::vector<double>& amplitudes, Family family,
                     const AmplitudeHistogram& hist) {
    if (amplitudes.size() < kMinFitSamples) {
        throw DimensionError("fit_family: need at least " + std::to_string(kMinFitSamples) +
                             " amplitudes, got " + std::to_string(amplitudes.size()));
    }
    const Moments m = moments(amplitudes);
    if (!(m.m2 > 0.0)) throw NumericalError("fit_family: all amplitudes are zero");

    FitResult fit;
    fit.family = family;
    const double ratio = m.m4 / (m.m2 * m.m2);
    switch (family) {
        case Family::rayleigh: fit.params = {m.m2}; break;
        case Family::weibull: {
            const double target = m.m2 / (m.m1 * m.m1);
            double lo = std::log(0.01);
            double hi = std::log(1e3);
            if (!(target > weibull_moment_ratio(std::exp(hi)))) {
                fit.converged = false;
                lo = hi;
            } else if (!(target < weibull_moment_ratio(std::exp(lo)))) {
                fit.converged = false;
                hi = lo;
            }
            // The ratio decreases in k.
            for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (weibull_moment_ratio(std::exp(mid)) > target) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            const double k = std::exp(0.5 * (lo + hi));
            fit.params = {k, m.m1 / std::exp(std::lgamma(1.0 + 1.0 / k))};
            break;
        }
        case Family::k:
            if (ratio <= 2.0) {
                fit.gaussian_limit = true;
                fit.params = {kInf, m.m2};
            } else {
                fit.params = {2.0 / (ratio - 2.0), m.m2};
            }
            break;
        case Family::igcg:
            if (ratio <= 2.0) {
                fit.gaussian_limit = true;
                fit.params = {kInf, m.m2};
            } else {
                const double a = 2.0 + 2.0 / (ratio - 2.0);
                fit.params = {a, m.m2 * (a - 1.0)};
            }
            break;
    }
    fit.fitting_error = fitting_error(hist, family, fit.params);
    return fit;
}

FitResult fit_family(const std::vector<double>& amplitudes, Family family, int bins) {
    return fit_family(amplitudes, family, empirical_pdf(amplitudes, bins));
}

std::vector<double> sample_amplitudes(Family family, const std::vector<double>& params,
                                      std::size_t n, Rng& rng) {
    const auto p = require_params(family, params);
    std::vector<double> out(n);
    auto exp1 = [&] { return -std::log1p(-rng.uniform()); };
    for (auto& r : out) {
        switch (family) {
            case Family::rayleigh: r = std::sqrt(p[0] * exp1()); break;
            case Family::weibull: r = p[1] * std::pow(exp1(), 1.0 / p[0]); break;
            case Family::k: {
                const double tau = std::isfinite(p[0]) ? rng.gamma(p[0], 1.0 / p[0]) : 1.0;
                r = std::sqrt(p[1] * tau * exp1());
                break;
            }
            case Family::igcg: {
                const double tau = std::isfinite(p[0]) ? p[1] / rng.gamma(p[0], 1.0) : p[1];
                r = std::sqrt(tau * exp1());
                break;
            }
        }
    }
    return out;
}

std::vector<double> read_amplitudes_csv(std::istream& in) {
    std::vector<double> out;
    std::string line;
    std::size_t offset = 0;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t start = offset;
        offset += line.size() + 1;
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        const auto e = line.find_last_not_of(" \t\r,");
        const std::string_view field(line.data() + b, e - b + 1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size()) {
            throw ParseError("line " + std::to_string(line_no) + ": not a number", start);
        }
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ParseError("line " + std::to_string(line_no) + ": amplitude must be >= 0", start);
        }
        out.push_back(v);
    }
    return out;
}

std::vector<double> read_amplitudes_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open amplitude file '" + path + "'");
    return read_amplitudes_csv(in);
}

std::vector<double> amplitudes_from_samples(const SampleSet& s, int channel) {
    if (channel >= static_cast<int>(s.n_p)) {
        throw DimensionError("channel " + std::to_string(channel) + " out of range");
    }
    std::vector<double> out;
    for (const auto& y : s.samples) {
        for (Index i = 0; i < y.cols(); ++i) {
            for (Index j = 0; j < y.rows(); ++j) {
                if (channel < 0 || j == channel) out.push_back(std::abs(y(j, i)));
            }
        }
    }
    return out;
}

void write_fit_table(std::ostream& out, const std::vector<FitResult>& fits) {
    out << "family,param1,param2,fitting_error,gaussian_limit\n";
    std::ostringstream row;
    row << std::setprecision(10);
    for (const auto& f : fits) {
        row.str("");
        row << to_string(f.family) << ',' << f.params.at(0) << ',';
        if (f.params.size() > 1) row << f.params[1];
        row << ',' << f.fitting_error << ',' << (f.gaussian_limit ? 1 : 0) << '\n';
        out << row.str();
    }
}

}  // namespace kronest
