#include "kronest/detect.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "kronest/parallel.hpp"

namespace kronest {

TargetSignature TargetSignature::from_angles(double doppler, double azimuth_deg,
                                             double elevation_deg, const RadarParams& radar) {
    const double deg = std::numbers::pi / 180.0;
    TargetSignature t;
    t.doppler = doppler;
    t.spatial = radar.spacing / radar.wavelength * std::cos(azimuth_deg * deg) *
                std::cos(elevation_deg * deg);
    return t;
}

DataMatrix TargetSignature::matrix(const RadarParams& radar) const {
    Vector p = polarization;
    if (p.size() == 0) {
        p = Vector::Zero(radar.n_p);
        p(0) = 1.0;
    }
    if (p.size() != radar.n_p) {
        throw DimensionError("target polarization has " + std::to_string(p.size()) +
                             " entries, expected " + std::to_string(radar.n_p));
    }
    if (!(p.norm() > 0.0)) throw ConfigError("target polarization vector is zero");
    const Vector a = space_time_steering(doppler, spatial, radar.n_t, radar.n_s);
    return p * a.adjoint();
}

double nmf_statistic(const DataMatrix& s, const DataMatrix& y, const InverseOperator& inv) {
    const double byy = inv.quad_form(y);
    const double bss = inv.quad_form(s);
    if (!(byy > 0.0) || !(bss > 0.0)) {
        throw NumericalError("nmf_statistic: vanishing quadratic form (zero cell or signature)");
    }
    const double num = std::norm(inv.bilinear_form(s, y));
    return std::clamp(num / (bss * byy), 0.0, 1.0);
}

double nmf_statistic(const DataMatrix& s, const DataMatrix& y, const CovEstimate& est) {
    return nmf_statistic(s, y, InverseOperator(est, s.rows(), s.cols()));
}

DataMatrix inject_target(const DataMatrix& y, const DataMatrix& s, Complex alpha) {
    if (y.rows() != s.rows() || y.cols() != s.cols()) {
        throw DimensionError("inject_target: signature and cell shapes differ");
    }
    return y + alpha * s;
}

double target_amplitude(double scr_db, const DataMatrix& s, double clutter_power) {
    const double scr = std::pow(10.0, scr_db / 10.0);
    return std::sqrt(scr * clutter_power / s.squaredNorm());
}

double empirical_threshold(std::vector<double> stats, double pfa) {
    if (stats.empty()) throw DimensionError("empirical_threshold: no statistics");
    if (!(pfa > 0.0 && pfa <= 1.0)) throw ConfigError("P_fa must lie in (0, 1]");
    const auto n = stats.size();
    const auto k = static_cast<std::size_t>(std::floor(pfa * static_cast<double>(n) + 1e-9));
    if (k >= n) return 0.0;
    std::nth_element(stats.begin(), stats.begin() + static_cast<std::ptrdiff_t>(k), stats.end(),
                     std::greater<>());
    return stats[k];
}

std::size_t count_detections(const std::vector<double>& stats, double threshold) {
    return static_cast<std::size_t>(
        std::count_if(stats.begin(), stats.end(), [&](double v) { return v > threshold; }));
}

TrialStatistics trial_statistics(const Scene& scene, const DetectionConfig& cfg,
                                     std::size_t trials, std::uint64_t seed,
                                     std::optional<double> scr_db) {
    const int L = scene.config().samples;
    const RadarParams& radar = scene.config().radar;
    const DataMatrix s = cfg.target.matrix(radar);
    const KroneckerCov& truth = scene.truth();
    const double clutter_power = truth.st.trace().real() * truth.p.trace().real();
    const double amplitude = scr_db ? target_amplitude(*scr_db, s, clutter_power) : 0.0;

    std::optional<InverseOperator> shared;
    ShrinkageFactors shared_rho;
    if (cfg.reuse_covariance) {
        const SampleSet secondary =
            scene.sample_set(derive_seed(seed, 0, Stream::calibration), L);
        const Estimate est = estimate(secondary, cfg.estimator);
        shared.emplace(est.cov, secondary.n_p, secondary.n_st);
        shared_rho = est.rho;
    }

    std::vector<double> stats(trials);
    std::vector<ShrinkageFactors> rhos(trials, shared_rho);
    parallel_for(
        trials,
        [&](std::size_t t) {
            const std::uint64_t base = derive_seed(seed, t, Stream::trial);
            DataMatrix cut = scene.draw(base, static_cast<std::uint64_t>(L));
            if (scr_db) {
                Rng rng(derive_seed(seed, t, Stream::target));
                const double phase = 2.0 * std::numbers::pi * rng.uniform();
                cut = inject_target(cut, s, std::polar(amplitude, phase));
            }
            if (shared) {
                stats[t] = nmf_statistic(s, cut, *shared);
            } else {
                const SampleSet secondary = scene.sample_set(base, L);
                const Estimate est = estimate(secondary, cfg.estimator);
                const InverseOperator inv(est.cov, secondary.n_p, secondary.n_st);
                stats[t] = nmf_statistic(s, cut, inv);
                rhos[t] = est.rho;
            }
        },
        cfg.threads);

    TrialStatistics out;
    out.stats = std::move(stats);
    for (const auto& r : rhos) {
        out.rho_st_mean += r.st;
        out.rho_p_mean += r.p;
    }
    if (trials > 0) {
        out.rho_st_mean /= static_cast<double>(trials);
        out.rho_p_mean /= static_cast<double>(trials);
    }
    return out;
}

DetectionThreshold calibrate_threshold(double pfa, const Scene& scene, const DetectionConfig& cfg,
                                       std::uint64_t seed, std::size_t trials) {
    if (!(pfa > 0.0 && pfa <= 1.0)) throw ConfigError("P_fa must lie in (0, 1]");
    DetectionThreshold th;
    th.pfa = pfa;
    th.seed = seed;
    th.trials = trials != 0 ? trials : static_cast<std::size_t>(std::ceil(100.0 / pfa - 1e-9));
    th.unstable = static_cast<double>(th.trials) < 10.0 / pfa;
    th.value = empirical_threshold(trial_statistics(scene, cfg, th.trials, seed, std::nullopt).stats, pfa);
    return th;
}

std::vector<PdPoint> pd_curve(const std::vector<double>& scr_db, const Scene& scene,
                              const DetectionConfig& cfg, const DetectionThreshold& threshold,
                              std::size_t trials, std::uint64_t seed) {
    std::vector<PdPoint> out;
    out.reserve(scr_db.size());
    for (std::size_t i = 0; i < scr_db.size(); ++i) {
        const TrialStatistics ts =
            trial_statistics(scene, cfg, trials, derive_seed(seed, i, Stream::target), scr_db[i]);
        out.push_back({scr_db[i], trials, count_detections(ts.stats, threshold.value),
                       ts.rho_st_mean, ts.rho_p_mean});
    }
    return out;
}

}  // namespace kronest
