#pragma once

#include <cstdint>
#include <vector>

#include "kronest/pipeline.hpp"

namespace kronest {

/// Target steering: normalized Doppler and spatial frequency plus a polarization vector.
struct TargetSignature {
    double doppler = 0.25;
    double spatial = 0.0;
    /// Empty means (1, 0, ..., 0).
    Vector polarization;

    /// Spatial frequency for an azimuth/elevation pair with the clutter's cone-angle
    /// geometry: (d / lambda) cos(az) cos(el).
    static TargetSignature from_angles(double doppler, double azimuth_deg, double elevation_deg,
                                       const RadarParams& radar);

    /// S = p_t a_t^H, an N_p x N_st data matrix.
    DataMatrix matrix(const RadarParams& radar) const;
};

/// |B(S,Y)|^2 / (B(S,S) B(Y,Y)) for the inverse of the estimate. Lies in [0, 1].
double nmf_statistic(const DataMatrix& s, const DataMatrix& y, const InverseOperator& inv);
double nmf_statistic(const DataMatrix& s, const DataMatrix& y, const CovEstimate& est);

DataMatrix inject_target(const DataMatrix& y, const DataMatrix& s, Complex alpha);

/// |alpha| giving the requested SCR: |alpha|^2 ||S||^2 = SCR Tr(R_clutter) E[tau].
double target_amplitude(double scr_db, const DataMatrix& s, double clutter_power);

struct DetectionThreshold {
    double value = 0.0;
    double pfa = 0.0;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    /// Fewer than 10 / P_fa trials were used.
    bool unstable = false;
};

struct DetectionConfig {
    EstimatorSpec estimator{};
    TargetSignature target{};
    /// Estimate the covariance once and reuse it for every trial.
    bool reuse_covariance = false;
    int threads = 1;
};

/// Smallest threshold allowing at most floor(P_fa n) exceedances among `stats`.
double empirical_threshold(std::vector<double> stats, double pfa);

struct TrialStatistics {
    std::vector<double> stats;
    /// Mean shrinkage factors used across trials (zero for unshrunk estimators).
    double rho_st_mean = 0.0;
    double rho_p_mean = 0.0;
};

/// NMF statistics of `trials` independent cells under test. Each trial draws L
/// secondary samples and one cell; `scr_db` absent means no target.
TrialStatistics trial_statistics(const Scene& scene, const DetectionConfig& cfg,
                                     std::size_t trials, std::uint64_t seed,
                                     std::optional<double> scr_db);

/// Calibrates on H0 trials; `trials` = 0 uses ceil(100 / P_fa).
DetectionThreshold calibrate_threshold(double pfa, const Scene& scene, const DetectionConfig& cfg,
                                       std::uint64_t seed, std::size_t trials = 0);

struct PdPoint {
    double scr_db = 0.0;
    std::size_t trials = 0;
    std::size_t detections = 0;
    double rho_st_mean = 0.0;
    double rho_p_mean = 0.0;
    double pd() const { return trials == 0 ? 0.0 : static_cast<double>(detections) / trials; }
};

/// Detections counted as Lambda > threshold.
std::size_t count_detections(const std::vector<double>& stats, double threshold);

std::vector<PdPoint> pd_curve(const std::vector<double>& scr_db, const Scene& scene,
                              const DetectionConfig& cfg, const DetectionThreshold& threshold,
                              std::size_t trials, std::uint64_t seed);

}  // namespace kronest
