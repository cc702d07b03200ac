#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kronest/clutterfit.hpp"
#include "kronest/detect.hpp"
#include "kronest/pipeline.hpp"

namespace kronest::cli {

using Json = nlohmann::json;

struct SweepSpec {
    /// none | L | scr | nu | dim | grid
    std::string axis = "none";
    std::vector<double> values;
};

struct TargetSpec {
    double doppler = 0.25;
    double azimuth_deg = 0.0;
    double elevation_deg = 3.6;
    /// Empty means (1, 0, ..., 0).
    std::vector<Complex> polarization;

    TargetSignature signature(const RadarParams& radar) const;
};

struct DetectionSpec {
    double pfa = 1e-2;
    /// 0 means ceil(100 / P_fa).
    std::size_t calibration_trials = 0;
    std::size_t trials = 10000;
    /// Fresh H0 trials used to measure the realized false-alarm rate; 0 skips.
    std::size_t holdout_trials = 0;
    bool reuse_covariance = false;
    std::vector<double> scr_db{-10.0};
};

struct FitSpec {
    std::vector<Family> families{Family::rayleigh, Family::weibull, Family::k, Family::igcg};
    int bins = kDefaultBins;
    int channel = -1;
};

struct ExperimentConfig {
    SceneConfig scene;
    std::vector<EstimatorSpec> estimators;
    SolverConfig solver;
    OracleConfig oracle;
    SweepSpec sweep;
    int trials = 2000;
    std::uint64_t seed = 1;
    std::string output = ".";
    TargetSpec target;
    DetectionSpec detection;
    FitSpec fit;

    /// Copies solver, oracle and override settings into every estimator spec.
    void propagate();
    void validate() const;
};

/// Parses a config document. Keys may be nested objects or dotted paths
/// ("scene.radar.n_t"); unknown keys raise ConfigError naming the full path.
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::string& path);
/// Defaults plus the listed estimators, for commands run without a config file.
ExperimentConfig default_config();

/// Effective configuration as canonical JSON (sorted keys, every field present).
Json to_json(const ExperimentConfig& cfg);

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::uint64_t fnv1a(std::string_view bytes);
/// Digest of the canonical JSON of the effective configuration, seed excluded.
std::string config_digest(const ExperimentConfig& cfg);

/// Rewrites dotted keys into nested objects; a leaf given twice is an error.
Json expand_dotted_keys(const Json& doc);

}  // namespace kronest::cli
