#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kronest/matcore.hpp"
#include "kronest/rng.hpp"

namespace kronest {

struct RadarParams {
    double wavelength = 0.25;  // m
    double prf = 2000.0;       // Hz
    double velocity = 125.0;   // m/s
    double spacing = 0.125;    // m
    int n_s = 1;
    int n_t = 8;
    int n_p = 3;

    Index n_st() const { return static_cast<Index>(n_s) * n_t; }
    Index dim() const { return n_st() * n_p; }
    void validate() const;
};

struct PolarizationParams {
    Complex rho_c{0.89, 0.0};
    double gamma_c = 0.61;
    double delta_c = 0.16;
};

/// One clutter patch: cone angle to the array (rad) and its power.
struct ClutterPatch {
    double azimuth = 0.0;
    double power = 1.0;

    double doppler(const RadarParams& r) const;
    double spatial(const RadarParams& r) const;
};

/// Gamma texture with shape nu and scale 1/nu (unit mean).
struct TextureModel {
    double nu = 1.0;
};

struct SceneConfig {
    RadarParams radar;
    PolarizationParams polarization;
    /// Explicit patches; when empty, `n_patches` are placed uniformly in azimuth.
    std::vector<ClutterPatch> patches;
    int n_patches = 181;
    double azimuth_min_deg = -90.0;
    double azimuth_max_deg = 90.0;
    TextureModel texture;
    double cnr_db = 30.0;
    bool noise = true;
    int samples = 8;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SampleSet {
    std::vector<DataMatrix> samples;
    Index n_p = 0;
    Index n_st = 0;
    std::optional<KroneckerCov> truth;
    double noise_power = 0.0;

    std::size_t size() const { return samples.size(); }
    Index dim() const { return n_p * n_st; }
    /// Shapes agree and no sample has an all-zero row or column.
    void validate() const;
};

Vector temporal_steering(double f_d, Index n_t);
Vector spatial_steering(double f_s, Index n_s);
Vector space_time_steering(double f_d, double f_s, Index n_t, Index n_s);

/// Polarization covariance [[1, rho sqrt(g), 0], [conj(rho) sqrt(g), g, 0], [0, 0, d]].
Matrix build_rp(const PolarizationParams& p);
/// Sum of power-weighted steering outer products. PSD, possibly singular.
Matrix build_rst(const std::vector<ClutterPatch>& patches, const RadarParams& radar);

/// Equal-power patches on a uniform azimuth grid, normalized so Tr(R_st) = N_st.
std::vector<ClutterPatch> default_patches(int n_patches, double azimuth_min_deg,
                                          double azimuth_max_deg);

/// Loading added to R_st so the ground truth is positive definite.
inline constexpr double kRstFloor = 1e-6;

/// Everything derived from a SceneConfig that sample generation needs.
class Scene {
public:
    explicit Scene(SceneConfig cfg);

    const SceneConfig& config() const { return cfg_; }
    const std::vector<ClutterPatch>& patches() const { return patches_; }
    /// Space-time factor built from the patches, without loading.
    const Matrix& rst_raw() const { return rst_raw_; }
    /// Kronecker ground truth (R_st with floor loading, R_p). Noise excluded.
    const KroneckerCov& truth() const { return truth_; }
    double noise_power() const { return noise_power_; }
    Index n_p() const { return cfg_.radar.n_p; }
    Index n_st() const { return cfg_.radar.n_st(); }

    /// Sample `index` of the stream rooted at `seed`: sqrt(tau) U + noise.
    DataMatrix draw(std::uint64_t seed, std::uint64_t index) const;
    /// Texture-free clutter matrix U for a given speckle stream.
    DataMatrix draw_speckle(Rng& rng) const;
    double draw_texture(Rng& rng) const;

    SampleSet sample_set(std::uint64_t seed, int count, std::uint64_t first_index = 0) const;

private:
    SceneConfig cfg_;
    std::vector<ClutterPatch> patches_;
    Matrix rst_raw_;
    KroneckerCov truth_;
    Matrix chol_p_;
    Matrix patch_rows_;  // N_c x N_st: sqrt(eps_i) * a_i^H
    double noise_power_ = 0.0;
};

SampleSet generate_sample_set(const SceneConfig& cfg);

}  // namespace kronest
