#include "kronest/cluttergen.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace kronest {

void RadarParams::validate() const {
    if (!(wavelength > 0.0) || !(prf > 0.0) || !(velocity > 0.0) || !(spacing > 0.0)) {
        throw ConfigError("radar: wavelength, prf, velocity and spacing must be positive");
    }
    if (n_s < 1 || n_t < 1) throw ConfigError("radar: n_s and n_t must be >= 1");
    if (n_p != 1 && n_p != 3) throw ConfigError("radar: n_p must be 1 or 3");
}

double ClutterPatch::doppler(const RadarParams& r) const {
    return 2.0 * r.velocity / (r.wavelength * r.prf) * std::cos(azimuth);
}

double ClutterPatch::spatial(const RadarParams& r) const {
    return r.spacing / r.wavelength * std::cos(azimuth);
}

void SceneConfig::validate() const {
    radar.validate();
    if (samples < 2) throw ConfigError("scene: samples (L) must be >= 2");
    if (!std::isfinite(cnr_db)) throw ConfigError("scene: cnr_db must be finite");
    if (!(texture.nu > 0.0)) throw ConfigError("scene: texture nu must be positive");
    if (patches.empty() && n_patches < 1) throw ConfigError("scene: need at least one patch");
    if (!(azimuth_max_deg >= azimuth_min_deg)) {
        throw ConfigError("scene: azimuth_max_deg must be >= azimuth_min_deg");
    }
}

void SampleSet::validate() const {
    for (std::size_t l = 0; l < samples.size(); ++l) {
        const auto& y = samples[l];
        if (y.rows() != n_p || y.cols() != n_st) {
            throw DimensionError("sample " + std::to_string(l) + " has shape " +
                                 std::to_string(y.rows()) + "x" + std::to_string(y.cols()));
        }
        for (Index j = 0; j < y.rows(); ++j) {
            if (y.row(j).squaredNorm() == 0.0) {
                throw DegenerateSampleError(
                    "sample " + std::to_string(l) + " has an all-zero row " + std::to_string(j), l);
            }
        }
        for (Index i = 0; i < y.cols(); ++i) {
            if (y.col(i).squaredNorm() == 0.0) {
                throw DegenerateSampleError(
                    "sample " + std::to_string(l) + " has an all-zero column " + std::to_string(i),
                    l);
            }
        }
    }
}

Vector temporal_steering(double f_d, Index n_t) {
    Vector a(n_t);
    for (Index k = 0; k < n_t; ++k) {
        a(k) = std::polar(1.0, 2.0 * std::numbers::pi * f_d * static_cast<double>(k));
    }
    return a;
}

Vector spatial_steering(double f_s, Index n_s) {
    return temporal_steering(f_s, n_s);
}

Vector space_time_steering(double f_d, double f_s, Index n_t, Index n_s) {
    return kron(temporal_steering(f_d, n_t), spatial_steering(f_s, n_s));
}

Matrix build_rp(const PolarizationParams& p) {
    if (!(std::abs(p.rho_c) < 1.0)) {
        throw ConfigError("polarization: |rho_c| must be < 1 for a positive-definite R_p");
    }
    if (!(p.gamma_c > 0.0) || !(p.delta_c > 0.0)) {
        throw ConfigError("polarization: gamma_c and delta_c must be positive");
    }
    const double sg = std::sqrt(p.gamma_c);
    Matrix r = Matrix::Zero(3, 3);
    r(0, 0) = 1.0;
    r(0, 1) = p.rho_c * sg;
    r(1, 0) = std::conj(p.rho_c) * sg;
    r(1, 1) = p.gamma_c;
    r(2, 2) = p.delta_c;
    return r;
}

Matrix build_rst(const std::vector<ClutterPatch>& patches, const RadarParams& radar) {
    if (patches.empty()) throw ConfigError("build_rst: empty patch list");
    const Index n = radar.n_st();
    Matrix r = Matrix::Zero(n, n);
    bool any_power = false;
    for (const auto& patch : patches) {
        if (patch.power < 0.0) throw ConfigError("build_rst: negative patch power");
        if (patch.power == 0.0) continue;
        any_power = true;
        const Vector a =
            space_time_steering(patch.doppler(radar), patch.spatial(radar), radar.n_t, radar.n_s);
        r.noalias() += patch.power * (a * a.adjoint());
    }
    if (!any_power) throw ConfigError("build_rst: no patch has positive power");
    return hermitian_part(r);
}

std::vector<ClutterPatch> default_patches(int n_patches, double azimuth_min_deg,
                                          double azimuth_max_deg) {
    if (n_patches < 1) throw ConfigError("default_patches: n_patches must be >= 1");
    std::vector<ClutterPatch> out(static_cast<std::size_t>(n_patches));
    const double deg = std::numbers::pi / 180.0;
    for (int i = 0; i < n_patches; ++i) {
        const double t = n_patches == 1 ? 0.5 : static_cast<double>(i) / (n_patches - 1);
        out[i].azimuth = (azimuth_min_deg + t * (azimuth_max_deg - azimuth_min_deg)) * deg;
        out[i].power = 1.0 / n_patches;
    }
    return out;
}

Scene::Scene(SceneConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    patches_ = cfg_.patches.empty()
                   ? default_patches(cfg_.n_patches, cfg_.azimuth_min_deg, cfg_.azimuth_max_deg)
                   : cfg_.patches;
    const RadarParams& radar = cfg_.radar;
    const Index n_st = radar.n_st();

    rst_raw_ = build_rst(patches_, radar);
    const double floor = kRstFloor * rst_raw_.trace().real() / static_cast<double>(n_st);
    truth_.st = rst_raw_ + floor * Matrix::Identity(n_st, n_st);
    truth_.p = radar.n_p == 3 ? build_rp(cfg_.polarization) : Matrix::Identity(1, 1);

    Eigen::LLT<Matrix> llt(truth_.p);
    if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("R_p is not positive definite");
    chol_p_ = llt.matrixL();

    patch_rows_.resize(static_cast<Index>(patches_.size()), n_st);
    for (std::size_t i = 0; i < patches_.size(); ++i) {
        const auto& patch = patches_[i];
        const Vector a =
            space_time_steering(patch.doppler(radar), patch.spatial(radar), radar.n_t, radar.n_s);
        patch_rows_.row(static_cast<Index>(i)) = std::sqrt(patch.power) * a.adjoint();
    }

    // CNR = Tr(R_st (x) R_p) E[tau] / (N sigma_n^2), with E[tau] = 1.
    const double clutter_power = rst_raw_.trace().real() * truth_.p.trace().real();
    noise_power_ = clutter_power /
                   (static_cast<double>(radar.dim()) * std::pow(10.0, cfg_.cnr_db / 10.0));
}

double Scene::draw_texture(Rng& rng) const {
    const double nu = cfg_.texture.nu;
    return rng.gamma(nu, 1.0 / nu);
}

DataMatrix Scene::draw_speckle(Rng& rng) const {
    // U = sum_i p_i a_i^H with p_i ~ CN(0, eps_i R_p), independent across patches.
    const Matrix g = rng.complex_normal_matrix(n_p(), patch_rows_.rows());
    return chol_p_ * (g * patch_rows_);
}

DataMatrix Scene::draw(std::uint64_t seed, std::uint64_t index) const {
    Rng texture_rng(derive_seed(seed, index, Stream::texture));
    Rng speckle_rng(derive_seed(seed, index, Stream::speckle));
    const double tau = draw_texture(texture_rng);
    DataMatrix y = std::sqrt(tau) * draw_speckle(speckle_rng);
    if (cfg_.noise) {
        Rng noise_rng(derive_seed(seed, index, Stream::noise));
        y += noise_rng.complex_normal_matrix(y.rows(), y.cols(), noise_power_);
    }
    return y;
}

SampleSet Scene::sample_set(std::uint64_t seed, int count, std::uint64_t first_index) const {
    SampleSet s;
    s.n_p = n_p();
    s.n_st = n_st();
    s.samples.reserve(static_cast<std::size_t>(count));
    for (int l = 0; l < count; ++l) {
        s.samples.push_back(draw(seed, first_index + static_cast<std::uint64_t>(l)));
    }
    s.truth = truth_;
    s.noise_power = cfg_.noise ? noise_power_ : 0.0;
    return s;
}

SampleSet generate_sample_set(const SceneConfig& cfg) {
    const Scene scene(cfg);
    return scene.sample_set(cfg.seed, cfg.samples);
}

}  // namespace kronest
