#pragma once

#include <vector>

#include "kronest/estimators.hpp"

namespace kronest {

enum class PlugInSource { knscm, kmle, custom };

std::string to_string(PlugInSource s);

/// Plug-in covariance for the selectors, each factor scaled to Tr = dim.
struct PlugIn {
    PlugInSource source = PlugInSource::custom;
    KroneckerCov cov;

    static PlugIn normalized(KroneckerCov cov, PlugInSource source = PlugInSource::custom);
    /// Computes the plug-in from the samples. A kmle plug-in falls back to knscm
    /// when the unshrunk problem has no solution.
    static PlugIn from_samples(const SampleSet& samples, PlugInSource source,
                               const SolverConfig& cfg = {});
};

/// Closed-form MMSE shrinkage factors with the plug-in standing in for the truth,
/// clamped to [0, 1].
ShrinkageFactors koas_factors(const PlugIn& plug, std::size_t n_samples);

/// Leave-one-out quantities built from the plug-in: S_st^(l) = N_st Y^H R_p^{-1} Y / q_l,
/// S_p^(l) = N_p Y R_st^{-1} Y^H / q_l and their means C_st, C_p.
struct CVWorkspace {
    std::vector<Matrix> s_st;
    std::vector<Matrix> s_p;
    Matrix c_st;
    Matrix c_p;

    static CVWorkspace build(const SampleSet& samples, const KroneckerCov& plug);
    std::size_t size() const { return s_st.size(); }
};

/// Closed-form leave-one-out minimizer via the aggregate identities; O(L) traces.
ShrinkageFactors cv_factors_fast(const SampleSet& samples, const PlugIn& plug);
ShrinkageFactors cv_factors_fast(const CVWorkspace& ws);
/// Reference evaluation: forms every leave-one-out mean explicitly.
ShrinkageFactors cv_factors_naive(const SampleSet& samples, const PlugIn& plug);

/// Leave-one-out quadratic cost (1/L) sum_l ||(1-rho) C^(l) + rho I - S^(l)||^2 for the
/// space-time (which = 0) or polarization (which = 1) factor.
double cv_cost(const CVWorkspace& ws, int which, double rho);

/// Raises any factor that lacks sample support to its support bound + 0.01 and
/// flags it. Factors with sample support are left alone.
ShrinkageFactors enforce_support(ShrinkageFactors rho, std::size_t n_samples, Index n_st,
                                 Index n_p);

struct OracleConfig {
    double step = 0.02;
    double max = 0.98;
    /// Per-point solve settings; the default runs each point to convergence.
    SolverConfig solver = [] {
        SolverConfig c;
        c.k_max = 100;
        return c;
    }();
    /// Start each grid point from a neighbouring solution.
    bool warm_start = true;
    int threads = 1;
};

/// Grid values 0, step, 2 step, ... up to `max` (inclusive within roundoff).
std::vector<double> oracle_grid(const OracleConfig& cfg);

/// Mean NMSE over trials at every grid point; rows index rho_st, columns rho_p.
/// Points where the solve is not well posed hold +inf.
struct NmseSurface {
    std::vector<double> grid;
    Eigen::MatrixXd values;
    int trials = 0;

    ShrinkageFactors argmin() const;
    double min() const;
};

NmseSurface nmse_surface(const std::vector<SampleSet>& trials, const KroneckerCov& truth,
                         const OracleConfig& cfg = {});

/// Grid point minimizing the NMSE of the full solve against the truth.
ShrinkageFactors oracle_factors(const SampleSet& samples, const KroneckerCov& truth,
                                const OracleConfig& cfg = {});

}  // namespace kronest
