#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kronest/cluttergen.hpp"
#include "kronest/matcore.hpp"

namespace kronest {

enum class ShrinkageMethod { manual, koas, cv, oracle };

std::string to_string(ShrinkageMethod m);

/// Shrinkage factors (rho_st, rho_p) in [0, 1]^2 and how they were chosen.
struct ShrinkageFactors {
    double st = 0.0;
    double p = 0.0;
    ShrinkageMethod method = ShrinkageMethod::manual;
    /// Set when a selector raised a factor to keep the solve well posed.
    bool raised_st = false;
    bool raised_p = false;
    /// Set when a selector hit a degenerate denominator and fell back to 0.
    bool degenerate = false;

    /// Penalty weights N_p rho_st / (1 - rho_st) and N_st rho_p / (1 - rho_p).
    double alpha_st(Index n_p) const;
    double alpha_p(Index n_st) const;
    void validate() const;
};

struct SolverConfig {
    double delta = 1e-3;
    int k_max = 15;
    std::optional<KroneckerCov> init;
    /// Evaluate the penalized cost after every half-update.
    bool track_cost = true;
    /// Keep every iterate (used by reduction tests).
    bool record_trajectory = false;
    /// Skip the existence / sample-support guard.
    bool force = false;
};

struct SolverReport {
    KroneckerCov estimate;
    int iterations = 0;
    /// Penalized cost after each full (st, p) sweep.
    std::vector<double> costs;
    /// Cost at the initial point, then after every half-update.
    std::vector<double> half_costs;
    double final_distance = 0.0;
    std::pair<double, double> residual{0.0, 0.0};
    bool converged = false;
    std::vector<KroneckerCov> trajectory;
};

struct ExistenceConfig {
    double beta1 = 1.0;
    double beta2() const { return 1.0 - beta1; }
};

struct ExistenceResult {
    bool holds = false;
    double bound_st = 0.0;
    double bound_p = 0.0;
    /// Whether no sample has an all-zero row or column (true when unchecked).
    bool samples_ok = true;
};

/// Sufficient existence condition for a given (beta1, beta2) split:
/// rho_st > 1 - L N_p / (b1 max(N_st, L N_p) + b2 L N) and
/// rho_p  > 1 - L N_st / (b2 max(N_p, L N_st) + b1 L N).
ExistenceResult existence_check(std::size_t n_samples, Index n_st, Index n_p,
                                const ShrinkageFactors& rho, const ExistenceConfig& beta,
                                const SampleSet* samples = nullptr);

/// True if some beta1 in [0, 1] satisfies `existence_check`.
bool existence_holds_for_some_beta(std::size_t n_samples, Index n_st, Index n_p,
                                   const ShrinkageFactors& rho);

/// Per-factor sample-support floor: the smallest rho that keeps each factor's
/// update well posed when L N_p <= N_st (resp. L N_st <= N_p); 0 otherwise.
std::pair<double, double> support_bounds(std::size_t n_samples, Index n_st, Index n_p);

/// Guard applied by `rske` unless forced. Throws ExistenceError with a diagnostic.
void check_solvable(std::size_t n_samples, Index n_st, Index n_p, const ShrinkageFactors& rho);

/// (1/L) sum_l vec(Y_l) vec(Y_l)^H.
Matrix scm(const SampleSet& samples, Index cap = kMaterializationCap);

/// Normalized-sample Kronecker moments, one trace-preserving sweep from identity.
KroneckerCov knscm(const SampleSet& samples);

SolverReport rske(const SampleSet& samples, const ShrinkageFactors& rho,
                  const SolverConfig& cfg = {});
SolverReport kmle(const SampleSet& samples, const SolverConfig& cfg = {});

/// Penalized negative log-likelihood. A factor with rho = 1 is pinned at the
/// identity and its terms are omitted.
double penalized_nll(const KroneckerCov& r, const SampleSet& samples,
                     const ShrinkageFactors& rho);

/// Right-hand sides of both fixed-point equations evaluated at `r`.
KroneckerCov fixed_point_map(const KroneckerCov& r, const SampleSet& samples,
                             const ShrinkageFactors& rho);

/// Relative Frobenius residual ||R - RHS(R)|| / ||R|| for (st, p).
std::pair<double, double> fixed_point_residual(const KroneckerCov& r, const SampleSet& samples,
                                               const ShrinkageFactors& rho);

/// Trace-normalized Frobenius distance between two Kronecker estimates.
double kron_distance(const KroneckerCov& a, const KroneckerCov& b);

}  // namespace kronest
