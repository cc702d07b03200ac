#include "kronest/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace kronest {

namespace {

constexpr double kMinQuadForm = 1e-300;

void require_nonempty(const SampleSet& s, const char* who) {
    if (s.samples.empty()) throw DimensionError(std::string(who) + ": sample set is empty");
    if (s.n_p < 1 || s.n_st < 1) throw DimensionError(std::string(who) + ": invalid dimensions");
}

/// Re Tr(A B) for A (m x n), B (n x m).
double trace_product_real(const Matrix& a, const Matrix& b) {
    return (a.transpose().array() * b.array()).real().sum();
}

double checked_form(double q, std::size_t l) {
    if (!(q > kMinQuadForm) || !std::isfinite(q)) {
        throw DegenerateSampleError(
            "sample " + std::to_string(l) + " has a vanishing quadratic form", l);
    }
    return q;
}

Eigen::LLT<Matrix> chol(const Matrix& a, const char* which) {
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().real().minCoeff() > 0.0)) {
        throw IllConditionedError(std::string(which) +
                                  " factor lost positive definiteness during the iteration");
    }
    return llt;
}

Matrix shrink(const Matrix& sum, double scale, double rho) {
    Matrix out = (1.0 - rho) * scale * hermitian_part(sum);
    out.diagonal().array() += rho;
    return out;
}

/// Space-time half-update. `rp_solves[l]` receives R_p^{-1} Y_l for reuse.
Matrix update_st(const SampleSet& s, const Eigen::LLT<Matrix>& st, const Eigen::LLT<Matrix>& p,
                 double rho, std::vector<Matrix>& rp_solves) {
    const Index n_st = s.n_st;
    Matrix acc = Matrix::Zero(n_st, n_st);
    rp_solves.resize(s.size());
    for (std::size_t l = 0; l < s.size(); ++l) {
        const Matrix& y = s.samples[l];
        rp_solves[l] = p.solve(y);
        const Matrix b = st.solve(y.adjoint());
        const double q = checked_form(trace_product_real(rp_solves[l], b), l);
        acc.noalias() += (y.adjoint() * rp_solves[l]) / q;
    }
    return shrink(acc, static_cast<double>(n_st) / static_cast<double>(s.size()), rho);
}

/// Polarization half-update; `rp_solves` hold R_p^{-1} Y_l for the current R_p.
Matrix update_p(const SampleSet& s, const Eigen::LLT<Matrix>& st,
                const std::vector<Matrix>& rp_solves, double rho) {
    const Index n_p = s.n_p;
    Matrix acc = Matrix::Zero(n_p, n_p);
    for (std::size_t l = 0; l < s.size(); ++l) {
        const Matrix& y = s.samples[l];
        const Matrix b = st.solve(y.adjoint());
        const double q = checked_form(trace_product_real(rp_solves[l], b), l);
        acc.noalias() += (y * b) / q;
    }
    return shrink(acc, static_cast<double>(n_p) / static_cast<double>(s.size()), rho);
}

std::vector<Matrix> rp_solves_for(const SampleSet& s, const Eigen::LLT<Matrix>& p) {
    std::vector<Matrix> out(s.size());
    for (std::size_t l = 0; l < s.size(); ++l) out[l] = p.solve(s.samples[l]);
    return out;
}

void check_factor(const Matrix& m, Index n, const char* which) {
    if (m.rows() != n || m.cols() != n) {
        throw DimensionError(std::string(which) + " initial factor has the wrong dimension");
    }
}

}  // namespace

std::string to_string(ShrinkageMethod m) {
    switch (m) {
        case ShrinkageMethod::manual: return "manual";
        case ShrinkageMethod::koas: return "koas";
        case ShrinkageMethod::cv: return "cv";
        case ShrinkageMethod::oracle: return "oracle";
    }
    return "unknown";
}

double ShrinkageFactors::alpha_st(Index n_p) const {
    if (st >= 1.0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(n_p) * st / (1.0 - st);
}

double ShrinkageFactors::alpha_p(Index n_st) const {
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(n_st) * p / (1.0 - p);
}

void ShrinkageFactors::validate() const {
    if (!(st >= 0.0 && st <= 1.0) || !(p >= 0.0 && p <= 1.0)) {
        throw ConfigError("shrinkage factors must lie in [0, 1]");
    }
}

ExistenceResult existence_check(std::size_t n_samples, Index n_st, Index n_p,
                                const ShrinkageFactors& rho, const ExistenceConfig& beta,
                                const SampleSet* samples) {
    if (!(beta.beta1 >= 0.0 && beta.beta1 <= 1.0)) {
        throw ConfigError("existence_check: beta1 must lie in [0, 1]");
    }
    const double L = static_cast<double>(n_samples);
    const double nst = static_cast<double>(n_st);
    const double np = static_cast<double>(n_p);
    const double n = nst * np;
    const double b1 = beta.beta1;
    const double b2 = beta.beta2();

    ExistenceResult r;
    r.bound_st = 1.0 - L * np / (b1 * std::max(nst, L * np) + b2 * L * n);
    r.bound_p = 1.0 - L * nst / (b2 * std::max(np, L * nst) + b1 * L * n);
    r.holds = rho.st > r.bound_st && rho.p > r.bound_p;
    if (samples != nullptr) {
        try {
            samples->validate();
        } catch (const DegenerateSampleError&) {
            r.samples_ok = false;
            r.holds = false;
        }
    }
    return r;
}

bool existence_holds_for_some_beta(std::size_t n_samples, Index n_st, Index n_p,
                                   const ShrinkageFactors& rho) {
    constexpr int kSteps = 1000;
    for (int i = 0; i <= kSteps; ++i) {
        const ExistenceConfig beta{static_cast<double>(i) / kSteps};
        if (existence_check(n_samples, n_st, n_p, rho, beta).holds) return true;
    }
    return false;
}

std::pair<double, double> support_bounds(std::size_t n_samples, Index n_st, Index n_p) {
    const double L = static_cast<double>(n_samples);
    const double nst = static_cast<double>(n_st);
    const double np = static_cast<double>(n_p);
    const double st = L * np <= nst ? 1.0 - L * np / nst : 0.0;
    const double p = L * nst <= np ? 1.0 - L * nst / np : 0.0;
    return {st, p};
}

void check_solvable(std::size_t n_samples, Index n_st, Index n_p, const ShrinkageFactors& rho) {
    rho.validate();
    const std::size_t L = n_samples;
    const auto lnp = static_cast<std::size_t>(n_p) * L;
    const auto lnst = static_cast<std::size_t>(n_st) * L;
    if (rho.st == 0.0 && rho.p == 0.0) {
        if (!(lnp > static_cast<std::size_t>(n_st) && lnst > static_cast<std::size_t>(n_p))) {
            throw ExistenceError("unshrunk Kronecker MLE needs L*N_p > N_st and L*N_st > N_p (L=" +
                                 std::to_string(L) + "); use shrinkage");
        }
        return;
    }
    if (existence_holds_for_some_beta(L, n_st, n_p, rho)) return;
    const auto [floor_st, floor_p] = support_bounds(L, n_st, n_p);
    const bool st_ok = lnp > static_cast<std::size_t>(n_st) || rho.st > floor_st;
    const bool p_ok = lnst > static_cast<std::size_t>(n_p) || rho.p > floor_p;
    if (!st_ok || !p_ok) {
        throw ExistenceError("shrinkage factors (" + std::to_string(rho.st) + ", " +
                             std::to_string(rho.p) + ") are below the sample-support bounds (" +
                             std::to_string(floor_st) + ", " + std::to_string(floor_p) +
                             ") for L=" + std::to_string(L));
    }
}

Matrix scm(const SampleSet& samples, Index cap) {
    const Index n = samples.dim();
    if (n > cap) {
        throw DimensionError("scm: dimension " + std::to_string(n) + " exceeds the cap " +
                             std::to_string(cap));
    }
    Matrix acc = Matrix::Zero(n, n);
    if (samples.samples.empty()) return acc;
    for (const auto& y : samples.samples) {
        const Vector v = vec(y);
        acc.noalias() += v * v.adjoint();
    }
    return acc / static_cast<double>(samples.size());
}

KroneckerCov knscm(const SampleSet& samples) {
    require_nonempty(samples, "knscm");
    KroneckerCov r{Matrix::Zero(samples.n_st, samples.n_st), Matrix::Zero(samples.n_p, samples.n_p)};
    for (std::size_t l = 0; l < samples.size(); ++l) {
        const Matrix& y = samples.samples[l];
        const double norm2 = y.squaredNorm();
        if (!(norm2 > 0.0)) {
            throw DegenerateSampleError("knscm: sample " + std::to_string(l) + " is zero", l);
        }
        r.st.noalias() += y.adjoint() * y / norm2;
        r.p.noalias() += y * y.adjoint() / norm2;
    }
    const double L = static_cast<double>(samples.size());
    r.st = hermitian_part(r.st) * (static_cast<double>(samples.n_st) / L);
    r.p = hermitian_part(r.p) * (static_cast<double>(samples.n_p) / L);
    return r;
}

double penalized_nll(const KroneckerCov& r, const SampleSet& samples,
                     const ShrinkageFactors& rho) {
    require_nonempty(samples, "penalized_nll");
    const KroneckerSolver solver(r);
    const double np = static_cast<double>(samples.n_p);
    const double nst = static_cast<double>(samples.n_st);
    const double L = static_cast<double>(samples.size());

    double log_sum = 0.0;
    for (std::size_t l = 0; l < samples.size(); ++l) {
        log_sum += std::log(checked_form(solver.quad_form(samples.samples[l]), l));
    }
    double value = np * nst / L * log_sum;
    if (rho.st < 1.0) {
        value += np / (1.0 - rho.st) * solver.log_det_st();
        if (rho.st > 0.0) value += rho.alpha_st(samples.n_p) * solver.trace_inv_st();
    }
    if (rho.p < 1.0) {
        value += nst / (1.0 - rho.p) * solver.log_det_p();
        if (rho.p > 0.0) value += rho.alpha_p(samples.n_st) * solver.trace_inv_p();
    }
    return value;
}

KroneckerCov fixed_point_map(const KroneckerCov& r, const SampleSet& samples,
                             const ShrinkageFactors& rho) {
    require_nonempty(samples, "fixed_point_map");
    const auto st = chol(r.st, "space-time");
    const auto p = chol(r.p, "polarization");
    std::vector<Matrix> solves;
    KroneckerCov out;
    out.st = update_st(samples, st, p, rho.st, solves);
    out.p = update_p(samples, st, solves, rho.p);
    return out;
}

std::pair<double, double> fixed_point_residual(const KroneckerCov& r, const SampleSet& samples,
                                               const ShrinkageFactors& rho) {
    const KroneckerCov rhs = fixed_point_map(r, samples, rho);
    return {(r.st - rhs.st).norm() / r.st.norm(), (r.p - rhs.p).norm() / r.p.norm()};
}

double kron_distance(const KroneckerCov& a, const KroneckerCov& b) {
    return std::sqrt(kron_normalized_distance_sq(a.st, a.p, b.st, b.p));
}

SolverReport rske(const SampleSet& samples, const ShrinkageFactors& rho, const SolverConfig& cfg) {
    require_nonempty(samples, "rske");
    rho.validate();
    if (!(cfg.delta > 0.0) || cfg.k_max < 1) {
        throw ConfigError("solver: delta must be > 0 and k_max >= 1");
    }
    if (!cfg.force) check_solvable(samples.size(), samples.n_st, samples.n_p, rho);
    for (std::size_t l = 0; l < samples.size(); ++l) {
        const auto& y = samples.samples[l];
        if (y.rows() != samples.n_p || y.cols() != samples.n_st) {
            throw DimensionError("rske: sample " + std::to_string(l) + " has the wrong shape");
        }
    }

    KroneckerCov cur = cfg.init ? *cfg.init : KroneckerCov::identity(samples.n_st, samples.n_p);
    check_factor(cur.st, samples.n_st, "space-time");
    check_factor(cur.p, samples.n_p, "polarization");
    // A factor with rho = 1 is pinned from the start, whatever the initial value.
    if (rho.st == 1.0) cur.st = Matrix::Identity(samples.n_st, samples.n_st);
    if (rho.p == 1.0) cur.p = Matrix::Identity(samples.n_p, samples.n_p);

    SolverReport rep;
    if (cfg.track_cost) rep.half_costs.push_back(penalized_nll(cur, samples, rho));

    const Index n_st = samples.n_st;
    const Index n_p = samples.n_p;
    std::vector<Matrix> solves;
    for (int k = 1; k <= cfg.k_max; ++k) {
        KroneckerCov next;
        const auto p_chol = chol(cur.p, "polarization");
        if (rho.st >= 1.0) {
            next.st = Matrix::Identity(n_st, n_st);
            solves = rp_solves_for(samples, p_chol);
        } else {
            next.st = update_st(samples, chol(cur.st, "space-time"), p_chol, rho.st, solves);
        }
        if (cfg.track_cost) {
            rep.half_costs.push_back(penalized_nll({next.st, cur.p}, samples, rho));
        }
        if (rho.p >= 1.0) {
            next.p = Matrix::Identity(n_p, n_p);
        } else {
            next.p = update_p(samples, chol(next.st, "space-time"), solves, rho.p);
        }
        if (cfg.track_cost) {
            const double c = penalized_nll(next, samples, rho);
            rep.half_costs.push_back(c);
            rep.costs.push_back(c);
        }

        rep.final_distance = kron_distance(next, cur);
        cur = std::move(next);
        rep.iterations = k;
        if (cfg.record_trajectory) rep.trajectory.push_back(cur);
        if (rep.final_distance < cfg.delta) {
            rep.converged = true;
            break;
        }
    }

    if (rho.st == 0.0 && rho.p == 0.0) {
        // Scale gauge: Tr(R_p) = N_p.
        const double c = cur.p.trace().real() / static_cast<double>(n_p);
        cur.p /= c;
        cur.st *= c;
    }
    rep.residual = fixed_point_residual(cur, samples, rho);
    rep.estimate = std::move(cur);
    return rep;
}

SolverReport kmle(const SampleSet& samples, const SolverConfig& cfg) {
    return rske(samples, ShrinkageFactors{}, cfg);
}

}  // namespace kronest
