#include "kronest/shrinkage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "kronest/metrics.hpp"
#include "kronest/parallel.hpp"

namespace kronest {

namespace {

struct Clamped {
    double value = 0.0;
    bool degenerate = false;
};

Clamped clamp_ratio(double num, double den) {
    if (!(den > 0.0) || !std::isfinite(num)) return {0.0, true};
    const double r = num / den;
    if (r < 0.0) return {0.0, false};
    if (r >= 1.0) return {1.0, false};
    return {r, false};
}

/// One factor of the closed-form MMSE choice. `n_self` is the factor's dimension,
/// `n_other` the other factor's.
Clamped koas_one(const Matrix& r, Index n_self, Index n_other, double L) {
    const double tr = r.trace().real();
    const double tr2 = r.squaredNorm();
    const double ns = static_cast<double>(n_self);
    const double n = ns * static_cast<double>(n_other);
    const double num = tr * tr - tr2 / ns;
    const double den = tr * tr + (1.0 - 2.0 * tr / ns) * (L * n + L) +
                       (static_cast<double>(n_other) * L + (L - 1.0) / ns) * tr2;
    return clamp_ratio(num, den);
}

Clamped cv_fast_one(const std::vector<Matrix>& s, const Matrix& c) {
    const double L = static_cast<double>(s.size());
    const double n = static_cast<double>(c.rows());
    const double tr_c = c.trace().real();
    const double tr_c2 = c.squaredNorm();
    double sum_s2 = 0.0;
    for (const auto& sl : s) sum_s2 += sl.squaredNorm();
    const double lm1 = (L - 1.0) * (L - 1.0);
    const double num = -L / lm1 * tr_c2 + sum_s2 / lm1;
    const double den = n - 2.0 * tr_c + L * (L - 2.0) / lm1 * tr_c2 + sum_s2 / (L * lm1);
    return clamp_ratio(num, den);
}

Clamped cv_naive_one(const std::vector<Matrix>& s) {
    const std::size_t L = s.size();
    const Index n = s.front().rows();
    const Matrix eye = Matrix::Identity(n, n);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
        Matrix c_l = Matrix::Zero(n, n);
        for (std::size_t j = 0; j < L; ++j) {
            if (j != l) c_l += s[j];
        }
        c_l /= static_cast<double>(L - 1);
        const Matrix d = eye - c_l;
        num += (d * (s[l] - c_l)).trace().real();
        den += (d * d).trace().real();
    }
    return clamp_ratio(num, den);
}

ShrinkageFactors from_pair(Clamped st, Clamped p, ShrinkageMethod m) {
    ShrinkageFactors f;
    f.st = st.value;
    f.p = p.value;
    f.method = m;
    f.degenerate = st.degenerate || p.degenerate;
    return f;
}

/// Smallest eigenvalue a CV plug-in factor may have, relative to its largest.
constexpr double kCvPlugFloor = 1e-8;

/// The leave-one-out quantities need R^{-1}. A rank-deficient plug-in (KNSCM with
/// L N_p <= N_st) is lifted to the floor by the least diagonal loading that does it.
Matrix invertible_plug_factor(const Matrix& a) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(hermitian_part(a), Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    const double lmax = ev(ev.size() - 1);
    const double floor = kCvPlugFloor * lmax;
    if (ev(0) >= floor) return a;
    Matrix out = a;
    out.diagonal().array() += floor - ev(0);
    return out;
}

void require_cv_samples(const SampleSet& samples) {
    if (samples.size() < 2) throw DimensionError("cross-validation needs at least two samples");
}

Eigen::MatrixXd trial_surface(const SampleSet& samples, const KroneckerCov& truth,
                              const std::vector<double>& grid, const OracleConfig& oc) {
    const auto g = static_cast<Index>(grid.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(g, g, std::numeric_limits<double>::infinity());
    SolverConfig cfg = oc.solver;
    cfg.track_cost = false;
    cfg.record_trajectory = false;
    // Row-major sweep; each solve starts from the nearest solved neighbour.
    std::optional<KroneckerCov> row_start;
    for (Index i = 0; i < g; ++i) {
        std::optional<KroneckerCov> prev = row_start;
        for (Index j = 0; j < g; ++j) {
            ShrinkageFactors rho;
            rho.st = grid[static_cast<std::size_t>(i)];
            rho.p = grid[static_cast<std::size_t>(j)];
            cfg.init = oc.warm_start ? prev : std::nullopt;
            try {
                SolverReport rep = rske(samples, rho, cfg);
                out(i, j) = nmse(rep.estimate, truth);
                prev = std::move(rep.estimate);
                if (j == 0 || !row_start) row_start = prev;
            } catch (const NumericalError&) {
                // Not well posed at this grid point.
            }
        }
    }
    return out;
}

}  // namespace

std::string to_string(PlugInSource s) {
    switch (s) {
        case PlugInSource::knscm: return "knscm";
        case PlugInSource::kmle: return "kmle";
        case PlugInSource::custom: return "custom";
    }
    return "unknown";
}

PlugIn PlugIn::normalized(KroneckerCov cov, PlugInSource source) {
    PlugIn out;
    out.source = source;
    out.cov.st = trace_normalize(cov.st) * static_cast<double>(cov.n_st());
    out.cov.p = trace_normalize(cov.p) * static_cast<double>(cov.n_p());
    return out;
}

PlugIn PlugIn::from_samples(const SampleSet& samples, PlugInSource source,
                            const SolverConfig& cfg) {
    switch (source) {
        case PlugInSource::knscm: return normalized(knscm(samples), source);
        case PlugInSource::kmle: {
            SolverConfig c = cfg;
            c.track_cost = false;
            try {
                return normalized(kmle(samples, c).estimate, source);
            } catch (const ExistenceError&) {
                return normalized(knscm(samples), PlugInSource::knscm);
            }
        }
        case PlugInSource::custom: break;
    }
    throw ConfigError("PlugIn::from_samples: a custom plug-in must be supplied explicitly");
}

ShrinkageFactors koas_factors(const PlugIn& plug, std::size_t n_samples) {
    if (n_samples < 1) throw DimensionError("koas_factors: need at least one sample");
    const double L = static_cast<double>(n_samples);
    const Index n_st = plug.cov.n_st();
    const Index n_p = plug.cov.n_p();
    return from_pair(koas_one(plug.cov.st, n_st, n_p, L), koas_one(plug.cov.p, n_p, n_st, L),
                     ShrinkageMethod::koas);
}

CVWorkspace CVWorkspace::build(const SampleSet& samples, const KroneckerCov& plug) {
    require_cv_samples(samples);
    const KroneckerSolver solver(KroneckerCov{invertible_plug_factor(plug.st), invertible_plug_factor(plug.p)});
    const double n_st = static_cast<double>(samples.n_st);
    const double n_p = static_cast<double>(samples.n_p);
    CVWorkspace ws;
    ws.s_st.reserve(samples.size());
    ws.s_p.reserve(samples.size());
    ws.c_st = Matrix::Zero(samples.n_st, samples.n_st);
    ws.c_p = Matrix::Zero(samples.n_p, samples.n_p);
    for (std::size_t l = 0; l < samples.size(); ++l) {
        const Matrix& y = samples.samples[l];
        const Matrix a = solver.p().solve(y);
        const Matrix b = solver.st().solve(y.adjoint());
        const double q = (a.transpose().array() * b.array()).real().sum();
        if (!(q > 1e-300)) {
            throw DegenerateSampleError("sample " + std::to_string(l) + " is degenerate", l);
        }
        ws.s_st.push_back(hermitian_part(y.adjoint() * a) * (n_st / q));
        ws.s_p.push_back(hermitian_part(y * b) * (n_p / q));
        ws.c_st += ws.s_st.back();
        ws.c_p += ws.s_p.back();
    }
    const double L = static_cast<double>(samples.size());
    ws.c_st /= L;
    ws.c_p /= L;
    return ws;
}

ShrinkageFactors cv_factors_fast(const CVWorkspace& ws) {
    if (ws.size() < 2) throw DimensionError("cross-validation needs at least two samples");
    return from_pair(cv_fast_one(ws.s_st, ws.c_st), cv_fast_one(ws.s_p, ws.c_p),
                     ShrinkageMethod::cv);
}

ShrinkageFactors cv_factors_fast(const SampleSet& samples, const PlugIn& plug) {
    return cv_factors_fast(CVWorkspace::build(samples, plug.cov));
}

ShrinkageFactors cv_factors_naive(const SampleSet& samples, const PlugIn& plug) {
    const CVWorkspace ws = CVWorkspace::build(samples, plug.cov);
    return from_pair(cv_naive_one(ws.s_st), cv_naive_one(ws.s_p), ShrinkageMethod::cv);
}

double cv_cost(const CVWorkspace& ws, int which, double rho) {
    const auto& s = which == 0 ? ws.s_st : ws.s_p;
    const Matrix& c = which == 0 ? ws.c_st : ws.c_p;
    const double L = static_cast<double>(s.size());
    double total = 0.0;
    for (const auto& sl : s) {
        const Matrix c_l = (L / (L - 1.0)) * c - sl / (L - 1.0);
        Matrix r = (1.0 - rho) * c_l - sl;
        r.diagonal().array() += rho;
        total += r.squaredNorm();
    }
    return total / L;
}

ShrinkageFactors enforce_support(ShrinkageFactors rho, std::size_t n_samples, Index n_st,
                                 Index n_p) {
    const auto [floor_st, floor_p] = support_bounds(n_samples, n_st, n_p);
    const auto L = static_cast<Index>(n_samples);
    if (L * n_p <= n_st && rho.st <= floor_st) {
        rho.st = std::min(1.0, floor_st + 0.01);
        rho.raised_st = true;
    }
    if (L * n_st <= n_p && rho.p <= floor_p) {
        rho.p = std::min(1.0, floor_p + 0.01);
        rho.raised_p = true;
    }
    return rho;
}

std::vector<double> oracle_grid(const OracleConfig& cfg) {
    if (!(cfg.step > 0.0) || !(cfg.max >= 0.0) || cfg.max > 1.0) {
        throw ConfigError("oracle grid: need step > 0 and 0 <= max <= 1");
    }
    const auto n = static_cast<std::size_t>(std::floor(cfg.max / cfg.step + 1e-9)) + 1;
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = static_cast<double>(i) * cfg.step;
    return grid;
}

ShrinkageFactors NmseSurface::argmin() const {
    Index bi = -1;
    Index bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < values.rows(); ++i) {
        for (Index j = 0; j < values.cols(); ++j) {
            if (values(i, j) < best) {
                best = values(i, j);
                bi = i;
                bj = j;
            }
        }
    }
    if (bi < 0) throw NumericalError("oracle: no grid point admits a solution");
    ShrinkageFactors f;
    f.st = grid[static_cast<std::size_t>(bi)];
    f.p = grid[static_cast<std::size_t>(bj)];
    f.method = ShrinkageMethod::oracle;
    return f;
}

double NmseSurface::min() const {
    return values.minCoeff();
}

NmseSurface nmse_surface(const std::vector<SampleSet>& trials, const KroneckerCov& truth,
                         const OracleConfig& cfg) {
    if (trials.empty()) throw DimensionError("nmse_surface: no trials");
    NmseSurface out;
    out.grid = oracle_grid(cfg);
    out.trials = static_cast<int>(trials.size());
    std::vector<Eigen::MatrixXd> per_trial(trials.size());
    parallel_for(
        trials.size(),
        [&](std::size_t t) { per_trial[t] = trial_surface(trials[t], truth, out.grid, cfg); },
        cfg.threads);
    const auto g = static_cast<Index>(out.grid.size());
    out.values = Eigen::MatrixXd::Zero(g, g);
    for (const auto& m : per_trial) out.values += m;
    out.values /= static_cast<double>(trials.size());
    return out;
}

ShrinkageFactors oracle_factors(const SampleSet& samples, const KroneckerCov& truth,
                                const OracleConfig& cfg) {
    NmseSurface s;
    s.grid = oracle_grid(cfg);
    s.trials = 1;
    s.values = trial_surface(samples, truth, s.grid, cfg);
    return s.argmin();
}

}  // namespace kronest
