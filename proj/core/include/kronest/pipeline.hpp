#pragma once

#include <optional>
#include <string>

#include "kronest/shrinkage.hpp"

namespace kronest {

enum class EstimatorKind { scm, knscm, kmle, rske };

/// How to turn a SampleSet into a covariance estimate.
///
/// Text form: `scm`, `knscm`, `kmle`, `rske:cv[:knscm|kmle]`, `rske:koas[:knscm|kmle]`,
/// `rske:manual:<rho_st>:<rho_p>` or `rske:oracle`.
struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::rske;
    ShrinkageMethod shrinkage = ShrinkageMethod::cv;
    PlugInSource plug_in = PlugInSource::knscm;
    ShrinkageFactors manual{};
    SolverConfig solver{};
    OracleConfig oracle{};

    static EstimatorSpec parse(const std::string& text);
    std::string label() const;
};

struct Estimate {
    CovEstimate cov;
    ShrinkageFactors rho{};
    int iterations = 0;
    bool converged = true;
    /// Present for the iterative estimators.
    std::optional<SolverReport> report;
};

/// Runs the selector (if any) and the estimator. The oracle needs `samples.truth`.
Estimate estimate(const SampleSet& samples, const EstimatorSpec& spec);

/// Shrinkage factors the spec would use on these samples, before solving.
ShrinkageFactors select_factors(const SampleSet& samples, const EstimatorSpec& spec);

}  // namespace kronest
