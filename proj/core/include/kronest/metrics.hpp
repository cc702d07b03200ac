#pragma once

#include <cstdint>
#include <string>

#include "kronest/matcore.hpp"

namespace kronest {

/// ||R_hat / Tr(R_hat) - R / Tr(R)||^2 / ||R / Tr(R)||^2.
double nmse(const KroneckerCov& est, const KroneckerCov& truth);
/// Unstructured estimate in the conj(R_st) (x) R_p convention; truth is materialized.
double nmse(const Matrix& est, const KroneckerCov& truth, Index cap = kMaterializationCap);
double nmse(const CovEstimate& est, const KroneckerCov& truth);

/// (s^H Rh^{-1} s)^2 / ((s^H Rh^{-1} R Rh^{-1} s)(s^H R^{-1} s)), in (0, 1].
double scnr_loss(const DataMatrix& s, const KroneckerCov& est, const KroneckerCov& truth);
double scnr_loss(const DataMatrix& s, const Matrix& est, const KroneckerCov& truth,
                 Index cap = kMaterializationCap);
double scnr_loss(const DataMatrix& s, const CovEstimate& est, const KroneckerCov& truth);

struct CondReport {
    double st = 1.0;
    double p = 1.0;
    double full = 1.0;
};

/// cond(R_st), cond(R_p) and their product, the condition number of R_st (x) R_p.
CondReport cond_report(const KroneckerCov& est);
/// Unstructured estimate: only `full` is meaningful; st and p are set to NaN.
CondReport cond_report(const Matrix& est);
CondReport cond_report(const CovEstimate& est);

struct MetricRecord {
    std::string estimator;
    double nmse = 0.0;
    double scnr_loss = 0.0;
    CondReport cond;
    double rho_st = 0.0;
    double rho_p = 0.0;
    int iterations = 0;
    std::uint64_t seed = 0;
    std::string config_digest;
};

}  // namespace kronest
