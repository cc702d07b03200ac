#include "kronest/metrics.hpp"

#include <cmath>
#include <limits>

namespace kronest {

double nmse(const KroneckerCov& est, const KroneckerCov& truth) {
    return kron_normalized_distance_sq(truth.st, truth.p, est.st, est.p) /
           kron_normalized_norm_sq(truth.st, truth.p);
}

double nmse(const Matrix& est, const KroneckerCov& truth, Index cap) {
    const Matrix r = trace_normalize(materialize(truth, cap));
    if (est.rows() != r.rows() || est.cols() != r.cols()) {
        throw DimensionError("nmse: estimate and truth dimensions differ");
    }
    return (trace_normalize(est) - r).squaredNorm() / r.squaredNorm();
}

double nmse(const CovEstimate& est, const KroneckerCov& truth) {
    return std::visit([&](const auto& e) { return nmse(e, truth); }, est);
}

double scnr_loss(const DataMatrix& s, const KroneckerCov& est, const KroneckerCov& truth) {
    const KroneckerSolver hat(est);
    const DataMatrix z = hat.apply_inverse(s);
    const double num = (s.conjugate().array() * z.array()).sum().real();
    const double mid = (z.conjugate().array() * apply(z, truth).array()).sum().real();
    const double clair = quad_form(s, truth);
    return num * num / (mid * clair);
}

double scnr_loss(const DataMatrix& s, const Matrix& est, const KroneckerCov& truth, Index cap) {
    const Matrix r = materialize(truth, cap);
    const InverseOperator hat(est, s.rows(), s.cols());
    const Vector v = vec(s);
    const Vector z = vec(hat.apply(s));
    const double num = v.dot(z).real();
    const double mid = z.dot(r * z).real();
    const double clair = quad_form(s, truth);
    return num * num / (mid * clair);
}

double scnr_loss(const DataMatrix& s, const CovEstimate& est, const KroneckerCov& truth) {
    return std::visit([&](const auto& e) { return scnr_loss(s, e, truth); }, est);
}

CondReport cond_report(const KroneckerCov& est) {
    CondReport c;
    c.st = cond_number(est.st);
    c.p = cond_number(est.p);
    c.full = c.st * c.p;
    return c;
}

CondReport cond_report(const Matrix& est) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, cond_number(est)};
}

CondReport cond_report(const CovEstimate& est) {
    return std::visit([](const auto& e) { return cond_report(e); }, est);
}

}  // namespace kronest
