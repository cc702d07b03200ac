#include <gtest/gtest.h>

#include "kronest/error.hpp"
#include "kronest/metrics.hpp"
#include "test_support.hpp"

namespace kronest {
namespace {

using testing::full_cov;
using testing::random_kron;

Matrix normalized(const Matrix& m) { return m / m.trace().real(); }

double nmse_reference(const Matrix& est, const Matrix& truth) {
    return (normalized(est) - normalized(truth)).squaredNorm() / normalized(truth).squaredNorm();
}

double scnr_reference(const Vector& s, const Matrix& est, const Matrix& truth) {
    const Matrix ei = est.inverse();
    const double num = std::norm(s.dot(ei * s));
    return num / (s.dot(ei * truth * ei * s).real() * s.dot(truth.inverse() * s).real());
}

DataMatrix random_signature(Rng& rng, Index n_p, Index n_st) {
    return rng.complex_normal_matrix(n_p, n_st);
}

TEST(Nmse, KroneckerMatchesMaterialized) {
    Rng rng(61);
    for (int t = 0; t < 20; ++t) {
        const KroneckerCov a = random_kron(rng, 6, 3);
        const KroneckerCov b = random_kron(rng, 6, 3);
        const double expect = nmse_reference(full_cov(a), full_cov(b));
        EXPECT_NEAR(nmse(a, b), expect, 1e-10 * expect);
        EXPECT_NEAR(nmse(full_cov(a), b), expect, 1e-10 * expect);
        EXPECT_NEAR(nmse(CovEstimate{a}, b), expect, 1e-10 * expect);
    }
}

TEST(Nmse, ScaleInvariantAndZeroAtTruth) {
    Rng rng(62);
    const KroneckerCov r = random_kron(rng, 4, 3);
    EXPECT_LT(nmse(KroneckerCov{r.st * 5.0, r.p * 0.1}, r), 1e-24);
    EXPECT_THROW(nmse(Matrix(Matrix::Identity(5, 5)), r), DimensionError);
}

TEST(ScnrLoss, MatchesMaterialized) {
    Rng rng(63);
    for (int t = 0; t < 20; ++t) {
        const KroneckerCov truth = random_kron(rng, 6, 2);
        const KroneckerCov est = random_kron(rng, 6, 2);
        const DataMatrix s = random_signature(rng, 2, 6);
        const double expect = scnr_reference(testing::vec_of(s), full_cov(est), full_cov(truth));
        EXPECT_NEAR(scnr_loss(s, est, truth), expect, 1e-10);
        EXPECT_NEAR(scnr_loss(s, full_cov(est), truth), expect, 1e-10);
        EXPECT_GT(expect, 0.0);
        EXPECT_LE(expect, 1.0 + 1e-12);
    }
}

TEST(ScnrLoss, UnityForExactEstimate) {
    Rng rng(64);
    const KroneckerCov truth = random_kron(rng, 8, 3);
    const DataMatrix s = random_signature(rng, 3, 8);
    EXPECT_NEAR(scnr_loss(s, KroneckerCov{truth.st * 3.0, truth.p}, truth), 1.0, 1e-12);
}

TEST(Cond, ProductOfFactorConditionNumbers) {
    Rng rng(65);
    const KroneckerCov r = random_kron(rng, 5, 3, 100.0);
    const CondReport c = cond_report(r);
    const Eigen::JacobiSVD<Matrix> svd(full_cov(r));
    const auto sv = svd.singularValues();
    EXPECT_NEAR(c.full, sv(0) / sv(sv.size() - 1), 1e-8 * c.full);
    EXPECT_NEAR(c.st * c.p, c.full, 1e-12 * c.full);
    const CondReport u = cond_report(full_cov(r));
    EXPECT_TRUE(std::isnan(u.st));
    EXPECT_NEAR(u.full, c.full, 1e-8 * c.full);
}

}  // namespace
}  // namespace kronest
