#include <gtest/gtest.h>

#include "kronest/error.hpp"
#include "kronest/matcore.hpp"
#include "test_support.hpp"

namespace kronest {
namespace {

using testing::brute_kron;
using testing::full_cov;
using testing::random_kron;

TEST(Kron, MatchesElementwiseDefinition) {
    Rng rng(11);
    const Matrix a = rng.complex_normal_matrix(3, 4);
    const Matrix b = rng.complex_normal_matrix(2, 5);
    EXPECT_LT((kron(a, b) - brute_kron(a, b)).norm(), 1e-14);
}

TEST(Vec, RoundTripIsColumnMajor) {
    Rng rng(2);
    const Vector y = rng.complex_normal_matrix(12, 1);
    const DataMatrix m = unvec(y, 3, 4);
    EXPECT_EQ(m(1, 0), y(1));
    EXPECT_EQ(m(0, 1), y(3));
    EXPECT_EQ(m(2, 3), y(11));
    EXPECT_EQ((vec(m) - y).norm(), 0.0);
}

TEST(Vec, RejectsWrongLength) {
    const Vector y = Vector::Zero(10);
    EXPECT_THROW(unvec(y, 3, 4), DimensionError);
}

TEST(Materialize, ForwardActionAgreesWithOperator) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const KroneckerCov r = random_kron(rng, 4, 3);
        const DataMatrix y = rng.complex_normal_matrix(3, 4);
        const Vector lhs = vec(apply(y, r));
        const Vector rhs = full_cov(r) * testing::vec_of(y);
        EXPECT_LT((lhs - rhs).norm() / rhs.norm(), 1e-12);
    }
}

TEST(Materialize, EqualsConjugatedKron) {
    Rng rng(4);
    const KroneckerCov r = random_kron(rng, 4, 3);
    EXPECT_LT((materialize(r) - full_cov(r)).norm(), 1e-12);
}

TEST(Materialize, RefusesAboveCap) {
    const KroneckerCov r = KroneckerCov::identity(32, 3);
    EXPECT_THROW(materialize(r), DimensionError);
    EXPECT_NO_THROW(materialize(r, 96));
}

TEST(KroneckerSolver, FormsMatchMaterializedInverse) {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const KroneckerCov r = random_kron(rng, 8, 3, 200.0);
        const DataMatrix s = rng.complex_normal_matrix(3, 8);
        const DataMatrix y = rng.complex_normal_matrix(3, 8);
        const Matrix inv = full_cov(r).inverse();
        const Complex expect = testing::vec_of(s).dot(inv * testing::vec_of(y));
        const Complex got = bilinear_form(s, y, r);
        EXPECT_LT(std::abs(got - expect) / std::abs(expect), 1e-10);
        const double qexp = testing::vec_of(y).dot(inv * testing::vec_of(y)).real();
        EXPECT_NEAR(quad_form(y, r), qexp, 1e-10 * qexp);
        const Vector z = inv * testing::vec_of(y);
        EXPECT_LT((vec(apply_inverse(y, r)) - z).norm() / z.norm(), 1e-10);
    }
}

TEST(KroneckerSolver, LogDetAndTraceInverse) {
    Rng rng(6);
    const KroneckerCov r = random_kron(rng, 5, 3);
    const KroneckerSolver solver(r);
    EXPECT_NEAR(solver.log_det_st(), std::log(r.st.determinant().real()), 1e-10);
    EXPECT_NEAR(solver.trace_inv_p(), r.p.inverse().trace().real(), 1e-10);
}

TEST(KroneckerSolver, RejectsNonPositiveFactor) {
    KroneckerCov r = KroneckerCov::identity(3, 2);
    r.st(1, 1) = -1.0;
    EXPECT_THROW(KroneckerSolver{r}, NotPositiveDefiniteError);
}

TEST(KroneckerSolver, RejectsShapeMismatch) {
    const KroneckerSolver solver(KroneckerCov::identity(4, 3));
    EXPECT_THROW(solver.apply_inverse(Matrix::Ones(4, 3)), DimensionError);
}

TEST(Hermitian, EigenDecompositionReconstructs) {
    Rng rng(7);
    const Matrix a = random_hpd(rng, 6, 1e3);
    const HermitianEigen e = hermitian_eig(a);
    for (Index i = 1; i < e.values.size(); ++i) EXPECT_GE(e.values(i - 1), e.values(i));
    const Matrix back = e.vectors * e.values.cast<Complex>().asDiagonal() * e.vectors.adjoint();
    EXPECT_LT((back - a).norm(), 1e-10 * a.norm());
    EXPECT_NEAR(cond_number(a), e.values(0) / e.values(5), 1e-8 * cond_number(a));
}

TEST(Hermitian, SqrtSquaresBack) {
    Rng rng(8);
    const Matrix a = random_hpd(rng, 5);
    const Matrix r = sqrt_psd(a);
    EXPECT_TRUE(is_hermitian(r, 1e-10));
    EXPECT_LT((r * r - a).norm(), 1e-10 * a.norm());
}

TEST(Hermitian, SingularMatrixHasInfiniteCondition) {
    Matrix a = Matrix::Zero(3, 3);
    a(0, 0) = 1.0;
    EXPECT_TRUE(std::isinf(cond_number(a)));
}

TEST(TraceNormalize, UnitTraceAndZeroTraceError) {
    Rng rng(9);
    const Matrix a = random_hpd(rng, 4);
    EXPECT_NEAR(trace_normalize(a).trace().real(), 1.0, 1e-14);
    EXPECT_THROW(trace_normalize(Matrix::Zero(2, 2)), NumericalError);
}

TEST(KronDistance, MatchesMaterializedDifference) {
    Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const KroneckerCov a = random_kron(rng, 4, 3);
        const KroneckerCov b = random_kron(rng, 4, 3);
        const Matrix fa = kron(a.st, a.p) / kron(a.st, a.p).trace();
        const Matrix fb = kron(b.st, b.p) / kron(b.st, b.p).trace();
        EXPECT_NEAR(kron_normalized_distance_sq(a.st, a.p, b.st, b.p), (fb - fa).squaredNorm(),
                    1e-12);
        EXPECT_NEAR(kron_normalized_norm_sq(a.st, a.p), fa.squaredNorm(), 1e-12);
    }
}

TEST(InverseOperator, PseudoInverseForSingularMatrix) {
    Rng rng(12);
    // Rank-deficient sample covariance: fewer samples than dimensions.
    Matrix c = Matrix::Zero(6, 6);
    for (int l = 0; l < 3; ++l) {
        const Vector v = rng.complex_normal_matrix(6, 1);
        c += v * v.adjoint();
    }
    const InverseOperator op(c, 2, 3);
    EXPECT_TRUE(op.pseudo_inverse());
    const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(c);
    const Matrix pinv = cod.pseudoInverse();
    const DataMatrix y = rng.complex_normal_matrix(2, 3);
    const Complex expect = testing::vec_of(y).dot(pinv * testing::vec_of(y));
    EXPECT_NEAR(op.quad_form(y), expect.real(), 1e-8 * std::abs(expect));
}

TEST(InverseOperator, KroneckerAndFullAgree) {
    Rng rng(13);
    const KroneckerCov r = random_kron(rng, 4, 3);
    const InverseOperator a(r);
    const InverseOperator b(materialize(r), 3, 4);
    EXPECT_FALSE(b.pseudo_inverse());
    const DataMatrix s = rng.complex_normal_matrix(3, 4);
    const DataMatrix y = rng.complex_normal_matrix(3, 4);
    EXPECT_LT(std::abs(a.bilinear_form(s, y) - b.bilinear_form(s, y)), 1e-10);
}

}  // namespace
}  // namespace kronest
