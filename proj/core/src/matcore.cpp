#include "kronest/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

namespace kronest {

namespace {

Eigen::LLT<Matrix> factorize(const Matrix& a, const char* which) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw DimensionError(std::string(which) + " factor must be square and non-empty");
    }
    Eigen::LLT<Matrix> llt(hermitian_part(a));
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefiniteError(std::string(which) + " factor is not positive definite");
    }
    // LLT only fails on a non-positive pivot; catch NaN/underflowed pivots too.
    const auto diag = llt.matrixLLT().diagonal().real();
    if (!(diag.minCoeff() > 0.0) || !diag.allFinite()) {
        throw NotPositiveDefiniteError(std::string(which) + " factor is not positive definite");
    }
    return llt;
}

double log_det(const Eigen::LLT<Matrix>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
}

double trace_inverse(const Eigen::LLT<Matrix>& llt) {
    const Index n = llt.rows();
    Matrix linv = Matrix::Identity(n, n);
    llt.matrixL().solveInPlace(linv);
    return linv.squaredNorm();
}

}  // namespace

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

DataMatrix unvec(const Vector& y, Index n_p, Index n_st) {
    if (n_p <= 0 || n_st <= 0 || y.size() != n_p * n_st) {
        throw DimensionError("unvec: vector of length " + std::to_string(y.size()) +
                             " cannot be reshaped to " + std::to_string(n_p) + "x" +
                             std::to_string(n_st));
    }
    return Eigen::Map<const Matrix>(y.data(), n_p, n_st);
}

Vector vec(const DataMatrix& y) {
    return Eigen::Map<const Vector>(y.data(), y.size());
}

Matrix materialize(const KroneckerCov& r, Index cap) {
    if (r.dim() > cap) {
        throw DimensionError("refusing to materialize a " + std::to_string(r.dim()) +
                             "-dimensional Kronecker product (cap " + std::to_string(cap) + ")");
    }
    return kron(r.st.conjugate(), r.p);
}

DataMatrix apply(const DataMatrix& y, const KroneckerCov& r) {
    return r.p * y * r.st;
}

KroneckerSolver::KroneckerSolver(const KroneckerCov& r)
    : st_(factorize(r.st, "space-time")), p_(factorize(r.p, "polarization")) {}

DataMatrix KroneckerSolver::apply_inverse(const DataMatrix& y) const {
    if (y.rows() != p_.rows() || y.cols() != st_.rows()) {
        throw DimensionError("data matrix shape does not match covariance factors");
    }
    const Matrix w = p_.solve(y);
    return st_.solve(w.adjoint()).adjoint();
}

Complex KroneckerSolver::bilinear_form(const DataMatrix& s, const DataMatrix& y) const {
    if (s.rows() != y.rows() || s.cols() != y.cols()) {
        throw DimensionError("bilinear_form: operand shapes differ");
    }
    const Matrix z = apply_inverse(y);
    return (s.conjugate().array() * z.array()).sum();
}

double KroneckerSolver::quad_form(const DataMatrix& y) const {
    return bilinear_form(y, y).real();
}

double KroneckerSolver::log_det_st() const { return log_det(st_); }
double KroneckerSolver::log_det_p() const { return log_det(p_); }
double KroneckerSolver::trace_inv_st() const { return trace_inverse(st_); }
double KroneckerSolver::trace_inv_p() const { return trace_inverse(p_); }

DataMatrix apply_inverse(const DataMatrix& y, const KroneckerCov& r) {
    return KroneckerSolver(r).apply_inverse(y);
}

Complex bilinear_form(const DataMatrix& s, const DataMatrix& y, const KroneckerCov& r) {
    return KroneckerSolver(r).bilinear_form(s, y);
}

double quad_form(const DataMatrix& y, const KroneckerCov& r) {
    return KroneckerSolver(r).quad_form(y);
}

bool is_hermitian(const Matrix& a, double tol) {
    if (a.rows() != a.cols()) return false;
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

Matrix hermitian_part(const Matrix& a) {
    return 0.5 * (a + a.adjoint());
}

HermitianEigen hermitian_eig(const Matrix& a) {
    if (!is_hermitian(a, 1e-10)) {
        throw ContractViolation("hermitian_eig: input is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(a));
    if (es.info() != Eigen::Success) {
        throw NumericalError("hermitian_eig: eigensolver did not converge");
    }
    // Eigen returns ascending order.
    HermitianEigen out;
    out.values = es.eigenvalues().reverse();
    out.vectors = es.eigenvectors().rowwise().reverse();
    return out;
}

Matrix sqrt_psd(const Matrix& a) {
    const HermitianEigen e = hermitian_eig(a);
    const RealVector root = e.values.cwiseMax(0.0).cwiseSqrt();
    return hermitian_part(e.vectors * root.cast<Complex>().asDiagonal() * e.vectors.adjoint());
}

double cond_number(const Matrix& a) {
    const HermitianEigen e = hermitian_eig(a);
    const double lmin = e.values(e.values.size() - 1);
    if (!(lmin > 0.0)) return std::numeric_limits<double>::infinity();
    return e.values(0) / lmin;
}

Matrix trace_normalize(const Matrix& a) {
    const Complex tr = a.trace();
    if (std::abs(tr) == 0.0) {
        throw NumericalError("trace_normalize: matrix has zero trace");
    }
    return a / tr;
}

double kron_normalized_distance_sq(const Matrix& a0, const Matrix& b0, const Matrix& a1,
                                   const Matrix& b1) {
    const Matrix x0 = trace_normalize(a0);
    const Matrix y0 = trace_normalize(b0);
    const Matrix x1 = trace_normalize(a1);
    const Matrix y1 = trace_normalize(b1);
    // x1(x)y1 - x0(x)y0 = (x1 - x0)(x)y1 + x0(x)(y1 - y0)
    const Matrix dx = x1 - x0;
    const Matrix dy = y1 - y0;
    const double cross = (Complex((dx.adjoint() * x0).trace()) *
                          Complex((y1.adjoint() * dy).trace()))
                             .real();
    const double d2 = dx.squaredNorm() * y1.squaredNorm() + x0.squaredNorm() * dy.squaredNorm() +
                      2.0 * cross;
    return std::max(0.0, d2);
}

double kron_normalized_norm_sq(const Matrix& a, const Matrix& b) {
    return trace_normalize(a).squaredNorm() * trace_normalize(b).squaredNorm();
}

InverseOperator::InverseOperator(const KroneckerCov& r)
    : kron_(std::in_place, r), n_p_(r.n_p()), n_st_(r.n_st()) {}

InverseOperator::InverseOperator(const Matrix& full, Index n_p, Index n_st)
    : n_p_(n_p), n_st_(n_st) {
    if (full.rows() != n_p * n_st || full.cols() != n_p * n_st) {
        throw DimensionError("InverseOperator: full matrix has the wrong dimension");
    }
    const HermitianEigen e = hermitian_eig(full);
    const double lmax = e.values(0);
    if (!(lmax > 0.0)) {
        throw NotPositiveDefiniteError("InverseOperator: matrix has no positive eigenvalue");
    }
    const double tol = 1e-10 * lmax;
    RealVector inv(e.values.size());
    for (Index i = 0; i < e.values.size(); ++i) {
        if (e.values(i) > tol) {
            inv(i) = 1.0 / e.values(i);
        } else {
            inv(i) = 0.0;
            pseudo_ = true;
        }
    }
    full_inverse_ = e.vectors * inv.cast<Complex>().asDiagonal() * e.vectors.adjoint();
}

InverseOperator::InverseOperator(const CovEstimate& est, Index n_p, Index n_st)
    : n_p_(n_p), n_st_(n_st) {
    if (const auto* k = std::get_if<KroneckerCov>(&est)) {
        *this = InverseOperator(*k);
    } else {
        *this = InverseOperator(std::get<Matrix>(est), n_p, n_st);
    }
}

DataMatrix InverseOperator::apply(const DataMatrix& y) const {
    if (kron_) return kron_->apply_inverse(y);
    return unvec(full_inverse_ * vec(y), n_p_, n_st_);
}

Complex InverseOperator::bilinear_form(const DataMatrix& s, const DataMatrix& y) const {
    if (kron_) return kron_->bilinear_form(s, y);
    return vec(s).dot(full_inverse_ * vec(y));
}

double InverseOperator::quad_form(const DataMatrix& y) const {
    return bilinear_form(y, y).real();
}

}  // namespace kronest
