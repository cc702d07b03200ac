#pragma once

#include <complex>
#include <optional>
#include <variant>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "kronest/error.hpp"

namespace kronest {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// N_p x N_st data matrix holding one sample in the column-fill layout.
using DataMatrix = Matrix;

/// Largest N for which an N x N Kronecker product may be formed explicitly.
inline constexpr Index kMaterializationCap = 64;

/// R = R_st (x) R_p, stored as its two Hermitian positive-definite factors.
struct KroneckerCov {
    Matrix st;
    Matrix p;

    Index n_st() const { return st.rows(); }
    Index n_p() const { return p.rows(); }
    Index dim() const { return st.rows() * p.rows(); }

    static KroneckerCov identity(Index n_st, Index n_p) {
        return {Matrix::Identity(n_st, n_st), Matrix::Identity(n_p, n_p)};
    }
};

/// Plain Kronecker product: (A (x) B)[i*rb + r, j*cb + c] = A[i,j] * B[r,c].
Matrix kron(const Matrix& a, const Matrix& b);

/// Reshape a length N_p*N_st vector into N_p x N_st, filling column by column.
DataMatrix unvec(const Vector& y, Index n_p, Index n_st);
Vector vec(const DataMatrix& y);

/// The N x N operator on vec(Y) that matches the factorized quadratic form,
/// i.e. conj(R_st) (x) R_p. Refuses when N exceeds `cap`.
Matrix materialize(const KroneckerCov& r, Index cap = kMaterializationCap);

/// R_p * Y * R_st, the forward action of R on a data matrix.
DataMatrix apply(const DataMatrix& y, const KroneckerCov& r);

/// Cholesky factors of both Kronecker factors, reused across many samples.
class KroneckerSolver {
public:
    explicit KroneckerSolver(const KroneckerCov& r);

    /// R_p^{-1} Y R_st^{-1}.
    DataMatrix apply_inverse(const DataMatrix& y) const;
    /// Tr(R_st^{-1} S^H R_p^{-1} Y).
    Complex bilinear_form(const DataMatrix& s, const DataMatrix& y) const;
    double quad_form(const DataMatrix& y) const;

    double log_det_st() const;
    double log_det_p() const;
    /// Tr(R_st^{-1}) and Tr(R_p^{-1}).
    double trace_inv_st() const;
    double trace_inv_p() const;

    const Eigen::LLT<Matrix>& st() const { return st_; }
    const Eigen::LLT<Matrix>& p() const { return p_; }

private:
    Eigen::LLT<Matrix> st_;
    Eigen::LLT<Matrix> p_;
};

DataMatrix apply_inverse(const DataMatrix& y, const KroneckerCov& r);
Complex bilinear_form(const DataMatrix& s, const DataMatrix& y, const KroneckerCov& r);
double quad_form(const DataMatrix& y, const KroneckerCov& r);

/// Eigenvalues sorted descending with matching unitary eigenvectors.
struct HermitianEigen {
    RealVector values;
    Matrix vectors;
};

bool is_hermitian(const Matrix& a, double tol = 1e-12);
Matrix hermitian_part(const Matrix& a);
HermitianEigen hermitian_eig(const Matrix& a);
Matrix sqrt_psd(const Matrix& a);
/// lambda_max / lambda_min; +inf when lambda_min <= 0.
double cond_number(const Matrix& a);
Matrix trace_normalize(const Matrix& a);

/// ||A0 (x) B0 / Tr - A1 (x) B1 / Tr||_F^2 without forming either product.
double kron_normalized_distance_sq(const Matrix& a0, const Matrix& b0, const Matrix& a1,
                                   const Matrix& b1);
/// ||A (x) B / Tr(A (x) B)||_F^2.
double kron_normalized_norm_sq(const Matrix& a, const Matrix& b);

/// A covariance estimate: either Kronecker-structured or an unstructured N x N matrix
/// expressed in the conj(R_st) (x) R_p operator convention.
using CovEstimate = std::variant<KroneckerCov, Matrix>;

/// Inverse (or pseudo-inverse for a singular unstructured matrix) of an estimate,
/// acting on data matrices.
class InverseOperator {
public:
    explicit InverseOperator(const KroneckerCov& r);
    InverseOperator(const Matrix& full, Index n_p, Index n_st);
    explicit InverseOperator(const CovEstimate& est, Index n_p, Index n_st);

    DataMatrix apply(const DataMatrix& y) const;
    Complex bilinear_form(const DataMatrix& s, const DataMatrix& y) const;
    double quad_form(const DataMatrix& y) const;
    bool pseudo_inverse() const { return pseudo_; }

private:
    std::optional<KroneckerSolver> kron_;
    Matrix full_inverse_;
    Index n_p_ = 0;
    Index n_st_ = 0;
    bool pseudo_ = false;
};

}  // namespace kronest
