#pragma once

// Shared fixtures for the unit and acceptance tests. Everything here is built
// from Eigen primitives directly so it can serve as an oracle for the library.

#include <cmath>
#include <cstdint>

#include "kronest/cluttergen.hpp"
#include "kronest/matcore.hpp"
#include "kronest/rng.hpp"

namespace kronest::testing {

/// Column-major vec(Y) -> conj(R_st) (x) R_p materialized element by element.
inline Matrix brute_kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            for (Index r = 0; r < b.rows(); ++r)
                for (Index c = 0; c < b.cols(); ++c)
                    out(i * b.rows() + r, j * b.cols() + c) = a(i, j) * b(r, c);
    return out;
}

/// Covariance of vec(Y) in the library's layout.
inline Matrix full_cov(const KroneckerCov& r) { return brute_kron(r.st.conjugate(), r.p); }

inline Vector vec_of(const DataMatrix& y) {
    Vector v(y.size());
    for (Index c = 0; c < y.cols(); ++c)
        for (Index r = 0; r < y.rows(); ++r) v(c * y.rows() + r) = y(r, c);
    return v;
}

inline KroneckerCov random_kron(Rng& rng, Index n_st, Index n_p, double max_cond = 50.0) {
    return {random_hpd(rng, n_st, max_cond), random_hpd(rng, n_p, max_cond)};
}

/// Compound-Gaussian samples with Gamma(nu) texture drawn through the materialized
/// covariance, independent of the scene generator.
inline SampleSet cg_samples(Rng& rng, const KroneckerCov& truth, std::size_t L, double nu = 1.0) {
    const Index n_st = truth.n_st();
    const Index n_p = truth.n_p();
    const Matrix c = full_cov(truth);
    const Eigen::LLT<Matrix> llt(c);
    const Matrix lower = llt.matrixL();
    SampleSet s;
    s.n_p = n_p;
    s.n_st = n_st;
    s.truth = truth;
    for (std::size_t l = 0; l < L; ++l) {
        const Vector z = rng.complex_normal_matrix(c.rows(), 1);
        const double tau = std::isinf(nu) ? 1.0 : rng.gamma(nu, 1.0 / nu);
        const Vector y = std::sqrt(tau) * (lower * z);
        DataMatrix m(n_p, n_st);
        for (Index col = 0; col < n_st; ++col)
            for (Index row = 0; row < n_p; ++row) m(row, col) = y(col * n_p + row);
        s.samples.push_back(m);
    }
    return s;
}

inline double rel_diff(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

}  // namespace kronest::testing
