#include "kronest/rng.hpp"

#include <cmath>

#include <Eigen/QR>

namespace kronest {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ splitmix64(a + 0x632BE59BD9B4E019ULL));
    h = splitmix64(h ^ splitmix64(b + 0x85157AF5ULL));
    h = splitmix64(h ^ splitmix64(c + 0x2545F4914F6CDD1DULL));
    return h;
}

Complex Rng::complex_normal(double variance) {
    const double s = std::sqrt(0.5 * variance);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
}

double Rng::gamma(double shape, double scale) {
    std::gamma_distribution<double> dist(shape, scale);
    return dist(engine_);
}

Matrix Rng::complex_normal_matrix(Index rows, Index cols, double variance) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = complex_normal(variance);
    }
    return m;
}

Matrix random_hpd(Rng& rng, Index n, double max_cond) {
    const Matrix g = rng.complex_normal_matrix(n, n);
    const Eigen::HouseholderQR<Matrix> qr(g);
    const Matrix q = qr.householderQ();
    RealVector lambda(n);
    const double log_span = std::log(max_cond);
    for (Index i = 0; i < n; ++i) lambda(i) = std::exp(log_span * rng.uniform());
    Matrix a = q * lambda.cast<Complex>().asDiagonal() * q.adjoint();
    return 0.5 * (a + a.adjoint());
}

}  // namespace kronest
