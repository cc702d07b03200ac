#pragma once

#include <cstdint>
#include <random>

#include "kronest/matcore.hpp"

namespace kronest {

/// Draw kinds used to split one experiment seed into independent substreams.
enum class Stream : std::uint64_t {
    texture = 1,
    speckle = 2,
    noise = 3,
    target = 4,
    trial = 5,
    init = 6,
    calibration = 7,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Substream seed for (seed, a, b, c); distinct tuples give decorrelated streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, Stream kind) {
    return derive_seed(seed, a, static_cast<std::uint64_t>(kind));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    /// Circular complex Gaussian with E|z|^2 = variance.
    Complex complex_normal(double variance = 1.0);
    /// Gamma(shape, scale).
    double gamma(double shape, double scale);

    Matrix complex_normal_matrix(Index rows, Index cols, double variance = 1.0);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Random Hermitian positive-definite matrix with condition number roughly <= max_cond.
Matrix random_hpd(Rng& rng, Index n, double max_cond = 50.0);

}  // namespace kronest
