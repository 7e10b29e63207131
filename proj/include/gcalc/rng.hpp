#pragma once

// Counter-based random number generation. Every draw is a pure function of
// (seed, stream, step, slot), so simulations are reproducible regardless of
// evaluation order or thread count, and refining a time grid can reuse the
// same underlying noise.

#include "gcalc/common.hpp"

#include <cstdint>

namespace gcalc {

namespace detail {

/// splitmix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// Stateless generator keyed by (seed, stream). `stream` separates
/// independent consumers (one per scenario, per control, ...); `step` and
/// `slot` index draws within a stream.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : base_(detail::mix64(detail::mix64(seed) ^ detail::mix64(stream ^ 0x6A09E667F3BCC909ULL))) {}

    /// 64 uniform bits for (step, slot).
    std::uint64_t bits(std::uint64_t step, std::uint64_t slot) const {
        std::uint64_t h = detail::mix64(base_ ^ detail::mix64(step * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
        return detail::mix64(h ^ detail::mix64(slot * 0x9E3779B97F4A7C15ULL + 0xEB44ACCAB455D165ULL));
    }

    /// Uniform on (0, 1]; never returns 0, safe under log().
    double uniform(std::uint64_t step, std::uint64_t slot) const {
        return (static_cast<double>(bits(step, slot) >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    double uniform(std::uint64_t step, std::uint64_t slot, double lo, double hi) const {
        double u = static_cast<double>(bits(step, slot) >> 11) * 0x1.0p-53;
        return lo + u * (hi - lo);
    }

    /// Standard normal via Box-Muller; slots are independent.
    double normal(std::uint64_t step, std::uint64_t slot) const {
        double u1 = uniform(step, 2 * slot);
        double u2 = static_cast<double>(bits(step, 2 * slot + 1) >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// d independent standard normals for one step.
    Vec normal_vec(std::uint64_t step, int d, std::uint64_t slot0 = 0) const {
        Vec z(d);
        for (int i = 0; i < d; ++i) z(i) = normal(step, slot0 + static_cast<std::uint64_t>(i));
        return z;
    }

private:
    std::uint64_t base_;
};

/// Haar-distributed d x d orthogonal matrix (QR of a Gaussian matrix with
/// the sign convention that makes the factorization unique).
inline Mat random_orthogonal(const CounterRng& rng, int d, std::uint64_t step) {
    Mat g(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            g(i, j) = rng.normal(step, static_cast<std::uint64_t>(i * d + j));
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
    return q;
}

} // namespace gcalc
