// Shared helpers and independent reference constructions for the test suites.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "cpim/cpim.hpp"

namespace cpim::testing {

inline CVector random_cvector(std::size_t n, Rng& rng) {
    CVector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = complex_gaussian(rng, 1.0);
    }
    return v;
}

inline CMatrix random_cmatrix(std::size_t n, Rng& rng) {
    CMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = complex_gaussian(rng, 1.0);
        }
    }
    return m;
}

inline Complex expj(long double phase) {
    return {static_cast<double>(std::cos(phase)), static_cast<double>(std::sin(phase))};
}

/// A[m][n] = exp(-j2pi c2 pi(m)^2) exp(-j2pi mn/N) / sqrt(N) exp(-j2pi c1 n^2), entry by entry.
inline CMatrix reference_daft(std::size_t n, double c1, double c2, const std::vector<std::size_t>& perm) {
    const long double two_pi = 2.0L * 3.14159265358979323846264338327950288L;
    CMatrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t m = 0; m < n; ++m) {
        const long double pm = static_cast<long double>(perm[m]);
        for (std::size_t k = 0; k < n; ++k) {
            const long double mk = static_cast<long double>((m * k) % n);
            const long double kk = static_cast<long double>(k);
            const long double phase =
                -two_pi * (static_cast<long double>(c2) * pm * pm + mk / static_cast<long double>(n) +
                           static_cast<long double>(c1) * kk * kk);
            a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) =
                expj(phase) / std::sqrt(static_cast<double>(n));
        }
    }
    return a;
}

/// Sum over paths of h * Phi * Z^f * Pi^ell built as explicit dense products.
inline CMatrix reference_channel(const ChannelRealization& chan, double c1, std::size_t n) {
    const auto nn = static_cast<Eigen::Index>(n);
    const long double two_pi = 2.0L * 3.14159265358979323846264338327950288L;
    CMatrix h = CMatrix::Zero(nn, nn);
    for (const auto& p : chan.paths) {
        CMatrix phi = CMatrix::Identity(nn, nn);
        for (int q = 0; q < p.delay; ++q) {
            const long double arg = static_cast<long double>(n) * n - 2.0L * n * (p.delay - q);
            phi(q, q) = expj(-two_pi * static_cast<long double>(c1) * arg);
        }
        CMatrix z = CMatrix::Zero(nn, nn);
        for (Eigen::Index t = 0; t < nn; ++t) {
            z(t, t) = expj(-two_pi * static_cast<long double>(t) * p.doppler / static_cast<long double>(n));
        }
        CMatrix pi = CMatrix::Zero(nn, nn);
        for (Eigen::Index t = 0; t < nn; ++t) {
            pi(t, (t - p.delay + nn) % nn) = 1.0;
        }
        h += p.gain * phi * z * pi;
    }
    return h;
}

inline Bits bits_of(std::uint64_t value, std::size_t width) {
    Bits b(width);
    for (std::size_t i = 0; i < width; ++i) {
        b[i] = static_cast<std::uint8_t>((value >> (width - 1 - i)) & 1U);
    }
    return b;
}

} // namespace cpim::testing
