// types.hpp - numeric aliases and small helpers
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "cpim/error.hpp"

namespace cpim {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

/// Bit strings are stored one bit per byte, values 0 or 1.
using Bits = std::vector<std::uint8_t>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// exp(-j 2 pi phase), with the phase reduced mod 1 first so large arguments keep precision.
inline Complex unit_phasor(double phase) {
    double frac = phase - std::floor(phase);
    return std::polar(1.0, -kTwoPi * frac);
}

inline bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

/// log2 of a power of two.
inline int exact_log2(std::uint64_t v) {
    if (!is_power_of_two(v)) {
        throw InvalidArgument("value " + std::to_string(v) + " is not a power of two");
    }
    int k = 0;
    while ((std::uint64_t{1} << k) != v) {
        ++k;
    }
    return k;
}

inline void require_size(Eigen::Index got, Eigen::Index want, const char* what) {
    if (got != want) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(want) +
                             ", got " + std::to_string(got));
    }
}

} // namespace cpim
