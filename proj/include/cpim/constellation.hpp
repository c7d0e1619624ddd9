// constellation.hpp - unit-energy BPSK / QPSK / 16-QAM with 5G NR style Gray labels
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cpim/error.hpp"
#include "cpim/types.hpp"

namespace cpim {

enum class Modulation { Bpsk, Qpsk, Qam16 };

class Constellation {
public:
    explicit Constellation(Modulation kind) : kind_(kind) {
        switch (kind) {
        case Modulation::Bpsk:
            bits_per_symbol_ = 1;
            break;
        case Modulation::Qpsk:
            bits_per_symbol_ = 2;
            break;
        case Modulation::Qam16:
            bits_per_symbol_ = 4;
            break;
        }
        const std::size_t m = std::size_t{1} << bits_per_symbol_;
        points_.resize(m);
        for (std::size_t label = 0; label < m; ++label) {
            Bits b(static_cast<std::size_t>(bits_per_symbol_));
            for (int t = 0; t < bits_per_symbol_; ++t) {
                b[static_cast<std::size_t>(t)] = static_cast<std::uint8_t>((label >> (bits_per_symbol_ - 1 - t)) & 1U);
            }
            points_[label] = map_group(b.data());
        }
    }

    /// M = 2, 4 or 16.
    static Constellation from_order(int m) {
        switch (m) {
        case 2:
            return Constellation(Modulation::Bpsk);
        case 4:
            return Constellation(Modulation::Qpsk);
        case 16:
            return Constellation(Modulation::Qam16);
        default:
            throw InvalidArgument("unsupported constellation order M = " + std::to_string(m) +
                                  " (supported: 2, 4, 16)");
        }
    }

    Modulation kind() const { return kind_; }
    int order() const { return 1 << bits_per_symbol_; }
    int bits_per_symbol() const { return bits_per_symbol_; }
    /// points()[label], label read MSB first from the symbol's bit group.
    const std::vector<Complex>& points() const { return points_; }

    /// Nearest point (Euclidean); ties go to the lowest label.
    std::size_t nearest_label(Complex z) const {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < points_.size(); ++k) {
            const double d = std::norm(z - points_[k]);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        return best;
    }

    Complex project(Complex z) const { return points_[nearest_label(z)]; }

    CVector project(const CVector& v) const {
        CVector out(v.size());
        for (Eigen::Index k = 0; k < v.size(); ++k) {
            out[k] = project(v[k]);
        }
        return out;
    }

private:
    Complex map_group(const std::uint8_t* b) const {
        const auto s = [](std::uint8_t bit) { return 1.0 - 2.0 * bit; };
        switch (kind_) {
        case Modulation::Bpsk:
            return Complex(s(b[0]), s(b[0])) / std::sqrt(2.0);
        case Modulation::Qpsk:
            return Complex(s(b[0]), s(b[1])) / std::sqrt(2.0);
        case Modulation::Qam16:
            return Complex(s(b[0]) * (2.0 - s(b[2])), s(b[1]) * (2.0 - s(b[3]))) / std::sqrt(10.0);
        }
        return {};
    }

    Modulation kind_;
    int bits_per_symbol_ = 1;
    std::vector<Complex> points_;
};

/// Maps groups of log2(M) bits to points.
inline CVector map_symbols(const Bits& symbol_bits, const Constellation& c) {
    const auto q = static_cast<std::size_t>(c.bits_per_symbol());
    if (symbol_bits.size() % q != 0) {
        throw DimensionError("map_symbols: " + std::to_string(symbol_bits.size()) +
                             " bits is not a multiple of log2(M) = " + std::to_string(q));
    }
    CVector x(static_cast<Eigen::Index>(symbol_bits.size() / q));
    for (Eigen::Index t = 0; t < x.size(); ++t) {
        std::size_t label = 0;
        for (std::size_t k = 0; k < q; ++k) {
            label = (label << 1) | symbol_bits[static_cast<std::size_t>(t) * q + k];
        }
        x[t] = c.points()[label];
    }
    return x;
}

/// Hard decision per entry, then the label bits.
inline Bits demap_symbols(const CVector& x, const Constellation& c) {
    const int q = c.bits_per_symbol();
    Bits out;
    out.reserve(static_cast<std::size_t>(x.size() * q));
    for (Eigen::Index t = 0; t < x.size(); ++t) {
        const std::size_t label = c.nearest_label(x[t]);
        for (int k = q - 1; k >= 0; --k) {
            out.push_back(static_cast<std::uint8_t>((label >> k) & 1U));
        }
    }
    return out;
}

} // namespace cpim
