// codec.hpp - CPIM frame assembly: B1 symbol bits + B2 codeword-index bits
#pragma once

#include <cstdint>
#include <string>

#include "cpim/afdm.hpp"
#include "cpim/codebook.hpp"
#include "cpim/constellation.hpp"
#include "cpim/error.hpp"
#include "cpim/types.hpp"

namespace cpim {

/// B = N log2(M) + log2(K).
inline std::size_t frame_bits(std::size_t n, int m, std::size_t k) {
    return n * static_cast<std::size_t>(exact_log2(static_cast<std::uint64_t>(m))) +
           static_cast<std::size_t>(exact_log2(k));
}

struct SplitBits {
    Bits symbol_bits;
    Bits index_bits;
    std::size_t k_star = 1;
};

/// Index bits are read most-significant first: k* = 1 + value(index_bits).
inline std::size_t index_from_bits(const Bits& index_bits) {
    std::size_t v = 0;
    for (auto b : index_bits) {
        v = (v << 1) | b;
    }
    return v + 1;
}

inline Bits bits_from_index(std::size_t k, int width) {
    Bits out(static_cast<std::size_t>(width));
    const std::size_t v = k - 1;
    for (int t = 0; t < width; ++t) {
        out[static_cast<std::size_t>(t)] = static_cast<std::uint8_t>((v >> (width - 1 - t)) & 1U);
    }
    return out;
}

inline SplitBits bit_split(const Bits& bits, std::size_t n, int m, std::size_t k) {
    const std::size_t b1 = n * static_cast<std::size_t>(exact_log2(static_cast<std::uint64_t>(m)));
    const std::size_t b = frame_bits(n, m, k);
    if (bits.size() != b) {
        throw DimensionError("bit_split: expected " + std::to_string(b) + " bits, got " + std::to_string(bits.size()));
    }
    SplitBits out;
    out.symbol_bits.assign(bits.begin(), bits.begin() + static_cast<std::ptrdiff_t>(b1));
    out.index_bits.assign(bits.begin() + static_cast<std::ptrdiff_t>(b1), bits.end());
    out.k_star = index_from_bits(out.index_bits);
    return out;
}

struct CpimFrame {
    Bits bits;
    CVector symbols;
    std::size_t perm_choice = 1;
    CVector signal;
};

inline CpimFrame encode(const Bits& bits, const Codebook& codebook, const Constellation& constellation,
                        TransformPath path = TransformPath::Fast) {
    const std::size_t n = codebook.params().n_subcarriers;
    auto split = bit_split(bits, n, constellation.order(), codebook.size());
    CpimFrame frame;
    frame.bits = bits;
    frame.symbols = map_symbols(split.symbol_bits, constellation);
    frame.perm_choice = split.k_star;
    frame.signal = modulate(frame.symbols, codebook.daft(split.k_star), path);
    return frame;
}

/// Demapped symbol bits followed by the log2(K)-bit encoding of k_hat - 1.
inline Bits decode_bits(const CVector& x_hat, std::size_t k_hat, const Codebook& codebook,
                        const Constellation& constellation) {
    if (k_hat < 1 || k_hat > codebook.size()) {
        throw IndexError("decode_bits: k = " + std::to_string(k_hat) + " outside [1, " +
                         std::to_string(codebook.size()) + "]");
    }
    require_size(x_hat.size(), codebook.params().size(), "decode_bits");
    Bits out = demap_symbols(x_hat, constellation);
    const Bits idx = bits_from_index(k_hat, codebook.index_bits());
    out.insert(out.end(), idx.begin(), idx.end());
    return out;
}

} // namespace cpim
