// channel.hpp - doubly-dispersive channels with chirp-periodic prefix
//
//     H = sum_p h_p * Phi_p * Z^{f_p} * Pi^{l_p}
//
// Each path contributes one nonzero per row: row n reads sample (n - l_p) mod N.
// Phi_p carries the chirp-periodic prefix phase on the first l_p rows and
// Z^{f} = diag(exp(-j 2 pi n f / N)) the Doppler shift.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "cpim/afdm.hpp"
#include "cpim/error.hpp"
#include "cpim/rng.hpp"
#include "cpim/types.hpp"

namespace cpim {

struct ChannelPath {
    Complex gain;
    int delay = 0;
    double doppler = 0.0;
};

struct ChannelRealization {
    std::vector<ChannelPath> paths;
    int ell_max = 0;
    double f_max = 0.0;

    void validate() const {
        if (paths.empty()) {
            throw InvalidArgument("channel needs at least one path");
        }
        for (const auto& p : paths) {
            if (p.delay < 0 || p.delay > ell_max) {
                throw InvalidArgument("path delay " + std::to_string(p.delay) + " outside [0, " +
                                      std::to_string(ell_max) + "]");
            }
            if (std::abs(p.doppler) > f_max) {
                throw InvalidArgument("path Doppler outside [-f_max, f_max]");
            }
        }
    }
};

struct ChannelSamplerOptions {
    bool fractional_doppler = false;
    bool distinct_delays = true;
};

/// Gains CN(0, 1/P), delays uniform on {0..ell_max}, Doppler uniform integer or real in [-f_max, f_max].
inline ChannelRealization sample_channel(int num_paths, int ell_max, double f_max, Rng& rng,
                                         ChannelSamplerOptions opts = {}) {
    if (num_paths < 1 || ell_max < 0 || f_max < 0.0) {
        throw InvalidArgument("sample_channel: need P >= 1, ell_max >= 0, f_max >= 0");
    }
    if (opts.distinct_delays && num_paths > ell_max + 1) {
        throw InvalidArgument("sample_channel: " + std::to_string(num_paths) + " distinct delays requested from " +
                              std::to_string(ell_max + 1) + " available taps");
    }
    ChannelRealization chan;
    chan.ell_max = ell_max;
    chan.f_max = f_max;

    std::vector<int> delays;
    if (opts.distinct_delays) {
        std::vector<int> taps(static_cast<std::size_t>(ell_max) + 1);
        std::iota(taps.begin(), taps.end(), 0);
        std::shuffle(taps.begin(), taps.end(), rng);
        delays.assign(taps.begin(), taps.begin() + num_paths);
    } else {
        std::uniform_int_distribution<int> tap(0, ell_max);
        for (int p = 0; p < num_paths; ++p) {
            delays.push_back(tap(rng));
        }
    }

    const int f_int = static_cast<int>(std::floor(f_max));
    std::uniform_int_distribution<int> int_doppler(-f_int, f_int);
    std::uniform_real_distribution<double> real_doppler(-f_max, f_max);
    const double variance = 1.0 / num_paths;
    for (int p = 0; p < num_paths; ++p) {
        ChannelPath path;
        path.gain = complex_gaussian(rng, variance);
        path.delay = delays[static_cast<std::size_t>(p)];
        path.doppler = opts.fractional_doppler ? real_doppler(rng) : static_cast<double>(int_doppler(rng));
        chan.paths.push_back(path);
    }
    return chan;
}

/// Diagonal of Phi_p: entry q < l_p is exp(-j 2 pi c1 (N^2 - 2N(l_p - q))), the rest are 1.
inline CVector phase_matrix_phi(int ell, double c1, std::size_t n) {
    if (ell < 0 || static_cast<std::size_t>(ell) >= n) {
        throw InvalidArgument("phase_matrix_phi: delay " + std::to_string(ell) + " must lie in [0, N)");
    }
    CVector phi = CVector::Ones(static_cast<Eigen::Index>(n));
    const long double nn = static_cast<long double>(n);
    for (int q = 0; q < ell; ++q) {
        long double phase = static_cast<long double>(c1) * (nn * nn - 2.0L * nn * static_cast<long double>(ell - q));
        phase -= std::floor(phase);
        phi[q] = unit_phasor(static_cast<double>(phase));
    }
    return phi;
}

/// Doppler diagonal Z^f, entries exp(-j 2 pi n f / N).
inline CVector doppler_diagonal(double f, std::size_t n) {
    CVector z(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
        z[static_cast<Eigen::Index>(k)] = unit_phasor(static_cast<double>(k) * f / static_cast<double>(n));
    }
    return z;
}

/// Row-sparse channel matrix. Each row holds one entry per distinct delay.
class ChannelMatrix {
public:
    struct Entry {
        Eigen::Index col;
        Complex value;
    };

    static constexpr std::size_t kDenseCacheLimit = 64;

    ChannelMatrix(const ChannelRealization& chan, double c1, std::size_t n) : n_(static_cast<Eigen::Index>(n)) {
        chan.validate();
        rows_.resize(n);
        for (const auto& path : chan.paths) {
            if (static_cast<std::size_t>(path.delay) >= n) {
                throw InvalidArgument("channel_matrix: delay " + std::to_string(path.delay) +
                                      " not below N = " + std::to_string(n));
            }
            const CVector phi = phase_matrix_phi(path.delay, c1, n);
            const CVector z = doppler_diagonal(path.doppler, n);
            for (Eigen::Index row = 0; row < n_; ++row) {
                const Eigen::Index col = (row - path.delay + n_) % n_;
                add(static_cast<std::size_t>(row), col, path.gain * phi[row] * z[row]);
            }
        }
        if (n <= kDenseCacheLimit) {
            dense_cache_ = build_dense();
        }
    }

    Eigen::Index size() const { return n_; }
    const std::vector<Entry>& row(Eigen::Index r) const { return rows_[static_cast<std::size_t>(r)]; }

    std::size_t nonzeros() const {
        std::size_t count = 0;
        for (const auto& r : rows_) {
            count += r.size();
        }
        return count;
    }

    CMatrix dense() const { return dense_cache_ ? *dense_cache_ : build_dense(); }

    CVector apply(const CVector& s) const {
        require_size(s.size(), n_, "ChannelMatrix::apply");
        CVector out = CVector::Zero(n_);
        for (Eigen::Index r = 0; r < n_; ++r) {
            Complex acc{0.0, 0.0};
            for (const auto& e : rows_[static_cast<std::size_t>(r)]) {
                acc += e.value * s[e.col];
            }
            out[r] = acc;
        }
        return out;
    }

private:
    void add(std::size_t row, Eigen::Index col, Complex v) {
        for (auto& e : rows_[row]) {
            if (e.col == col) {
                e.value += v;
                return;
            }
        }
        rows_[row].push_back({col, v});
    }

    CMatrix build_dense() const {
        CMatrix h = CMatrix::Zero(n_, n_);
        for (Eigen::Index r = 0; r < n_; ++r) {
            for (const auto& e : rows_[static_cast<std::size_t>(r)]) {
                h(r, e.col) = e.value;
            }
        }
        return h;
    }

    Eigen::Index n_;
    std::vector<std::vector<Entry>> rows_;
    std::optional<CMatrix> dense_cache_;
};

inline ChannelMatrix channel_matrix(const ChannelRealization& chan, double c1, std::size_t n) {
    return {chan, c1, n};
}

namespace detail {
inline CVector add_noise(CVector r, double n0, Rng& rng) {
    if (n0 < 0.0 || !std::isfinite(n0)) {
        throw InvalidArgument("apply_channel: noise variance must be a non-negative finite number");
    }
    if (n0 > 0.0) {
        for (Eigen::Index k = 0; k < r.size(); ++k) {
            r[k] += complex_gaussian(rng, n0);
        }
    }
    return r;
}
} // namespace detail

/// r = H s + w, w ~ CN(0, n0 I). n0 = 0 consumes no randomness.
inline CVector apply_channel(const CVector& s, const ChannelMatrix& h, double n0, Rng& rng) {
    return detail::add_noise(h.apply(s), n0, rng);
}

inline CVector apply_channel(const CVector& s, const CMatrix& h, double n0, Rng& rng) {
    require_size(s.size(), h.cols(), "apply_channel");
    return detail::add_noise(h * s, n0, rng);
}

struct EffectiveChannel {
    CMatrix g;
    PermutationIndex perm;
};

/// G = A_k H A_k^-1.
inline EffectiveChannel effective_channel(const CMatrix& h, const DaftMatrix& daft) {
    require_size(h.rows(), daft.size(), "effective_channel");
    require_size(h.cols(), daft.size(), "effective_channel");
    return {daft.forward() * h * daft.inverse(), daft.perm()};
}

inline EffectiveChannel effective_channel(const ChannelMatrix& h, const DaftMatrix& daft) {
    return effective_channel(h.dense(), daft);
}

} // namespace cpim
