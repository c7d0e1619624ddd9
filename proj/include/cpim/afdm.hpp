// afdm.hpp - chirp sequences and permuted DAFT/IDAFT transforms
//
// The permuted forward transform is
//
//     A_i = diag(perm(lambda_c2, i)) * F_N * diag(lambda_c1)
//
// with lambda_c[n] = exp(-j 2 pi c n^2) and F_N the unitary N-point DFT.
// Modulation applies A_i^-1 = A_i^H, demodulation applies A_i. Both are
// available as a dense-matrix reference and as a diagonal-FFT-diagonal fast
// path; the fast path never forms an N x N matrix.
#pragma once

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <cstddef>
#include <vector>

#include "cpim/error.hpp"
#include "cpim/permutation.hpp"
#include "cpim/types.hpp"

namespace cpim {

inline CVector chirp_vector(double c, std::size_t n) {
    if (n == 0) {
        throw DimensionError("chirp_vector: N must be at least 1");
    }
    CVector v(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
        // c * k^2 in long double keeps the reduced phase accurate for large k.
        long double phase = static_cast<long double>(c) * static_cast<long double>(k) * static_cast<long double>(k);
        phase -= std::floor(phase);
        v[static_cast<Eigen::Index>(k)] = unit_phasor(static_cast<double>(phase));
    }
    return v;
}

/// Chirp frequency that separates integer delay-Doppler paths: (2(f_max + xi) + 1) / (2N).
inline double optimal_c1(int f_max, int xi, std::size_t n) {
    if (n == 0) {
        throw DimensionError("optimal_c1: N must be at least 1");
    }
    if (f_max < 0 || xi < 0) {
        throw InvalidArgument("optimal_c1: f_max and xi must be non-negative");
    }
    return (2.0 * (f_max + xi) + 1.0) / (2.0 * static_cast<double>(n));
}

/// Golden-ratio based irrational default, (sqrt(5) - 1) / (2N).
inline double default_c2(std::size_t n) {
    if (n == 0) {
        throw DimensionError("default_c2: N must be at least 1");
    }
    return (std::sqrt(5.0) - 1.0) / (2.0 * static_cast<double>(n));
}

struct ChirpParams {
    std::size_t n_subcarriers = 0;
    double c1 = 0.0;
    double c2 = 0.0;
    int guard_xi = 0;
    /// Maximum normalized Doppler c1 was designed for (informational).
    int f_max = 0;

    ChirpParams() = default;
    ChirpParams(std::size_t n, double c1_, double c2_, int xi = 0, int fmax = 0)
        : n_subcarriers(n), c1(c1_), c2(c2_), guard_xi(xi), f_max(fmax) {
        validate();
    }

    /// c1 from optimal_c1(f_max, xi, N); c2 defaults to default_c2(N).
    static ChirpParams optimal(std::size_t n, int f_max, int xi = 0) {
        return {n, optimal_c1(f_max, xi, n), default_c2(n), xi, f_max};
    }
    static ChirpParams optimal(std::size_t n, int f_max, int xi, double c2) {
        return {n, optimal_c1(f_max, xi, n), c2, xi, f_max};
    }

    void validate() const {
        if (n_subcarriers < 2) {
            throw DimensionError("ChirpParams: N must be at least 2");
        }
        if (guard_xi < 0) {
            throw InvalidArgument("ChirpParams: guard width must be non-negative");
        }
        if (!std::isfinite(c1) || !std::isfinite(c2)) {
            throw InvalidArgument("ChirpParams: chirp frequencies must be finite");
        }
    }

    Eigen::Index size() const { return static_cast<Eigen::Index>(n_subcarriers); }
};

/// Unitary N-point DFT matrix, F[m][n] = exp(-j 2 pi m n / N) / sqrt(N).
inline CMatrix dft_matrix(std::size_t n) {
    const auto len = static_cast<Eigen::Index>(n);
    CMatrix f(len, len);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t m = 0; m < n; ++m) {
        for (std::size_t k = 0; k < n; ++k) {
            f(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) =
                scale * unit_phasor(static_cast<double>((m * k) % n) / static_cast<double>(n));
        }
    }
    return f;
}

/// lambda permuted by an explicit permutation: out[n] = lambda[perm[n]].
inline CVector permute_entries(const CVector& lambda, const Permutation& perm) {
    require_size(static_cast<Eigen::Index>(perm.size()), lambda.size(), "permute_entries");
    CVector out(lambda.size());
    for (std::size_t k = 0; k < perm.size(); ++k) {
        out[static_cast<Eigen::Index>(k)] = lambda[static_cast<Eigen::Index>(perm[k])];
    }
    return out;
}

enum class TransformPath { Fast, Dense };

/// A permuted DAFT: the two chirp diagonals plus, for the reference path, the dense matrices.
class DaftMatrix {
public:
    DaftMatrix(const ChirpParams& params, const PermutationIndex& perm)
        : params_(params), perm_(perm) {
        params_.validate();
        if (perm.order() != params.n_subcarriers) {
            throw DimensionError("daft_matrix: permutation order " + std::to_string(perm.order()) +
                                 " does not match N = " + std::to_string(params.n_subcarriers));
        }
        lambda_c1_ = chirp_vector(params.c1, params.n_subcarriers);
        lambda_c2_ = permute_entries(chirp_vector(params.c2, params.n_subcarriers), permutation_from_index(perm));
        forward_ = lambda_c2_.asDiagonal() * dft_matrix(params.n_subcarriers) * lambda_c1_.asDiagonal();
        inverse_ = forward_.adjoint();
    }

    const CMatrix& forward() const { return forward_; }
    const CMatrix& inverse() const { return inverse_; }
    const PermutationIndex& perm() const { return perm_; }
    const ChirpParams& params() const { return params_; }
    const CVector& lambda_c1() const { return lambda_c1_; }
    /// The permuted second chirp, perm(lambda_c2, i).
    const CVector& lambda_c2() const { return lambda_c2_; }
    Eigen::Index size() const { return params_.size(); }

private:
    ChirpParams params_;
    PermutationIndex perm_;
    CVector lambda_c1_;
    CVector lambda_c2_;
    CMatrix forward_;
    CMatrix inverse_;
};

inline DaftMatrix daft_matrix(const ChirpParams& params, const PermutationIndex& perm) { return {params, perm}; }

namespace detail {

inline Eigen::FFT<double>& thread_fft() {
    thread_local Eigen::FFT<double> fft;
    return fft;
}

/// Unitary DFT of v (forward) or its adjoint (inverse).
inline CVector unitary_fft(const CVector& v, bool inverse) {
    auto& fft = thread_fft();
    std::vector<Complex> in(v.data(), v.data() + v.size());
    std::vector<Complex> out;
    const double n = static_cast<double>(v.size());
    if (inverse) {
        fft.inv(out, in); // includes 1/N
        CVector r = Eigen::Map<CVector>(out.data(), v.size());
        return r * std::sqrt(n);
    }
    fft.fwd(out, in);
    CVector r = Eigen::Map<CVector>(out.data(), v.size());
    return r / std::sqrt(n);
}

} // namespace detail

/// s = A_i^-1 x.
inline CVector modulate(const CVector& x, const DaftMatrix& daft, TransformPath path = TransformPath::Fast) {
    require_size(x.size(), daft.size(), "modulate");
    if (path == TransformPath::Dense) {
        return daft.inverse() * x;
    }
    CVector v = daft.lambda_c2().conjugate().cwiseProduct(x);
    v = detail::unitary_fft(v, /*inverse=*/true);
    return daft.lambda_c1().conjugate().cwiseProduct(v);
}

/// y = A_i r.
inline CVector demodulate(const CVector& r, const DaftMatrix& daft, TransformPath path = TransformPath::Fast) {
    require_size(r.size(), daft.size(), "demodulate");
    if (path == TransformPath::Dense) {
        return daft.forward() * r;
    }
    CVector v = daft.lambda_c1().cwiseProduct(r);
    v = detail::unitary_fft(v, /*inverse=*/false);
    return daft.lambda_c2().cwiseProduct(v);
}

} // namespace cpim
