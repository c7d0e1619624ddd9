// detectors.hpp - brute-force ML and the MMSE-ML filter-bank detector
//
// Both detectors score a hypothesis (k, x) by the received-domain residual
// ||r - H A_k^-1 x||^2, which equals the demodulated-domain form
// ||A_k r - G_k x||^2 because A_k is unitary.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cpim/afdm.hpp"
#include "cpim/channel.hpp"
#include "cpim/codebook.hpp"
#include "cpim/constellation.hpp"
#include "cpim/error.hpp"
#include "cpim/types.hpp"

namespace cpim {

enum class DetectorKind { FullMl, MmseMl, Gas };

inline std::string to_string(DetectorKind d) {
    switch (d) {
    case DetectorKind::FullMl:
        return "full_ml";
    case DetectorKind::MmseMl:
        return "mmse_ml";
    case DetectorKind::Gas:
        return "gas";
    }
    return "?";
}

struct DetectionResult {
    CVector x_hat;
    std::size_t k_hat = 1;
    double metric = 0.0;
    DetectorKind method = DetectorKind::MmseMl;
    /// Number of ML-metric evaluations performed.
    std::uint64_t residual_evaluations = 0;
};

/// ||r - H A_k^-1 x||^2 via the fast modulation path.
inline double ml_residual(const CVector& r, const CMatrix& h, const DaftMatrix& daft, const CVector& x) {
    require_size(r.size(), h.rows(), "ml_residual");
    return (r - h * modulate(x, daft)).squaredNorm();
}

/// ||A_k r - G_k x||^2, the demodulated-domain form of the same metric.
inline double ml_residual_demodulated(const CVector& r, const CMatrix& h, const DaftMatrix& daft, const CVector& x) {
    const CVector y = demodulate(r, daft);
    const CMatrix g = effective_channel(h, daft).g;
    return (y - g * x).squaredNorm();
}

inline constexpr std::uint64_t kDefaultMlBudget = std::uint64_t{1} << 24;

/// K * M^N, saturating at UINT64_MAX.
inline std::uint64_t ml_candidate_count(std::size_t n, int m, std::size_t k) {
    const long double bits = static_cast<long double>(n) * std::log2(static_cast<long double>(m)) +
                             std::log2(static_cast<long double>(k));
    if (bits >= 63.0L) {
        return std::numeric_limits<std::uint64_t>::max();
    }
    std::uint64_t c = k;
    for (std::size_t t = 0; t < n; ++t) {
        c *= static_cast<std::uint64_t>(m);
    }
    return c;
}

/// Exhaustive argmin over (k, x). Ties resolve to the smallest k, then the lexicographically smallest bits.
inline DetectionResult ml_detect_full(const CVector& r, const CMatrix& h, const Codebook& codebook,
                                      const Constellation& constellation,
                                      std::uint64_t budget = kDefaultMlBudget) {
    const std::size_t n = codebook.params().n_subcarriers;
    require_size(r.size(), static_cast<Eigen::Index>(n), "ml_detect_full");
    require_size(h.rows(), static_cast<Eigen::Index>(n), "ml_detect_full");
    const int m = constellation.order();
    const std::uint64_t candidates = ml_candidate_count(n, m, codebook.size());
    if (candidates > budget) {
        throw BudgetError("full ML needs K*M^N = " +
                          (candidates == std::numeric_limits<std::uint64_t>::max() ? std::string(">= 2^63")
                                                                                   : std::to_string(candidates)) +
                          " candidates, above the budget of " + std::to_string(budget) +
                          "; use the mmse_ml or gas detector instead");
    }
    const auto& pts = constellation.points();
    const auto len = static_cast<Eigen::Index>(n);

    DetectionResult best;
    best.method = DetectorKind::FullMl;
    best.metric = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best_labels;

    for (std::size_t k = 1; k <= codebook.size(); ++k) {
        const CMatrix b = h * codebook.daft(k).inverse();
        // Odometer over symbol labels; symbol 0 is the most significant digit so
        // the visiting order is lexicographic in the bit string.
        std::vector<std::size_t> labels(n, 0);
        CVector res = r - b * CVector::Constant(len, pts[0]);
        while (true) {
            const double metric = res.squaredNorm();
            ++best.residual_evaluations;
            if (metric < best.metric) {
                best.metric = metric;
                best.k_hat = k;
                best_labels = labels;
            }
            Eigen::Index t = len - 1;
            while (t >= 0 && labels[static_cast<std::size_t>(t)] + 1 == pts.size()) {
                res += b.col(t) * (pts.back() - pts[0]);
                labels[static_cast<std::size_t>(t)] = 0;
                --t;
            }
            if (t < 0) {
                break;
            }
            auto& lab = labels[static_cast<std::size_t>(t)];
            res -= b.col(t) * (pts[lab + 1] - pts[lab]);
            ++lab;
        }
    }
    best.x_hat.resize(len);
    for (Eigen::Index t = 0; t < len; ++t) {
        best.x_hat[t] = pts[best_labels[static_cast<std::size_t>(t)]];
    }
    // The odometer accumulates rounding; report the exact residual of the winner.
    best.metric = ml_residual(r, h, codebook.daft(best.k_hat), best.x_hat);
    return best;
}

/// H^H (H H^H + N0 I)^-1 shared by every codeword, and optionally the K filters A_k * common.
struct MmseFilterBank {
    CMatrix common;
    std::vector<CMatrix> per_perm;
    /// Matrix inversions performed while building the bank.
    int inversions = 0;
    double reciprocal_condition = 0.0;

    /// M_k r computed as A_k (common r) without forming M_k.
    CVector apply(std::size_t k, const CVector& r, const Codebook& codebook) const {
        return demodulate(common * r, codebook.daft(k));
    }
};

inline constexpr double kMinReciprocalCondition = 1e-12;

inline MmseFilterBank build_mmse_bank(const CMatrix& h, const Codebook& codebook, double n0,
                                      bool materialize_filters = true) {
    const auto n = codebook.params().size();
    require_size(h.rows(), n, "build_mmse_bank");
    require_size(h.cols(), n, "build_mmse_bank");
    if (n0 < 0.0 || !std::isfinite(n0)) {
        throw InvalidArgument("build_mmse_bank: N0 must be a non-negative finite number");
    }
    MmseFilterBank bank;
    const CMatrix gram = h * h.adjoint() + n0 * CMatrix::Identity(n, n);
    Eigen::PartialPivLU<CMatrix> lu(gram);
    const CMatrix inv = lu.inverse();
    // Exact 1-norm condition from the inverse; the LU estimator misses exact singularity.
    const auto norm1 = [](const CMatrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); };
    const double inv_norm = norm1(inv);
    bank.reciprocal_condition = std::isfinite(inv_norm) && inv_norm > 0.0 ? 1.0 / (norm1(gram) * inv_norm) : 0.0;
    if (!(bank.reciprocal_condition >= kMinReciprocalCondition)) {
        throw NumericalError("build_mmse_bank: H H^H + N0 I is singular to working precision (condition number " +
                             (bank.reciprocal_condition > 0.0 ? std::to_string(1.0 / bank.reciprocal_condition)
                                                              : std::string("infinite")) +
                             ")");
    }
    bank.common = h.adjoint() * inv;
    bank.inversions = 1;
    if (materialize_filters) {
        bank.per_perm.reserve(codebook.size());
        for (std::size_t k = 1; k <= codebook.size(); ++k) {
            CMatrix mk(n, n);
            for (Eigen::Index c = 0; c < n; ++c) {
                mk.col(c) = demodulate(bank.common.col(c), codebook.daft(k));
            }
            bank.per_perm.push_back(std::move(mk));
        }
    }
    return bank;
}

/// Per codeword: soft estimate M_k r, per-entry hard decision, residual; keep the smallest residual.
inline DetectionResult mmse_ml_detect(const CVector& r, const CMatrix& h, const Codebook& codebook,
                                      const MmseFilterBank& bank, const Constellation& constellation) {
    require_size(r.size(), codebook.params().size(), "mmse_ml_detect");
    const CVector shared = bank.common * r;
    DetectionResult best;
    best.method = DetectorKind::MmseMl;
    best.metric = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= codebook.size(); ++k) {
        const CVector x = constellation.project(demodulate(shared, codebook.daft(k)));
        const double metric = ml_residual(r, h, codebook.daft(k), x);
        ++best.residual_evaluations;
        if (metric < best.metric) {
            best.metric = metric;
            best.k_hat = k;
            best.x_hat = x;
        }
    }
    return best;
}

inline DetectionResult mmse_ml_detect(const CVector& r, const CMatrix& h, const Codebook& codebook, double n0,
                                      const Constellation& constellation) {
    const auto bank = build_mmse_bank(h, codebook, n0, /*materialize_filters=*/false);
    return mmse_ml_detect(r, h, codebook, bank, constellation);
}

} // namespace cpim
