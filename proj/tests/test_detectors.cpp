#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace cpim;
using cpim::testing::bits_of;
using cpim::testing::random_cmatrix;
using cpim::testing::random_cvector;

namespace {

Codebook codebook_for(std::size_t n, std::size_t k, Rng& rng, int f_max = 1) {
    std::vector<PermutationIndex> entries;
    std::set<PermutationIndex> seen;
    while (entries.size() < k) {
        auto q = random_permutation_index(n, rng);
        if (seen.insert(q).second) {
            entries.push_back(q);
        }
    }
    return {ChirpParams::optimal(n, f_max, 0), entries};
}

struct Frame {
    Bits bits;
    CpimFrame frame;
    CMatrix h;
    CVector r;
};

Frame transmit(const Codebook& cb, const Constellation& c, double n0, Rng& rng, int ell_max = 1, int f_max = 1) {
    Frame f;
    const std::size_t n = cb.params().n_subcarriers;
    f.bits = random_bits(rng, frame_bits(n, c.order(), cb.size()));
    f.frame = encode(f.bits, cb, c);
    const auto ch = sample_channel(std::min(3, ell_max + 1), ell_max, f_max, rng);
    f.h = channel_matrix(ch, cb.params().c1, n).dense();
    f.r = apply_channel(f.frame.signal, f.h, n0, rng);
    return f;
}

} // namespace

TEST(Residual, DualFormsAgree) {
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        const Codebook cb = codebook_for(8, 4, rng);
        const auto& a = cb.daft(1 + static_cast<std::size_t>(t % 4));
        const CMatrix h = random_cmatrix(8, rng);
        const CVector x = random_cvector(8, rng);
        const CVector r = h * modulate(x, a) + random_cvector(8, rng);
        const double v1 = ml_residual(r, h, a, x);
        const double v2 = ml_residual_demodulated(r, h, a, x);
        EXPECT_NEAR(v1, v2, 1e-9 * std::max(1.0, v1));
    }
}

TEST(FullMl, NoiselessRecovery) {
    Rng rng(2);
    const auto c = Constellation::from_order(2);
    for (int t = 0; t < 100; ++t) {
        const Codebook cb = codebook_for(4, 2, rng);
        const Frame f = transmit(cb, c, 0.0, rng);
        const auto det = ml_detect_full(f.r, f.h, cb, c);
        EXPECT_EQ(det.k_hat, f.frame.perm_choice);
        EXPECT_LT((det.x_hat - f.frame.symbols).norm(), 1e-12);
        EXPECT_LT(det.metric, 1e-18);
        EXPECT_EQ(det.method, DetectorKind::FullMl);
    }
}

TEST(FullMl, ClassicalWhenKIsOne) {
    Rng rng(3);
    const auto c = Constellation::from_order(4);
    const Codebook cb = Codebook::classical(ChirpParams::optimal(4, 1, 0));
    for (int t = 0; t < 20; ++t) {
        const Frame f = transmit(cb, c, 0.3, rng);
        EXPECT_EQ(ml_detect_full(f.r, f.h, cb, c).k_hat, 1u);
    }
}

TEST(FullMl, NeverWorseThanTransmittedHypothesis) {
    Rng rng(4);
    const auto c = Constellation::from_order(2);
    for (int t = 0; t < 100; ++t) {
        const Codebook cb = codebook_for(4, 2, rng);
        const Frame f = transmit(cb, c, 0.5, rng);
        const auto det = ml_detect_full(f.r, f.h, cb, c);
        EXPECT_LE(det.metric, ml_residual(f.r, f.h, cb.daft(f.frame.perm_choice), f.frame.symbols) + 1e-12);
        EXPECT_NEAR(det.metric, ml_residual(f.r, f.h, cb.daft(det.k_hat), det.x_hat), 1e-9);
    }
}

// Independent brute force: dense A_k^-1 and every candidate enumerated by value.
TEST(FullMl, MatchesBruteForceAtTinySize) {
    Rng rng(5);
    for (int m : {2, 4}) {
        const auto c = Constellation::from_order(m);
        for (int t = 0; t < 50; ++t) {
            const Codebook cb = codebook_for(2, 2, rng, 0);
            const CMatrix h = random_cmatrix(2, rng);
            const CVector r = random_cvector(2, rng);
            const auto det = ml_detect_full(r, h, cb, c);
            const std::size_t b1 = 2 * static_cast<std::size_t>(c.bits_per_symbol());
            double best = 1e300;
            std::size_t best_k = 0;
            Bits best_b;
            for (std::size_t k = 1; k <= 2; ++k) {
                const CMatrix b = h * cb.daft(k).inverse();
                for (std::uint64_t v = 0; v < (1ULL << b1); ++v) {
                    const Bits bits = bits_of(v, b1);
                    const double e = (r - b * map_symbols(bits, c)).squaredNorm();
                    if (e < best - 1e-12) {
                        best = e;
                        best_k = k;
                        best_b = bits;
                    }
                }
            }
            EXPECT_NEAR(det.metric, best, 1e-10);
            EXPECT_EQ(det.k_hat, best_k);
            EXPECT_EQ(demap_symbols(det.x_hat, c), best_b);
        }
    }
}

TEST(FullMl, TiesResolveToSmallestCandidate) {
    // H = 0 makes every hypothesis score ||r||^2.
    Rng rng(6);
    const auto c = Constellation::from_order(2);
    const Codebook cb = codebook_for(4, 2, rng);
    const auto det = ml_detect_full(random_cvector(4, rng), CMatrix::Zero(4, 4), cb, c);
    EXPECT_EQ(det.k_hat, 1u);
    EXPECT_EQ(demap_symbols(det.x_hat, c), Bits(4, 0));
}

TEST(FullMl, BudgetRefusal) {
    Rng rng(7);
    const auto c = Constellation::from_order(2);
    const Codebook cb = codebook_for(32, 2, rng);
    try {
        ml_detect_full(CVector::Zero(32), CMatrix::Identity(32, 32), cb, c);
        FAIL() << "expected BudgetError";
    } catch (const BudgetError& e) {
        EXPECT_NE(std::string(e.what()).find("mmse_ml"), std::string::npos);
    }
    EXPECT_EQ(ml_candidate_count(4, 2, 2), 32u);
    EXPECT_EQ(ml_candidate_count(64, 16, 2), std::numeric_limits<std::uint64_t>::max());
}

TEST(MmseBank, IdentityChannelLimit) {
    Rng rng(8);
    const Codebook cb = codebook_for(8, 2, rng);
    const auto bank = build_mmse_bank(CMatrix::Identity(8, 8), cb, 1e-12);
    for (std::size_t k = 1; k <= 2; ++k) {
        EXPECT_LT((bank.per_perm[k - 1] - cb.daft(k).forward()).norm(), 1e-9);
    }
}

TEST(MmseBank, MatchesDirectFormula) {
    Rng rng(9);
    const Codebook cb = codebook_for(8, 4, rng);
    const CMatrix h = random_cmatrix(8, rng);
    const double n0 = 0.2;
    const auto bank = build_mmse_bank(h, cb, n0);
    EXPECT_EQ(bank.inversions, 1);
    const CMatrix direct_common = h.adjoint() * (h * h.adjoint() + n0 * CMatrix::Identity(8, 8)).inverse();
    const CVector r = random_cvector(8, rng);
    for (std::size_t k = 1; k <= 4; ++k) {
        const CMatrix mk = cb.daft(k).forward() * direct_common;
        EXPECT_LT((bank.per_perm[k - 1] - mk).norm(), 1e-9);
        EXPECT_LT((bank.apply(k, r, cb) - mk * r).norm(), 1e-9);
    }
}

TEST(MmseBank, SingularAndInvalidNoise) {
    Rng rng(10);
    const Codebook cb = codebook_for(4, 2, rng);
    CMatrix h = CMatrix::Zero(4, 4);
    h(0, 0) = 1.0;
    EXPECT_THROW(build_mmse_bank(h, cb, 0.0), NumericalError);
    EXPECT_NO_THROW(build_mmse_bank(h, cb, 0.1));
    EXPECT_THROW(build_mmse_bank(CMatrix::Identity(4, 4), cb, -1.0), InvalidArgument);
}

TEST(MmseMl, NoiselessRecovery) {
    Rng rng(11);
    const auto c = Constellation::from_order(2);
    const Codebook cb = codebook_for(8, 2, rng, 3);
    int correct = 0;
    for (int t = 0; t < 1000; ++t) {
        const Frame f = transmit(cb, c, 0.0, rng, 3, 3);
        const auto det = mmse_ml_detect(f.r, f.h, cb, 1e-6, c);
        correct += det.k_hat == f.frame.perm_choice && (det.x_hat - f.frame.symbols).norm() < 1e-9;
        EXPECT_EQ(det.residual_evaluations, 2u);
    }
    EXPECT_GE(correct, 999);
}

TEST(MmseMl, CountersAndMetric) {
    Rng rng(12);
    const auto c = Constellation::from_order(4);
    const Codebook cb = codebook_for(8, 8, rng);
    const Frame f = transmit(cb, c, 0.1, rng);
    const auto bank = build_mmse_bank(f.h, cb, 0.1);
    const auto det = mmse_ml_detect(f.r, f.h, cb, bank, c);
    EXPECT_EQ(det.residual_evaluations, 8u);
    EXPECT_EQ(bank.inversions, 1);
    EXPECT_NEAR(det.metric, ml_residual(f.r, f.h, cb.daft(det.k_hat), det.x_hat), 1e-9);
    EXPECT_GE(det.metric, 0.0);
    // Each codeword's decision is the projected MMSE estimate; the winner has the smallest residual.
    for (std::size_t k = 1; k <= 8; ++k) {
        const CVector xk = c.project(bank.apply(k, f.r, cb));
        EXPECT_GE(ml_residual(f.r, f.h, cb.daft(k), xk), det.metric - 1e-12);
    }
}

TEST(MmseMl, ClassicalWhenKIsOne) {
    Rng rng(13);
    const auto c = Constellation::from_order(2);
    const Codebook cb = Codebook::classical(ChirpParams::optimal(8, 1, 0));
    const Frame f = transmit(cb, c, 0.2, rng);
    const auto det = mmse_ml_detect(f.r, f.h, cb, 0.2, c);
    EXPECT_EQ(det.k_hat, 1u);
    const CMatrix common = f.h.adjoint() * (f.h * f.h.adjoint() + 0.2 * CMatrix::Identity(8, 8)).inverse();
    EXPECT_LT((det.x_hat - c.project(CVector(cb.daft(1).forward() * common * f.r))).norm(), 1e-12);
}

TEST(MmseMl, AgreesWithFullMlAtHighSnr) {
    Rng rng(14);
    const auto c = Constellation::from_order(2);
    const Codebook cb = codebook_for(4, 2, rng, 3);
    const double n0 = noise_variance_from_ebn0(20.0, 4, 2, 2);
    int agree = 0;
    for (int t = 0; t < 1000; ++t) {
        const Frame f = transmit(cb, c, n0, rng, 3, 3);
        agree += ml_detect_full(f.r, f.h, cb, c).k_hat == mmse_ml_detect(f.r, f.h, cb, n0, c).k_hat;
    }
    EXPECT_GE(agree, 950);
}
