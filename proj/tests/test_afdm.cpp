#include <thread>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace cpim;
using cpim::testing::random_cvector;
using cpim::testing::reference_daft;

namespace {

double max_abs(const CVector& a, const CVector& b) { return (a - b).cwiseAbs().maxCoeff(); }

ChirpParams random_params(std::size_t n, Rng& rng) {
    std::uniform_int_distribution<int> fmax(0, 3);
    std::uniform_int_distribution<int> xi(0, 2);
    std::uniform_real_distribution<double> c2(0.0, 1.0);
    return ChirpParams::optimal(n, fmax(rng), xi(rng), c2(rng) / static_cast<double>(n));
}

} // namespace

TEST(Chirp, Examples) {
    const CVector z = chirp_vector(0.0, 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
        EXPECT_EQ(z[i], Complex(1.0, 0.0));
    }
    const CVector q = chirp_vector(0.25, 2);
    EXPECT_NEAR(std::abs(q[0] - Complex(1.0, 0.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(q[1] - Complex(0.0, -1.0)), 0.0, 1e-15);

    const double c1 = optimal_c1(3, 0, 32);
    const CVector v = chirp_vector(c1, 32);
    EXPECT_NEAR(std::abs(v[2] - std::exp(Complex(0.0, -2.0 * M_PI * (7.0 / 64.0) * 4.0))), 0.0, 1e-14);
    for (Eigen::Index i = 0; i < 32; ++i) {
        EXPECT_NEAR(std::abs(v[i]), 1.0, 1e-15);
    }
    EXPECT_THROW(chirp_vector(0.1, 0), DimensionError);
}

TEST(Chirp, OptimalC1) {
    EXPECT_DOUBLE_EQ(optimal_c1(3, 0, 32), 7.0 / 64.0);
    EXPECT_DOUBLE_EQ(optimal_c1(0, 0, 2), 0.25);
    EXPECT_DOUBLE_EQ(optimal_c1(3, 1, 32), 9.0 / 64.0);
    EXPECT_THROW(optimal_c1(3, 0, 0), DimensionError);
}

TEST(Chirp, DefaultC2) {
    EXPECT_NEAR(default_c2(1), 0.6180339887498949, 1e-15);
    EXPECT_NEAR(default_c2(32), 0.0193135621484342, 1e-15);
    EXPECT_EQ(default_c2(32), default_c2(32));
}

TEST(Daft, ZeroChirpsGiveUnitaryDft) {
    const ChirpParams p(4, 0.0, 0.0);
    Rng rng(2);
    const CMatrix f = dft_matrix(4);
    for (int t = 0; t < 5; ++t) {
        const DaftMatrix a(p, random_permutation_index(4, rng));
        EXPECT_LT((a.forward() - f).norm(), 1e-15);
    }
    // Independent construction of F_4.
    EXPECT_LT((f - reference_daft(4, 0.0, 0.0, {0, 1, 2, 3})).norm(), 1e-15);
}

TEST(Daft, MatchesEntrywiseReference) {
    Rng rng(3);
    for (std::size_t n : {4u, 7u, 8u, 16u}) {
        for (int t = 0; t < 10; ++t) {
            const ChirpParams p = random_params(n, rng);
            const auto q = random_permutation_index(n, rng);
            const DaftMatrix a(p, q);
            const CMatrix ref = reference_daft(n, p.c1, p.c2, permutation_from_index(q));
            EXPECT_LT((a.forward() - ref).norm(), 1e-11) << "n=" << n;
        }
    }
}

TEST(Daft, IdentityPermutationIsClassicalAfdm) {
    const ChirpParams p = ChirpParams::optimal(8, 2, 0);
    const DaftMatrix a(p, PermutationIndex::identity(8));
    const CMatrix classical = chirp_vector(p.c2, 8).asDiagonal() * dft_matrix(8) * chirp_vector(p.c1, 8).asDiagonal();
    EXPECT_LT((a.forward() - classical).norm(), 1e-13);
}

TEST(Daft, UnitaryAndInverseIsAdjoint) {
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
        const ChirpParams p = random_params(8, rng);
        const DaftMatrix a(p, random_permutation_index(8, rng));
        const CMatrix id = CMatrix::Identity(8, 8);
        EXPECT_LT((a.forward() * a.forward().adjoint() - id).norm(), 1e-10);
        EXPECT_LT((a.forward() * a.inverse() - id).norm(), 1e-10);
        EXPECT_LT((a.inverse() - a.forward().adjoint()).norm(), 1e-10);
    }
}

TEST(Daft, OrderMismatch) {
    const ChirpParams p = ChirpParams::optimal(8, 1, 0);
    EXPECT_THROW(DaftMatrix(p, PermutationIndex::identity(4)), DimensionError);
    EXPECT_THROW(ChirpParams(1, 0.1, 0.1), DimensionError);
}

TEST(Modulate, BasisVector) {
    const DaftMatrix a(ChirpParams(4, 0.0, 0.0), PermutationIndex::identity(4));
    CVector e0 = CVector::Zero(4);
    e0[0] = 1.0;
    for (auto path : {TransformPath::Fast, TransformPath::Dense}) {
        const CVector s = modulate(e0, a, path);
        for (Eigen::Index i = 0; i < 4; ++i) {
            EXPECT_NEAR(std::abs(s[i] - Complex(0.5, 0.0)), 0.0, 1e-15);
        }
    }
}

TEST(Modulate, NormPreservationAndRoundTrip) {
    Rng rng(5);
    for (std::size_t n : {8u, 32u, 12u}) {
        for (int t = 0; t < 20; ++t) {
            const DaftMatrix a(random_params(n, rng), random_permutation_index(n, rng));
            const CVector x = random_cvector(n, rng);
            const CVector s = modulate(x, a);
            EXPECT_NEAR(s.norm(), x.norm(), 1e-12 * x.norm());
            EXPECT_LT(max_abs(demodulate(s, a), x), 1e-10);
        }
    }
}

TEST(Modulate, FastPathMatchesDense) {
    Rng rng(6);
    for (std::size_t n : {6u, 8u, 32u}) {
        const DaftMatrix a(random_params(n, rng), random_permutation_index(n, rng));
        for (int t = 0; t < 100; ++t) {
            const CVector x = random_cvector(n, rng);
            EXPECT_LT(max_abs(modulate(x, a, TransformPath::Fast), modulate(x, a, TransformPath::Dense)), 1e-10);
            EXPECT_LT(max_abs(demodulate(x, a, TransformPath::Fast), demodulate(x, a, TransformPath::Dense)), 1e-10);
        }
    }
}

TEST(Modulate, ZeroAndLinearity) {
    const DaftMatrix a(ChirpParams::optimal(8, 2, 0), PermutationIndex(100, 8));
    EXPECT_EQ(demodulate(CVector::Zero(8), a).norm(), 0.0);
    Rng rng(7);
    const CVector x = random_cvector(8, rng);
    const CVector y = random_cvector(8, rng);
    const Complex alpha(0.3, -1.2);
    EXPECT_LT(max_abs(modulate(alpha * x + y, a), alpha * modulate(x, a) + modulate(y, a)), 1e-12);
}

TEST(Modulate, PermutationSensitivity) {
    const ChirpParams p = ChirpParams::optimal(8, 1, 0);
    const DaftMatrix a1(p, PermutationIndex(1, 8));
    const DaftMatrix a2(p, PermutationIndex(2, 8));
    Rng rng(8);
    const CVector x = random_cvector(8, rng);
    EXPECT_GT((demodulate(modulate(x, a2), a1) - x).norm(), 1e-3);
}

TEST(Modulate, DimensionMismatch) {
    const DaftMatrix a(ChirpParams::optimal(8, 1, 0), PermutationIndex(1, 8));
    EXPECT_THROW(modulate(CVector::Zero(4), a), DimensionError);
    EXPECT_THROW(demodulate(CVector::Zero(9), a), DimensionError);
}

TEST(Modulate, ConcurrentUseIsSafe) {
    const DaftMatrix a(ChirpParams::optimal(32, 3, 0), PermutationIndex(12345, 32));
    Rng rng(9);
    std::vector<CVector> xs;
    std::vector<CVector> expect;
    for (int i = 0; i < 64; ++i) {
        xs.push_back(random_cvector(32, rng));
        expect.push_back(modulate(xs.back(), a, TransformPath::Dense));
    }
    std::vector<double> err(xs.size(), 0.0);
    std::vector<std::thread> pool;
    for (int w = 0; w < 4; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = static_cast<std::size_t>(w); i < xs.size(); i += 4) {
                for (int rep = 0; rep < 50; ++rep) {
                    err[i] = std::max(err[i], (modulate(xs[i], a) - expect[i]).cwiseAbs().maxCoeff());
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (double e : err) {
        EXPECT_LT(e, 1e-10);
    }
}
