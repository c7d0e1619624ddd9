#include <fstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace cpim;

namespace {

SimConfig small_config() {
    SimConfig cfg;
    cfg.n = 8;
    cfg.k = 2;
    cfg.paths = 2;
    cfg.ell_max = 1;
    cfg.f_max = 1;
    cfg.pool_size = 24;
    cfg.ebn0_grid_db = {0.0, 10.0};
    cfg.trials_per_point = 300;
    cfg.target_bit_errors = 0;
    cfg.seed = 11;
    return cfg;
}

bool same(const BerPoint& a, const BerPoint& b) {
    return a.trials == b.trials && a.symbol_bit_errors == b.symbol_bit_errors &&
           a.index_bit_errors == b.index_bit_errors && a.total_bits == b.total_bits;
}

} // namespace

TEST(NoiseVariance, Examples) {
    EXPECT_DOUBLE_EQ(noise_variance_from_ebn0(0.0, 32, 2, 1), 1.0);
    EXPECT_DOUBLE_EQ(noise_variance_from_ebn0(0.0, 32, 2, 4), 32.0 / 34.0);
    EXPECT_NEAR(noise_variance_from_ebn0(10.0, 32, 4, 1), 0.05, 1e-15);
}

TEST(Gain, FullIndexingLimit) {
    const double log2_k = std::floor(log2_factorial(32));
    EXPECT_EQ(log2_k, 117.0);
    EXPECT_NEAR(theoretical_gain_db(32, 2, log2_k), 6.7, 0.05);
    EXPECT_NEAR(theoretical_gain_db(32, 2, log2_factorial(32)), 6.7, 0.05);
    EXPECT_EQ(theoretical_gain_db(32, 2, 0.0), 0.0);
}

TEST(Gain, ConsistentWithRateRatio) {
    for (std::size_t n : {4u, 32u}) {
        for (int m : {2, 4, 16}) {
            for (std::size_t k : {1u, 2u, 16u}) {
                const double b = static_cast<double>(frame_bits(n, m, k));
                const double b1 = static_cast<double>(n) * std::log2(m);
                EXPECT_NEAR(theoretical_gain_db(n, m, std::log2(static_cast<double>(k))), 10 * std::log10(b / b1),
                            1e-12);
                // Eb/N0 shift equals the ratio of per-bit noise variances at equal SNR.
                EXPECT_NEAR(10 * std::log10(noise_variance_from_ebn0(0.0, n, m, 1) /
                                            noise_variance_from_ebn0(0.0, n, m, k)),
                            10 * std::log10(b / b1), 1e-12);
            }
        }
    }
}

TEST(Log2Factorial, SmallValues) {
    EXPECT_NEAR(log2_factorial(4), std::log2(24.0), 1e-12);
    EXPECT_NEAR(log2_factorial(1), 0.0, 1e-15);
}

TEST(Sim, NoiselessIsErrorFree) {
    SimConfig cfg = small_config();
    cfg.noise_n0 = 0.0;
    cfg.filter_n0 = 1e-6;
    cfg.trials_per_point = 1000;
    const auto pt = run_ber_point(cfg, 0.0);
    EXPECT_EQ(pt.trials, 1000u);
    EXPECT_EQ(pt.bit_errors(), 0u);
    EXPECT_EQ(pt.ber_total, 0.0);
}

TEST(Sim, DeterministicForSeed) {
    const SimConfig cfg = small_config();
    const auto a = sweep(cfg);
    const auto b = sweep(cfg);
    EXPECT_EQ(ber_csv(a.points), ber_csv(b.points));
    EXPECT_EQ(a.codebook_text, b.codebook_text);
    SimConfig other = cfg;
    other.seed = 12;
    EXPECT_NE(ber_csv(sweep(other).points), ber_csv(a.points));
}

TEST(Sim, IndependentOfJobsAndBatch) {
    SimConfig cfg = small_config();
    cfg.target_bit_errors = 150;
    cfg.trials_per_point = 2000;
    const auto cb = make_codebook(cfg);
    const auto ref = run_ber_point(cfg, cb, 0.0, {1, 256});
    EXPECT_TRUE(same(ref, run_ber_point(cfg, cb, 0.0, {3, 256})));
    EXPECT_TRUE(same(ref, run_ber_point(cfg, cb, 0.0, {2, 7})));
    EXPECT_TRUE(same(ref, run_ber_point(cfg, cb, 0.0, {1, 1})));
}

TEST(Sim, EarlyStopIsExact) {
    SimConfig cfg = small_config();
    cfg.trials_per_point = 5000;
    cfg.target_bit_errors = 100;
    const auto cb = make_codebook(cfg);
    const auto stopped = run_ber_point(cfg, cb, 0.0);
    EXPECT_GE(stopped.bit_errors(), 100u);
    EXPECT_LT(stopped.trials, 5000u);
    // The same trials run without early stop reproduce the count, and one trial fewer falls short.
    SimConfig fixed = cfg;
    fixed.target_bit_errors = 0;
    fixed.trials_per_point = stopped.trials;
    EXPECT_TRUE(same(stopped, run_ber_point(fixed, cb, 0.0)));
    fixed.trials_per_point = stopped.trials - 1;
    EXPECT_LT(run_ber_point(fixed, cb, 0.0).bit_errors(), 100u);
}

TEST(Sim, ErrorAccountingBounds) {
    SimConfig cfg = small_config();
    cfg.m = 4;
    cfg.k = 4;
    const auto cb = make_codebook(cfg);
    const auto pt = run_ber_point(cfg, cb, 0.0);
    const std::uint64_t b1 = 8 * 2;
    const std::uint64_t b2 = 2;
    EXPECT_EQ(pt.total_bits, pt.trials * (b1 + b2));
    EXPECT_LE(pt.symbol_bit_errors, pt.trials * b1);
    EXPECT_LE(pt.index_bit_errors, pt.trials * b2);
    EXPECT_NEAR(pt.ber_total, (pt.ber_symbol * b1 + pt.ber_index * b2) / (b1 + b2), 1e-15);
    EXPECT_GT(pt.bit_errors(), 0u);
}

TEST(Sim, ClassicalHasNoIndexErrors) {
    SimConfig cfg = small_config();
    cfg.k = 1;
    const auto pt = run_ber_point(cfg, 0.0);
    EXPECT_EQ(pt.index_bit_errors, 0u);
    EXPECT_EQ(pt.ber_index, 0.0);
}

TEST(Sim, BerFallsWithSnr) {
    SimConfig cfg = small_config();
    cfg.ebn0_grid_db = {0.0, 10.0, 20.0};
    cfg.trials_per_point = 600;
    const auto res = sweep(cfg);
    EXPECT_GT(res.points[0].ber_total, res.points[2].ber_total);
    EXPECT_TRUE(res.monotonicity_warnings.empty());
}

TEST(Sim, MonotonicityWarningFlagsRise) {
    BerPoint a;
    a.ebn0_db = 0;
    a.total_bits = 100000;
    a.ber_total = 0.01;
    BerPoint b = a;
    b.ebn0_db = 5;
    b.ber_total = 0.02;
    EXPECT_EQ(monotonicity_violations({a, b}), (std::vector<double>{5.0}));
    b.ber_total = 0.0101;
    EXPECT_TRUE(monotonicity_violations({a, b}).empty());
}

TEST(Sim, TheoryReferenceIsShifted) {
    SimConfig cfg = small_config();
    cfg.theory_reference = true;
    const auto res = sweep(cfg);
    ASSERT_EQ(res.theory.size(), 2u);
    EXPECT_NEAR(res.theory[0].ebn0_db, -res.gain_db, 1e-12);
    EXPECT_NEAR(res.gain_db, 10 * std::log10(9.0 / 8.0), 1e-12);
    EXPECT_EQ(theory_csv(res.theory).substr(0, 17), "ebn0_db,ber_total");
}

TEST(Sim, CsvLayout) {
    const auto res = sweep(small_config());
    const std::string csv = ber_csv(res.points);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "ebn0_db,trials,symbol_bit_errors,index_bit_errors,total_bits,ber_symbol,ber_index,ber_total");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(MakeCodebook, Sources) {
    SimConfig cfg = small_config();
    cfg.n = 4;
    cfg.codebook_source = CodebookSource::Designed;
    const auto designed = make_codebook(cfg);
    const auto dm = pairwise_distances(permutation_pool(4, 24, 0), cfg.chirp_params(), cfg.metric);
    const auto best = exhaustive_maxmin(dm, 2);
    EXPECT_EQ(designed.entry(1), dm.pool[best.selection[0]]);
    EXPECT_EQ(designed.entry(2), dm.pool[best.selection[1]]);

    cfg.codebook_source = CodebookSource::Explicit;
    cfg.codebook_indices = {"3", "17"};
    const auto expl = make_codebook(cfg);
    EXPECT_EQ(expl.entry(2).index(), 17);
    cfg.codebook_indices = {"3", "25"};
    EXPECT_THROW(make_codebook(cfg), IndexError);
    cfg.codebook_indices = {"3", "x"};
    EXPECT_THROW(make_codebook(cfg), ConfigError);

    cfg.codebook_source = CodebookSource::Random;
    const auto r1 = make_codebook(cfg);
    EXPECT_EQ(r1.entries(), make_codebook(cfg).entries());
    EXPECT_NE(r1.entry(1), r1.entry(2));

    cfg.k = 1;
    EXPECT_EQ(make_codebook(cfg).entry(1), PermutationIndex::identity(4));
}

TEST(MakeCodebook, FileSource) {
    SimConfig cfg = small_config();
    const auto cb = make_codebook(cfg);
    const std::string path = ::testing::TempDir() + "cpim_sim_codebook.txt";
    {
        std::ofstream out(path);
        out << codebook_to_string(cb);
    }
    cfg.codebook_source = CodebookSource::File;
    cfg.codebook_file = path;
    EXPECT_EQ(make_codebook(cfg).entries(), cb.entries());
    cfg.k = 4;
    EXPECT_THROW(make_codebook(cfg), ConfigError);
}

TEST(SimConfig, Validation) {
    const auto expect_field = [](SimConfig cfg, const std::string& field) {
        try {
            cfg.validate();
            ADD_FAILURE() << "expected ConfigError for " << field;
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
        }
    };
    SimConfig c = small_config();
    c.m = 8;
    expect_field(c, "system.M");
    c = small_config();
    c.k = 3;
    expect_field(c, "system.K");
    c = small_config();
    c.paths = 3;
    expect_field(c, "channel.P");
    c = small_config();
    c.ell_max = 8;
    expect_field(c, "channel.ell_max");
    c = small_config();
    c.trials_per_point = 0;
    expect_field(c, "sim.trials_per_point");
    c = small_config();
    c.codebook_source = CodebookSource::Explicit;
    c.codebook_indices = {"1"};
    expect_field(c, "codebook.codebook_indices");
    c = small_config();
    c.ebn0_grid_db.clear();
    expect_field(c, "sim.ebn0_db");
}

TEST(SimConfig, BudgetPreCheck) {
    SimConfig cfg;
    cfg.detector = DetectorKind::FullMl;
    EXPECT_THROW(check_detector_budget(cfg), BudgetError);
    cfg.n = 4;
    cfg.paths = 2;
    cfg.ell_max = 1;
    EXPECT_NO_THROW(check_detector_budget(cfg));
    cfg.detector = DetectorKind::Gas;
    cfg.n = 32;
    EXPECT_THROW(check_detector_budget(cfg), BudgetError);
    cfg.n = 8;
    EXPECT_NO_THROW(check_detector_budget(cfg));
}

TEST(Sim, GasAndFullMlDetectorsRun) {
    SimConfig cfg = small_config();
    cfg.n = 4;
    cfg.trials_per_point = 40;
    cfg.ebn0_grid_db = {20.0};
    cfg.detector = DetectorKind::FullMl;
    const auto ml = run_ber_point(cfg, 20.0);
    cfg.detector = DetectorKind::Gas;
    cfg.gas.max_iterations = 300;
    const auto gas = run_ber_point(cfg, 20.0);
    EXPECT_EQ(ml.trials, 40u);
    EXPECT_EQ(gas.trials, 40u);
    EXPECT_LT(gas.ber_total, 0.1);
}
