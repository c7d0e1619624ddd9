// sim.hpp - Monte Carlo BER measurement for AFDM-CPIM
//
// Every trial is a pure function of (seed, Eb/N0, trial index): it draws a fresh
// channel, fresh bits and fresh noise from three independent derived streams.
// K = 1 and K > 1 runs with the same seed therefore see the same channels, noise
// and symbol bits. Early stopping is decided in trial order, so the result does
// not depend on the number of worker threads.
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <set>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cpim/afdm.hpp"
#include "cpim/channel.hpp"
#include "cpim/codebook.hpp"
#include "cpim/codebook_design.hpp"
#include "cpim/codec.hpp"
#include "cpim/constellation.hpp"
#include "cpim/detectors.hpp"
#include "cpim/gas.hpp"
#include "cpim/io.hpp"
#include "cpim/ml_objective.hpp"
#include "cpim/rng.hpp"

#ifndef CPIM_VERSION
#define CPIM_VERSION "0.1.0"
#endif

namespace cpim {

inline constexpr const char* kVersion = CPIM_VERSION;

enum class CodebookSource { Designed, Explicit, Random, File };

inline std::string to_string(CodebookSource s) {
    switch (s) {
    case CodebookSource::Designed:
        return "designed";
    case CodebookSource::Explicit:
        return "explicit";
    case CodebookSource::Random:
        return "random";
    case CodebookSource::File:
        return "file";
    }
    return "?";
}

struct SimConfig {
    std::size_t n = 32;
    int m = 2;
    std::size_t k = 2;
    int xi = 0;
    std::optional<double> c2;

    int paths = 3;
    int ell_max = 3;
    int f_max = 3;
    bool fractional_doppler = false;

    DetectorKind detector = DetectorKind::MmseMl;
    DistanceMetric metric = DistanceMetric::Angular;
    CodebookSource codebook_source = CodebookSource::Designed;
    std::vector<std::string> codebook_indices;
    std::string codebook_file;
    std::size_t pool_size = 256;
    std::uint64_t subset_budget = kDefaultSubsetBudget;

    std::vector<double> ebn0_grid_db{0.0, 5.0, 10.0};
    std::uint64_t trials_per_point = 1000;
    std::uint64_t target_bit_errors = 200;
    std::uint64_t seed = 1;

    /// Noise variance seen by the MMSE filter; defaults to the true N0.
    std::optional<double> filter_n0;
    /// Replaces the Eb/N0-derived noise variance (0 = noiseless).
    std::optional<double> noise_n0;
    std::uint64_t ml_budget = kDefaultMlBudget;
    GasConfig gas;
    bool theory_reference = false;

    ChirpParams chirp_params() const {
        const double c2v = c2 ? *c2 : default_c2(n);
        return ChirpParams::optimal(n, f_max, xi, c2v);
    }

    std::size_t bits_per_frame() const { return frame_bits(n, m, k); }

    void validate() const {
        if (n < 2) {
            throw ConfigError("system.N: must be at least 2");
        }
        if (m != 2 && m != 4 && m != 16) {
            throw ConfigError("system.M: must be 2, 4 or 16");
        }
        if (k < 1 || !is_power_of_two(k)) {
            throw ConfigError("system.K: must be a power of two");
        }
        if (xi < 0) {
            throw ConfigError("system.xi: must be non-negative");
        }
        if (paths < 1) {
            throw ConfigError("channel.P: must be at least 1");
        }
        if (ell_max < 0 || static_cast<std::size_t>(ell_max) >= n) {
            throw ConfigError("channel.ell_max: must lie in [0, N)");
        }
        if (f_max < 0) {
            throw ConfigError("channel.f_max: must be non-negative");
        }
        if (paths > ell_max + 1) {
            throw ConfigError("channel.P: distinct delays need P <= ell_max + 1");
        }
        if (ebn0_grid_db.empty()) {
            throw ConfigError("sim.ebn0_db: grid is empty");
        }
        if (trials_per_point == 0) {
            throw ConfigError("sim.trials_per_point: must be positive");
        }
        if (filter_n0 && !(*filter_n0 >= 0.0)) {
            throw ConfigError("detector.filter_n0: must be non-negative");
        }
        if (noise_n0 && !(*noise_n0 >= 0.0)) {
            throw ConfigError("sim.noise_n0: must be non-negative");
        }
        if (codebook_source == CodebookSource::Explicit && codebook_indices.size() != k) {
            throw ConfigError("codebook.codebook_indices: expected K = " + std::to_string(k) + " indices, got " +
                              std::to_string(codebook_indices.size()));
        }
        if (codebook_source == CodebookSource::File && codebook_file.empty()) {
            throw ConfigError("codebook.codebook_file: required when codebook_source = file");
        }
        if (k > 1 && codebook_source == CodebookSource::Designed && pool_size < k) {
            throw ConfigError("codebook.pool_size: must be at least K");
        }
        gas.validate();
    }
};

/// Eb = N / B for unit-energy symbols, N0 = Eb / 10^(Eb/N0 / 10).
inline double noise_variance_from_ebn0(double ebn0_db, std::size_t n, int m, std::size_t k) {
    const double eb = static_cast<double>(n) / static_cast<double>(frame_bits(n, m, k));
    return eb / std::pow(10.0, ebn0_db / 10.0);
}

/// 10 log10(1 + log2(K) / (N log2(M))), the Eb/N0 shift index bits buy over classical AFDM.
inline double theoretical_gain_db(std::size_t n, int m, double log2_k) {
    return 10.0 * std::log10(1.0 + log2_k / (static_cast<double>(n) * std::log2(static_cast<double>(m))));
}

inline double log2_factorial(std::size_t n) { return std::lgamma(static_cast<double>(n) + 1.0) / std::log(2.0); }

/// Candidate permutations for codebook design: all of them when N! <= pool_size, else a seeded sample.
inline std::vector<PermutationIndex> design_pool(const SimConfig& cfg) {
    return permutation_pool(cfg.n, cfg.pool_size, derive_seed(cfg.seed, {0x706f6f6cULL}));
}

/// Builds the run's codebook; K = 1 always yields classical AFDM unless the list is explicit.
inline Codebook make_codebook(const SimConfig& cfg) {
    const ChirpParams params = cfg.chirp_params();
    switch (cfg.codebook_source) {
    case CodebookSource::Explicit: {
        std::vector<PermutationIndex> entries;
        for (const auto& s : cfg.codebook_indices) {
            try {
                entries.emplace_back(BigIndex(s), cfg.n);
            } catch (const IndexError&) {
                throw;
            } catch (const std::exception&) {
                throw ConfigError("codebook.codebook_indices: bad index '" + s + "'");
            }
        }
        return {params, std::move(entries)};
    }
    case CodebookSource::File: {
        auto cb = load_codebook(cfg.codebook_file);
        if (cb.params().n_subcarriers != cfg.n || cb.size() != cfg.k) {
            throw ConfigError("codebook file '" + cfg.codebook_file + "' has N = " +
                              std::to_string(cb.params().n_subcarriers) + ", K = " + std::to_string(cb.size()) +
                              "; the run needs N = " + std::to_string(cfg.n) + ", K = " + std::to_string(cfg.k));
        }
        return cb;
    }
    case CodebookSource::Random: {
        if (cfg.k == 1) {
            return Codebook::classical(params);
        }
        if (factorial(cfg.n) < cfg.k) {
            throw ConfigError("system.K exceeds N!");
        }
        Rng rng(derive_seed(cfg.seed, {0x72616e64ULL}));
        std::vector<PermutationIndex> entries;
        std::set<PermutationIndex> seen;
        while (entries.size() < cfg.k) {
            auto q = random_permutation_index(cfg.n, rng);
            if (seen.insert(q).second) {
                entries.push_back(q);
            }
        }
        return {params, std::move(entries)};
    }
    case CodebookSource::Designed: {
        if (cfg.k == 1) {
            return Codebook::classical(params);
        }
        const auto pool = design_pool(cfg);
        const auto dm = pairwise_distances(pool, params, cfg.metric);
        const auto best = exhaustive_maxmin(dm, cfg.k, cfg.subset_budget);
        std::vector<PermutationIndex> entries;
        for (auto pos : best.selection) {
            entries.push_back(pool[pos]);
        }
        return {params, std::move(entries)};
    }
    }
    throw ConfigError("unknown codebook source");
}

struct TrialOutcome {
    std::uint64_t symbol_bit_errors = 0;
    std::uint64_t index_bit_errors = 0;
    std::size_t k_sent = 1;
    std::size_t k_hat = 1;
};

struct TrialContext {
    const SimConfig& cfg;
    const Codebook& codebook;
    const Constellation& constellation;
    double noise_n0;
    double filter_n0;
};

inline std::uint64_t trial_seed(std::uint64_t seed, double ebn0_db, std::uint64_t trial) {
    return derive_seed(seed, {seed_from_double(ebn0_db), trial});
}

/// One transmitted frame and what the receiver sees.
struct Instance {
    Bits bits;
    CpimFrame frame;
    ChannelRealization channel;
    CMatrix h;
    CVector r;
    double n0 = 0.0;
};

/// Draws channel, bits and noise from three streams derived from seed.
inline Instance sample_instance(const SimConfig& cfg, const Codebook& codebook, const Constellation& constellation,
                                double n0, std::uint64_t seed) {
    Rng chan_rng(derive_seed(seed, {1}));
    Rng bits_rng(derive_seed(seed, {2}));
    Rng noise_rng(derive_seed(seed, {3}));

    Instance inst;
    inst.n0 = n0;
    inst.channel = sample_channel(cfg.paths, cfg.ell_max, cfg.f_max, chan_rng,
                                  {.fractional_doppler = cfg.fractional_doppler, .distinct_delays = true});
    const ChannelMatrix hm = channel_matrix(inst.channel, codebook.params().c1, cfg.n);
    inst.h = hm.dense();

    const std::size_t b1 = cfg.n * static_cast<std::size_t>(constellation.bits_per_symbol());
    inst.bits = random_bits(bits_rng, b1);
    const Bits idx = random_bits(bits_rng, static_cast<std::size_t>(codebook.index_bits()));
    inst.bits.insert(inst.bits.end(), idx.begin(), idx.end());

    inst.frame = encode(inst.bits, codebook, constellation);
    inst.r = apply_channel(inst.frame.signal, hm, n0, noise_rng);
    return inst;
}

/// One frame through encode, channel and detection.
inline TrialOutcome run_trial(const TrialContext& ctx, std::uint64_t seed) {
    const auto& cfg = ctx.cfg;
    const Instance inst = sample_instance(cfg, ctx.codebook, ctx.constellation, ctx.noise_n0, seed);
    const CVector& r = inst.r;
    const CMatrix& h = inst.h;
    const Bits& bits = inst.bits;
    const CpimFrame& frame = inst.frame;
    const std::size_t b1 = cfg.n * static_cast<std::size_t>(ctx.constellation.bits_per_symbol());

    CVector x_hat;
    std::size_t k_hat = 1;
    switch (cfg.detector) {
    case DetectorKind::MmseMl: {
        const auto det = mmse_ml_detect(r, h, ctx.codebook, ctx.filter_n0, ctx.constellation);
        x_hat = det.x_hat;
        k_hat = det.k_hat;
        break;
    }
    case DetectorKind::FullMl: {
        const auto det = ml_detect_full(r, h, ctx.codebook, ctx.constellation, cfg.ml_budget);
        x_hat = det.x_hat;
        k_hat = det.k_hat;
        break;
    }
    case DetectorKind::Gas: {
        GasConfig gas = cfg.gas;
        gas.seed = derive_seed(seed, {4});
        const auto sol = parallel_ml_solve(r, h, ctx.codebook, ctx.constellation, gas);
        x_hat = map_symbols(sol.bits, ctx.constellation);
        k_hat = sol.k_star;
        break;
    }
    }

    const Bits decoded = decode_bits(x_hat, k_hat, ctx.codebook, ctx.constellation);
    TrialOutcome out;
    out.k_sent = frame.perm_choice;
    out.k_hat = k_hat;
    for (std::size_t t = 0; t < bits.size(); ++t) {
        if (bits[t] != decoded[t]) {
            if (t < b1) {
                ++out.symbol_bit_errors;
            } else {
                ++out.index_bit_errors;
            }
        }
    }
    return out;
}

/// Refuses detector settings that could not finish a single trial.
inline void check_detector_budget(const SimConfig& cfg) {
    if (cfg.detector == DetectorKind::FullMl && ml_candidate_count(cfg.n, cfg.m, cfg.k) > cfg.ml_budget) {
        throw BudgetError("full_ml would search K M^N > detector.ml_budget = " + std::to_string(cfg.ml_budget) +
                          " candidates; use detector = mmse_ml or gas, or a smaller N");
    }
    const std::size_t n_vars = cfg.n * static_cast<std::size_t>(exact_log2(static_cast<std::uint64_t>(cfg.m)));
    if (cfg.detector == DetectorKind::Gas && n_vars > kMaxEmulatedVars) {
        throw BudgetError("gas detection needs N log2(M) = " + std::to_string(n_vars) +
                          " binary variables, above the emulation budget of " + std::to_string(kMaxEmulatedVars));
    }
}

struct BerPoint {
    double ebn0_db = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t symbol_bit_errors = 0;
    std::uint64_t index_bit_errors = 0;
    std::uint64_t total_bits = 0;
    double ber_symbol = 0.0;
    double ber_index = 0.0;
    double ber_total = 0.0;

    std::uint64_t bit_errors() const { return symbol_bit_errors + index_bit_errors; }
};

struct RunOptions {
    unsigned jobs = 1;
    /// Trials evaluated between early-stop checks.
    std::uint64_t batch = 256;
};

namespace detail {

template <typename Fn>
void parallel_for(std::uint64_t begin, std::uint64_t end, unsigned jobs, Fn&& fn) {
    if (jobs <= 1 || end - begin <= 1) {
        for (std::uint64_t i = begin; i < end; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::uint64_t> next{begin};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    const auto workers = static_cast<unsigned>(std::min<std::uint64_t>(jobs, end - begin));
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::uint64_t i = next++; i < end; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

} // namespace detail

inline BerPoint run_ber_point(const SimConfig& cfg, const Codebook& codebook, double ebn0_db, RunOptions opts = {}) {
    cfg.validate();
    check_detector_budget(cfg);
    const Constellation constellation = Constellation::from_order(cfg.m);
    const double n0 = cfg.noise_n0 ? *cfg.noise_n0 : noise_variance_from_ebn0(ebn0_db, cfg.n, cfg.m, cfg.k);
    const TrialContext ctx{cfg, codebook, constellation, n0, cfg.filter_n0 ? *cfg.filter_n0 : n0};

    BerPoint pt;
    pt.ebn0_db = ebn0_db;
    const std::uint64_t bits_per_frame = cfg.bits_per_frame();
    const std::uint64_t b1 = cfg.n * static_cast<std::uint64_t>(constellation.bits_per_symbol());
    const std::uint64_t b2 = bits_per_frame - b1;
    const std::uint64_t batch = std::max<std::uint64_t>(opts.batch, 1);

    std::vector<TrialOutcome> outcomes;
    bool done = false;
    for (std::uint64_t start = 0; start < cfg.trials_per_point && !done; start += batch) {
        const std::uint64_t stop = std::min(cfg.trials_per_point, start + batch);
        outcomes.assign(stop - start, {});
        detail::parallel_for(start, stop, opts.jobs, [&](std::uint64_t t) {
            const auto seed = trial_seed(cfg.seed, ebn0_db, t);
            try {
                outcomes[t - start] = run_trial(ctx, seed);
            } catch (const std::exception& e) {
                const std::string msg =
                    "trial " + std::to_string(t) + " (trial seed " + std::to_string(seed) + ") failed: " + e.what();
                if (dynamic_cast<const NumericalError*>(&e)) {
                    throw NumericalError(msg);
                }
                if (dynamic_cast<const BudgetError*>(&e)) {
                    throw BudgetError(msg);
                }
                throw Error(msg);
            }
        });
        for (const auto& o : outcomes) {
            ++pt.trials;
            pt.symbol_bit_errors += o.symbol_bit_errors;
            pt.index_bit_errors += o.index_bit_errors;
            if (cfg.target_bit_errors > 0 && pt.bit_errors() >= cfg.target_bit_errors) {
                done = true;
                break;
            }
        }
    }
    pt.total_bits = pt.trials * bits_per_frame;
    pt.ber_symbol = static_cast<double>(pt.symbol_bit_errors) / static_cast<double>(pt.trials * b1);
    pt.ber_index = b2 ? static_cast<double>(pt.index_bit_errors) / static_cast<double>(pt.trials * b2) : 0.0;
    pt.ber_total = static_cast<double>(pt.bit_errors()) / static_cast<double>(pt.total_bits);
    return pt;
}

inline BerPoint run_ber_point(const SimConfig& cfg, double ebn0_db, RunOptions opts = {}) {
    cfg.validate();
    return run_ber_point(cfg, make_codebook(cfg), ebn0_db, opts);
}

struct TheoryPoint {
    double ebn0_db = 0.0;
    double ber_total = 0.0;
};

struct SweepResult {
    std::vector<BerPoint> points;
    std::string codebook_text;
    double gain_db = 0.0;
    /// Classical-AFDM curve shifted left by gain_db; empty unless requested and K > 1.
    std::vector<TheoryPoint> theory;
    /// Grid points whose BER rose by more than 2 sigma over the previous point.
    std::vector<double> monotonicity_warnings;
    double wall_seconds = 0.0;
};

inline std::vector<double> monotonicity_violations(const std::vector<BerPoint>& pts) {
    std::vector<double> bad;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].ebn0_db <= pts[i - 1].ebn0_db) {
            continue;
        }
        const auto sigma2 = [](const BerPoint& p) {
            return p.total_bits ? p.ber_total * (1.0 - p.ber_total) / static_cast<double>(p.total_bits) : 0.0;
        };
        const double tol = 2.0 * std::sqrt(sigma2(pts[i]) + sigma2(pts[i - 1]));
        if (pts[i].ber_total > pts[i - 1].ber_total + tol) {
            bad.push_back(pts[i].ebn0_db);
        }
    }
    return bad;
}

inline SweepResult sweep(const SimConfig& cfg, RunOptions opts = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();
    const Codebook codebook = make_codebook(cfg);
    SweepResult res;
    res.codebook_text = codebook_to_string(codebook);
    res.gain_db = theoretical_gain_db(cfg.n, cfg.m, std::log2(static_cast<double>(cfg.k)));
    for (double e : cfg.ebn0_grid_db) {
        res.points.push_back(run_ber_point(cfg, codebook, e, opts));
    }
    if (cfg.theory_reference && cfg.k > 1) {
        SimConfig classical = cfg;
        classical.k = 1;
        classical.codebook_source = CodebookSource::Designed;
        const Codebook cb1 = make_codebook(classical);
        for (double e : cfg.ebn0_grid_db) {
            const auto p = run_ber_point(classical, cb1, e, opts);
            res.theory.push_back({e - res.gain_db, p.ber_total});
        }
    }
    res.monotonicity_warnings = monotonicity_violations(res.points);
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

inline std::string ber_csv(const std::vector<BerPoint>& pts) {
    std::ostringstream out;
    out << "ebn0_db,trials,symbol_bit_errors,index_bit_errors,total_bits,ber_symbol,ber_index,ber_total\n";
    for (const auto& p : pts) {
        out << format_double(p.ebn0_db) << "," << p.trials << "," << p.symbol_bit_errors << ","
            << p.index_bit_errors << "," << p.total_bits << "," << format_double(p.ber_symbol) << ","
            << format_double(p.ber_index) << "," << format_double(p.ber_total) << "\n";
    }
    return out.str();
}

inline std::string theory_csv(const std::vector<TheoryPoint>& pts) {
    std::ostringstream out;
    out << "ebn0_db,ber_total\n";
    for (const auto& p : pts) {
        out << format_double(p.ebn0_db) << "," << format_double(p.ber_total) << "\n";
    }
    return out.str();
}

} // namespace cpim
