// ml_objective.hpp - full ML detection as K binary objectives solved by GAS
//
// For codeword k the objective is E_k(b) = ||r - H A_k^-1 g(b)||^2 where g maps
// the B1 symbol bits to the constellation. g is affine in the bits for BPSK and
// QPSK (quadratic E_k) and bilinear per axis for 16-QAM (order-4 E_k).
#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "cpim/afdm.hpp"
#include "cpim/codebook.hpp"
#include "cpim/constellation.hpp"
#include "cpim/gas.hpp"
#include "cpim/objective.hpp"
#include "cpim/rng.hpp"
#include "cpim/types.hpp"

namespace cpim {

namespace detail {

/// Multilinear polynomial with complex coefficients, keyed by variable mask.
using ComplexPoly = std::map<std::uint64_t, Complex>;

inline ComplexPoly symbol_polynomial(const Constellation& c, std::uint32_t first_bit) {
    const auto bit = [&](std::uint32_t k) { return std::uint64_t{1} << (first_bit + k); };
    const double r2 = 1.0 / std::sqrt(2.0);
    ComplexPoly p;
    switch (c.kind()) {
    case Modulation::Bpsk:
        // (1 - 2b)(1 + j) / sqrt(2)
        p[0] = Complex(r2, r2);
        p[bit(0)] = Complex(-2.0 * r2, -2.0 * r2);
        break;
    case Modulation::Qpsk:
        p[0] = Complex(r2, r2);
        p[bit(0)] = Complex(-2.0 * r2, 0.0);
        p[bit(1)] = Complex(0.0, -2.0 * r2);
        break;
    case Modulation::Qam16: {
        // (1 - 2b0)(1 + 2b2) + j (1 - 2b1)(1 + 2b3), over sqrt(10)
        const double s = 1.0 / std::sqrt(10.0);
        p[0] = Complex(s, s);
        p[bit(0)] += Complex(-2.0 * s, 0.0);
        p[bit(2)] += Complex(2.0 * s, 0.0);
        p[bit(0) | bit(2)] += Complex(-4.0 * s, 0.0);
        p[bit(1)] += Complex(0.0, -2.0 * s);
        p[bit(3)] += Complex(0.0, 2.0 * s);
        p[bit(1) | bit(3)] += Complex(0.0, -4.0 * s);
        break;
    }
    }
    return p;
}

} // namespace detail

/// E_k(b) = ||r - H A_k^-1 g(b)||^2 over n = N log2(M) variables, bit order as in map_symbols.
inline PolynomialBinaryObjective build_ml_objective(const CVector& r, const CMatrix& h, const DaftMatrix& daft,
                                                    const Constellation& constellation) {
    const auto n = daft.size();
    require_size(r.size(), n, "build_ml_objective");
    require_size(h.rows(), n, "build_ml_objective");
    const auto q = static_cast<std::uint32_t>(constellation.bits_per_symbol());
    const std::size_t n_vars = static_cast<std::size_t>(n) * q;
    if (n_vars > 64) {
        throw BudgetError("build_ml_objective: " + std::to_string(n_vars) + " binary variables exceed 64");
    }
    const CMatrix b = h * daft.inverse();

    std::vector<detail::ComplexPoly> symbols;
    symbols.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index t = 0; t < n; ++t) {
        symbols.push_back(detail::symbol_polynomial(constellation, static_cast<std::uint32_t>(t) * q));
    }

    std::map<std::uint64_t, double> energy;
    for (Eigen::Index row = 0; row < n; ++row) {
        detail::ComplexPoly v;
        v[0] = r[row];
        for (Eigen::Index t = 0; t < n; ++t) {
            for (const auto& [mask, coef] : symbols[static_cast<std::size_t>(t)]) {
                v[mask] -= b(row, t) * coef;
            }
        }
        // |v|^2 = v * conj(v); bits are real so b_i^2 = b_i folds masks with OR.
        for (const auto& [m1, c1] : v) {
            for (const auto& [m2, c2] : v) {
                energy[m1 | m2] += (c1 * std::conj(c2)).real();
            }
        }
    }

    std::vector<PolynomialBinaryObjective::Term> terms;
    double constant = 0.0;
    for (const auto& [mask, coef] : energy) {
        if (mask == 0) {
            constant += coef;
            continue;
        }
        PolynomialBinaryObjective::Term t;
        for (std::uint32_t v = 0; v < 64; ++v) {
            if (mask >> v & 1U) {
                t.vars.push_back(v);
            }
        }
        t.coef = coef;
        terms.push_back(std::move(t));
    }
    return {n_vars, terms, constant};
}

struct MlSolveResult {
    Bits bits;
    std::size_t k_star = 1;
    double objective = 0.0;
    std::vector<GasTrace> device_traces;
};

/// Per-device seed, a pure function of (seed, k) so device scheduling cannot change results.
inline std::uint64_t device_seed(std::uint64_t seed, std::size_t k) { return derive_seed(seed, {0x6761730000ULL, k}); }

/// One GAS instance per codeword; the device with the smallest achieved objective wins (ties: smallest k).
inline MlSolveResult parallel_ml_solve(const CVector& r, const CMatrix& h, const Codebook& codebook,
                                       const Constellation& constellation, const GasConfig& config,
                                       unsigned jobs = 1) {
    config.validate();
    const std::size_t kk = codebook.size();
    std::vector<GasTrace> traces(kk);
    const auto run = [&](std::size_t k) {
        const auto obj = build_ml_objective(r, h, codebook.daft(k), constellation);
        GasConfig dev = config;
        dev.seed = device_seed(config.seed, k);
        traces[k - 1] = gas_minimize(obj, dev);
    };
    if (jobs <= 1 || kk == 1) {
        for (std::size_t k = 1; k <= kk; ++k) {
            run(k);
        }
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{1};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        for (unsigned w = 0; w < std::min<std::size_t>(jobs, kk); ++w) {
            pool.emplace_back([&] {
                for (std::size_t k = next++; k <= kk; k = next++) {
                    try {
                        run(k);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
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

    MlSolveResult out;
    out.objective = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= kk; ++k) {
        if (traces[k - 1].best_y < out.objective) {
            out.objective = traces[k - 1].best_y;
            out.k_star = k;
            out.bits = traces[k - 1].best_b;
        }
    }
    out.device_traces = std::move(traces);
    return out;
}

} // namespace cpim
