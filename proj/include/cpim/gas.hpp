// gas.hpp - classically emulated Grover adaptive search
//
// A measurement of R^L S_y |0> is emulated by its distribution: with
// g = |{b : E(b) < y}| / 2^n and theta = asin(sqrt(g)), the outcome is a uniform
// member of the good set with probability sin^2((2L + 1) theta) and a uniform
// member of the complement otherwise. All 2^n values are tabulated once and
// sorted, so each sample costs a binary search.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cpim/error.hpp"
#include "cpim/objective.hpp"
#include "cpim/rng.hpp"

namespace cpim {

inline constexpr std::size_t kMaxEmulatedVars = 26;

class GroverEmulator {
public:
    explicit GroverEmulator(const PolynomialBinaryObjective& obj, std::optional<FixedPointEncoding> fixed_point = {},
                            std::size_t max_vars = kMaxEmulatedVars)
        : n_(obj.n_vars()) {
        if (n_ > max_vars || n_ > 32) {
            throw BudgetError("Grover emulation over n = " + std::to_string(n_) +
                              " variables exceeds the budget of " + std::to_string(max_vars) +
                              " (2^n states are tabulated); reduce the instance, e.g. a smaller pool or N");
        }
        const std::uint64_t size = std::uint64_t{1} << n_;
        values_.resize(size);
        if (fixed_point) {
            for (std::uint64_t s = 0; s < size; ++s) {
                values_[s] = obj.evaluate_fixed_point(s, *fixed_point);
            }
        } else {
            tabulate(obj);
        }
        order_.resize(size);
        std::iota(order_.begin(), order_.end(), std::uint32_t{0});
        std::sort(order_.begin(), order_.end(), [this](std::uint32_t a, std::uint32_t b) {
            return values_[a] < values_[b] || (values_[a] == values_[b] && a < b);
        });
    }

    std::size_t n_vars() const { return n_; }
    std::uint64_t num_states() const { return values_.size(); }
    double value(std::uint64_t state) const { return values_.at(state); }
    double min_value() const { return values_[order_.front()]; }
    double max_value() const { return values_[order_.back()]; }

    /// Number of states with E(b) < y.
    std::uint64_t good_count(double y) const {
        auto it = std::partition_point(order_.begin(), order_.end(), [&](std::uint32_t s) { return values_[s] < y; });
        return static_cast<std::uint64_t>(it - order_.begin());
    }

    double good_fraction(double y) const {
        return static_cast<double>(good_count(y)) / static_cast<double>(num_states());
    }

    /// sin^2((2L + 1) asin(sqrt(g))).
    static double success_probability(double g, int rotations) {
        const double theta = std::asin(std::sqrt(std::clamp(g, 0.0, 1.0)));
        const double s = std::sin((2.0 * rotations + 1.0) * theta);
        return s * s;
    }

    std::uint64_t sample(double y, int rotations, Rng& rng) const {
        if (rotations < 0) {
            throw InvalidArgument("grover_sample: rotation count must be non-negative");
        }
        const std::uint64_t size = num_states();
        const std::uint64_t good = good_count(y);
        if (good == 0) {
            return order_[std::uniform_int_distribution<std::uint64_t>(0, size - 1)(rng)];
        }
        if (good == size) {
            return order_[std::uniform_int_distribution<std::uint64_t>(0, size - 1)(rng)];
        }
        const double p = success_probability(static_cast<double>(good) / static_cast<double>(size), rotations);
        if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p) {
            return order_[std::uniform_int_distribution<std::uint64_t>(0, good - 1)(rng)];
        }
        return order_[std::uniform_int_distribution<std::uint64_t>(good, size - 1)(rng)];
    }

private:
    // Depth-first over variables; each state's value is the sum of the terms it
    // switches on, added along its own path, so rounding does not drift across states.
    void tabulate(const PolynomialBinaryObjective& obj) {
        by_top_var_.assign(n_, {});
        const auto& terms = obj.terms();
        for (const auto& t : terms) {
            std::uint64_t rest = 0;
            for (std::size_t k = 0; k + 1 < t.vars.size(); ++k) {
                rest |= std::uint64_t{1} << t.vars[k];
            }
            by_top_var_[t.vars.back()].push_back({rest, t.coef});
        }
        if (n_ == 0) {
            values_[0] = obj.constant();
            return;
        }
        descend(0, 0, obj.constant());
        by_top_var_.clear();
    }

    void descend(std::size_t var, std::uint64_t state, double partial) {
        if (var == n_) {
            values_[state] = partial;
            return;
        }
        descend(var + 1, state, partial);
        double add = 0.0;
        for (const auto& [rest, coef] : by_top_var_[var]) {
            if ((state & rest) == rest) {
                add += coef;
            }
        }
        descend(var + 1, state | (std::uint64_t{1} << var), partial + add);
    }

    std::size_t n_;
    std::vector<double> values_;
    std::vector<std::uint32_t> order_;
    std::vector<std::vector<std::pair<std::uint64_t, double>>> by_top_var_;
};

/// One emulated measurement. Builds the state table, so prefer GroverEmulator::sample in loops.
inline Bits grover_sample(const PolynomialBinaryObjective& obj, double threshold, int rotations, Rng& rng) {
    GroverEmulator em(obj);
    return bits_from_state(em.sample(threshold, rotations, rng), obj.n_vars());
}

struct GasConfig {
    double scaling_lambda = 8.0 / 7.0;
    std::uint64_t max_iterations = 1000;
    /// Consecutive non-improving samples before stopping; unset means 8 * sqrt(2^n).
    std::optional<std::uint64_t> no_improve_limit;
    std::uint64_t seed = 0;
    std::optional<FixedPointEncoding> fixed_point;

    void validate() const {
        if (!(scaling_lambda > 1.0)) {
            throw InvalidArgument("GAS scaling factor must exceed 1");
        }
        if (max_iterations == 0) {
            throw InvalidArgument("GAS max_iterations must be positive");
        }
        if (no_improve_limit && *no_improve_limit == 0) {
            throw InvalidArgument("GAS no_improve_limit must be positive");
        }
        if (fixed_point && (fixed_point->register_bits < 2 || fixed_point->register_bits > 64 ||
                            fixed_point->frac_bits < 0 || fixed_point->frac_bits > 52)) {
            throw InvalidArgument("GAS fixed-point encoding out of range");
        }
    }

    std::uint64_t effective_no_improve_limit(std::size_t n) const {
        if (no_improve_limit) {
            return *no_improve_limit;
        }
        return static_cast<std::uint64_t>(std::ceil(8.0 * std::sqrt(std::ldexp(1.0, static_cast<int>(n)))));
    }
};

struct GasStep {
    std::uint64_t iteration = 0;
    /// Threshold y_i the oracle marked against.
    double threshold = 0.0;
    int rotations = 0;
    double measured = 0.0;
    std::uint64_t queries = 0;
};

struct GasTrace {
    std::vector<GasStep> history;
    Bits best_b;
    double best_y = 0.0;
    /// Emulated measurements (grover_sample calls).
    std::uint64_t oracle_queries = 0;
    /// Total Grover rotations applied, sum of L_i.
    std::uint64_t rotations = 0;
};

inline GasTrace gas_minimize(const GroverEmulator& em, const GasConfig& config) {
    config.validate();
    Rng rng(config.seed);
    const std::size_t n = em.n_vars();
    const double k_cap = std::sqrt(std::ldexp(1.0, static_cast<int>(n)));
    const std::uint64_t patience = config.effective_no_improve_limit(n);

    GasTrace trace;
    std::uint64_t best = std::uniform_int_distribution<std::uint64_t>(0, em.num_states() - 1)(rng);
    double y = em.value(best);
    double k = 1.0;
    std::uint64_t misses = 0;
    for (std::uint64_t i = 1; i <= config.max_iterations && misses < patience; ++i) {
        const int l_max = static_cast<int>(std::ceil(k - 1.0));
        const int rotations = std::uniform_int_distribution<int>(0, std::max(l_max, 0))(rng);
        const std::uint64_t b = em.sample(y, rotations, rng);
        const double measured = em.value(b);
        ++trace.oracle_queries;
        trace.rotations += static_cast<std::uint64_t>(rotations);
        trace.history.push_back({i, y, rotations, measured, trace.oracle_queries});
        if (measured < y) {
            best = b;
            y = measured;
            k = 1.0;
            misses = 0;
        } else {
            k = std::min(config.scaling_lambda * k, k_cap);
            ++misses;
        }
    }
    trace.best_b = bits_from_state(best, n);
    trace.best_y = y;
    return trace;
}

inline GasTrace gas_minimize(const PolynomialBinaryObjective& obj, const GasConfig& config) {
    config.validate();
    GroverEmulator em(obj, config.fixed_point);
    return gas_minimize(em, config);
}

/// CSV columns: iteration, y (threshold), L, value (measured), queries (cumulative).
inline std::string trace_to_csv(const GasTrace& trace) {
    std::ostringstream out;
    out << "iteration,y,L,value,queries\n";
    for (const auto& s : trace.history) {
        out << s.iteration << "," << format_double(s.threshold) << "," << s.rotations << ","
            << format_double(s.measured) << "," << s.queries << "\n";
    }
    return out.str();
}

} // namespace cpim
