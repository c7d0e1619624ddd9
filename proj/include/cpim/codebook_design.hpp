// codebook_design.hpp - max-min codebook selection over a pool of permuted DAFT matrices
//
// Both distances reduce to the permuted second chirps because F_N diag(lambda_c1)
// is unitary and common to every codeword:
//
//     ||A_i - A_j||_F     = ||lambda_c2,i - lambda_c2,j||_2
//     tr(A_i^H A_j)       = <lambda_c2,i, lambda_c2,j>
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cpim/afdm.hpp"
#include "cpim/error.hpp"
#include "cpim/io.hpp"
#include "cpim/objective.hpp"
#include "cpim/permutation.hpp"
#include "cpim/rng.hpp"

namespace cpim {

enum class DistanceMetric { Frobenius, Angular };

inline std::string to_string(DistanceMetric m) { return m == DistanceMetric::Frobenius ? "frobenius" : "angular"; }

inline DistanceMetric parse_metric(const std::string& s) {
    if (s == "frobenius") {
        return DistanceMetric::Frobenius;
    }
    if (s == "angular") {
        return DistanceMetric::Angular;
    }
    throw ConfigError("unknown distance metric '" + s + "' (expected frobenius or angular)");
}

/// Returned for angular distance when |tr(A_i^H A_j)| is numerically zero.
inline constexpr double kAngularCeiling = 1e12;
inline constexpr double kAngularTraceFloor = 1e-12;

struct DistanceMatrix {
    std::vector<PermutationIndex> pool;
    DistanceMetric metric = DistanceMetric::Angular;
    RMatrix d;

    std::size_t size() const { return pool.size(); }
};

/// Pool of candidate permutations: every index when N! <= pool_size, otherwise a
/// seeded uniform sample of pool_size distinct indices in ascending order.
inline std::vector<PermutationIndex> permutation_pool(std::size_t n, std::size_t pool_size, std::uint64_t seed) {
    if (pool_size == 0) {
        throw InvalidArgument("permutation pool size must be positive");
    }
    std::vector<PermutationIndex> pool;
    const BigIndex total = factorial(n);
    if (total <= pool_size) {
        for (BigIndex i = 1; i <= total; ++i) {
            pool.emplace_back(i, n);
        }
        return pool;
    }
    Rng rng(seed);
    std::set<PermutationIndex> picked;
    while (picked.size() < pool_size) {
        picked.insert(random_permutation_index(n, rng));
    }
    return {picked.begin(), picked.end()};
}

inline DistanceMatrix pairwise_distances(const std::vector<PermutationIndex>& pool, const ChirpParams& params,
                                         DistanceMetric metric) {
    params.validate();
    const std::size_t p = pool.size();
    std::set<PermutationIndex> distinct;
    for (const auto& q : pool) {
        if (q.order() != params.n_subcarriers) {
            throw DimensionError("pairwise_distances: pool entry of order " + std::to_string(q.order()) +
                                 " does not match N = " + std::to_string(params.n_subcarriers));
        }
        if (!distinct.insert(q).second) {
            throw InvalidArgument("pairwise_distances: pool entry " + q.str() + " repeated");
        }
    }
    const CVector base = chirp_vector(params.c2, params.n_subcarriers);
    std::vector<CVector> chirps;
    chirps.reserve(p);
    for (const auto& q : pool) {
        chirps.push_back(permute_entries(base, permutation_from_index(q)));
    }

    DistanceMatrix out{pool, metric, RMatrix::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p))};
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            double v = 0.0;
            if (metric == DistanceMetric::Frobenius) {
                v = (chirps[i] - chirps[j]).norm();
            } else {
                const double tr = std::abs(chirps[i].dot(chirps[j]));
                v = tr < kAngularTraceFloor ? kAngularCeiling : 1.0 / tr;
            }
            out.d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            out.d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    }
    return out;
}

/// min over chosen pairs; +inf for fewer than two elements.
inline double subset_min_distance(const RMatrix& d, const std::vector<std::size_t>& subset) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < subset.size(); ++a) {
        for (std::size_t b = a + 1; b < subset.size(); ++b) {
            m = std::min(m, d(static_cast<Eigen::Index>(subset[a]), static_cast<Eigen::Index>(subset[b])));
        }
    }
    return m;
}

/// C(n, k), saturating at UINT64_MAX.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) {
        return 0;
    }
    k = std::min(k, n - k);
    unsigned __int128 c = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        c = c * (n - k + i) / i;
        if (c > std::numeric_limits<std::uint64_t>::max()) {
            return std::numeric_limits<std::uint64_t>::max();
        }
    }
    return static_cast<std::uint64_t>(c);
}

inline constexpr std::uint64_t kDefaultSubsetBudget = 10'000'000;

struct MaxMinResult {
    /// Positions into the pool, ascending.
    std::vector<std::size_t> selection;
    double d_min = 0.0;
    std::uint64_t subsets = 0;
};

namespace detail {

inline void check_subset_budget(std::size_t pool, std::size_t k, std::uint64_t budget) {
    if (k < 2 || k > pool) {
        throw InvalidArgument("max-min selection needs 2 <= K <= pool size (K = " + std::to_string(k) +
                              ", pool = " + std::to_string(pool) + ")");
    }
    const auto subsets = binomial(pool, k);
    if (subsets > budget) {
        throw BudgetError("exhaustive max-min over C(" + std::to_string(pool) + ", " + std::to_string(k) +
                          ") subsets exceeds the subset budget of " + std::to_string(budget));
    }
}

/// Visits every K-subset in lexicographic order with its running minimum distance.
template <typename Visit>
void for_each_subset(const RMatrix& d, std::size_t k, Visit&& visit) {
    const auto p = static_cast<std::size_t>(d.rows());
    std::vector<std::size_t> subset(k);
    std::vector<double> running(k + 1, std::numeric_limits<double>::infinity());
    // Iterative lexicographic enumeration with the prefix minimum cached per depth.
    std::size_t depth = 0;
    subset[0] = 0;
    while (true) {
        // Extend prefix [0, depth] into running[depth + 1].
        double m = running[depth];
        for (std::size_t a = 0; a < depth; ++a) {
            m = std::min(m, d(static_cast<Eigen::Index>(subset[a]), static_cast<Eigen::Index>(subset[depth])));
        }
        running[depth + 1] = m;
        if (depth + 1 == k) {
            visit(subset, m);
            // Advance the last position, backtracking when exhausted.
            while (true) {
                ++subset[depth];
                if (subset[depth] <= p - (k - depth)) {
                    break;
                }
                if (depth == 0) {
                    return;
                }
                --depth;
            }
        } else {
            ++depth;
            subset[depth] = subset[depth - 1] + 1;
        }
    }
}

} // namespace detail

/// Exact max-min K-subset; ties resolve to the lexicographically smallest position set.
inline MaxMinResult exhaustive_maxmin(const DistanceMatrix& distances, std::size_t k,
                                      std::uint64_t budget = kDefaultSubsetBudget) {
    detail::check_subset_budget(distances.size(), k, budget);
    MaxMinResult best;
    best.d_min = -std::numeric_limits<double>::infinity();
    detail::for_each_subset(distances.d, k, [&](const std::vector<std::size_t>& subset, double m) {
        ++best.subsets;
        if (m > best.d_min) {
            best.d_min = m;
            best.selection = subset;
        }
    });
    return best;
}

/// The largest and second-largest distinct d_min values over all K-subsets.
inline std::pair<double, std::optional<double>> maxmin_top_two(const DistanceMatrix& distances, std::size_t k,
                                                               std::uint64_t budget = kDefaultSubsetBudget) {
    detail::check_subset_budget(distances.size(), k, budget);
    double first = -std::numeric_limits<double>::infinity();
    std::optional<double> second;
    detail::for_each_subset(distances.d, k, [&](const std::vector<std::size_t>&, double m) {
        if (m > first) {
            if (first > -std::numeric_limits<double>::infinity()) {
                second = first;
            }
            first = m;
        } else if (m < first && (!second || m > *second)) {
            second = m;
        }
    });
    return {first, second};
}

struct RescaleOptions {
    double epsilon = 0.1;
    double d_max = 2.0;
};

/// Off-diagonal distances mapped affinely onto [1 + epsilon, d_max]; the order of distances is preserved.
inline DistanceMatrix rescale_distances(const DistanceMatrix& raw, RescaleOptions opts = {}) {
    if (!(opts.d_max > 1.0 + opts.epsilon) || !(opts.epsilon > 0.0)) {
        throw InvalidArgument("rescale_distances: need epsilon > 0 and d_max > 1 + epsilon");
    }
    const auto p = static_cast<Eigen::Index>(raw.size());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i + 1; j < p; ++j) {
            lo = std::min(lo, raw.d(i, j));
            hi = std::max(hi, raw.d(i, j));
        }
    }
    DistanceMatrix out = raw;
    const double floor = 1.0 + opts.epsilon;
    const double slope = hi > lo ? (opts.d_max - floor) / (hi - lo) : 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            out.d(i, j) = i == j ? 0.0 : floor + (raw.d(i, j) - lo) * slope;
        }
    }
    return out;
}

struct CodebookDesignProblem {
    /// Rescaled so every off-diagonal entry exceeds 1.
    DistanceMatrix distances;
    std::size_t k = 2;
    double lambda1 = 20.0;
    double lambda2 = 0.0;
};

/// Rescales raw distances and fills lambda2 = 10 * max_ij (1 / d_ij)^lambda1 unless given.
inline CodebookDesignProblem make_design_problem(const DistanceMatrix& raw, std::size_t k, double lambda1 = 20.0,
                                                 std::optional<double> lambda2 = {}, RescaleOptions opts = {}) {
    if (k < 1 || k > raw.size()) {
        throw InvalidArgument("codebook design needs 1 <= K <= pool size");
    }
    if (!(lambda1 >= 1.0)) {
        throw InvalidArgument("lambda1 must be at least 1");
    }
    CodebookDesignProblem prob{rescale_distances(raw, opts), k, lambda1, 0.0};
    if (lambda2) {
        if (!(*lambda2 > 0.0)) {
            throw InvalidArgument("lambda2 must be positive");
        }
        prob.lambda2 = *lambda2;
    } else {
        double w = 0.0;
        const auto p = static_cast<Eigen::Index>(raw.size());
        for (Eigen::Index i = 0; i < p; ++i) {
            for (Eigen::Index j = i + 1; j < p; ++j) {
                w = std::max(w, std::pow(1.0 / prob.distances.d(i, j), lambda1));
            }
        }
        prob.lambda2 = 10.0 * w;
    }
    return prob;
}

/// E(b) = sum_{i<j} b_i b_j (1/d_ij)^lambda1 + lambda2 (sum_i b_i - K)^2, with the square expanded.
inline PolynomialBinaryObjective build_codebook_objective(const CodebookDesignProblem& prob) {
    const std::size_t p = prob.distances.size();
    const double k = static_cast<double>(prob.k);
    std::vector<PolynomialBinaryObjective::Term> terms;
    terms.reserve(p * (p + 1) / 2);
    for (std::uint32_t i = 0; i < p; ++i) {
        // b_i^2 = b_i: lambda2 (b_i - 2K b_i)
        terms.push_back({{i}, prob.lambda2 * (1.0 - 2.0 * k)});
    }
    for (std::uint32_t i = 0; i < p; ++i) {
        for (std::uint32_t j = i + 1; j < p; ++j) {
            const double w = std::pow(1.0 / prob.distances.d(i, j), prob.lambda1);
            terms.push_back({{i, j}, w + 2.0 * prob.lambda2});
        }
    }
    return {p, terms, prob.lambda2 * k * k};
}

/// Direct (unexpanded) evaluation of the codebook objective.
inline double codebook_objective_direct(const CodebookDesignProblem& prob, const Bits& b) {
    const std::size_t p = prob.distances.size();
    require_size(static_cast<Eigen::Index>(b.size()), static_cast<Eigen::Index>(p), "codebook objective");
    double first = 0.0;
    double count = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        count += b[i];
        for (std::size_t j = i + 1; j < p; ++j) {
            if (b[i] && b[j]) {
                first += std::pow(1.0 / prob.distances.d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                                  prob.lambda1);
            }
        }
    }
    const double dev = count - static_cast<double>(prob.k);
    return first + prob.lambda2 * dev * dev;
}

/// Smallest lambda1 for which any codebook attaining d_min1 scores below every codebook
/// with d_min <= d_min2: C(K,2) (1/d1)^lambda1 < (1/d2)^lambda1.
inline double minimum_lambda1(const DistanceMatrix& rescaled, std::size_t k,
                              std::uint64_t budget = kDefaultSubsetBudget) {
    const auto [d1, d2] = maxmin_top_two(rescaled, k, budget);
    if (!d2) {
        return 1.0;
    }
    const double pairs = static_cast<double>(binomial(k, 2));
    return std::max(1.0, std::log(pairs) / std::log(d1 / *d2));
}

struct Selection {
    std::vector<std::size_t> positions;
    std::vector<PermutationIndex> indices;
    std::size_t cardinality() const { return positions.size(); }
};

inline Selection decode_selection(const Bits& b, const std::vector<PermutationIndex>& pool) {
    require_size(static_cast<Eigen::Index>(b.size()), static_cast<Eigen::Index>(pool.size()), "decode_selection");
    Selection s;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (b[i]) {
            s.positions.push_back(i);
            s.indices.push_back(pool[i]);
        }
    }
    return s;
}

/// CSV columns: row, col (permutation indices), distance; one line per grid cell.
inline std::string distance_grid_csv(const DistanceMatrix& dm) {
    std::ostringstream out;
    out << "row,col,distance\n";
    for (std::size_t i = 0; i < dm.size(); ++i) {
        for (std::size_t j = 0; j < dm.size(); ++j) {
            out << dm.pool[i].str() << "," << dm.pool[j].str() << ","
                << format_double(dm.d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << "\n";
        }
    }
    return out.str();
}

} // namespace cpim
