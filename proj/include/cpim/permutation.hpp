// permutation.hpp - lexicographic ranking of permutations (factorial number system)
//
// Index 1 is the identity (0, 1, ..., N-1); index N! is the reversal. Ranks are
// arbitrary precision because N! overflows 64 bits already at N = 21.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cpim/error.hpp"
#include "cpim/rng.hpp"

namespace cpim {

using BigIndex = boost::multiprecision::cpp_int;
using Permutation = std::vector<std::size_t>;

inline BigIndex factorial(std::size_t n) {
    BigIndex f = 1;
    for (std::size_t k = 2; k <= n; ++k) {
        f *= k;
    }
    return f;
}

/// One-based lexicographic rank of a permutation of {0, ..., order-1}.
class PermutationIndex {
public:
    PermutationIndex(BigIndex index, std::size_t order) : index_(std::move(index)), order_(order) {
        if (order_ == 0) {
            throw DimensionError("permutation order must be positive");
        }
        if (index_ < 1 || index_ > factorial(order_)) {
            throw IndexError("permutation index " + index_.str() + " outside [1, " + std::to_string(order_) +
                             "!]");
        }
    }

    static PermutationIndex identity(std::size_t order) { return {BigIndex(1), order}; }

    const BigIndex& index() const { return index_; }
    std::size_t order() const { return order_; }
    std::string str() const { return index_.str(); }

    friend bool operator==(const PermutationIndex& a, const PermutationIndex& b) {
        return a.order_ == b.order_ && a.index_ == b.index_;
    }
    friend bool operator<(const PermutationIndex& a, const PermutationIndex& b) {
        return a.order_ != b.order_ ? a.order_ < b.order_ : a.index_ < b.index_;
    }

private:
    BigIndex index_;
    std::size_t order_;
};

inline Permutation permutation_from_index(const PermutationIndex& i) {
    const std::size_t n = i.order();
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});

    BigIndex rest = i.index() - 1;
    BigIndex radix = factorial(n);
    Permutation perm;
    perm.reserve(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
        radix /= (n - pos);
        BigIndex digit = rest / radix;
        rest %= radix;
        auto d = digit.convert_to<std::size_t>();
        perm.push_back(pool[d]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(d));
    }
    return perm;
}

inline void validate_permutation(std::span<const std::size_t> perm) {
    if (perm.empty()) {
        throw InvalidPermutationError("empty permutation");
    }
    std::vector<bool> seen(perm.size(), false);
    for (auto v : perm) {
        if (v >= perm.size()) {
            throw InvalidPermutationError("element " + std::to_string(v) + " out of range for order " +
                                          std::to_string(perm.size()));
        }
        if (seen[v]) {
            throw InvalidPermutationError("element " + std::to_string(v) + " repeated");
        }
        seen[v] = true;
    }
}

inline PermutationIndex index_from_permutation(std::span<const std::size_t> perm) {
    validate_permutation(perm);
    const std::size_t n = perm.size();
    BigIndex rank = 0;
    for (std::size_t pos = 0; pos < n; ++pos) {
        // Lehmer digit: later elements smaller than the current one.
        std::size_t smaller = 0;
        for (std::size_t later = pos + 1; later < n; ++later) {
            if (perm[later] < perm[pos]) {
                ++smaller;
            }
        }
        rank = rank * (n - pos) + smaller;
    }
    return {rank + 1, n};
}

/// Uniform draw over all N! indices.
inline PermutationIndex random_permutation_index(std::size_t order, Rng& rng) {
    Permutation p(order);
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::shuffle(p.begin(), p.end(), rng);
    return index_from_permutation(p);
}

} // namespace cpim
