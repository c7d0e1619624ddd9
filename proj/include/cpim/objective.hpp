// objective.hpp - multilinear polynomial objectives over binary variables
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cpim/error.hpp"
#include "cpim/io.hpp"
#include "cpim/types.hpp"

namespace cpim {

/// Optional fixed-point value register: coefficients rounded to frac_bits
/// fractional bits, sums wrapped to register_bits in two's complement.
struct FixedPointEncoding {
    int register_bits = 32;
    int frac_bits = 16;
};

class PolynomialBinaryObjective {
public:
    struct Term {
        std::vector<std::uint32_t> vars; // sorted, distinct
        double coef = 0.0;
    };

    PolynomialBinaryObjective() = default;

    /// Builds from (vars, coef) pairs. Repeated variables collapse (b^2 = b),
    /// identical subsets merge, an empty subset goes to the constant.
    PolynomialBinaryObjective(std::size_t n_vars, const std::vector<Term>& terms, double constant = 0.0)
        : n_vars_(n_vars), constant_(constant) {
        std::map<std::vector<std::uint32_t>, double> merged;
        for (auto t : terms) {
            std::sort(t.vars.begin(), t.vars.end());
            t.vars.erase(std::unique(t.vars.begin(), t.vars.end()), t.vars.end());
            for (auto v : t.vars) {
                if (v >= n_vars) {
                    throw IndexError("objective term uses variable " + std::to_string(v) + " but n = " +
                                     std::to_string(n_vars));
                }
            }
            if (t.vars.empty()) {
                constant_ += t.coef;
            } else {
                merged[t.vars] += t.coef;
            }
        }
        for (auto& [vars, coef] : merged) {
            std::uint64_t mask = 0;
            if (n_vars <= 64) {
                for (auto v : vars) {
                    mask |= std::uint64_t{1} << v;
                }
            }
            terms_.push_back({vars, coef});
            masks_.push_back(mask);
        }
    }

    std::size_t n_vars() const { return n_vars_; }
    double constant() const { return constant_; }
    const std::vector<Term>& terms() const { return terms_; }

    std::size_t degree() const {
        std::size_t d = 0;
        for (const auto& t : terms_) {
            d = std::max(d, t.vars.size());
        }
        return d;
    }

    double evaluate(const Bits& b) const {
        require_size(static_cast<Eigen::Index>(b.size()), static_cast<Eigen::Index>(n_vars_), "objective evaluate");
        double e = constant_;
        for (const auto& t : terms_) {
            bool on = true;
            for (auto v : t.vars) {
                on = on && b[v] != 0;
            }
            if (on) {
                e += t.coef;
            }
        }
        return e;
    }

    /// Bit v of the state is variable v. Requires n <= 64.
    double evaluate(std::uint64_t state) const {
        if (n_vars_ > 64) {
            throw BudgetError("mask evaluation needs n <= 64");
        }
        double e = constant_;
        for (std::size_t k = 0; k < terms_.size(); ++k) {
            if ((state & masks_[k]) == masks_[k]) {
                e += terms_[k].coef;
            }
        }
        return e;
    }

    /// Value as read from an m-bit register: integer-rounded coefficients, wrapped sum.
    double evaluate_fixed_point(std::uint64_t state, const FixedPointEncoding& enc) const {
        const double scale = std::ldexp(1.0, enc.frac_bits);
        std::int64_t acc = static_cast<std::int64_t>(std::llround(constant_ * scale));
        for (std::size_t k = 0; k < terms_.size(); ++k) {
            if ((state & masks_[k]) == masks_[k]) {
                acc += static_cast<std::int64_t>(std::llround(terms_[k].coef * scale));
            }
        }
        return static_cast<double>(wrap(acc, enc.register_bits)) / scale;
    }

    static std::int64_t wrap(std::int64_t v, int bits) {
        if (bits >= 64) {
            return v;
        }
        const std::uint64_t mod = std::uint64_t{1} << bits;
        std::uint64_t u = static_cast<std::uint64_t>(v) & (mod - 1);
        if (u >= mod / 2) {
            return static_cast<std::int64_t>(u) - static_cast<std::int64_t>(mod);
        }
        return static_cast<std::int64_t>(u);
    }

private:
    std::size_t n_vars_ = 0;
    double constant_ = 0.0;
    std::vector<Term> terms_;
    std::vector<std::uint64_t> masks_;
};

inline Bits bits_from_state(std::uint64_t state, std::size_t n) {
    Bits b(n);
    for (std::size_t v = 0; v < n; ++v) {
        b[v] = static_cast<std::uint8_t>((state >> v) & 1U);
    }
    return b;
}

inline std::uint64_t state_from_bits(const Bits& b) {
    if (b.size() > 64) {
        throw BudgetError("state_from_bits: more than 64 variables");
    }
    std::uint64_t s = 0;
    for (std::size_t v = 0; v < b.size(); ++v) {
        s |= static_cast<std::uint64_t>(b[v] & 1U) << v;
    }
    return s;
}

// Term-list text format, one item per line, '#' starts a comment:
//
//     vars 3
//     const 1.5
//     -2.0 0 1        coefficient followed by variable indices
//
inline std::string objective_to_string(const PolynomialBinaryObjective& obj) {
    std::ostringstream out;
    out << "vars " << obj.n_vars() << "\n";
    out << "const " << format_double(obj.constant()) << "\n";
    for (const auto& t : obj.terms()) {
        out << format_double(t.coef);
        for (auto v : t.vars) {
            out << " " << v;
        }
        out << "\n";
    }
    return out.str();
}

inline PolynomialBinaryObjective objective_from_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::optional<std::size_t> n;
    double constant = 0.0;
    std::vector<PolynomialBinaryObjective::Term> terms;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.resize(hash);
        }
        auto fields = split_list(trim(line));
        if (fields.empty()) {
            continue;
        }
        const std::string where = "terms line " + std::to_string(lineno);
        if (fields[0] == "vars") {
            if (fields.size() != 2) {
                throw ConfigError(where + ": expected 'vars <n>'");
            }
            n = static_cast<std::size_t>(parse_integer(fields[1], where));
        } else if (fields[0] == "const") {
            if (fields.size() != 2) {
                throw ConfigError(where + ": expected 'const <value>'");
            }
            constant += parse_double(fields[1], where);
        } else {
            PolynomialBinaryObjective::Term t;
            t.coef = parse_double(fields[0], where);
            for (std::size_t k = 1; k < fields.size(); ++k) {
                const auto v = parse_integer(fields[k], where);
                if (v < 0) {
                    throw ConfigError(where + ": negative variable index");
                }
                t.vars.push_back(static_cast<std::uint32_t>(v));
            }
            terms.push_back(std::move(t));
        }
    }
    if (!n) {
        throw ConfigError("terms file: missing 'vars <n>' line");
    }
    try {
        return {*n, terms, constant};
    } catch (const IndexError& e) {
        throw ConfigError(std::string("terms file: ") + e.what());
    }
}

} // namespace cpim
