// codebook.hpp - the K permuted DAFT codewords and their text file format
//
// File layout (INI style, one section):
//
//     [codebook]
//     N = 32
//     c1 = 0.109375
//     c2 = 0.019313562148434216
//     xi = 0
//     f_max = 3
//     K = 2
//     q = 1, 263130836933693530167218012160000000
//
// Reals use the shortest round-trip decimal form, permutation indices are exact.
#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cpim/afdm.hpp"
#include "cpim/error.hpp"
#include "cpim/io.hpp"
#include "cpim/permutation.hpp"

namespace cpim {

class Codebook {
public:
    Codebook(const ChirpParams& params, std::vector<PermutationIndex> entries)
        : params_(params), entries_(std::move(entries)) {
        params_.validate();
        if (entries_.empty()) {
            throw InvalidArgument("codebook needs at least one entry");
        }
        if (!is_power_of_two(entries_.size())) {
            throw InvalidArgument("codebook size K = " + std::to_string(entries_.size()) +
                                  " is not a power of two");
        }
        std::set<PermutationIndex> seen;
        for (const auto& q : entries_) {
            if (!seen.insert(q).second) {
                throw InvalidArgument("codebook entry " + q.str() + " repeated");
            }
        }
        matrices_.reserve(entries_.size());
        for (const auto& q : entries_) {
            matrices_.emplace_back(params_, q);
        }
    }

    /// Classical AFDM: the single identity codeword.
    static Codebook classical(const ChirpParams& params) {
        return {params, {PermutationIndex::identity(params.n_subcarriers)}};
    }

    std::size_t size() const { return entries_.size(); }
    /// log2(K) index bits per frame.
    int index_bits() const { return exact_log2(entries_.size()); }
    const ChirpParams& params() const { return params_; }
    const std::vector<PermutationIndex>& entries() const { return entries_; }

    /// One-based codeword access, k in [1, K].
    const DaftMatrix& daft(std::size_t k) const {
        check(k);
        return matrices_[k - 1];
    }
    const PermutationIndex& entry(std::size_t k) const {
        check(k);
        return entries_[k - 1];
    }

private:
    void check(std::size_t k) const {
        if (k < 1 || k > entries_.size()) {
            throw IndexError("codeword index " + std::to_string(k) + " outside [1, " +
                             std::to_string(entries_.size()) + "]");
        }
    }

    ChirpParams params_;
    std::vector<PermutationIndex> entries_;
    std::vector<DaftMatrix> matrices_;
};

inline std::string codebook_to_string(const Codebook& cb) {
    const auto& p = cb.params();
    std::ostringstream out;
    out << "[codebook]\n";
    out << "N = " << p.n_subcarriers << "\n";
    out << "c1 = " << format_double(p.c1) << "\n";
    out << "c2 = " << format_double(p.c2) << "\n";
    out << "xi = " << p.guard_xi << "\n";
    out << "f_max = " << p.f_max << "\n";
    out << "K = " << cb.size() << "\n";
    out << "q = ";
    for (std::size_t k = 0; k < cb.size(); ++k) {
        out << (k ? ", " : "") << cb.entries()[k].str();
    }
    out << "\n";
    return out.str();
}

inline Codebook codebook_from_string(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("codebook file line " + std::to_string(e.line()) + ": " + e.message());
    }
    const auto section = tree.get_child_optional("codebook");
    if (!section) {
        throw ConfigError("codebook file: missing [codebook] section");
    }
    static const std::set<std::string> known{"N", "c1", "c2", "xi", "f_max", "K", "q"};
    for (const auto& kv : *section) {
        if (!known.contains(kv.first)) {
            throw ConfigError("codebook file: unknown key '" + kv.first + "'");
        }
    }
    const auto need = [&](const std::string& key) {
        auto v = section->get_optional<std::string>(key);
        if (!v) {
            throw ConfigError("codebook file: missing key '" + key + "'");
        }
        return trim(*v);
    };
    const auto n = static_cast<std::size_t>(parse_integer(need("N"), "codebook.N"));
    const double c1 = parse_double(need("c1"), "codebook.c1");
    const double c2 = parse_double(need("c2"), "codebook.c2");
    const int xi = section->count("xi") ? static_cast<int>(parse_integer(need("xi"), "codebook.xi")) : 0;
    const int fmax = section->count("f_max") ? static_cast<int>(parse_integer(need("f_max"), "codebook.f_max")) : 0;
    const auto k = static_cast<std::size_t>(parse_integer(need("K"), "codebook.K"));

    std::vector<PermutationIndex> entries;
    for (const auto& tok : split_list(need("q"))) {
        BigIndex idx;
        try {
            idx = BigIndex(tok);
        } catch (const std::exception&) {
            throw ConfigError("codebook file: bad permutation index '" + tok + "'");
        }
        entries.emplace_back(idx, n);
    }
    if (entries.size() != k) {
        throw ConfigError("codebook file: K = " + std::to_string(k) + " but q lists " +
                          std::to_string(entries.size()) + " indices");
    }
    return {ChirpParams(n, c1, c2, xi, fmax), std::move(entries)};
}

inline void save_codebook(const Codebook& cb, const std::string& path) { write_file(path, codebook_to_string(cb)); }

inline Codebook load_codebook(const std::string& path) { return codebook_from_string(read_file(path)); }

} // namespace cpim
