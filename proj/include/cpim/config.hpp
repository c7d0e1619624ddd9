// config.hpp - sectioned key = value experiment configuration
//
//     [system]
//     N = 32
//     M = 2
//
// Every key has a fixed section and key names are unique across sections, so an
// override may be written either as "seed=7" or as "sim.seed=7". An empty value
// leaves an optional setting unset.
#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "cpim/codebook_design.hpp"
#include "cpim/error.hpp"
#include "cpim/io.hpp"
#include "cpim/sim.hpp"

namespace cpim {

struct ConfigKey {
    const char* section;
    const char* key;
    const char* default_value;
    const char* help;
};

inline const std::vector<ConfigKey>& config_schema() {
    static const std::vector<ConfigKey> schema{
        {"system", "N", "32", "number of chirp subcarriers"},
        {"system", "M", "2", "constellation order: 2, 4 or 16"},
        {"system", "K", "2", "codebook size, a power of two"},
        {"system", "xi", "0", "guard width for the c1 formula"},
        {"system", "c2", "", "second chirp parameter; empty for the irrational default"},
        {"channel", "P", "3", "number of paths"},
        {"channel", "ell_max", "3", "maximum delay in samples"},
        {"channel", "f_max", "3", "maximum Doppler in bins"},
        {"channel", "fractional_doppler", "false", "draw real-valued Doppler shifts"},
        {"codebook", "codebook_source", "designed", "designed, explicit, random or file"},
        {"codebook", "codebook_indices", "", "comma-separated permutation indices (explicit source)"},
        {"codebook", "codebook_file", "", "codebook file (file source)"},
        {"codebook", "metric", "angular", "frobenius or angular"},
        {"codebook", "pool_size", "256", "candidate permutations when N! is larger"},
        {"codebook", "subset_budget", "10000000", "largest number of K-subsets the oracle may enumerate"},
        {"codebook", "design_method", "both", "exhaustive, gas or both"},
        {"codebook", "lambda1", "20", "distance exponent of the design objective"},
        {"codebook", "lambda2", "", "cardinality penalty; empty for 10 x the largest distance term"},
        {"codebook", "rescale_epsilon", "0.1", "rescaled distances start at 1 + epsilon"},
        {"codebook", "rescale_dmax", "2", "largest rescaled distance"},
        {"detector", "detector", "mmse_ml", "full_ml, mmse_ml or gas"},
        {"detector", "filter_n0", "", "noise variance assumed by the MMSE filter; empty for the true value"},
        {"detector", "ml_budget", "16777216", "largest K M^N candidate count full ML may search"},
        {"gas", "gas_lambda", "1.142857142857142857", "rotation-range growth factor"},
        {"gas", "gas_max_iterations", "1000", "iteration cap"},
        {"gas", "gas_no_improve_limit", "", "consecutive misses before stopping; empty for 8 sqrt(2^n)"},
        {"gas", "fixed_point_bits", "", "value-register width m; empty for exact values"},
        {"gas", "fixed_point_frac_bits", "16", "fractional bits of the value register"},
        {"sim", "ebn0_db", "0, 5, 10", "Eb/N0 grid in dB"},
        {"sim", "trials_per_point", "1000", "frame cap per grid point"},
        {"sim", "target_bit_errors", "200", "stop a point after this many bit errors (0 disables)"},
        {"sim", "seed", "1", "master seed"},
        {"sim", "noise_n0", "", "fixed channel noise variance replacing the Eb/N0 value (0 = noiseless)"},
        {"sim", "theory_reference", "false", "also emit the shifted classical reference curve"},
        {"solve", "objective", "codebook", "gas-solve objective: codebook, ml-instance or terms"},
        {"solve", "terms_file", "", "term-list file for objective = terms"},
        {"solve", "ml_codeword", "0", "codeword k for the ml-instance objective; 0 uses the transmitted one"},
        {"solve", "demo_ebn0_db", "20", "Eb/N0 of single-frame runs (detect-demo, ml-instance)"},
    };
    return schema;
}

inline const ConfigKey* find_config_key(const std::string& section, const std::string& key) {
    for (const auto& k : config_schema()) {
        if (k.key == key && (section.empty() || section == k.section)) {
            return &k;
        }
    }
    return nullptr;
}

enum class DesignMethod { Exhaustive, Gas, Both };
enum class SolveObjective { Codebook, MlInstance, Terms };

struct ExperimentConfig {
    SimConfig sim;
    DesignMethod design_method = DesignMethod::Both;
    double lambda1 = 20.0;
    std::optional<double> lambda2;
    RescaleOptions rescale;
    SolveObjective objective = SolveObjective::Codebook;
    std::string terms_file;
    std::size_t ml_codeword = 0;
    double demo_ebn0_db = 20.0;
};

/// Raw string values keyed "section.key", defaults filled in.
class ConfigValues {
public:
    ConfigValues() {
        for (const auto& k : config_schema()) {
            values_[full_name(k)] = k.default_value;
        }
    }

    static std::string full_name(const ConfigKey& k) { return std::string(k.section) + "." + k.key; }

    /// Applies "key" or "section.key"; origin prefixes diagnostics.
    void set(const std::string& name, const std::string& value, const std::string& origin = "") {
        std::string section;
        std::string key = trim(name);
        if (auto dot = key.find('.'); dot != std::string::npos) {
            section = key.substr(0, dot);
            key = key.substr(dot + 1);
        }
        const ConfigKey* entry = find_config_key(section, key);
        if (!entry) {
            throw ConfigError(origin + "unknown config key '" + name + "'");
        }
        values_[full_name(*entry)] = trim(value);
    }

    void apply_override(const std::string& assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("override '" + assignment + "': expected key=value");
        }
        set(assignment.substr(0, eq), assignment.substr(eq + 1), "override '" + assignment + "': ");
    }

    void load_ini_text(const std::string& text, const std::string& source = "config") {
        boost::property_tree::ptree tree;
        std::istringstream in(text);
        try {
            boost::property_tree::read_ini(in, tree);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ConfigError(source + " line " + std::to_string(e.line()) + ": " + e.message());
        }
        for (const auto& [name, node] : tree) {
            if (node.empty()) {
                set(name, node.data(), source + ": ");
                continue;
            }
            bool known_section = false;
            for (const auto& k : config_schema()) {
                known_section = known_section || name == k.section;
            }
            if (!known_section) {
                throw ConfigError(source + ": unknown section [" + name + "]");
            }
            for (const auto& [key, leaf] : node) {
                set(name + "." + key, leaf.data(), source + ": [" + name + "] ");
            }
        }
    }

    void load_ini_file(const std::string& path) { load_ini_text(read_file(path), path); }

    const std::string& get(const std::string& full) const {
        auto it = values_.find(full);
        if (it == values_.end()) {
            throw ConfigError("internal: no config key " + full);
        }
        return it->second;
    }

    /// The effective configuration as INI text, in schema order.
    std::string to_ini() const {
        std::ostringstream out;
        std::string section;
        for (const auto& k : config_schema()) {
            if (section != k.section) {
                out << (section.empty() ? "" : "\n") << "[" << k.section << "]\n";
                section = k.section;
            }
            out << k.key << " = " << get(full_name(k)) << "\n";
        }
        return out.str();
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        for (const auto& k : config_schema()) {
            j[k.section][k.key] = get(full_name(k));
        }
        return j;
    }

    std::string hash() const { return hex64(fnv1a64(to_ini())); }

    ExperimentConfig build() const;

private:
    std::map<std::string, std::string> values_;
};

namespace detail {

inline bool parse_bool(const std::string& s, const std::string& what) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") {
        return true;
    }
    if (s == "false" || s == "0" || s == "no" || s == "off") {
        return false;
    }
    throw ConfigError(what + ": expected true or false, got '" + s + "'");
}

inline std::uint64_t parse_count(const std::string& s, const std::string& what) {
    const auto v = parse_integer(s, what);
    if (v < 0) {
        throw ConfigError(what + ": must be non-negative");
    }
    return static_cast<std::uint64_t>(v);
}

} // namespace detail

inline ExperimentConfig ConfigValues::build() const {
    using detail::parse_bool;
    using detail::parse_count;
    const auto opt_double = [&](const std::string& key) -> std::optional<double> {
        const auto& v = get(key);
        if (v.empty()) {
            return std::nullopt;
        }
        return parse_double(v, key);
    };

    ExperimentConfig cfg;
    SimConfig& s = cfg.sim;
    s.n = parse_count(get("system.N"), "system.N");
    s.m = static_cast<int>(parse_integer(get("system.M"), "system.M"));
    s.k = parse_count(get("system.K"), "system.K");
    s.xi = static_cast<int>(parse_integer(get("system.xi"), "system.xi"));
    s.c2 = opt_double("system.c2");

    s.paths = static_cast<int>(parse_integer(get("channel.P"), "channel.P"));
    s.ell_max = static_cast<int>(parse_integer(get("channel.ell_max"), "channel.ell_max"));
    s.f_max = static_cast<int>(parse_integer(get("channel.f_max"), "channel.f_max"));
    s.fractional_doppler = parse_bool(get("channel.fractional_doppler"), "channel.fractional_doppler");

    const auto& src = get("codebook.codebook_source");
    if (src == "designed") {
        s.codebook_source = CodebookSource::Designed;
    } else if (src == "explicit") {
        s.codebook_source = CodebookSource::Explicit;
    } else if (src == "random") {
        s.codebook_source = CodebookSource::Random;
    } else if (src == "file") {
        s.codebook_source = CodebookSource::File;
    } else {
        throw ConfigError("codebook.codebook_source: unknown value '" + src + "'");
    }
    s.codebook_indices = split_list(get("codebook.codebook_indices"));
    s.codebook_file = get("codebook.codebook_file");
    try {
        s.metric = parse_metric(get("codebook.metric"));
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("codebook.metric: ") + e.what());
    }
    s.pool_size = parse_count(get("codebook.pool_size"), "codebook.pool_size");
    s.subset_budget = parse_count(get("codebook.subset_budget"), "codebook.subset_budget");
    const auto& dm = get("codebook.design_method");
    if (dm == "exhaustive") {
        cfg.design_method = DesignMethod::Exhaustive;
    } else if (dm == "gas") {
        cfg.design_method = DesignMethod::Gas;
    } else if (dm == "both") {
        cfg.design_method = DesignMethod::Both;
    } else {
        throw ConfigError("codebook.design_method: unknown value '" + dm + "'");
    }
    cfg.lambda1 = parse_double(get("codebook.lambda1"), "codebook.lambda1");
    if (!(cfg.lambda1 >= 1.0)) {
        throw ConfigError("codebook.lambda1: must be at least 1");
    }
    cfg.lambda2 = opt_double("codebook.lambda2");
    if (cfg.lambda2 && !(*cfg.lambda2 > 0.0)) {
        throw ConfigError("codebook.lambda2: must be positive");
    }
    cfg.rescale.epsilon = parse_double(get("codebook.rescale_epsilon"), "codebook.rescale_epsilon");
    cfg.rescale.d_max = parse_double(get("codebook.rescale_dmax"), "codebook.rescale_dmax");
    if (!(cfg.rescale.epsilon > 0.0) || !(cfg.rescale.d_max > 1.0 + cfg.rescale.epsilon)) {
        throw ConfigError("codebook.rescale_epsilon/rescale_dmax: need epsilon > 0 and dmax > 1 + epsilon");
    }

    const auto& det = get("detector.detector");
    if (det == "full_ml") {
        s.detector = DetectorKind::FullMl;
    } else if (det == "mmse_ml") {
        s.detector = DetectorKind::MmseMl;
    } else if (det == "gas") {
        s.detector = DetectorKind::Gas;
    } else {
        throw ConfigError("detector.detector: unknown value '" + det + "'");
    }
    s.filter_n0 = opt_double("detector.filter_n0");
    s.ml_budget = parse_count(get("detector.ml_budget"), "detector.ml_budget");

    s.gas.scaling_lambda = parse_double(get("gas.gas_lambda"), "gas.gas_lambda");
    s.gas.max_iterations = parse_count(get("gas.gas_max_iterations"), "gas.gas_max_iterations");
    if (const auto& v = get("gas.gas_no_improve_limit"); !v.empty()) {
        s.gas.no_improve_limit = parse_count(v, "gas.gas_no_improve_limit");
    }
    if (const auto& v = get("gas.fixed_point_bits"); !v.empty()) {
        FixedPointEncoding enc;
        enc.register_bits = static_cast<int>(parse_integer(v, "gas.fixed_point_bits"));
        enc.frac_bits = static_cast<int>(parse_integer(get("gas.fixed_point_frac_bits"), "gas.fixed_point_frac_bits"));
        s.gas.fixed_point = enc;
    }
    try {
        s.gas.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("[gas] ") + e.what());
    }

    s.ebn0_grid_db.clear();
    for (const auto& v : split_list(get("sim.ebn0_db"))) {
        s.ebn0_grid_db.push_back(parse_double(v, "sim.ebn0_db"));
    }
    s.trials_per_point = parse_count(get("sim.trials_per_point"), "sim.trials_per_point");
    s.target_bit_errors = parse_count(get("sim.target_bit_errors"), "sim.target_bit_errors");
    s.seed = parse_count(get("sim.seed"), "sim.seed");
    s.noise_n0 = opt_double("sim.noise_n0");
    s.theory_reference = parse_bool(get("sim.theory_reference"), "sim.theory_reference");

    const auto& obj = get("solve.objective");
    if (obj == "codebook") {
        cfg.objective = SolveObjective::Codebook;
    } else if (obj == "ml-instance") {
        cfg.objective = SolveObjective::MlInstance;
    } else if (obj == "terms") {
        cfg.objective = SolveObjective::Terms;
    } else {
        throw ConfigError("solve.objective: unknown value '" + obj + "'");
    }
    cfg.terms_file = get("solve.terms_file");
    if (cfg.objective == SolveObjective::Terms && cfg.terms_file.empty()) {
        throw ConfigError("solve.terms_file: required when objective = terms");
    }
    cfg.ml_codeword = parse_count(get("solve.ml_codeword"), "solve.ml_codeword");
    if (cfg.ml_codeword > s.k) {
        throw ConfigError("solve.ml_codeword: must be at most K");
    }
    cfg.demo_ebn0_db = parse_double(get("solve.demo_ebn0_db"), "solve.demo_ebn0_db");

    s.validate();
    return cfg;
}

} // namespace cpim
