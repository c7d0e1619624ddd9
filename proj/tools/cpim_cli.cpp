// cpim_cli - BER sweeps, codebook design, GAS solves and detection demos
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
// 3 budget refusal, 4 numerical failure.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cpim/cpim.hpp"

namespace fs = std::filesystem;
using namespace cpim;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kBudgetRefused = 3, kNumericalFailure = 4 };

struct Invocation {
    std::string subcommand;
    std::string config_path;
    std::string output_dir;
    std::vector<std::string> overrides;
    unsigned jobs = 1;
};

struct Context {
    Invocation inv;
    ConfigValues values;
    ExperimentConfig cfg;
    fs::path out;
    std::chrono::steady_clock::time_point start;
    nlohmann::ordered_json results = nlohmann::ordered_json::object();
};

std::string default_output_dir() {
    if (const char* env = std::getenv("CPIM_OUTPUT_DIR"); env && *env) {
        return env;
    }
    return "cpim_out";
}

Context prepare(const Invocation& inv) {
    Context ctx;
    ctx.inv = inv;
    ctx.start = std::chrono::steady_clock::now();
    if (!inv.config_path.empty()) {
        ctx.values.load_ini_file(inv.config_path);
    }
    for (const auto& o : inv.overrides) {
        ctx.values.apply_override(o);
    }
    ctx.cfg = ctx.values.build();
    ctx.out = inv.output_dir.empty() ? fs::path(default_output_dir()) : fs::path(inv.output_dir);
    fs::create_directories(ctx.out);
    return ctx;
}

void write_out(const Context& ctx, const std::string& name, const std::string& content) {
    write_file((ctx.out / name).string(), content);
}

/// Effective config (INI and JSON) plus metadata.json; enough to re-run the experiment.
void finish(Context& ctx) {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
    write_out(ctx, "effective_config.ini", ctx.values.to_ini());
    write_out(ctx, "effective_config.json", ctx.values.to_json().dump(2) + "\n");
    nlohmann::ordered_json meta;
    meta["tool"] = "cpim_cli";
    meta["version"] = kVersion;
    meta["subcommand"] = ctx.inv.subcommand;
    meta["config_file"] = ctx.inv.config_path;
    meta["overrides"] = ctx.inv.overrides;
    meta["config_hash"] = ctx.values.hash();
    meta["seed"] = ctx.cfg.sim.seed;
    meta["jobs"] = ctx.inv.jobs;
    meta["wall_seconds"] = wall;
    meta["effective_config"] = ctx.values.to_json();
    meta["results"] = ctx.results;
    write_out(ctx, "metadata.json", meta.dump(2) + "\n");
    std::cout << "outputs written to " << ctx.out.string() << "\n";
}

nlohmann::ordered_json index_list(const std::vector<PermutationIndex>& q) {
    auto j = nlohmann::ordered_json::array();
    for (const auto& p : q) {
        j.push_back(p.str());
    }
    return j;
}

std::string bit_string(const Bits& b) {
    std::string s;
    for (auto v : b) {
        s += v ? '1' : '0';
    }
    return s;
}

int run_ber_sweep(Context& ctx) {
    const auto& sim = ctx.cfg.sim;
    const SweepResult res = sweep(sim, {.jobs = ctx.inv.jobs});
    write_out(ctx, "ber.csv", ber_csv(res.points));
    write_out(ctx, "codebook.txt", res.codebook_text);
    if (!res.theory.empty()) {
        write_out(ctx, "theory.csv", theory_csv(res.theory));
    }
    std::cout << "ebn0_db   trials   ber_total      ber_symbol     ber_index\n";
    for (const auto& p : res.points) {
        std::cout << std::setw(7) << p.ebn0_db << "  " << std::setw(7) << p.trials << "   " << std::setw(12)
                  << p.ber_total << "   " << std::setw(12) << p.ber_symbol << "   " << std::setw(12) << p.ber_index
                  << "\n";
    }
    for (double e : res.monotonicity_warnings) {
        std::cerr << "warning: BER rises by more than 2 sigma at " << e << " dB\n";
    }
    ctx.results["grid_points"] = res.points.size();
    ctx.results["theoretical_gain_db"] = res.gain_db;
    ctx.results["monotonicity_warnings"] = res.monotonicity_warnings;
    ctx.results["sweep_wall_seconds"] = res.wall_seconds;
    finish(ctx);
    return kOk;
}

struct DesignOutcome {
    std::vector<PermutationIndex> pool;
    DistanceMatrix raw;
};

DesignOutcome distances_for(const Context& ctx) {
    const auto& sim = ctx.cfg.sim;
    DesignOutcome d;
    d.pool = design_pool(sim);
    d.raw = pairwise_distances(d.pool, sim.chirp_params(), sim.metric);
    return d;
}

int run_distance_grid(Context& ctx) {
    const auto d = distances_for(ctx);
    write_out(ctx, "distance_grid.csv", distance_grid_csv(d.raw));
    ctx.results["metric"] = to_string(d.raw.metric);
    ctx.results["pool_size"] = d.pool.size();
    std::cout << "pool of " << d.pool.size() << " permutations, " << to_string(d.raw.metric) << " metric\n";
    finish(ctx);
    return kOk;
}

CodebookDesignProblem design_problem(const ExperimentConfig& cfg, const DistanceMatrix& raw) {
    return make_design_problem(raw, cfg.sim.k, cfg.lambda1, cfg.lambda2, cfg.rescale);
}

std::uint64_t design_gas_seed(std::uint64_t seed) { return derive_seed(seed, {0x67617364ULL}); }

int run_codebook_design(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& sim = cfg.sim;
    if (sim.k < 2) {
        throw ConfigError("system.K: codebook design needs K >= 2");
    }
    const auto d = distances_for(ctx);
    write_out(ctx, "distance_grid.csv", distance_grid_csv(d.raw));
    const auto params = sim.chirp_params();
    const DistanceMatrix rescaled = rescale_distances(d.raw, cfg.rescale);

    std::ostringstream summary;
    summary << "method,cardinality,d_min,d_min_rescaled,indices\n";
    const auto summary_row = [&](const std::string& method, const std::vector<std::size_t>& pos) {
        std::string idx;
        for (auto p : pos) {
            idx += (idx.empty() ? "" : " ") + d.pool[p].str();
        }
        const bool pair = pos.size() >= 2;
        summary << method << "," << pos.size() << "," << (pair ? format_double(subset_min_distance(d.raw.d, pos)) : "")
                << "," << (pair ? format_double(subset_min_distance(rescaled.d, pos)) : "") << "," << idx << "\n";
    };
    const auto codebook_for = [&](const std::vector<std::size_t>& pos) {
        std::vector<PermutationIndex> entries;
        for (auto p : pos) {
            entries.push_back(d.pool[p]);
        }
        return Codebook(params, entries);
    };

    std::optional<MaxMinResult> oracle;
    if (cfg.design_method != DesignMethod::Gas) {
        oracle = exhaustive_maxmin(d.raw, sim.k, sim.subset_budget);
        summary_row("exhaustive", oracle->selection);
        write_out(ctx, "codebook.txt", codebook_to_string(codebook_for(oracle->selection)));
        ctx.results["exhaustive"] = {{"indices", index_list(codebook_for(oracle->selection).entries())},
                                     {"d_min", oracle->d_min},
                                     {"subsets", oracle->subsets}};
        std::cout << "exhaustive: d_min = " << format_double(oracle->d_min) << " over " << oracle->subsets
                  << " subsets\n";
    }
    if (cfg.design_method != DesignMethod::Exhaustive) {
        const auto prob = design_problem(cfg, d.raw);
        const auto obj = build_codebook_objective(prob);
        GasConfig gas = sim.gas;
        gas.seed = design_gas_seed(sim.seed);
        const GasTrace trace = gas_minimize(obj, gas);
        write_out(ctx, "gas_trace.csv", trace_to_csv(trace));
        const Selection sel = decode_selection(trace.best_b, d.pool);
        summary_row("gas", sel.positions);
        nlohmann::ordered_json g;
        g["indices"] = index_list(sel.indices);
        g["cardinality"] = sel.cardinality();
        g["best_y"] = trace.best_y;
        g["oracle_queries"] = trace.oracle_queries;
        g["lambda1"] = prob.lambda1;
        g["lambda2"] = prob.lambda2;
        if (sel.cardinality() == sim.k) {
            const double dmin = subset_min_distance(d.raw.d, sel.positions);
            g["d_min"] = dmin;
            std::cout << "gas: d_min = " << format_double(dmin) << " after " << trace.oracle_queries
                      << " oracle queries\n";
            const std::string name = oracle ? "codebook_gas.txt" : "codebook.txt";
            write_out(ctx, name, codebook_to_string(codebook_for(sel.positions)));
            if (oracle) {
                const double ref = subset_min_distance(rescaled.d, oracle->selection);
                const bool agree = std::abs(subset_min_distance(rescaled.d, sel.positions) - ref) <= 1e-12 * ref;
                g["agrees_with_exhaustive"] = agree;
                std::cout << "gas " << (agree ? "attains" : "misses") << " the exhaustive d_min\n";
            }
        } else {
            std::cout << "gas: selected " << sel.cardinality() << " codewords instead of K = " << sim.k
                      << "; no codebook written\n";
        }
        ctx.results["gas"] = g;
    }
    write_out(ctx, "design.csv", summary.str());
    finish(ctx);
    return kOk;
}

struct DemoSetup {
    Codebook codebook;
    Constellation constellation;
    Instance inst;
    double ebn0_db;
};

DemoSetup demo_setup(const ExperimentConfig& cfg) {
    const auto& sim = cfg.sim;
    Codebook cb = make_codebook(sim);
    Constellation c = Constellation::from_order(sim.m);
    const double n0 = sim.noise_n0 ? *sim.noise_n0 : noise_variance_from_ebn0(cfg.demo_ebn0_db, sim.n, sim.m, sim.k);
    Instance inst = sample_instance(sim, cb, c, n0, derive_seed(sim.seed, {0x64656d6fULL}));
    return {std::move(cb), c, std::move(inst), cfg.demo_ebn0_db};
}

int run_gas_solve(Context& ctx) {
    const auto& cfg = ctx.cfg;
    PolynomialBinaryObjective obj;
    std::optional<DemoSetup> demo;
    std::vector<PermutationIndex> pool;
    switch (cfg.objective) {
    case SolveObjective::Codebook: {
        if (cfg.sim.k < 2) {
            throw ConfigError("system.K: the codebook objective needs K >= 2");
        }
        const auto d = distances_for(ctx);
        pool = d.pool;
        obj = build_codebook_objective(design_problem(cfg, d.raw));
        break;
    }
    case SolveObjective::MlInstance: {
        demo = demo_setup(cfg);
        const std::size_t k = cfg.ml_codeword ? cfg.ml_codeword : demo->inst.frame.perm_choice;
        obj = build_ml_objective(demo->inst.r, demo->inst.h, demo->codebook.daft(k), demo->constellation);
        ctx.results["codeword"] = k;
        break;
    }
    case SolveObjective::Terms:
        obj = objective_from_string(read_file(cfg.terms_file));
        break;
    }
    write_out(ctx, "objective.txt", objective_to_string(obj));
    GasConfig gas = cfg.sim.gas;
    gas.seed = cfg.sim.seed;
    const GasTrace trace = gas_minimize(obj, gas);
    write_out(ctx, "trace.csv", trace_to_csv(trace));

    std::ostringstream sol;
    sol << "best_b = " << bit_string(trace.best_b) << "\n";
    sol << "best_y = " << format_double(trace.best_y) << "\n";
    sol << "exact_y = " << format_double(obj.evaluate(trace.best_b)) << "\n";
    sol << "iterations = " << trace.history.size() << "\n";
    sol << "oracle_queries = " << trace.oracle_queries << "\n";
    sol << "rotations = " << trace.rotations << "\n";
    if (!pool.empty()) {
        const auto sel = decode_selection(trace.best_b, pool);
        std::string idx;
        for (const auto& q : sel.indices) {
            idx += (idx.empty() ? "" : ", ") + q.str();
        }
        sol << "selection = " << idx << "\n";
        sol << "cardinality = " << sel.cardinality() << "\n";
    }
    if (demo) {
        const auto n_sym = obj.n_vars();
        const Bits sent(demo->inst.bits.begin(), demo->inst.bits.begin() + static_cast<std::ptrdiff_t>(n_sym));
        sol << "transmitted_b = " << bit_string(sent) << "\n";
    }
    write_out(ctx, "solution.txt", sol.str());
    std::cout << sol.str();
    ctx.results["n_vars"] = obj.n_vars();
    ctx.results["best_y"] = trace.best_y;
    ctx.results["oracle_queries"] = trace.oracle_queries;
    finish(ctx);
    return kOk;
}

int run_detect_demo(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& sim = cfg.sim;
    const DemoSetup demo = demo_setup(cfg);
    const auto& inst = demo.inst;
    const auto& cb = demo.codebook;
    const double filter_n0 = sim.filter_n0 ? *sim.filter_n0 : inst.n0;

    std::ostringstream rep;
    rep << std::setprecision(6);
    rep << "AFDM-CPIM detection demo\n";
    rep << "N = " << sim.n << ", M = " << sim.m << ", K = " << sim.k << ", c1 = " << cb.params().c1
        << ", c2 = " << cb.params().c2 << "\n";
    rep << "Eb/N0 = " << demo.ebn0_db << " dB, channel N0 = " << inst.n0 << ", filter N0 = " << filter_n0 << "\n";
    rep << "codebook:";
    for (const auto& q : cb.entries()) {
        rep << " " << q.str();
    }
    rep << "\nchannel (" << inst.channel.paths.size() << " paths):\n";
    for (const auto& p : inst.channel.paths) {
        rep << "  delay " << p.delay << ", doppler " << p.doppler << ", gain " << p.gain.real()
            << (p.gain.imag() < 0 ? " - " : " + ") << std::abs(p.gain.imag()) << "j\n";
    }
    rep << "transmitted k* = " << inst.frame.perm_choice << ", bits = " << bit_string(inst.bits) << "\n";
    const double true_metric = ml_residual(inst.r, inst.h, cb.daft(inst.frame.perm_choice), inst.frame.symbols);
    rep << "residual of the transmitted hypothesis = " << true_metric << "\n\n";

    auto j = nlohmann::ordered_json::object();
    const auto report = [&](const std::string& name, const CVector& x_hat, std::size_t k_hat, double metric,
                            double seconds) {
        const Bits decoded = decode_bits(x_hat, k_hat, cb, demo.constellation);
        std::size_t errors = 0;
        for (std::size_t t = 0; t < decoded.size(); ++t) {
            errors += decoded[t] != inst.bits[t];
        }
        const double recomputed = ml_residual(inst.r, inst.h, cb.daft(k_hat), x_hat);
        const double dual = ml_residual_demodulated(inst.r, inst.h, cb.daft(k_hat), x_hat);
        const bool k_ok = k_hat == inst.frame.perm_choice;
        const bool x_ok = (x_hat - inst.frame.symbols).cwiseAbs().maxCoeff() < 1e-9;
        rep << name << ":\n";
        rep << "  k_hat = " << k_hat << (k_ok ? " (correct)" : " (wrong)") << ", symbols "
            << (x_ok ? "correct" : "wrong") << ", bit errors " << errors << "\n";
        rep << "  metric = " << metric << ", recomputed = " << recomputed << ", demodulated form = " << dual << "\n";
        rep << "  wall time = " << seconds * 1e3 << " ms\n";
        j[name] = {{"k_hat", k_hat}, {"k_correct", k_ok}, {"x_correct", x_ok}, {"bit_errors", errors},
                   {"metric", metric}};
    };
    const auto timed = [](auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        auto r = fn();
        return std::pair{std::move(r), std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
    };

    if (ml_candidate_count(sim.n, sim.m, sim.k) <= sim.ml_budget) {
        auto [res, secs] = timed([&] { return ml_detect_full(inst.r, inst.h, cb, demo.constellation, sim.ml_budget); });
        report("full_ml", res.x_hat, res.k_hat, res.metric, secs);
    } else {
        rep << "full_ml: omitted, K M^N exceeds detector.ml_budget = " << sim.ml_budget << "\n";
    }
    {
        auto [res, secs] = timed([&] { return mmse_ml_detect(inst.r, inst.h, cb, filter_n0, demo.constellation); });
        report("mmse_ml", res.x_hat, res.k_hat, res.metric, secs);
    }
    const std::size_t n_vars = sim.n * static_cast<std::size_t>(demo.constellation.bits_per_symbol());
    if (n_vars <= kMaxEmulatedVars) {
        GasConfig gas = sim.gas;
        gas.seed = derive_seed(sim.seed, {0x67617300ULL});
        auto [res, secs] = timed([&] { return parallel_ml_solve(inst.r, inst.h, cb, demo.constellation, gas, ctx.inv.jobs); });
        report("gas", map_symbols(res.bits, demo.constellation), res.k_star, res.objective, secs);
    } else {
        rep << "gas: omitted, N log2(M) = " << n_vars << " variables exceed the emulation budget of "
            << kMaxEmulatedVars << "\n";
    }
    write_out(ctx, "report.txt", rep.str());
    std::cout << rep.str();
    ctx.results["detectors"] = j;
    finish(ctx);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"AFDM chirp-permutation index modulation experiments"};
    app.require_subcommand(1);
    Invocation inv;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"ber-sweep", "Monte Carlo BER over the configured Eb/N0 grid"},
        {"codebook-design", "max-min codebook search (exhaustive and/or GAS)"},
        {"gas-solve", "run Grover adaptive search on one objective"},
        {"detect-demo", "one seeded frame through every detector"},
        {"distance-grid", "pairwise distances over the permutation pool"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", inv.config_path, "configuration file")->check(CLI::ExistingFile);
        sub->add_option("-o,--output-dir", inv.output_dir,
                        "output directory (default: $CPIM_OUTPUT_DIR, else ./cpim_out)");
        sub->add_option("-s,--override", inv.overrides, "key=value applied after the config file")
            ->allow_extra_args(false);
        sub->add_option("-j,--jobs", inv.jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->callback([&inv, n = name] { inv.subcommand = n; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        Context ctx = prepare(inv);
        if (inv.subcommand == "ber-sweep") {
            return run_ber_sweep(ctx);
        }
        if (inv.subcommand == "codebook-design") {
            return run_codebook_design(ctx);
        }
        if (inv.subcommand == "gas-solve") {
            return run_gas_solve(ctx);
        }
        if (inv.subcommand == "detect-demo") {
            return run_detect_demo(ctx);
        }
        return run_distance_grid(ctx);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const BudgetError& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return kBudgetRefused;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const IndexError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const InvalidPermutationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
