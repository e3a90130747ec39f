/// @file nilab_cli.cpp
/// @brief Command-line access to the library: kernel spot checks, family
///        generation, norm evaluation, iterate assembly, the physical-space
///        comparison, and the experiment ledger.
///
/// Exit codes: 0 success, 2 a requested check or trend contract failed
/// (also argument validation rejected by the library), 3 a capacity guard
/// refused the requested resolution. The --seed flag feeds only the
/// randomized kernel sampling; ledger and demo outputs never depend on it.

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nilab/gamma_kernel.hpp"
#include "nilab/harness.hpp"
#include "nilab/oracle.hpp"
#include "nilab/rng.hpp"
#include "nilab/second_iterate.hpp"
#include "nilab/sequences.hpp"

namespace {

using nilab::ExperimentConfig;
using nilab::FamilyParams;
using nilab::GammaProperty;
using nilab::InflationReport;
using nilab::SequenceFamily;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 2;
constexpr int kExitCapacity = 3;

// ============================================================================
// Shared option plumbing
// ============================================================================

struct GlobalOptions {
    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;
    std::uint64_t seed = 0x6b8b4567d1ce4e5bULL;
    bool out_given = false;
    bool threads_given = false;
};

struct FamilyFlags {
    int ell = 1;
    double p = 1.0;
    double q = 4.0;
    double epsilon = 0.1;
    double delta = 1.0;
    std::int64_t M = 5;
    int N = 4;

    FamilyParams params() const {
        FamilyParams prm;
        prm.ell = ell;
        prm.p = p;
        prm.q = q;
        prm.epsilon = epsilon;
        prm.delta = delta;
        prm.M = M;
        prm.N = N;
        return prm;
    }

    void attach(CLI::App* cmd) {
        cmd->add_option("--N", N, "first sweep index (family size driver)");
        cmd->add_option("--ell", ell, "resonance order");
        cmd->add_option("--p", p, "integrability exponent");
        cmd->add_option("--q", q, "summability exponent");
        cmd->add_option("--epsilon", epsilon, "weight tilt");
        cmd->add_option("--delta", delta, "sweep width fraction");
        cmd->add_option("--M", M, "resonant offset");
    }
};

ExperimentConfig load_config(const GlobalOptions& g) {
    ExperimentConfig cfg;
    if (!g.config_path.empty()) {
        std::ifstream in(g.config_path);
        if (!in) throw std::invalid_argument("cannot read config " + g.config_path);
        nlohmann::json j;
        in >> j;
        from_json(j, cfg);
    }
    if (g.out_given || g.config_path.empty()) cfg.out_dir = g.out_dir;
    if (g.threads_given) cfg.threads = g.threads;
    return cfg;
}

// ============================================================================
// gamma check
// ============================================================================

int run_gamma_check(const GlobalOptions& g, const std::vector<int>& orders,
                    int samples, double tol) {
    nilab::SplitMix64 rng(g.seed);
    bool all_ok = true;
    for (const int k : orders) {
        const std::size_t width = 2 * static_cast<std::size_t>(k) + 1;
        double worst_gap = 0.0;
        int property_failures = 0;
        for (int s = 0; s < samples; ++s) {
            std::vector<double> a(width);
            for (double& v : a) {
                const double mag = rng.next_range(0.1, 50.0);
                v = (rng.next_u64() & 1u) ? mag : -mag;
            }
            const double closed = nilab::gamma_closed(a);
            const double oracle = nilab::gamma_oracle(a);
            const double floor = 0.01 * nilab::gamma_certified_bound(a);
            const double gap = std::abs(closed - oracle) /
                               std::max({std::abs(closed), std::abs(oracle), floor});
            worst_gap = std::max(worst_gap, gap);

            for (const GammaProperty prop :
                 {GammaProperty::kScaling, GammaProperty::kPermutationSymmetry,
                  GammaProperty::kDroppedFactorBound,
                  GammaProperty::kGeometricMeanBound}) {
                if (!nilab::gamma_property_check(a, prop, g.seed + s).pass)
                    ++property_failures;
            }
            std::vector<double> same_sign = a;
            for (double& v : same_sign) v = std::abs(v);
            if (!nilab::gamma_property_check(same_sign,
                                             GammaProperty::kSameSignVanishing)
                     .pass)
                ++property_failures;
            std::vector<double> separated = a;
            for (double& v : separated) v += (v < 0.0) ? -2.0 : 2.0;
            if (!nilab::gamma_property_check(separated,
                                             GammaProperty::kPerturbationBound,
                                             g.seed + s)
                     .pass)
                ++property_failures;
        }
        const bool ok = worst_gap <= tol && property_failures == 0;
        all_ok = all_ok && ok;
        std::printf(
            "order %d: %d tuples, worst closed-vs-quadrature gap %.3e (tol %.1e), "
            "%d property failures: %s\n",
            k, samples, worst_gap, tol, property_failures, ok ? "ok" : "FAILED");
    }
    return all_ok ? kExitOk : kExitCheckFailed;
}

// ============================================================================
// sequence gen
// ============================================================================

int run_sequence_gen(const GlobalOptions& g, const FamilyFlags& flags,
                     const std::string& file) {
    const SequenceFamily fam = nilab::generate_family(flags.params());
    const nilab::ConditionReport rep = nilab::check_conditions(fam);
    const std::string text = nilab::family_to_json(fam);
    if (file.empty() || file == "-") {
        std::fputs(text.c_str(), stdout);
    } else {
        namespace fs = std::filesystem;
        const fs::path path = fs::path(g.out_dir) / file;
        fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << text;
        std::fprintf(stderr, "wrote %s\n", path.string().c_str());
    }
    std::fprintf(stderr,
                 "conditions: growth %s, tail sum %s (%.6g < %.6g), seed %s, "
                 "weights %s\n",
                 rep.growth_ok ? "ok" : "FAILED", rep.tail_sum_ok ? "ok" : "FAILED",
                 rep.tail_lhs, rep.tail_rhs, rep.seed_ok ? "ok" : "FAILED",
                 rep.weights_ok ? "ok" : "FAILED");
    return rep.all_ok() ? kExitOk : kExitCheckFailed;
}

// ============================================================================
// norm eval
// ============================================================================

int run_norm_eval(const FamilyFlags& flags, const std::string& family_file) {
    SequenceFamily fam;
    if (family_file.empty()) {
        fam = nilab::generate_family(flags.params());
    } else {
        std::ifstream in(family_file);
        if (!in) throw std::invalid_argument("cannot read family " + family_file);
        std::stringstream buf;
        buf << in.rdbuf();
        fam = nilab::family_from_json(buf.str());
    }
    nilab::NormParams norms;
    norms.s = fam.params.smoothness();
    norms.p = fam.params.p;
    norms.q = fam.params.q;

    const double phi = nilab::besov_norm_exact(nilab::initial_bumps(fam), norms);
    const auto cols = nilab::detail::analytic_columns(fam, norms);
    nlohmann::ordered_json j;
    j["family_hash"] = nilab::detail::hash_hex(nilab::family_hash(fam));
    j["s"] = norms.s;
    j["p"] = norms.p;
    j["q"] = norms.q;
    j["norm_phi"] = phi;
    j["phi_bound"] = cols.phi_bound;
    j["phi_ratio"] = phi / cols.phi_bound;
    std::printf("%s\n", j.dump(2).c_str());
    return kExitOk;
}

// ============================================================================
// iterate assemble
// ============================================================================

int run_iterate_assemble(const GlobalOptions& g, const FamilyFlags& flags, int order,
                         double time_factor, double time_abs,
                         const std::string& mode) {
    const SequenceFamily fam = nilab::generate_family(flags.params());
    const double kn = static_cast<double>(fam.k(fam.j_lo()));
    const double t = (time_abs > 0.0) ? time_abs : time_factor / kn;

    nilab::NormParams norms;
    norms.s = fam.params.smoothness();
    norms.p = fam.params.p;
    norms.q = fam.params.q;

    nilab::IterateComponent comp;
    if (mode == "resonant") {
        comp = nilab::assemble_resonant_component(fam, t);
    } else if (mode == "all") {
        comp = nilab::assemble_component(fam, order, t, {}, nilab::TupleMode::kAll);
    } else {
        throw std::invalid_argument("mode must be resonant or all");
    }
    const nilab::ComponentNorms cn =
        nilab::measure_component_norms(comp, norms, g.threads);
    std::printf("%s\n", nilab::component_summary_json(comp, cn).dump(2).c_str());
    return kExitOk;
}

// ============================================================================
// oracle compare
// ============================================================================

int run_oracle_compare(const GlobalOptions& g, int samples, double t, double tol) {
    // Smallest legal cross-validation family: one index, unit weight,
    // frequencies small enough for the physical-space route.
    FamilyParams prm;
    prm.ell = 1;
    prm.p = 1.0;
    prm.q = 4.0;
    prm.epsilon = 0.1;
    prm.delta = 0.5;
    prm.M = 5;
    prm.N = 1;
    const SequenceFamily fam = nilab::make_family(prm, {4}, {1.0});

    std::vector<double> xs;
    if (samples < 1) throw std::invalid_argument("need at least one sample");
    for (int i = 0; i < samples; ++i) {
        xs.push_back(samples == 1 ? 0.0
                                  : 0.375 * static_cast<double>(i) /
                                        static_cast<double>(samples - 1));
    }

    const nilab::IterateComponent comp =
        nilab::assemble_component(fam, 1, t, {}, nilab::TupleMode::kAll);
    nilab::DuhamelOracleSpec spec;
    spec.threads = g.threads;
    const std::vector<double> phys =
        nilab::duhamel_oracle(nilab::build_initial_data(fam), 1, t, xs, spec);

    double max_abs = 0.0;
    for (const double v : phys) max_abs = std::max(max_abs, std::abs(v));
    const double floor = 1e-3 * max_abs;

    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double freq = nilab::component_field_value(comp, xs[i]);
        const double gap =
            std::abs(freq - phys[i]) / std::max(std::abs(phys[i]), floor);
        worst = std::max(worst, gap);
        std::printf("x=%8.4f  frequency=% .10e  physical=% .10e  rel=%.3e\n",
                    xs[i], freq, phys[i], gap);
    }
    std::printf("worst relative gap %.3e (tol %.1e): %s\n", worst, tol,
                worst <= tol ? "ok" : "FAILED");
    return worst <= tol ? kExitOk : kExitCheckFailed;
}

// ============================================================================
// ledger run / inflate demo
// ============================================================================

int emit_and_summarize(const InflationReport& report, const ExperimentConfig& cfg) {
    const auto paths = nilab::emit(report, cfg.out_dir, cfg.label);
    namespace fs = std::filesystem;
    const fs::path log_path = fs::path(cfg.out_dir) / (cfg.label + ".log");
    std::ofstream log(log_path);
    for (const std::string& line : report.run_log) log << line << "\n";

    for (const auto& p : paths) std::printf("wrote %s\n", p.c_str());
    std::printf("wrote %s\n", log_path.string().c_str());
    std::printf("rows: %zu\n", report.rows.size());
    for (const std::string& note : report.notes)
        std::printf("note: %s\n", note.c_str());
    if (report.failed) {
        for (const std::string& f : report.failures)
            std::printf("trend FAILED: %s\n", f.c_str());
        return kExitCheckFailed;
    }
    std::printf("trend contracts: ok\n");
    return kExitOk;
}

int run_ledger_cmd(const GlobalOptions& g) {
    const ExperimentConfig cfg = load_config(g);
    const InflationReport report = nilab::run_ledger(cfg);
    return emit_and_summarize(report, cfg);
}

int run_inflate_cmd(const GlobalOptions& g, double target) {
    ExperimentConfig cfg = load_config(g);
    if (g.config_path.empty()) {
        // Demo default: two sweep points with the non-resonant buckets
        // measured at a reduced norm budget (minutes, not hours).
        cfg.sweep = {4, 8};
        cfg.time_factors = {4.0};
        cfg.quad.norm_nodes = 12;
        cfg.label = "inflation_demo";
    }
    const InflationReport report = nilab::run_inflation_demo(cfg, target);
    const int code = emit_and_summarize(report, cfg);
    std::printf("best ratio %.6g against target %.6g^2 = %.6g\n", report.best_ratio,
                report.r_target, report.r_target * report.r_target);
    if (report.claim == "ACHIEVED") {
        std::printf("inflation ACHIEVED at N=%d, t=%.6g\n", report.witness_N,
                    report.witness_t);
    } else {
        std::printf("inflation EXTRAPOLATED: slope %.6g, projected N %.6g\n",
                    report.trend_slope, report.extrapolated_N);
    }
    return code;
}

}  // namespace

// ============================================================================
// Entry point
// ============================================================================

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for truncated-transport norm growth"};
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--config", g.config_path, "experiment config JSON file")
        ->check(CLI::ExistingFile);
    auto* out_opt = app.add_option("--out", g.out_dir, "output directory");
    auto* threads_opt =
        app.add_option("--threads", g.threads, "worker threads (0 = hardware)");
    app.add_option("--seed", g.seed, "seed for randomized kernel sampling");

    // gamma check
    auto* gamma = app.add_subcommand("gamma", "integral kernel");
    gamma->fallthrough();
    gamma->require_subcommand(1);
    auto* gamma_check = gamma->add_subcommand("check", "closed form vs quadrature");
    gamma_check->fallthrough();
    std::vector<int> orders = {1, 2};
    int gamma_samples = 40;
    double gamma_tol = 1e-5;
    gamma_check->add_option("--order", orders, "kernel orders to sample");
    gamma_check->add_option("--samples", gamma_samples, "tuples per order");
    gamma_check->add_option("--tol", gamma_tol, "relative gap tolerance");

    // sequence gen
    auto* sequence = app.add_subcommand("sequence", "frequency families");
    sequence->fallthrough();
    sequence->require_subcommand(1);
    auto* sequence_gen = sequence->add_subcommand("gen", "generate and print JSON");
    sequence_gen->fallthrough();
    FamilyFlags seq_flags;
    seq_flags.attach(sequence_gen);
    std::string seq_file;
    sequence_gen->add_option("--file", seq_file,
                             "write under --out instead of stdout");

    // norm eval
    auto* norm = app.add_subcommand("norm", "dyadic norm engine");
    norm->fallthrough();
    norm->require_subcommand(1);
    auto* norm_eval = norm->add_subcommand("eval", "initial-data norm and bound");
    norm_eval->fallthrough();
    FamilyFlags norm_flags;
    norm_flags.attach(norm_eval);
    std::string norm_family_file;
    norm_eval->add_option("--family", norm_family_file, "family JSON file")
        ->check(CLI::ExistingFile);

    // iterate assemble
    auto* iterate = app.add_subcommand("iterate", "second-iterate components");
    iterate->fallthrough();
    iterate->require_subcommand(1);
    auto* iterate_assemble =
        iterate->add_subcommand("assemble", "assemble and measure one component");
    iterate_assemble->fallthrough();
    FamilyFlags it_flags;
    it_flags.attach(iterate_assemble);
    int it_order = 1;
    double it_factor = 4.0;
    double it_time = 0.0;
    std::string it_mode = "resonant";
    iterate_assemble->add_option("--order", it_order, "component order k");
    iterate_assemble->add_option("--time-factor", it_factor, "t = c / k_N");
    iterate_assemble->add_option("--time", it_time, "absolute time (overrides)");
    iterate_assemble->add_option("--mode", it_mode, "resonant or all");

    // oracle compare
    auto* oracle = app.add_subcommand("oracle", "physical-space cross-check");
    oracle->fallthrough();
    oracle->require_subcommand(1);
    auto* oracle_compare = oracle->add_subcommand(
        "compare",
        "frequency side vs Duhamel quadrature (several minutes: the forcing "
        "table dominates and is shared across samples)");
    oracle_compare->fallthrough();
    int oc_samples = 4;
    double oc_time = 0.1;
    double oc_tol = 1e-4;
    oracle_compare->add_option("--samples", oc_samples, "spatial sample count");
    oracle_compare->add_option("--time", oc_time, "evaluation time");
    oracle_compare->add_option("--tol", oc_tol, "relative gap tolerance");

    // ledger run
    auto* ledger = app.add_subcommand("ledger", "experiment sweeps");
    ledger->fallthrough();
    ledger->require_subcommand(1);
    ledger->add_subcommand("run", "run the growth ledger and emit CSV/JSON")
        ->fallthrough();

    // inflate demo
    auto* inflate = app.add_subcommand("inflate", "norm-inflation demo");
    inflate->fallthrough();
    inflate->require_subcommand(1);
    auto* inflate_demo =
        inflate->add_subcommand("demo", "measured lower-bound surrogate vs target");
    inflate_demo->fallthrough();
    double target = 10.0;
    inflate_demo->add_option("--target", target, "inflation target R");

    CLI11_PARSE(app, argc, argv);
    g.out_given = out_opt->count() > 0;
    g.threads_given = threads_opt->count() > 0;

    try {
        if (gamma_check->parsed()) {
            return run_gamma_check(g, orders, gamma_samples, gamma_tol);
        }
        if (sequence_gen->parsed()) {
            return run_sequence_gen(g, seq_flags, seq_file);
        }
        if (norm_eval->parsed()) {
            return run_norm_eval(norm_flags, norm_family_file);
        }
        if (iterate_assemble->parsed()) {
            return run_iterate_assemble(g, it_flags, it_order, it_factor, it_time,
                                        it_mode);
        }
        if (oracle_compare->parsed()) {
            return run_oracle_compare(g, oc_samples, oc_time, oc_tol);
        }
        if (ledger->get_subcommand("run")->parsed()) {
            return run_ledger_cmd(g);
        }
        if (inflate_demo->parsed()) {
            return run_inflate_cmd(g, target);
        }
    } catch (const nilab::CapacityError& e) {
        std::fprintf(stderr, "capacity: %s\n", e.what());
        return kExitCapacity;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCheckFailed;
    }
    return kExitOk;
}
