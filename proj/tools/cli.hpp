#pragma once

// Command-line front end. Kept in a header so the test suite can drive
// run_cli() in-process.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ucrbm/ucrbm.hpp"

namespace ucrbm::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kCompute = 2, kVerification = 3 };

struct ModelSpec {
    std::string model;       // tfi | afh | tqd
    std::string pauli_file;
    std::size_t n = 4;
    double h = 0.5;
    double B = 0.0;
    bool tqd_v = false;
};

struct ShapeSpec {
    std::optional<double> alpha;
    std::optional<std::size_t> m;
};

inline void add_model_options(CLI::App* app, ModelSpec& s) {
    app->add_option("--model", s.model, "Built-in model: tfi, afh or tqd")
        ->check(CLI::IsMember({"tfi", "afh", "tqd"}));
    app->add_option("--pauli-file", s.pauli_file, "Pauli Hamiltonian text file")->check(CLI::ExistingFile);
    app->add_option("--n", s.n, "Chain length (tfi, afh)")->capture_default_str()->check(CLI::Range(2, 14));
    app->add_option("--h", s.h, "Transverse field (tfi)")->capture_default_str();
    app->add_option("--B", s.B, "Magnetic field in tesla (tqd)")->capture_default_str();
    app->add_flag("--tqd-inter-dot", s.tqd_v, "Include the inter-dot Coulomb term (tqd)");
}

inline void add_shape_options(CLI::App* app, ShapeSpec& s) {
    app->add_option("--alpha", s.alpha, "Hidden/visible ratio M/N (default 1)")->check(CLI::NonNegativeNumber);
    app->add_option("--m", s.m, "Explicit hidden count");
}

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline PauliHamiltonian build_model(const ModelSpec& s) {
    const bool has_model = !s.model.empty();
    const bool has_file = !s.pauli_file.empty();
    if (has_model == has_file) throw UsageError("give exactly one of --model or --pauli-file");
    if (has_file) return load_pauli_file(s.pauli_file);
    if (!std::isfinite(s.h) || !std::isfinite(s.B)) throw UsageError("model parameters must be finite");
    if (s.model == "tfi") return build_tfi(s.n, s.h);
    if (s.model == "afh") return build_afh(s.n);
    TqdParams p;
    p.B = s.B;
    p.include_inter_dot_coulomb = s.tqd_v;
    return build_tqd(p);
}

inline std::size_t hidden_count(const ShapeSpec& s, std::size_t n) {
    if (s.alpha && s.m) throw UsageError("--alpha and --m are mutually exclusive");
    if (s.m) return *s.m;
    const double a = s.alpha.value_or(1.0);
    return static_cast<std::size_t>(std::lround(a * static_cast<double>(n)));
}

inline std::string g17(double v) { return format_g17(v); }

struct IteOptions {
    ModelSpec model;
    ShapeSpec shape;
    IteConfig cfg;
    std::string mode = "exact";
    bool complex_couplings = false;
    std::string trace_path;
    std::string params_path;
    std::string trace_params_path;
    std::string svg_path;
    bool no_early_stop = false;
};

inline int cmd_ite(const IteOptions& o, std::ostream& out) {
    const PauliHamiltonian h = build_model(o.model);
    const std::size_t n = h.n_qubits();
    const std::size_t m = hidden_count(o.shape, n);
    IteConfig cfg = o.cfg;
    cfg.mode = parse_estimator_mode(o.mode);
    cfg.early_stop = !o.no_early_stop;
    cfg.validate();
    const bool unitary = !o.complex_couplings;
    if (cfg.mode == EstimatorMode::ensemble && !unitary) throw UsageError("ensemble mode needs unitary couplings");

    RbmParams start = random_init(n, m, cfg.init_stddev, cfg.seed, unitary);
    if (cfg.mean_field_stage) {
        const MeanFieldResult mf = mean_field_stage(h, m, unitary, cfg);
        out << "mean-field stage: steps " << mf.stage1.trace.size() << " energy " << g17(mf.stage1.final_energy.value())
            << "\n";
        start = mf.params;
    }
    const IteResult r = ite_run(start, h, cfg);
    std::optional<double> reference;
    if (n <= kExactGroundCap) reference = exact_ground(h).energy;

    if (!o.trace_path.empty()) write_trace_csv(o.trace_path, r.trace);
    if (!o.trace_params_path.empty()) write_trace_params(o.trace_params_path, r.trace);
    if (!o.params_path.empty()) {
        const VariationalIndex vi(r.params);
        write_text(o.params_path, "# n_visible " + std::to_string(n) + " n_hidden " + std::to_string(m) +
                                      (unitary ? " unitary" : " complex") + "\n" +
                                      format_params_vector(vi.flatten(r.params)) + "\n");
    }
    if (!o.svg_path.empty()) {
        write_text(o.svg_path, energy_svg(r.trace, reference, "NQS-ITE energy (" + std::string(to_string(cfg.mode)) + ")"));
    }
    out << "steps " << r.trace.size() << (r.stopped_early ? " (converged)" : "") << "\n";
    out << "final_energy " << g17(r.final_energy.value()) << "\n";
    if (reference) {
        out << "exact_energy " << g17(*reference) << "\n";
        out << "relative_error " << g17(std::abs(r.final_energy.value() - *reference) / std::abs(*reference)) << "\n";
    }
    return kOk;
}

inline int cmd_exact(const ModelSpec& s, std::ostream& out) {
    const PauliHamiltonian h = build_model(s);
    const GroundState g = exact_ground(h);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10f", g.energy);
    out << "qubits " << h.n_qubits() << "\n";
    out << "ground_energy " << buf << "\n";
    return kOk;
}

struct BenchOptions {
    ModelSpec model;
    ShapeSpec shape;
    std::size_t samples = 10000;
    std::uint64_t seed = 1;
    double sigma = 0.3;
    std::size_t threads = 0;
};

inline int cmd_sample_bench(const BenchOptions& o, std::ostream& out) {
    const PauliHamiltonian h = build_model(o.model);
    const std::size_t n = h.n_qubits();
    const std::size_t m = hidden_count(o.shape, n);
    if (o.samples < 2) throw UsageError("--samples must be >= 2");
    if (!(o.sigma >= 0.0)) throw UsageError("--sigma must be >= 0");
    const RbmParams p = random_init(n, m, o.sigma, o.seed, true);
    const Estimate ex = expectation_exact(p, h);
    const Estimate v = expectation_vmc(p, h, o.samples, mix64(o.seed) ^ 1, o.threads);
    const Estimate e = expectation_ensemble(p, h, o.samples, mix64(o.seed) ^ 2, o.threads);
    auto zscore = [&](const Estimate& est) {
        const double d = est.value() - ex.value();
        if (est.std_error == 0.0) return std::abs(d) <= 1e-12 * std::max(1.0, std::abs(ex.value())) ? 0.0 : INFINITY;
        return d / est.std_error;
    };
    const double zv = zscore(v);
    const double ze = zscore(e);
    out << "mode      mean                     std_error                z\n";
    out << "exact     " << g17(ex.value()) << "\n";
    out << "vmc       " << g17(v.value()) << "  " << g17(v.std_error) << "  " << g17(zv) << "\n";
    out << "ensemble  " << g17(e.value()) << "  " << g17(e.std_error) << "  " << g17(ze) << "\n";
    return (std::abs(zv) > 4.0 || std::abs(ze) > 4.0) ? kVerification : kOk;
}

struct IdentityOptions {
    std::uint64_t seed = 1;
    std::size_t instances = 20;
    bool zero = false;
    bool corrupt = false;
    double tol = 1e-8;
};

inline int cmd_identities(const IdentityOptions& o, std::ostream& out) {
    double worst_ens = 0.0, worst_conv = 0.0, worst_dec = 0.0;
    for (std::size_t k = 0; k < o.instances; ++k) {
        const std::uint64_t s = mix64(o.seed + k);
        const std::size_t n = 2 + k % 2;
        const std::size_t m = 2 + k % 3;
        RbmParams p = o.zero ? RbmParams::zeros(n, m, true) : random_init(n, m, 0.5, s, true);
        RbmParams q = o.zero ? RbmParams::zeros(n, 2, false) : random_init(n, 2, 0.5, s ^ 0xabcULL, false);
        const EnsembleIdentityReport rep = verify_ensemble_identities(p);
        worst_ens = std::max(worst_ens, rep.max_violation());
        const ConversionResult c = rbm_to_unitary_coupled(q);
        double conv = 1.0 - c.fidelity;
        if (o.corrupt) {
            // Negative control: perturb one converted coupling.
            Eigen::MatrixXcd w = c.params.w();
            if (w.size() > 0) {
                w(0, 0) += Complex(0.0, 0.3);
            }
            Eigen::VectorXcd b = c.params.b();
            b[0] += 0.3;
            const RbmParams bad(b, c.params.m(), w, true);
            conv = 1.0 - fidelity(exact_statevector(q), exact_statevector(bad));
        }
        worst_conv = std::max(worst_conv, std::max(0.0, conv));
    }
    for (double om : {0.0, 0.3, -0.8, 1.7}) {
        for (std::size_t deg = 2; deg <= 5; ++deg) worst_dec = std::max(worst_dec, decouple_monomial(om, deg).violation);
        worst_dec = std::max(worst_dec, decouple_monomial(Complex(om, 0.5), 3).violation);
        worst_dec = std::max(worst_dec, decouple_real_coupling(om).violation);
        worst_dec = std::max(worst_dec, decouple_hidden_pair(om).violation);
    }
    out << "ensemble_identities_max_violation " << g17(worst_ens) << "\n";
    out << "conversion_max_infidelity " << g17(worst_conv) << "\n";
    out << "decoupling_max_violation " << g17(worst_dec) << "\n";
    const bool ok = worst_ens <= o.tol && worst_conv <= o.tol && worst_dec <= o.tol;
    out << (ok ? "all identities verified\n" : "identity verification FAILED\n");
    return ok ? kOk : kVerification;
}

/// Parses argv and runs one subcommand. Returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Unitary-coupled RBM quantum states: ite, exact, sample-bench, identities"};
    app.require_subcommand(1);
    // --h is the transverse field, so help gets no short alias.
    app.set_help_flag("--help", "Print this help message and exit");
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    IteOptions ite;
    CLI::App* ite_cmd = app.add_subcommand("ite", "Imaginary-time evolution ground-state search");
    add_model_options(ite_cmd, ite.model);
    add_shape_options(ite_cmd, ite.shape);
    ite_cmd->add_option("--dtau", ite.cfg.dtau, "Imaginary-time step")->capture_default_str();
    ite_cmd->add_option("--steps", ite.cfg.n_steps, "Maximum number of steps")->capture_default_str();
    ite_cmd->add_option("--lambda", ite.cfg.regularization, "Diagonal shift of A")->capture_default_str();
    ite_cmd->add_option("--mode", ite.mode, "Estimator: exact, vmc or ensemble")
        ->capture_default_str()
        ->check(CLI::IsMember({"exact", "vmc", "ensemble"}));
    ite_cmd->add_option("--samples", ite.cfg.n_samples, "Samples per step (sampled modes)")->capture_default_str();
    ite_cmd->add_option("--seed", ite.cfg.seed, "Random seed")->capture_default_str();
    ite_cmd->add_option("--sigma", ite.cfg.init_stddev, "Initial parameter standard deviation")->capture_default_str();
    ite_cmd->add_flag("--complex", ite.complex_couplings, "Allow real coupling components (exact path only)");
    ite_cmd->add_flag("--mean-field", ite.cfg.mean_field_stage, "Run the b-only warm-up stage first");
    ite_cmd->add_option("--mean-field-steps", ite.cfg.mean_field_steps, "Warm-up stage length")->capture_default_str();
    ite_cmd->add_option("--window", ite.cfg.window, "Convergence window (steps)")->capture_default_str();
    ite_cmd->add_option("--threshold", ite.cfg.threshold, "Energy spread that stops the run")->capture_default_str();
    ite_cmd->add_flag("--no-early-stop", ite.no_early_stop, "Always run --steps steps");
    ite_cmd->add_option("--threads", ite.cfg.threads, "Worker threads (0 = all cores)")->capture_default_str();
    ite_cmd->add_option("--trace", ite.trace_path, "Trace CSV output");
    ite_cmd->add_option("--trace-params", ite.trace_params_path, "Per-step parameter vectors");
    ite_cmd->add_option("--params-out", ite.params_path, "Final parameter vector");
    ite_cmd->add_option("--svg", ite.svg_path, "Energy-vs-step plot");

    ModelSpec exact_model;
    CLI::App* exact_cmd = app.add_subcommand("exact", "Print the exact ground-state energy");
    add_model_options(exact_cmd, exact_model);

    BenchOptions bench;
    CLI::App* bench_cmd = app.add_subcommand("sample-bench", "Compare exact, vmc and ensemble energy estimates");
    add_model_options(bench_cmd, bench.model);
    add_shape_options(bench_cmd, bench.shape);
    bench_cmd->add_option("--samples", bench.samples, "Samples per estimator")->capture_default_str();
    bench_cmd->add_option("--seed", bench.seed, "Random seed")->capture_default_str();
    bench_cmd->add_option("--sigma", bench.sigma, "Parameter standard deviation")->capture_default_str();
    bench_cmd->add_option("--threads", bench.threads, "Worker threads (0 = all cores)")->capture_default_str();

    IdentityOptions ids;
    CLI::App* id_cmd = app.add_subcommand("identities", "Verify the architecture and ensemble identities");
    id_cmd->add_option("--seed", ids.seed, "Random seed")->capture_default_str();
    id_cmd->add_option("--instances", ids.instances, "Random instances")->capture_default_str();
    id_cmd->add_option("--tol", ids.tol, "Pass threshold")->capture_default_str();
    id_cmd->add_flag("--zero", ids.zero, "Use all-zero parameters");
    id_cmd->add_flag("--corrupt", ids.corrupt, "Deliberately corrupt the conversion (must fail)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        err << "run with --help for usage\n";
        return kUsage;
    }

    try {
        if (*ite_cmd) return cmd_ite(ite, out);
        if (*exact_cmd) return cmd_exact(exact_model, out);
        if (*bench_cmd) return cmd_sample_bench(bench, out);
        if (*id_cmd) return cmd_identities(ids, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const IdentityError& e) {
        err << "verification failed: " << e.what() << "\n";
        return kVerification;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kCompute;
    }
    return kUsage;
}

}  // namespace ucrbm::cli
