#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ucrbm/errors.hpp"
#include "ucrbm/estimators.hpp"
#include "ucrbm/pauli.hpp"
#include "ucrbm/rbm.hpp"

namespace ucrbm {

struct IteConfig {
    double dtau = 0.01;
    std::size_t n_steps = 1000;
    double regularization = 1e-3;
    EstimatorMode mode = EstimatorMode::exact;
    std::size_t n_samples = 10000;
    std::uint64_t seed = 1;
    std::size_t threads = 0;
    bool mean_field_stage = false;
    // Short warm start. A fully converged b-only stage lands on a symmetry-broken
    // product state that stalls the full ansatz between the two lowest levels.
    std::size_t mean_field_steps = 30;
    // Stop once max - min of the last `window` energies drops below `threshold`.
    std::size_t window = 50;
    double threshold = 1e-8;
    bool early_stop = true;
    // Initial-parameter scale; also used to reseed couplings after the mean-field stage.
    double init_stddev = 0.1;

    void validate() const {
        if (!(dtau > 0.0) || !std::isfinite(dtau)) throw ArgumentError("dtau must be > 0");
        if (!(regularization >= 0.0) || !std::isfinite(regularization)) throw ArgumentError("regularization must be >= 0");
        if (n_steps < 1) throw ArgumentError("n_steps must be >= 1");
        if (mode != EstimatorMode::exact && n_samples < 2) throw ArgumentError("sampled modes need n_samples >= 2");
        if (window < 2) throw ArgumentError("convergence window must be >= 2");
        if (!(init_stddev >= 0.0)) throw ArgumentError("init stddev must be >= 0");
    }
};

struct SolveResult {
    Eigen::VectorXd delta;
    double residual = 0.0;  // ||(A + lambda I) x - C|| with x = delta / dtau
    double min_eig = 0.0;   // of A itself
    double max_eig = 0.0;
    bool used_pseudo_inverse = false;
};

/// delta theta = dtau (A + lambda I)^{-1} C. Cholesky first; eigenvalue-truncated
/// pseudo-inverse (relative cutoff 1e-10) when the shifted matrix is singular.
inline SolveResult sr_update(const Eigen::MatrixXd& a, const Eigen::VectorXd& c, double lambda, double dtau) {
    if (a.rows() != a.cols() || a.rows() != c.size()) throw ArgumentError("SR system dimensions differ");
    if (!a.allFinite() || !c.allFinite() || !std::isfinite(lambda) || !std::isfinite(dtau)) {
        throw NumericalIntegrityError("non-finite SR system");
    }
    SolveResult r;
    if (a.size() == 0) {
        r.delta = Eigen::VectorXd::Zero(0);
        return r;
    }
    const Eigen::MatrixXd shifted = a + lambda * Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(shifted);
    r.min_eig = es.eigenvalues().minCoeff() - lambda;
    r.max_eig = es.eigenvalues().maxCoeff() - lambda;
    Eigen::VectorXd x;
    const double top = std::max(std::abs(es.eigenvalues().maxCoeff()), std::abs(es.eigenvalues().minCoeff()));
    const double cutoff = 1e-10 * top;
    const Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    bool ok = llt.info() == Eigen::Success && es.eigenvalues().minCoeff() > cutoff;
    if (ok) {
        x = llt.solve(c);
        ok = x.allFinite();
    }
    if (!ok) {
        const Eigen::VectorXd& ev = es.eigenvalues();
        Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
        for (Eigen::Index k = 0; k < ev.size(); ++k) {
            if (ev[k] > cutoff) inv[k] = 1.0 / ev[k];
        }
        x = es.eigenvectors() * inv.asDiagonal() * (es.eigenvectors().transpose() * c);
        r.used_pseudo_inverse = true;
    }
    r.residual = (shifted * x - c).norm();
    r.delta = dtau * x;
    return r;
}

struct IteStep {
    std::size_t step;
    double tau;
    Estimate energy;
    Eigen::VectorXd theta;
    double min_eig_a;
    double max_eig_a;
    double residual;
};

struct IteTrace {
    std::vector<IteStep> steps;

    std::size_t size() const { return steps.size(); }
    bool empty() const { return steps.empty(); }
    const IteStep& back() const { return steps.back(); }

    /// First step whose energy is within `rel_tol` (relative) of `target`, if any.
    std::optional<std::size_t> steps_to(double target, double rel_tol) const {
        for (const auto& s : steps) {
            if (std::abs(s.energy.value() - target) <= rel_tol * std::abs(target)) return s.step;
        }
        return std::nullopt;
    }

    /// Steps whose energy exceeds the previous one by more than `slack`.
    std::size_t energy_increases(double slack = 0.0) const {
        std::size_t k = 0;
        for (std::size_t i = 1; i < steps.size(); ++i) {
            if (steps[i].energy.value() > steps[i - 1].energy.value() + slack) ++k;
        }
        return k;
    }
};

struct IteResult {
    RbmParams params;
    IteTrace trace;
    Estimate final_energy;
    bool stopped_early = false;
};

/// Imaginary-time evolution by stochastic reconfiguration.
///
/// `active` optionally restricts updates to a subset of slots; inactive slots
/// keep their values. Each trace row records the state before that step's update.
inline IteResult ite_run(const RbmParams& params0, const PauliHamiltonian& h, const IteConfig& cfg,
                         const std::vector<bool>* active = nullptr) {
    cfg.validate();
    if (h.n_qubits() != params0.n_visible()) throw ArgumentError("Hamiltonian and RBM sizes differ");
    const VariationalIndex vi(params0);
    if (active && active->size() != vi.size()) throw ArgumentError("active mask has wrong length");
    std::vector<Eigen::Index> live;
    for (std::size_t k = 0; k < vi.size(); ++k) {
        if (!active || (*active)[k]) live.push_back(static_cast<Eigen::Index>(k));
    }
    const auto n_live = static_cast<Eigen::Index>(live.size());

    RbmParams params = params0;
    Eigen::VectorXd theta = vi.flatten(params);
    IteResult out{params, {}, {}, false};
    for (std::size_t step = 0; step < cfg.n_steps; ++step) {
        SrSystem sys;
        try {
            sys = compute_a_c(params, h, cfg.mode, cfg.n_samples, mix64(cfg.seed) + step, cfg.threads);
        } catch (const DegenerateWeightError& e) {
            throw DegenerateWeightError(std::string(e.what()) + " (step " + std::to_string(step) + ")");
        }
        Eigen::MatrixXd a(n_live, n_live);
        Eigen::VectorXd c(n_live);
        for (Eigen::Index r = 0; r < n_live; ++r) {
            c[r] = sys.c[live[static_cast<std::size_t>(r)]];
            for (Eigen::Index q = 0; q < n_live; ++q) a(r, q) = sys.a(live[static_cast<std::size_t>(r)], live[static_cast<std::size_t>(q)]);
        }
        const SolveResult sol = sr_update(a, c, cfg.regularization, cfg.dtau);
        out.trace.steps.push_back({step, static_cast<double>(step) * cfg.dtau, sys.energy, theta, sol.min_eig,
                                   sol.max_eig, sol.residual});
        for (Eigen::Index r = 0; r < n_live; ++r) theta[live[static_cast<std::size_t>(r)]] += sol.delta[r];
        if (!theta.allFinite()) throw NumericalIntegrityError("parameters diverged at step " + std::to_string(step));
        // unflatten rebuilds W with Re(W) = 0 whenever the flag is set.
        params = vi.unflatten(theta);

        if (cfg.early_stop && out.trace.size() >= cfg.window) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (std::size_t k = out.trace.size() - cfg.window; k < out.trace.size(); ++k) {
                lo = std::min(lo, out.trace.steps[k].energy.value());
                hi = std::max(hi, out.trace.steps[k].energy.value());
            }
            if (hi - lo < cfg.threshold) {
                out.stopped_early = true;
                break;
            }
        }
    }
    out.params = params;
    out.final_energy = cfg.mode == EstimatorMode::exact
                           ? expectation_exact(params, h)
                           : compute_a_c(params, h, cfg.mode, cfg.n_samples, mix64(cfg.seed) + cfg.n_steps, cfg.threads).energy;
    return out;
}

struct MeanFieldResult {
    RbmParams params;   // stage-2 starting point
    IteResult stage1;
};

/// Stage 1: b-only evolution with m = W = 0 (a product state). Stage 2 start:
/// optimized b, m = 0 and couplings reseeded at `init_stddev`.
inline MeanFieldResult mean_field_stage(const PauliHamiltonian& h, std::size_t n_hidden, bool unitary_coupled,
                                        const IteConfig& cfg) {
    const std::size_t n = h.n_qubits();
    const VariationalIndex vi(n, n_hidden, unitary_coupled);
    // Random b breaks the symmetric saddle at b = 0.
    const RbmParams seedp = random_init(n, n_hidden, cfg.init_stddev, cfg.seed, unitary_coupled);
    const RbmParams start = RbmParams::zeros(n, n_hidden, unitary_coupled).with_b(seedp.b());
    std::vector<bool> mask(vi.size(), false);
    for (std::size_t k = 0; k < vi.size(); ++k) mask[k] = vi.is_visible_bias(k);
    IteConfig c1 = cfg;
    c1.n_steps = cfg.mean_field_steps;
    IteResult stage1 = ite_run(start, h, c1, &mask);
    const RbmParams fresh = random_init(n, n_hidden, cfg.init_stddev, mix64(cfg.seed ^ 0x5eedULL), unitary_coupled);
    RbmParams p2 = stage1.params.with_m(Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n_hidden))).with_w(fresh.w());
    return {std::move(p2), std::move(stage1)};
}

struct GradCheckReport {
    double max_abs_deviation = 0.0;  // max_n |C_n + (1/2) dE/dtheta_n|
    double inferred_sign = 0.0;      // sign making the raw expression equal -(1/2) grad E
    Eigen::VectorXd c;
    Eigen::VectorXd half_neg_grad;
};

/// Compares C with -(1/2) of the central finite-difference energy gradient.
inline GradCheckReport grad_check(const RbmParams& p, const PauliHamiltonian& h, double step = 1e-5) {
    const VariationalIndex vi(p);
    const SrSystem sys = compute_a_c_exact(p, h);
    const Eigen::VectorXd x = vi.flatten(p);
    Eigen::VectorXd g(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        Eigen::VectorXd xp = x, xm = x;
        xp[k] += step;
        xm[k] -= step;
        const double ep = expectation_exact(vi.unflatten(xp), h).value();
        const double em = expectation_exact(vi.unflatten(xm), h).value();
        g[k] = -0.5 * (ep - em) / (2.0 * step);
    }
    GradCheckReport r;
    r.c = sys.c;
    r.half_neg_grad = g;
    r.max_abs_deviation = x.size() ? (sys.c - g).cwiseAbs().maxCoeff() : 0.0;
    const Eigen::VectorXd raw = sys.c / kForceSign;
    const double d = raw.dot(g);
    r.inferred_sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    return r;
}

// ---- export -------------------------------------------------------------

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string format_trace_csv(const IteTrace& t) {
    std::string out = "step,tau,energy,std_error,min_eig_A,residual\n";
    for (const auto& s : t.steps) {
        out += std::to_string(s.step) + ',' + format_g17(s.tau) + ',' + format_g17(s.energy.value()) + ',' +
               format_g17(s.energy.std_error) + ',' + format_g17(s.min_eig_a) + ',' + format_g17(s.residual) + '\n';
    }
    return out;
}

inline std::string format_params_vector(const Eigen::VectorXd& theta) {
    std::string out;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        if (k) out += ' ';
        out += format_g17(theta[k]);
    }
    return out;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << text;
}

inline void write_trace_csv(const std::string& path, const IteTrace& t) { write_text(path, format_trace_csv(t)); }

/// Sidecar: one flattened parameter vector per trace step.
inline void write_trace_params(const std::string& path, const IteTrace& t) {
    std::string out;
    for (const auto& s : t.steps) out += format_params_vector(s.theta) + '\n';
    write_text(path, out);
}

/// Static SVG of energy against step with an optional horizontal reference line.
inline std::string energy_svg(const IteTrace& t, std::optional<double> reference, const std::string& title) {
    const double w = 640, hgt = 400, ml = 70, mr = 20, mt = 30, mb = 45;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : t.steps) {
        lo = std::min(lo, s.energy.value());
        hi = std::max(hi, s.energy.value());
    }
    if (reference) {
        lo = std::min(lo, *reference);
        hi = std::max(hi, *reference);
    }
    if (t.steps.empty()) lo = hi = 0.0;
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    const double xmax = std::max<double>(1.0, static_cast<double>(t.steps.empty() ? 1 : t.steps.back().step));
    auto sx = [&](double x) { return ml + (w - ml - mr) * x / xmax; };
    auto sy = [&](double y) { return mt + (hgt - mt - mb) * (hi - y) / (hi - lo); };
    char buf[256];
    std::string svg;
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                  w, hgt, w, hgt);
    svg += buf;
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n", ml, mt,
                  w - ml - mr, hgt - mt - mb);
    svg += buf;
    std::string escaped;
    for (char ch : title) {
        if (ch == '<') escaped += "&lt;";
        else if (ch == '>') escaped += "&gt;";
        else if (ch == '&') escaped += "&amp;";
        else escaped += ch;
    }
    std::snprintf(buf, sizeof(buf), "<text x=\"%.1f\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">", ml);
    svg += buf + escaped + "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double y = lo + (hi - lo) * k / 4.0;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">%.4g</text>\n",
                      ml - 5, sy(y) + 4, y);
        svg += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">step</text>\n",
                  ml + (w - ml - mr) / 2, hgt - 10);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">%.0f</text>\n",
                  w - mr, hgt - mb + 15, xmax);
    svg += buf;
    if (reference) {
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.2f\" x2=\"%.1f\" y2=\"%.2f\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n",
                      ml, sy(*reference), w - mr, sy(*reference));
        svg += buf;
    }
    svg += "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
    for (const auto& s : t.steps) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", sx(static_cast<double>(s.step)), sy(s.energy.value()));
        svg += buf;
    }
    svg += "\"/>\n</svg>\n";
    return svg;
}

}  // namespace ucrbm
