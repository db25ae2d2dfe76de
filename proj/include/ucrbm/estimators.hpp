#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ucrbm/circuit.hpp"
#include "ucrbm/errors.hpp"
#include "ucrbm/parallel.hpp"
#include "ucrbm/pauli.hpp"
#include "ucrbm/rbm.hpp"
#include "ucrbm/rng.hpp"
#include "ucrbm/state.hpp"

namespace ucrbm {

enum class EstimatorMode { exact, vmc, ensemble };

inline const char* to_string(EstimatorMode m) {
    switch (m) {
        case EstimatorMode::exact: return "exact";
        case EstimatorMode::vmc: return "vmc";
        case EstimatorMode::ensemble: return "ensemble";
    }
    return "?";
}

inline EstimatorMode parse_estimator_mode(const std::string& s) {
    if (s == "exact") return EstimatorMode::exact;
    if (s == "vmc") return EstimatorMode::vmc;
    if (s == "ensemble") return EstimatorMode::ensemble;
    throw ArgumentError("unknown estimator mode '" + s + "'");
}

struct Estimate {
    Complex mean{0.0, 0.0};
    double std_error = 0.0;
    std::size_t n_samples = 0;
    EstimatorMode mode = EstimatorMode::exact;

    double value() const { return mean.real(); }
};

/// sum_{z'} H(z, z') psi(z') / psi(z) over the connected configurations only.
inline Complex local_observable(const RbmParams& p, Basis z, const PauliHamiltonian& h) {
    const Complex log_z = log_amplitude(p, z);
    Complex acc = 0.0;
    for (const auto& c : h.connections(z)) {
        if (c.element == Complex(0.0, 0.0)) continue;
        acc += c.target == z ? c.element : c.element * std::exp(log_amplitude(p, c.target) - log_z);
    }
    return acc;
}

inline Complex local_observable(const RbmParams& p, const SpinConfig& z, const PauliHamiltonian& h) {
    if (z.size() != p.n_visible() || h.n_qubits() != p.n_visible()) {
        throw ArgumentError("dimension mismatch in local observable");
    }
    return local_observable(p, z.index(), h);
}

/// <Psi_v|H|Psi_v> by full enumeration.
inline Estimate expectation_exact(const RbmParams& p, const PauliHamiltonian& h) {
    if (h.n_qubits() != p.n_visible()) throw ArgumentError("Hamiltonian and RBM sizes differ");
    const StateVector psi = exact_statevector(p);
    const Complex e = expectation(h, psi);
    double scale = 0.0;
    for (const auto& t : h.terms()) scale += std::abs(t.coefficient);
    if (std::abs(e.imag()) > 1e-10 * std::max(1.0, scale)) {
        throw NumericalIntegrityError("imaginary energy residue from a Hermitian operator");
    }
    return {Complex(e.real(), 0.0), 0.0, 1, EstimatorMode::exact};
}

/// One prepared state, measured once.
struct Sample {
    std::vector<int> s;  // hidden outcomes; empty for vmc
    Basis z = 0;
    double weight = 1.0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

inline constexpr std::size_t kSampleChunk = 512;

/// Produces samples from either the exact Born distribution (vmc) or the
/// recycled-ancilla ensemble protocol, and counts state preparations.
///
/// Chunk c of every draw uses generator stream (seed, c + chunks already
/// consumed), so output is independent of the thread count.
class SampleSource {
   public:
    SampleSource(RbmParams params, EstimatorMode mode, std::uint64_t seed, std::size_t threads = 0)
        : params_(std::move(params)), mode_(mode), seed_(seed), threads_(threads) {
        if (mode_ == EstimatorMode::exact) throw ArgumentError("exact mode does not sample");
        if (mode_ == EstimatorMode::ensemble && !params_.unitary_coupled()) {
            throw ArgumentError("ensemble sampling requires unitary-coupled parameters");
        }
        if (mode_ == EstimatorMode::vmc) {
            const StateVector psi = exact_statevector(params_);
            cdf_.resize(psi.dimension());
            double acc = 0.0;
            for (std::size_t k = 0; k < cdf_.size(); ++k) {
                acc += std::norm(psi[static_cast<Basis>(k)]);
                cdf_[k] = acc;
            }
        }
    }

    EstimatorMode mode() const { return mode_; }
    const RbmParams& params() const { return params_; }
    std::size_t preparations() const { return preparations_; }

    std::vector<Sample> draw(std::size_t n) {
        std::vector<Sample> out(n);
        const std::size_t n_chunks = (n + kSampleChunk - 1) / kSampleChunk;
        std::vector<std::size_t> preps(n_chunks, 0);
        const std::size_t base = next_chunk_;
        parallel_for(n_chunks, threads_, [&](std::size_t c) {
            Rng rng = stream_rng(seed_, base + c);
            const std::size_t lo = c * kSampleChunk;
            const std::size_t hi = std::min(n, lo + kSampleChunk);
            for (std::size_t k = lo; k < hi; ++k) {
                out[k] = prepare_and_measure(rng);
                ++preps[c];
            }
        });
        next_chunk_ += n_chunks;
        for (std::size_t c : preps) preparations_ += c;
        return out;
    }

   private:
    Sample prepare_and_measure(Rng& rng) const {
        if (mode_ == EstimatorMode::vmc) {
            const double u = uniform01(rng) * cdf_.back();
            auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
            if (it == cdf_.end()) --it;
            return {{}, static_cast<Basis>(it - cdf_.begin()), 1.0};
        }
        EnsembleSample e = run_recycle_protocol(params_, rng, 1);
        return {std::move(e.s), e.z_shots.front().index(), e.weight};
    }

    RbmParams params_;
    EstimatorMode mode_;
    std::uint64_t seed_;
    std::size_t threads_;
    std::vector<double> cdf_;
    std::size_t next_chunk_ = 0;
    std::size_t preparations_ = 0;
};

// Sample log: one line per sample, "<s> <z> <weight>", s and z as +/- strings
// ("." for an empty s), weight with 17 significant digits.

inline std::string format_sample_log(const std::vector<Sample>& samples, std::size_t n_visible) {
    std::string out;
    char buf[40];
    for (const auto& smp : samples) {
        if (smp.s.empty()) {
            out += '.';
        } else {
            for (int v : smp.s) out += v == 1 ? '+' : '-';
        }
        out += ' ';
        out += SpinConfig::from_index(smp.z, n_visible).to_string();
        std::snprintf(buf, sizeof(buf), " %.17g\n", smp.weight);
        out += buf;
    }
    return out;
}

inline void write_sample_log(const std::string& path, const std::vector<Sample>& samples, std::size_t n_visible) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write sample log " + path);
    f << format_sample_log(samples, n_visible);
}

inline std::vector<Sample> parse_sample_log(const std::string& text) {
    std::vector<Sample> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string s, z, w;
        if (!(ls >> s)) continue;
        if (!(ls >> z >> w)) throw ParseError(line_no, "expected '<s> <z> <weight>'");
        Sample smp;
        if (s != ".") {
            for (char c : s) {
                if (c != '+' && c != '-') throw ParseError(line_no, "hidden outcomes must be + or -");
                smp.s.push_back(c == '+' ? 1 : -1);
            }
        }
        try {
            smp.z = SpinConfig::from_string(z).index();
        } catch (const Error&) {
            throw ParseError(line_no, "bad visible configuration '" + z + "'");
        }
        const auto res = std::from_chars(w.data(), w.data() + w.size(), smp.weight);
        if (res.ec != std::errc() || res.ptr != w.data() + w.size()) throw ParseError(line_no, "bad weight '" + w + "'");
        out.push_back(std::move(smp));
    }
    return out;
}

inline std::vector<Sample> read_sample_log(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open sample log " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_sample_log(buf.str());
}

namespace detail {

// Standard error of the self-normalized mean sum w f / sum w (delta method).
inline double ratio_std_error(const std::vector<double>& w, const std::vector<double>& f, double mean) {
    const std::size_t n = w.size();
    if (n < 2) return std::numeric_limits<double>::infinity();
    double sw = 0.0, acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sw += w[k];
        const double d = w[k] * (f[k] - mean);
        acc += d * d;
    }
    return std::sqrt(acc / (sw * sw) * static_cast<double>(n) / static_cast<double>(n - 1));
}

inline double total_weight(const std::vector<Sample>& samples) {
    double sw = 0.0;
    for (const auto& s : samples) sw += s.weight;
    if (!(sw > 0.0)) {
        throw DegenerateWeightError("all sample weights vanished; increase the number of samples");
    }
    return sw;
}

}  // namespace detail

/// Self-normalized energy estimate from a list of samples.
inline Estimate estimate_from_samples(const RbmParams& p, const PauliHamiltonian& h,
                                      const std::vector<Sample>& samples, EstimatorMode mode) {
    if (samples.empty()) throw ArgumentError("need at least one sample");
    const double sw = detail::total_weight(samples);
    std::vector<double> w(samples.size()), f(samples.size(), 0.0);
    Complex num = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        w[k] = samples[k].weight;
        if (w[k] == 0.0) continue;
        const Complex e = local_observable(p, samples[k].z, h);
        f[k] = e.real();
        num += w[k] * e;
    }
    const Complex mean = num / sw;
    return {mean, detail::ratio_std_error(w, f, mean.real()), samples.size(), mode};
}

inline Estimate expectation_vmc(const RbmParams& p, const PauliHamiltonian& h, std::size_t n_samples,
                                std::uint64_t seed, std::size_t threads = 0) {
    if (n_samples == 0) throw ArgumentError("n_samples must be positive");
    SampleSource src(p, EstimatorMode::vmc, seed, threads);
    return estimate_from_samples(p, h, src.draw(n_samples), EstimatorMode::vmc);
}

inline Estimate expectation_ensemble(const RbmParams& p, const PauliHamiltonian& h, std::size_t n_samples,
                                     std::uint64_t seed, std::size_t threads = 0) {
    if (n_samples == 0) throw ArgumentError("n_samples must be positive");
    SampleSource src(p, EstimatorMode::ensemble, seed, threads);
    return estimate_from_samples(p, h, src.draw(n_samples), EstimatorMode::ensemble);
}

/// Stochastic-reconfiguration system. c is oriented so that energy decreases
/// along it: c = -(1/2) dE/dtheta.
struct SrSystem {
    Eigen::MatrixXd a;
    Eigen::VectorXd c;
    Estimate energy;
    Eigen::MatrixXd a_std_error;  // zero in exact mode
    Eigen::VectorXd c_std_error;
    std::size_t n_preparations = 0;
};

/// Sign applied to Re(<O^* E_loc> - <O^*><E_loc>); fixed by the finite-difference gradient check.
inline constexpr double kForceSign = -1.0;

namespace detail {

struct WeightedPoint {
    Basis z;
    double weight;
};

inline SrSystem assemble_sr(const RbmParams& p, const PauliHamiltonian& h, const std::vector<WeightedPoint>& pts,
                            EstimatorMode mode, std::size_t threads) {
    if (h.n_qubits() != p.n_visible()) throw ArgumentError("Hamiltonian and RBM sizes differ");
    const VariationalIndex vi(p);
    const auto nvar = static_cast<Eigen::Index>(vi.size());
    const auto n = static_cast<Eigen::Index>(pts.size());
    double sw = 0.0;
    for (const auto& q : pts) sw += q.weight;
    if (!(sw > 0.0)) throw DegenerateWeightError("all sample weights vanished; increase the number of samples");

    Eigen::MatrixXcd o(n, nvar);
    Eigen::VectorXcd e(n);
    const std::size_t n_chunks = (pts.size() + kSampleChunk - 1) / kSampleChunk;
    parallel_for(n_chunks, threads, [&](std::size_t c) {
        const std::size_t hi = std::min(pts.size(), (c + 1) * kSampleChunk);
        for (std::size_t k = c * kSampleChunk; k < hi; ++k) {
            const auto K = static_cast<Eigen::Index>(k);
            if (pts[k].weight == 0.0) {
                o.row(K).setZero();
                e[K] = 0.0;
                continue;
            }
            o.row(K) = log_derivatives(p, pts[k].z).transpose();
            e[K] = local_observable(p, pts[k].z, h);
        }
    });
    Eigen::VectorXd w(n);
    for (Eigen::Index k = 0; k < n; ++k) w[k] = pts[static_cast<std::size_t>(k)].weight;

    const Eigen::RowVectorXcd o_mean = (w.cast<Complex>().transpose() * o) / sw;
    const Complex e_mean = w.cast<Complex>().dot(e) / sw;
    Eigen::MatrixXcd oc = o.rowwise() - o_mean;
    Eigen::VectorXcd ec = e.array() - e_mean;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (w[k] == 0.0) {
            oc.row(k).setZero();
            ec[k] = 0.0;
        }
    }
    const Eigen::VectorXd sqw = w.cwiseSqrt();
    const Eigen::MatrixXcd os = sqw.cast<Complex>().asDiagonal() * oc;
    Eigen::MatrixXd a = (os.adjoint() * os).real() / sw;
    a = 0.5 * (a + a.transpose()).eval();
    const Eigen::VectorXd c =
        kForceSign * (oc.adjoint() * (w.cast<Complex>().cwiseProduct(ec))).real() / sw;

    SrSystem sys;
    sys.a = std::move(a);
    sys.c = c;
    sys.n_preparations = mode == EstimatorMode::exact ? 0 : pts.size();
    sys.energy.mean = e_mean;
    sys.energy.mode = mode;
    sys.energy.n_samples = pts.size();
    sys.a_std_error = Eigen::MatrixXd::Zero(nvar, nvar);
    sys.c_std_error = Eigen::VectorXd::Zero(nvar);
    if (mode != EstimatorMode::exact) {
        std::vector<double> wv(w.data(), w.data() + n), fv(static_cast<std::size_t>(n));
        for (Eigen::Index k = 0; k < n; ++k) fv[static_cast<std::size_t>(k)] = e[k].real();
        sys.energy.std_error = ratio_std_error(wv, fv, e_mean.real());
        if (n < 2) {
            sys.a_std_error.setConstant(std::numeric_limits<double>::infinity());
            sys.c_std_error.setConstant(std::numeric_limits<double>::infinity());
        } else {
            // Second pass: per-entry delta-method errors of the weighted covariances.
            Eigen::MatrixXd acc_a = Eigen::MatrixXd::Zero(nvar, nvar);
            Eigen::VectorXd acc_c = Eigen::VectorXd::Zero(nvar);
            for (Eigen::Index k = 0; k < n; ++k) {
                if (w[k] == 0.0) continue;
                const Eigen::RowVectorXcd ok = oc.row(k);
                const Eigen::MatrixXd fk = (ok.adjoint() * ok).real();
                acc_a += (w[k] * w[k]) * (fk - sys.a).cwiseAbs2();
                const Eigen::VectorXd gk = kForceSign * (ok.adjoint() * ec[k]).real();
                acc_c += (w[k] * w[k]) * (gk - c).cwiseAbs2();
            }
            const double corr = static_cast<double>(n) / static_cast<double>(n - 1) / (sw * sw);
            sys.a_std_error = (acc_a * corr).cwiseSqrt();
            sys.c_std_error = (acc_c * corr).cwiseSqrt();
        }
    }
    return sys;
}

}  // namespace detail

/// A and c by full enumeration of |Psi_v|^2.
inline SrSystem compute_a_c_exact(const RbmParams& p, const PauliHamiltonian& h, std::size_t threads = 1) {
    const StateVector psi = exact_statevector(p);
    std::vector<detail::WeightedPoint> pts;
    pts.reserve(psi.dimension());
    for (Basis z = 0; z < psi.dimension(); ++z) {
        const double pz = std::norm(psi[z]);
        if (pz > 0.0) pts.push_back({z, pz});
    }
    SrSystem sys = detail::assemble_sr(p, h, pts, EstimatorMode::exact, threads);
    sys.energy.n_samples = 1;
    return sys;
}

/// A, c and the energy from one recorded sample stream.
inline SrSystem compute_a_c_from_samples(const RbmParams& p, const PauliHamiltonian& h,
                                         const std::vector<Sample>& samples, EstimatorMode mode,
                                         std::size_t threads = 1) {
    if (mode == EstimatorMode::exact) throw ArgumentError("samples imply a sampled mode");
    if (samples.empty()) throw ArgumentError("need at least one sample");
    std::vector<detail::WeightedPoint> pts;
    pts.reserve(samples.size());
    for (const auto& s : samples) pts.push_back({s.z, s.weight});
    return detail::assemble_sr(p, h, pts, mode, threads);
}

/// Draws n samples (one state preparation each) and builds every A and c entry from them.
inline SrSystem compute_a_c_sampled(SampleSource& src, const PauliHamiltonian& h, std::size_t n_samples,
                                    std::vector<Sample>* log = nullptr) {
    if (n_samples == 0) throw ArgumentError("n_samples must be positive");
    const std::size_t before = src.preparations();
    std::vector<Sample> samples = src.draw(n_samples);
    const std::size_t used = src.preparations() - before;
    if (used != n_samples) throw NumericalIntegrityError("sample stream used more than one preparation per sample");
    SrSystem sys = compute_a_c_from_samples(src.params(), h, samples, src.mode());
    sys.n_preparations = used;
    if (log) *log = std::move(samples);
    return sys;
}

inline SrSystem compute_a_c_sampled(const RbmParams& p, const PauliHamiltonian& h, std::size_t n_samples,
                                    std::uint64_t seed, EstimatorMode mode, std::size_t threads = 0,
                                    std::vector<Sample>* log = nullptr) {
    SampleSource src(p, mode, seed, threads);
    return compute_a_c_sampled(src, h, n_samples, log);
}

/// SR system in the requested mode; `seed` selects the sample streams.
inline SrSystem compute_a_c(const RbmParams& p, const PauliHamiltonian& h, EstimatorMode mode,
                            std::size_t n_samples, std::uint64_t seed, std::size_t threads = 0) {
    if (mode == EstimatorMode::exact) return compute_a_c_exact(p, h);
    return compute_a_c_sampled(p, h, n_samples, seed, mode, threads);
}

}  // namespace ucrbm
