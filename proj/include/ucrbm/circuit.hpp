#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ucrbm/errors.hpp"
#include "ucrbm/rbm.hpp"
#include "ucrbm/rng.hpp"
#include "ucrbm/state.hpp"

namespace ucrbm {

// Qubit layout during the protocol: visible qubits 0..N-1, the single reused
// ancilla is qubit N (the most significant bit). Hidden outcomes are X-basis
// results, +1 for |+> and -1 for |->.

inline constexpr std::size_t kBranchCap = 12;

/// Product state with per-qubit amplitudes proportional to (e^{b_i}, e^{-b_i}).
inline StateVector prepare_visible_product(const RbmParams& p) {
    const std::size_t n = p.n_visible();
    if (n > kDefaultStateCap) throw SizeError("visible count exceeds statevector cap");
    Eigen::VectorXcd amps = Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(StateVector::dimension_for(n)));
    for (std::size_t i = 0; i < n; ++i) {
        const Complex bi = p.b()[static_cast<Eigen::Index>(i)];
        // Normalize (e^{b}, e^{-b}) without forming e^{2|b^R|}.
        const double br = std::abs(bi.real());
        const double big = 1.0;
        const double small = std::exp(-2.0 * br);
        const double scale = 1.0 / std::sqrt(big + small * small);
        const Complex phase = std::exp(Complex(0.0, bi.imag()));
        const Complex up = (bi.real() >= 0.0 ? big : small) * scale * phase;
        const Complex dn = (bi.real() >= 0.0 ? small : big) * scale * std::conj(phase);
        for (Eigen::Index k = 0; k < amps.size(); ++k) amps[k] *= ((k >> i) & 1) ? dn : up;
    }
    return StateVector(n, std::move(amps));
}

/// log of <+..+| e^{2 b^R . v} |+..+>, the squared norm removed by prepare_visible_product.
inline double visible_product_log_norm2(const RbmParams& p) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.b().size(); ++i) {
        const double x = 2.0 * std::abs(p.b()[i].real());
        acc += x + std::log1p(std::exp(-2.0 * x)) - std::log(2.0);
    }
    return acc;
}

/// Appends a fresh ancilla in |+> as the most significant qubit.
inline StateVector attach_ancilla(const StateVector& visible) {
    const Eigen::Index dim = visible.amplitudes().size();
    Eigen::VectorXcd amps(2 * dim);
    const double r = 1.0 / std::sqrt(2.0);
    amps.head(dim) = visible.amplitudes() * r;
    amps.tail(dim) = visible.amplitudes() * r;
    return StateVector(visible.n_qubits() + 1, std::move(amps));
}

struct BlockResult {
    StateVector state;
    // Squared norm before renormalization; 1 for unitary blocks.
    double gain = 1.0;
};

/// Hidden-spin block j: exp(i (m^I_j + sum_i W^I_ij v_i) h). For unconstrained
/// couplings the non-unitary factor exp(sum_i W^R_ij v_i h) follows, and the
/// state is renormalized.
inline BlockResult apply_hidden_block(const StateVector& state, const RbmParams& p, std::size_t j) {
    const std::size_t n = p.n_visible();
    if (state.n_qubits() != n + 1) throw ArgumentError("hidden block expects N+1 qubits");
    if (j >= p.n_hidden()) throw ArgumentError("hidden index out of range");
    const Eigen::VectorXcd& in = state.amplitudes();
    const Eigen::Index half = in.size() / 2;
    const double tol = 1e-10 * std::max(1.0, state.norm());
    if ((in.head(half) - in.tail(half)).cwiseAbs().maxCoeff() > tol) {
        throw ProtocolOrderError("ancilla must be in |+> before a hidden block");
    }
    const auto J = static_cast<Eigen::Index>(j);
    const double mi = p.m()[J].imag();
    Eigen::VectorXcd out(in.size());
    for (Eigen::Index z = 0; z < half; ++z) {
        double phi = mi;
        double re = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double zi = spin_of(static_cast<Basis>(z), i);
            phi += p.w()(static_cast<Eigen::Index>(i), J).imag() * zi;
            re += p.w()(static_cast<Eigen::Index>(i), J).real() * zi;
        }
        const Complex ph = std::exp(Complex(0.0, phi));
        out[z] = in[z] * ph;                       // h = +1
        out[z + half] = in[z + half] * std::conj(ph);  // h = -1
        if (!p.unitary_coupled() && re != 0.0) {
            out[z] *= std::exp(re);
            out[z + half] *= std::exp(-re);
        }
    }
    BlockResult r{StateVector(n + 1, std::move(out)), 1.0};
    if (!p.unitary_coupled()) {
        const double nrm = r.state.norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NumericalIntegrityError("non-unitary block lost the state");
        r.gain = nrm * nrm / (state.norm() * state.norm());
        r.state = StateVector(n + 1, r.state.amplitudes() / nrm * state.norm());
    }
    return r;
}

struct HiddenOutcome {
    int s;
    StateVector collapsed;  // N qubits, normalized (zero vector when prob == 0)
    double prob;
};

namespace detail {

// Un-normalized X-basis projections of the ancilla: (a(z,0) +/- a(z,1)) / sqrt 2.
inline std::pair<Eigen::VectorXcd, Eigen::VectorXcd> ancilla_projections(const StateVector& state) {
    const Eigen::VectorXcd& a = state.amplitudes();
    const Eigen::Index half = a.size() / 2;
    const double r = 1.0 / std::sqrt(2.0);
    return {(a.head(half) + a.tail(half)) * r, (a.head(half) - a.tail(half)) * r};
}

inline HiddenOutcome collapse(std::size_t n, int s, Eigen::VectorXcd proj, double total) {
    const double p = proj.squaredNorm() / total;
    const double nrm = proj.norm();
    if (nrm > 0.0) proj /= nrm;
    return {s, StateVector(n, std::move(proj)), p};
}

}  // namespace detail

/// X-basis measurement of the ancilla; the ancilla is dropped afterwards.
inline HiddenOutcome sample_hidden_outcome(const StateVector& state, Rng& rng) {
    if (state.n_qubits() < 1) throw ArgumentError("state has no ancilla");
    auto [plus, minus] = detail::ancilla_projections(state);
    const double total = state.norm() * state.norm();
    const double pp = plus.squaredNorm() / total;
    const double pm = minus.squaredNorm() / total;
    if (std::abs(pp + pm - 1.0) > 1e-8) throw NumericalIntegrityError("ancilla outcome probabilities do not sum to 1");
    const std::size_t n = state.n_qubits() - 1;
    if (uniform01(rng) < pp) return detail::collapse(n, +1, std::move(plus), total);
    return detail::collapse(n, -1, std::move(minus), total);
}

/// Projects the ancilla onto the given X-basis outcome instead of sampling it.
inline HiddenOutcome project_hidden_outcome(const StateVector& state, int s) {
    if (s != 1 && s != -1) throw ArgumentError("hidden outcome must be +1 or -1");
    auto [plus, minus] = detail::ancilla_projections(state);
    const double total = state.norm() * state.norm();
    if (std::abs((plus.squaredNorm() + minus.squaredNorm()) / total - 1.0) > 1e-8) {
        throw NumericalIntegrityError("ancilla outcome probabilities do not sum to 1");
    }
    return detail::collapse(state.n_qubits() - 1, s, s == 1 ? std::move(plus) : std::move(minus), total);
}

/// Born-rule samples of a visible state in the computational basis.
inline std::vector<SpinConfig> measure_visible(const StateVector& state, std::size_t shots, Rng& rng) {
    std::vector<double> cdf(state.dimension());
    double acc = 0.0;
    for (std::size_t k = 0; k < cdf.size(); ++k) {
        acc += std::norm(state[static_cast<Basis>(k)]);
        cdf[k] = acc;
    }
    if (!(acc > 0.0)) throw NumericalIntegrityError("cannot sample a zero state");
    std::vector<SpinConfig> out;
    out.reserve(shots);
    for (std::size_t t = 0; t < shots; ++t) {
        const double u = uniform01(rng) * acc;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end()) --it;
        out.push_back(SpinConfig::from_index(static_cast<Basis>(it - cdf.begin()), state.n_qubits()));
    }
    return out;
}

struct EnsembleSample {
    std::vector<int> s;
    double branch_prob = 1.0;
    double weight = 1.0;  // prod_j R_{s_j}(m^R_j)^2
    StateVector visible_state;
    std::vector<SpinConfig> z_shots;
};

inline double branch_weight(const RbmParams& p, const std::vector<int>& s) {
    double w = 1.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        const double r = r_factor(p.m()[static_cast<Eigen::Index>(j)].real(), s[j]);
        w *= r * r;
    }
    return w;
}

/// One pass of the recycled-ancilla protocol with sampled hidden outcomes.
inline EnsembleSample run_recycle_protocol(const RbmParams& p, Rng& rng, std::size_t shots = 0) {
    if (!p.unitary_coupled()) {
        throw ArgumentError("sampling protocol requires unitary-coupled parameters");
    }
    if (p.n_visible() + 1 > kDefaultStateCap) throw SizeError("N+1 exceeds statevector cap");
    EnsembleSample out;
    StateVector visible = prepare_visible_product(p);
    out.s.reserve(p.n_hidden());
    for (std::size_t j = 0; j < p.n_hidden(); ++j) {
        const BlockResult block = apply_hidden_block(attach_ancilla(visible), p, j);
        HiddenOutcome o = sample_hidden_outcome(block.state, rng);
        out.s.push_back(o.s);
        out.branch_prob *= o.prob;
        visible = std::move(o.collapsed);
    }
    out.weight = branch_weight(p, out.s);
    out.visible_state = std::move(visible);
    if (shots > 0) out.z_shots = measure_visible(out.visible_state, shots, rng);
    return out;
}

struct Branch {
    std::vector<int> s;
    double branch_prob;
    double weight;
    // Product of non-unitary block gains along the branch; 1 for unitary couplings.
    double gain;
    StateVector visible_state;
};

struct BranchTable {
    std::vector<Branch> rows;

    /// sum_s prod_j R_{s_j} sqrt(N_s^2 * gain) |Psi^s>, normalized.
    StateVector recombine(const RbmParams& p) const {
        if (rows.empty()) throw ArgumentError("empty branch table");
        Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(rows.front().visible_state.amplitudes().size());
        for (const auto& b : rows) {
            if (b.branch_prob == 0.0) continue;
            double r = 1.0;
            for (std::size_t j = 0; j < b.s.size(); ++j) r *= r_factor(p.m()[static_cast<Eigen::Index>(j)].real(), b.s[j]);
            acc += r * std::sqrt(b.branch_prob * b.gain) * b.visible_state.amplitudes();
        }
        const double nrm = acc.norm();
        if (!(nrm > 0.0)) throw NumericalIntegrityError("branch recombination vanished");
        return StateVector(p.n_visible(), acc / nrm);
    }
};

/// Bit j of a branch index set means s_j = -1.
inline std::vector<int> branch_signs(std::size_t index, std::size_t m) {
    std::vector<int> s(m);
    for (std::size_t j = 0; j < m; ++j) s[j] = ((index >> j) & 1U) ? -1 : 1;
    return s;
}

/// All 2^M branches by replaying the protocol with forced hidden outcomes.
inline BranchTable enumerate_branches(const RbmParams& p, std::size_t cap = kBranchCap) {
    const std::size_t m = p.n_hidden();
    if (m > cap) throw SizeError("hidden count exceeds branch enumeration cap");
    if (p.n_visible() + 1 > kDefaultStateCap) throw SizeError("N+1 exceeds statevector cap");
    BranchTable table;
    table.rows.resize(std::size_t{1} << m);
    struct Frame {
        StateVector visible;
        double prob;
        double gain;
    };
    // Depth-first over the outcome tree so shared prefixes are simulated once.
    std::vector<int> s(m, 1);
    auto recurse = [&](auto&& self, std::size_t j, std::size_t index, const Frame& f) -> void {
        if (j == m) {
            table.rows[index] = Branch{s, f.prob, branch_weight(p, s), f.gain, f.visible};
            return;
        }
        if (f.prob == 0.0) {
            for (int sj : {1, -1}) {
                s[j] = sj;
                self(self, j + 1, index | (sj == -1 ? std::size_t{1} << j : 0), f);
            }
            s[j] = 1;
            return;
        }
        const BlockResult block = apply_hidden_block(attach_ancilla(f.visible), p, j);
        for (int sj : {1, -1}) {
            HiddenOutcome o = project_hidden_outcome(block.state, sj);
            s[j] = sj;
            const std::size_t next = index | (sj == -1 ? std::size_t{1} << j : 0);
            if (o.prob == 0.0) {
                self(self, j + 1, next, Frame{StateVector(p.n_visible()), 0.0, f.gain * block.gain});
            } else {
                self(self, j + 1, next, Frame{std::move(o.collapsed), f.prob * o.prob, f.gain * block.gain});
            }
        }
        s[j] = 1;
    };
    recurse(recurse, 0, 0, Frame{prepare_visible_product(p), 1.0, 1.0});
    double total = 0.0;
    for (const auto& b : table.rows) total += b.branch_prob;
    if (std::abs(total - 1.0) > 1e-10) throw NumericalIntegrityError("branch probabilities do not sum to 1");
    return table;
}

/// Un-normalized <z|~Psi^s> for every branch, scaled by the common factor
/// removed in prepare_visible_product (so ||row s||^2 = N_s^2 exactly up to
/// that shared constant, which is returned separately).
struct BranchAmplitudes {
    Eigen::MatrixXcd amps;  // rows: basis states, columns: branches
    double log_norm2_scale;
};

inline BranchAmplitudes branch_amplitudes(const RbmParams& p, const BranchTable& t) {
    const Eigen::Index dim = t.rows.front().visible_state.amplitudes().size();
    BranchAmplitudes out{Eigen::MatrixXcd(dim, static_cast<Eigen::Index>(t.rows.size())), visible_product_log_norm2(p)};
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
        const Branch& b = t.rows[k];
        out.amps.col(static_cast<Eigen::Index>(k)) = std::sqrt(b.branch_prob * b.gain) * b.visible_state.amplitudes();
    }
    return out;
}

/// Unnormalized joint state e^{H_RBM} |+>^{N+M} on N+M qubits (hidden qubits above the visible ones).
inline StateVector brute_force_joint_state(const RbmParams& p) {
    const std::size_t n = p.n_visible();
    const std::size_t m = p.n_hidden();
    if (n + m > kDefaultStateCap) throw SizeError("N+M exceeds statevector cap");
    const auto dim = StateVector::dimension_for(n + m);
    Eigen::VectorXcd amps(static_cast<Eigen::Index>(dim));
    const double pref = 1.0 / std::sqrt(static_cast<double>(dim));
    for (Basis x = 0; x < dim; ++x) {
        Complex e = 0.0;
        for (std::size_t i = 0; i < n; ++i) e += static_cast<double>(spin_of(x, i)) * p.b()[static_cast<Eigen::Index>(i)];
        for (std::size_t j = 0; j < m; ++j) {
            const double h = spin_of(x, n + j);
            const auto J = static_cast<Eigen::Index>(j);
            e += h * p.m()[J];
            for (std::size_t i = 0; i < n; ++i) e += h * static_cast<double>(spin_of(x, i)) * p.w()(static_cast<Eigen::Index>(i), J);
        }
        amps[static_cast<Eigen::Index>(x)] = pref * std::exp(e);
    }
    return StateVector(n + m, std::move(amps));
}

/// <+..+|_h applied to a joint state over N visible + M hidden qubits.
inline StateVector project_hidden_plus(const StateVector& joint, std::size_t n_visible) {
    const std::size_t m = joint.n_qubits() - n_visible;
    const auto dv = static_cast<Eigen::Index>(StateVector::dimension_for(n_visible));
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dv);
    const double pref = 1.0 / std::sqrt(static_cast<double>(std::size_t{1} << m));
    for (Eigen::Index x = 0; x < joint.amplitudes().size(); ++x) out[x % dv] += pref * joint.amplitudes()[x];
    return StateVector(n_visible, std::move(out));
}

struct EnsembleIdentityReport {
    double probability_sum_violation = 0.0;  // |sum_s N_s^2 - 1|
    double odd_cross_term_max = 0.0;         // max |2 Re conj(a_s') a_s| over odd-K pairs, relative
    double even_pair_max = 0.0;              // max |pair sum| over even-K pairs, relative
    double success_probability_violation = 0.0;  // relative |N_v^2 - sum_s N_s^2 prod R^2|
    double recombination_infidelity = 0.0;   // 1 - F(recombined, closed form)
    double success_probability = 0.0;        // N_v^2 from the joint state
    std::size_t n_odd_pairs = 0;
    std::size_t n_even_pairs = 0;

    double max_violation() const {
        return std::max({probability_sum_violation, odd_cross_term_max, even_pair_max,
                         success_probability_violation, recombination_infidelity});
    }
};

/// Checks the branch identities of the ensemble protocol against the
/// brute-force (N+M)-qubit construction.
inline EnsembleIdentityReport verify_ensemble_identities(const RbmParams& p) {
    const BranchTable table = enumerate_branches(p);
    EnsembleIdentityReport rep;
    double total = 0.0;
    for (const auto& b : table.rows) total += b.branch_prob;
    rep.probability_sum_violation = std::abs(total - 1.0);

    // Columns hold <z|~Psi^s> up to the common visible-product factor.
    const BranchAmplitudes ba = branch_amplitudes(p, table);
    const Eigen::MatrixXcd& a = ba.amps;
    const std::size_t nb = table.rows.size();
    const std::size_t m = p.n_hidden();
    double scale = 0.0;
    for (Eigen::Index z = 0; z < a.rows(); ++z) {
        for (Eigen::Index k = 0; k < a.cols(); ++k) scale = std::max(scale, std::norm(a(z, k)));
    }
    if (scale == 0.0) scale = 1.0;
    for (std::size_t s = 0; s < nb; ++s) {
        for (std::size_t sp = s + 1; sp < nb; ++sp) {
            const std::size_t diff = s ^ sp;
            const int k = std::popcount(diff);
            for (Eigen::Index z = 0; z < a.rows(); ++z) {
                const Complex x = std::conj(a(z, static_cast<Eigen::Index>(sp))) * a(z, static_cast<Eigen::Index>(s));
                if (k % 2 == 1) {
                    rep.odd_cross_term_max = std::max(rep.odd_cross_term_max, std::abs(2.0 * x.real()) / scale);
                } else {
                    // Flip one differing slot q in both indices.
                    for (std::size_t q = 0; q < m; ++q) {
                        if (!((diff >> q) & 1U)) continue;
                        const std::size_t t = s ^ (std::size_t{1} << q);
                        const std::size_t tp = sp ^ (std::size_t{1} << q);
                        const Complex y = std::conj(a(z, static_cast<Eigen::Index>(tp))) * a(z, static_cast<Eigen::Index>(t));
                        rep.even_pair_max = std::max(rep.even_pair_max, std::abs(x + y) / scale);
                    }
                }
            }
            if (k % 2 == 1) {
                ++rep.n_odd_pairs;
            } else {
                ++rep.n_even_pairs;
            }
        }
    }

    // N_v^2 = sum_s N_s^2 prod_j R^2_{s_j}, with N_s^2 including the visible-product norm.
    double rhs = 0.0;
    for (const auto& b : table.rows) rhs += b.branch_prob * b.gain * b.weight;
    rhs *= std::exp(ba.log_norm2_scale);
    const StateVector joint = brute_force_joint_state(p);
    const StateVector post = project_hidden_plus(joint, p.n_visible());
    rep.success_probability = post.norm() * post.norm();
    rep.success_probability_violation =
        std::abs(rep.success_probability - rhs) / std::max(1.0, std::abs(rep.success_probability));

    rep.recombination_infidelity = std::max(0.0, 1.0 - fidelity(table.recombine(p), exact_statevector(p)));
    return rep;
}

}  // namespace ucrbm
