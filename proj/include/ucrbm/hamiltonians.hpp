#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ucrbm/errors.hpp"
#include "ucrbm/pauli.hpp"
#include "ucrbm/state.hpp"

namespace ucrbm {

namespace detail {

inline std::string word_with(std::size_t n, std::initializer_list<std::pair<std::size_t, char>> ops) {
    std::string w(n, 'I');
    for (auto [q, c] : ops) w[q] = c;
    return w;
}

}  // namespace detail

/// -h sum_i X_i - sum_i Z_i Z_{i+1}, open chain.
inline PauliHamiltonian build_tfi(std::size_t n, double h) {
    if (n < 2) throw ArgumentError("TFI chain needs n >= 2");
    std::vector<PauliTerm> terms;
    for (std::size_t i = 0; i < n; ++i) terms.push_back({-h, detail::word_with(n, {{i, 'X'}})});
    for (std::size_t i = 0; i + 1 < n; ++i) {
        terms.push_back({-1.0, detail::word_with(n, {{i, 'Z'}, {i + 1, 'Z'}})});
    }
    return PauliHamiltonian(n, std::move(terms));
}

/// sum_i (X_i X_{i+1} + Y_i Y_{i+1} + Z_i Z_{i+1}), open chain.
inline PauliHamiltonian build_afh(std::size_t n) {
    if (n < 2) throw ArgumentError("AFH chain needs n >= 2");
    std::vector<PauliTerm> terms;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (char c : {'X', 'Y', 'Z'}) terms.push_back({1.0, detail::word_with(n, {{i, c}, {i + 1, c}})});
    }
    return PauliHamiltonian(n, std::move(terms));
}

/// Complex-weighted Pauli sum; intermediate representation for fermion mappings.
class PauliSum {
   public:
    // Key: (x mask, z mask) with X=(1,0), Z=(0,1), Y=(1,1).
    using Key = std::pair<Basis, Basis>;

    explicit PauliSum(std::size_t n_qubits) : n_(n_qubits) {}

    static PauliSum identity(std::size_t n_qubits, Complex c = 1.0) {
        PauliSum s(n_qubits);
        s.terms_[{0, 0}] = c;
        return s;
    }

    static PauliSum single(std::size_t n_qubits, Basis x, Basis z, Complex c) {
        PauliSum s(n_qubits);
        s.terms_[{x, z}] = c;
        return s;
    }

    std::size_t n_qubits() const { return n_; }
    const std::map<Key, Complex>& terms() const { return terms_; }

    PauliSum& operator+=(const PauliSum& o) {
        for (const auto& [k, c] : o.terms_) terms_[k] += c;
        return *this;
    }

    PauliSum& operator*=(Complex c) {
        for (auto& kv : terms_) kv.second *= c;
        return *this;
    }

    friend PauliSum operator*(const PauliSum& a, const PauliSum& b) {
        PauliSum out(a.n_);
        for (const auto& [ka, ca] : a.terms_) {
            for (const auto& [kb, cb] : b.terms_) {
                auto [key, phase] = multiply(ka, kb, a.n_);
                out.terms_[key] += phase * ca * cb;
            }
        }
        return out;
    }

    /// Drops terms whose magnitude is at most `tol`.
    void compress(double tol) {
        for (auto it = terms_.begin(); it != terms_.end();) {
            if (std::abs(it->second) <= tol) {
                it = terms_.erase(it);
            } else {
                ++it;
            }
        }
    }

    static std::string word_of(const Key& k, std::size_t n) {
        std::string w(n, 'I');
        for (std::size_t q = 0; q < n; ++q) {
            const bool x = (k.first >> q) & 1U;
            const bool z = (k.second >> q) & 1U;
            w[q] = x ? (z ? 'Y' : 'X') : (z ? 'Z' : 'I');
        }
        return w;
    }

    Eigen::MatrixXcd dense() const {
        const auto dim = static_cast<Eigen::Index>(StateVector::dimension_for(n_));
        Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(dim, dim);
        for (const auto& [k, c] : terms_) {
            const PauliWord w = PauliWord::parse(word_of(k, n_));
            for (Basis x = 0; x < static_cast<Basis>(dim); ++x) {
                mat(static_cast<Eigen::Index>(x ^ w.flip_mask), static_cast<Eigen::Index>(x)) +=
                    c * w.y_phase() * w.sign(x);
            }
        }
        return mat;
    }

   private:
    // Single-qubit product table: code 0=I,1=X,2=Y,3=Z.
    static std::pair<Key, Complex> multiply(const Key& a, const Key& b, std::size_t n) {
        static const int result[4][4] = {{0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};
        // Power of i picked up by sigma_a sigma_b.
        static const int ipow[4][4] = {{0, 0, 0, 0}, {0, 0, 1, 3}, {0, 3, 0, 1}, {0, 1, 3, 0}};
        auto code = [](const Key& k, std::size_t q) {
            const bool x = (k.first >> q) & 1U;
            const bool z = (k.second >> q) & 1U;
            return x ? (z ? 2 : 1) : (z ? 3 : 0);
        };
        Key out{0, 0};
        int power = 0;
        for (std::size_t q = 0; q < n; ++q) {
            const int ca = code(a, q);
            const int cb = code(b, q);
            const int r = result[ca][cb];
            power += ipow[ca][cb];
            const Basis bit = Basis{1} << q;
            if (r == 1 || r == 2) out.first |= bit;
            if (r == 2 || r == 3) out.second |= bit;
        }
        static constexpr Complex table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        return {out, table[power & 3]};
    }

    std::size_t n_;
    std::map<Key, Complex> terms_;
};

/// coefficient * product of ladder operators, applied right to left as written.
struct FermionTerm {
    struct Op {
        std::size_t mode;
        bool dagger;
    };
    Complex coefficient;
    std::vector<Op> ops;
};

/// Jordan-Wigner image of a single ladder operator on `n_modes` qubits.
inline PauliSum jordan_wigner_ladder(std::size_t mode, bool dagger, std::size_t n_modes) {
    if (mode >= n_modes) throw ArgumentError("fermion mode out of range");
    const Basis chain = (Basis{1} << mode) - 1;  // Z on every lower mode
    const Basis bit = Basis{1} << mode;
    // a = Z...(X + iY)/2,  a^dagger = Z...(X - iY)/2
    PauliSum s = PauliSum::single(n_modes, bit, chain, 0.5);
    s += PauliSum::single(n_modes, bit, chain | bit, dagger ? Complex(0, -0.5) : Complex(0, 0.5));
    return s;
}

/// Sum of fermion terms mapped to qubits, with complex coefficients kept.
inline PauliSum jordan_wigner_operator(const std::vector<FermionTerm>& terms, std::size_t n_modes) {
    PauliSum total(n_modes);
    for (const auto& t : terms) {
        PauliSum prod = PauliSum::identity(n_modes, t.coefficient);
        for (const auto& op : t.ops) prod = prod * jordan_wigner_ladder(op.mode, op.dagger, n_modes);
        total += prod;
    }
    return total;
}

/// Jordan-Wigner map of a Hermitian fermion operator to a real Pauli Hamiltonian.
inline PauliHamiltonian jordan_wigner(const std::vector<FermionTerm>& terms, std::size_t n_modes) {
    PauliSum sum = jordan_wigner_operator(terms, n_modes);
    double scale = 0.0;
    for (const auto& [k, c] : sum.terms()) scale = std::max(scale, std::abs(c));
    const double tol = 1e-12 * std::max(1.0, scale);
    sum.compress(tol);
    std::vector<PauliTerm> out;
    for (const auto& [k, c] : sum.terms()) {
        if (std::abs(c.imag()) > tol) {
            throw HermiticityError("fermion operator is not Hermitian: imaginary Pauli weight on " +
                                   PauliSum::word_of(k, n_modes));
        }
        out.push_back({c.real(), PauliSum::word_of(k, n_modes)});
    }
    if (out.empty()) out.push_back({0.0, std::string(n_modes, 'I')});
    return PauliHamiltonian(n_modes, std::move(out));
}

inline constexpr double kBohrMagnetonMeVPerTesla = 5.7883818060e-2;

/// Lateral triple quantum dot in a perpendicular field. Energies in meV, field in T.
struct TqdParams {
    double t = -0.23;
    double U = 50.0 * 0.23;
    double E = -0.23;
    double g_star = -0.44;
    double phi_per_B = 1.25;
    double B = 0.0;
    // Inter-dot Coulomb V sum_{i<j} rho_i rho_j; listed with the model parameters
    // but absent from the displayed Hamiltonian, so off unless requested.
    double V = 10.0 * 0.23;
    bool include_inter_dot_coulomb = false;
    // Flux (in flux quanta) carried by the directed bonds 0->1, 1->2, 2->0.
    // Defaults to the total flux phi_per_B * B split equally.
    std::optional<std::array<double, 3>> bond_flux;
};

/// Spin-orbital index: mode = 2 * site + spin, spin 0 is sigma = +1/2.
inline std::size_t tqd_mode(std::size_t site, std::size_t spin) { return 2 * site + spin; }

inline std::vector<FermionTerm> tqd_fermion_terms(const TqdParams& p) {
    if (!(p.U >= 0.0)) throw ArgumentError("TQD on-site repulsion must be >= 0");
    for (double v : {p.t, p.U, p.E, p.g_star, p.phi_per_B, p.B, p.V}) {
        if (!std::isfinite(v)) throw ArgumentError("TQD parameters must be finite");
    }
    std::array<double, 3> flux{};
    if (p.bond_flux) {
        flux = *p.bond_flux;
    } else {
        flux.fill(p.phi_per_B * p.B / 3.0);
    }
    std::vector<FermionTerm> terms;
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t spin = 0; spin < 2; ++spin) {
            const double sigma = spin == 0 ? 0.5 : -0.5;
            const double e = p.E + p.g_star * kBohrMagnetonMeVPerTesla * p.B * sigma;
            const std::size_t mode = tqd_mode(i, spin);
            terms.push_back({e, {{mode, true}, {mode, false}}});
        }
    }
    for (std::size_t bond = 0; bond < 3; ++bond) {
        const std::size_t i = bond;
        const std::size_t j = (bond + 1) % 3;
        const Complex tij = p.t * std::exp(Complex(0.0, two_pi * flux[bond]));
        for (std::size_t spin = 0; spin < 2; ++spin) {
            terms.push_back({tij, {{tqd_mode(i, spin), true}, {tqd_mode(j, spin), false}}});
            terms.push_back({std::conj(tij), {{tqd_mode(j, spin), true}, {tqd_mode(i, spin), false}}});
        }
    }
    for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t up = tqd_mode(i, 0);
        const std::size_t dn = tqd_mode(i, 1);
        terms.push_back({p.U, {{dn, true}, {dn, false}, {up, true}, {up, false}}});
    }
    if (p.include_inter_dot_coulomb) {
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = i + 1; j < 3; ++j) {
                for (std::size_t si = 0; si < 2; ++si) {
                    for (std::size_t sj = 0; sj < 2; ++sj) {
                        const std::size_t a = tqd_mode(i, si);
                        const std::size_t b = tqd_mode(j, sj);
                        terms.push_back({p.V, {{a, true}, {a, false}, {b, true}, {b, false}}});
                    }
                }
            }
        }
    }
    return terms;
}

/// Six-qubit TQD Hamiltonian via Jordan-Wigner.
inline PauliHamiltonian build_tqd(const TqdParams& p) { return jordan_wigner(tqd_fermion_terms(p), 6); }

}  // namespace ucrbm
