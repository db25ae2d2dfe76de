#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ucrbm/errors.hpp"
#include "ucrbm/state.hpp"

namespace ucrbm {

/// Single Pauli word in bit-mask form.
///
/// Acting on a basis state: P|x> = i^{n_y} (-1)^{popcount(x & phase_mask)} |x ^ flip_mask>,
/// where flip_mask marks X/Y positions and phase_mask marks Z/Y positions.
struct PauliWord {
    Basis flip_mask = 0;
    Basis phase_mask = 0;
    int n_y = 0;

    static PauliWord parse(const std::string& word) {
        if (word.size() > kMaxQubits) throw SizeError("Pauli word too long");
        PauliWord p;
        for (std::size_t q = 0; q < word.size(); ++q) {
            const Basis bit = Basis{1} << q;
            switch (word[q]) {
                case 'I': break;
                case 'X': p.flip_mask |= bit; break;
                case 'Z': p.phase_mask |= bit; break;
                case 'Y':
                    p.flip_mask |= bit;
                    p.phase_mask |= bit;
                    ++p.n_y;
                    break;
                default: throw ArgumentError("Pauli word characters must be I, X, Y or Z");
            }
        }
        return p;
    }

    /// i^{n_y}
    Complex y_phase() const {
        static constexpr Complex table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        return table[n_y & 3];
    }

    /// Matrix element <x ^ flip_mask | P | x> without the i^{n_y} factor.
    double sign(Basis x) const { return (std::popcount(x & phase_mask) & 1) ? -1.0 : 1.0; }
};

struct PauliTerm {
    double coefficient;
    std::string word;
};

/// Real-weighted sum of Pauli words on n qubits. Immutable once built.
class PauliHamiltonian {
   public:
    struct Connection {
        Basis target;
        Complex element;
    };

    PauliHamiltonian() = default;

    PauliHamiltonian(std::size_t n_qubits, std::vector<PauliTerm> terms)
        : n_qubits_(n_qubits), terms_(std::move(terms)) {
        if (n_qubits_ < 1) throw ArgumentError("Hamiltonian needs at least one qubit");
        if (n_qubits_ > kMaxQubits) throw SizeError("too many qubits");
        std::map<std::string, std::size_t> seen;
        std::map<Basis, std::size_t> group_of;
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            const auto& term = terms_[t];
            if (term.word.size() != n_qubits_) throw ArgumentError("Pauli word length must equal qubit count");
            if (!std::isfinite(term.coefficient)) throw ArgumentError("Pauli coefficient must be finite");
            if (!seen.emplace(term.word, t).second) throw ArgumentError("duplicate Pauli word " + term.word);
            const PauliWord w = PauliWord::parse(term.word);
            words_.push_back(w);
            auto [it, inserted] = group_of.emplace(w.flip_mask, groups_.size());
            if (inserted) groups_.push_back(FlipGroup{w.flip_mask, {}});
            groups_[it->second].parts.push_back({term.coefficient * w.y_phase(), w.phase_mask});
        }
    }

    std::size_t n_qubits() const { return n_qubits_; }
    const std::vector<PauliTerm>& terms() const { return terms_; }
    std::size_t n_terms() const { return terms_.size(); }

    /// Number of distinct flip patterns; bounds the connected states of any basis state.
    std::size_t n_flip_patterns() const { return groups_.size(); }

    /// All z' with <z|H|z'> collected per distinct flip pattern.
    std::vector<Connection> connections(Basis z) const {
        std::vector<Connection> out;
        out.reserve(groups_.size());
        for (const auto& g : groups_) {
            const Basis zp = z ^ g.flip;
            Complex el = 0.0;
            // <z|P|z'> = i^{n_y} (-1)^{popcount(z' & phase)}
            for (const auto& part : g.parts) {
                el += (std::popcount(zp & part.phase_mask) & 1) ? -part.coefficient : part.coefficient;
            }
            out.push_back({zp, el});
        }
        return out;
    }

    PauliHamiltonian scaled(double factor) const {
        std::vector<PauliTerm> t = terms_;
        for (auto& term : t) term.coefficient *= factor;
        return PauliHamiltonian(n_qubits_, std::move(t));
    }

   private:
    struct Part {
        Complex coefficient;  // real coefficient times i^{n_y}
        Basis phase_mask;
    };
    struct FlipGroup {
        Basis flip;
        std::vector<Part> parts;
    };

    std::size_t n_qubits_ = 0;
    std::vector<PauliTerm> terms_;
    std::vector<PauliWord> words_;
    std::vector<FlipGroup> groups_;
};

/// Configurations connected to z by H with their summed matrix elements H(z, z').
inline std::vector<std::pair<SpinConfig, Complex>> connected_states(const PauliHamiltonian& h,
                                                                    const SpinConfig& z) {
    if (z.size() != h.n_qubits()) throw ArgumentError("spin configuration length mismatch");
    std::vector<std::pair<SpinConfig, Complex>> out;
    for (const auto& c : h.connections(z.index())) {
        out.emplace_back(SpinConfig::from_index(c.target, h.n_qubits()), c.element);
    }
    return out;
}

/// Matrix-free H|psi>.
inline StateVector apply_h(const PauliHamiltonian& h, const StateVector& state) {
    if (state.n_qubits() != h.n_qubits()) throw ArgumentError("qubit count mismatch");
    const auto dim = state.dimension();
    const Eigen::VectorXcd& in = state.amplitudes();
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(in.size());
    for (Basis z = 0; z < dim; ++z) {
        Complex acc = 0.0;
        for (const auto& c : h.connections(z)) acc += c.element * in[static_cast<Eigen::Index>(c.target)];
        out[static_cast<Eigen::Index>(z)] = acc;
    }
    return StateVector(state.n_qubits(), std::move(out));
}

/// <psi|H|psi> / <psi|psi>
inline Complex expectation(const PauliHamiltonian& h, const StateVector& state) {
    const StateVector hs = apply_h(h, state);
    const double n2 = state.norm() * state.norm();
    return state.inner(hs) / n2;
}

inline Eigen::MatrixXcd dense_matrix(const PauliHamiltonian& h) {
    const auto dim = StateVector::dimension_for(h.n_qubits());
    Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (Basis z = 0; z < dim; ++z) {
        for (const auto& c : h.connections(z)) {
            mat(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(c.target)) += c.element;
        }
    }
    return mat;
}

}  // namespace ucrbm
