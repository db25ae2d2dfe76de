#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "ucrbm/errors.hpp"

namespace ucrbm {

using Complex = std::complex<double>;
using Basis = std::uint64_t;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr std::size_t kMaxQubits = 62;

// Basis convention shared by every module: bit q of a basis index is the
// state of qubit q, with |0> carrying Pauli-Z eigenvalue +1 and |1> carrying
// -1. Pauli words are written with qubit 0 as the leftmost character.

/// Visible-spin configuration, entries in {+1, -1}.
class SpinConfig {
   public:
    SpinConfig() = default;

    explicit SpinConfig(std::vector<int> z) : z_(std::move(z)) {
        for (int v : z_) {
            if (v != 1 && v != -1) throw ArgumentError("spin entries must be +1 or -1");
        }
    }

    static SpinConfig from_index(Basis index, std::size_t n) {
        std::vector<int> z(n);
        for (std::size_t q = 0; q < n; ++q) z[q] = ((index >> q) & 1U) ? -1 : 1;
        return SpinConfig(std::move(z));
    }

    /// Parses a string of '+' and '-' characters.
    static SpinConfig from_string(const std::string& s) {
        std::vector<int> z;
        z.reserve(s.size());
        for (char c : s) {
            if (c == '+') {
                z.push_back(1);
            } else if (c == '-') {
                z.push_back(-1);
            } else {
                throw ArgumentError("spin string must contain only '+' and '-'");
            }
        }
        return SpinConfig(std::move(z));
    }

    Basis index() const {
        Basis idx = 0;
        for (std::size_t q = 0; q < z_.size(); ++q) {
            if (z_[q] < 0) idx |= Basis{1} << q;
        }
        return idx;
    }

    std::string to_string() const {
        std::string s;
        s.reserve(z_.size());
        for (int v : z_) s.push_back(v > 0 ? '+' : '-');
        return s;
    }

    std::size_t size() const { return z_.size(); }
    int operator[](std::size_t i) const { return z_[i]; }
    const std::vector<int>& values() const { return z_; }

    friend bool operator==(const SpinConfig&, const SpinConfig&) = default;

   private:
    std::vector<int> z_;
};

/// Spin value (+1 / -1) of qubit q in basis state `index`.
inline int spin_of(Basis index, std::size_t q) { return ((index >> q) & 1U) ? -1 : 1; }

/// Dense amplitude vector over 2^n computational basis states.
class StateVector {
   public:
    StateVector() = default;

    explicit StateVector(std::size_t n_qubits)
        : n_qubits_(n_qubits), amps_(Eigen::VectorXcd::Zero(dimension_for(n_qubits))) {}

    StateVector(std::size_t n_qubits, Eigen::VectorXcd amplitudes)
        : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
        if (static_cast<std::size_t>(amps_.size()) != dimension_for(n_qubits)) {
            throw ArgumentError("amplitude vector length must be 2^n");
        }
        norm_ = amps_.norm();
    }

    static StateVector basis_state(std::size_t n_qubits, Basis index) {
        StateVector s(n_qubits);
        s.amps_[static_cast<Eigen::Index>(index)] = 1.0;
        s.norm_ = 1.0;
        return s;
    }

    /// |+>^{(x) n}
    static StateVector plus_state(std::size_t n_qubits) {
        const auto dim = dimension_for(n_qubits);
        Eigen::VectorXcd a = Eigen::VectorXcd::Constant(
            static_cast<Eigen::Index>(dim), 1.0 / std::sqrt(static_cast<double>(dim)));
        return StateVector(n_qubits, std::move(a));
    }

    std::size_t n_qubits() const { return n_qubits_; }
    std::size_t dimension() const { return static_cast<std::size_t>(amps_.size()); }
    double norm() const { return norm_; }
    const Eigen::VectorXcd& amplitudes() const { return amps_; }
    Complex operator[](Basis index) const { return amps_[static_cast<Eigen::Index>(index)]; }

    StateVector normalized() const {
        if (norm_ == 0.0) throw NumericalIntegrityError("cannot normalize a zero state");
        return StateVector(n_qubits_, amps_ / norm_);
    }

    /// <this|other>
    Complex inner(const StateVector& other) const {
        if (other.n_qubits_ != n_qubits_) throw ArgumentError("qubit count mismatch");
        return amps_.dot(other.amps_);
    }

    static std::size_t dimension_for(std::size_t n_qubits) {
        if (n_qubits > kMaxQubits) throw SizeError("too many qubits");
        return std::size_t{1} << n_qubits;
    }

   private:
    std::size_t n_qubits_ = 0;
    Eigen::VectorXcd amps_ = Eigen::VectorXcd::Ones(1);
    double norm_ = 1.0;
};

/// Squared overlap |<a|b>|^2 / (|a|^2 |b|^2); insensitive to global phase.
inline double fidelity(const StateVector& a, const StateVector& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::norm(a.inner(b)) / (na * na * nb * nb);
}

}  // namespace ucrbm
