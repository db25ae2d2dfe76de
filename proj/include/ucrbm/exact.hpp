#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "ucrbm/errors.hpp"
#include "ucrbm/pauli.hpp"
#include "ucrbm/state.hpp"

namespace ucrbm {

struct GroundState {
    double energy;
    StateVector state;
};

inline constexpr std::size_t kExactGroundCap = 14;
inline constexpr std::size_t kDenseDiagonalizationCap = 10;

namespace detail {

// The largest-magnitude amplitude is made real and positive.
inline Eigen::VectorXcd fix_phase(Eigen::VectorXcd v) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (std::abs(v[k]) > best * (1.0 + 1e-12)) {
            best = std::abs(v[k]);
            arg = k;
        }
    }
    if (best > 0.0) v *= std::conj(v[arg]) / std::abs(v[arg]);
    return v;
}

inline GroundState dense_ground(const PauliHamiltonian& h) {
    const Eigen::MatrixXcd mat = dense_matrix(h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(mat);
    if (es.info() != Eigen::Success) throw NumericalIntegrityError("dense eigensolver failed");
    const Eigen::VectorXd& evals = es.eigenvalues();
    const double e0 = evals[0];
    const double tol = 1e-10 * std::max(1.0, std::abs(e0));
    Eigen::Index degeneracy = 1;
    while (degeneracy < evals.size() && evals[degeneracy] - e0 <= tol) ++degeneracy;
    const Eigen::MatrixXcd basis = es.eigenvectors().leftCols(degeneracy);
    Eigen::VectorXcd v;
    if (degeneracy == 1) {
        v = basis.col(0);
    } else {
        // Tie-break inside a degenerate ground space: project the lowest-index
        // basis state with non-negligible weight.
        for (Eigen::Index k = 0; k < basis.rows(); ++k) {
            const Eigen::VectorXcd proj = basis * basis.row(k).adjoint();
            if (proj.norm() > 1e-6) {
                v = proj / proj.norm();
                break;
            }
        }
    }
    return {e0, StateVector(h.n_qubits(), fix_phase(std::move(v)))};
}

// Lanczos with full reorthogonalization for spaces too large to densify.
inline GroundState lanczos_ground(const PauliHamiltonian& h, std::size_t max_iter = 300) {
    const auto dim = static_cast<Eigen::Index>(StateVector::dimension_for(h.n_qubits()));
    const auto krylov = static_cast<Eigen::Index>(std::min<std::size_t>(max_iter, static_cast<std::size_t>(dim)));
    Eigen::MatrixXcd q(dim, krylov);
    std::vector<double> alpha, beta;
    Eigen::VectorXcd v(dim);
    for (Eigen::Index k = 0; k < dim; ++k) v[k] = Complex(1.0 + 0.37 * std::sin(1.3 * static_cast<double>(k)), 0.0);
    v.normalize();
    Eigen::Index used = 0;
    for (Eigen::Index it = 0; it < krylov; ++it) {
        q.col(it) = v;
        used = it + 1;
        Eigen::VectorXcd w = apply_h(h, StateVector(h.n_qubits(), v)).amplitudes();
        const double a = v.dot(w).real();
        alpha.push_back(a);
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index j = 0; j <= it; ++j) w -= q.col(j) * q.col(j).dot(w);
        }
        const double b = w.norm();
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(used, used);
        for (Eigen::Index j = 0; j < used; ++j) {
            t(j, j) = alpha[static_cast<std::size_t>(j)];
            if (j + 1 < used) t(j, j + 1) = t(j + 1, j) = beta[static_cast<std::size_t>(j)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        // Ritz residual ||H y - e y|| = b * |last component of the Ritz vector|.
        const double e = es.eigenvalues()[0];
        const double residual = b * std::abs(es.eigenvectors()(used - 1, 0));
        if (b < 1e-12 || residual < 1e-12 * std::max(1.0, std::abs(e))) break;
        beta.push_back(b);
        v = w / b;
    }
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(used, used);
    for (Eigen::Index j = 0; j < used; ++j) {
        t(j, j) = alpha[static_cast<std::size_t>(j)];
        if (j + 1 < used) t(j, j + 1) = t(j + 1, j) = beta[static_cast<std::size_t>(j)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    Eigen::VectorXcd ground = q.leftCols(used) * es.eigenvectors().col(0).cast<Complex>();
    ground.normalize();
    return {es.eigenvalues()[0], StateVector(h.n_qubits(), fix_phase(std::move(ground)))};
}

}  // namespace detail

/// Lowest eigenpair of H. Dense diagonalization up to 10 qubits, Lanczos above.
inline GroundState exact_ground(const PauliHamiltonian& h) {
    if (h.n_qubits() > kExactGroundCap) throw SizeError("exact diagonalization cap exceeded");
    if (h.n_qubits() <= kDenseDiagonalizationCap) return detail::dense_ground(h);
    return detail::lanczos_ground(h);
}

/// Full spectrum in ascending order (dense; small systems only).
inline Eigen::VectorXd spectrum(const PauliHamiltonian& h) {
    if (h.n_qubits() > kDenseDiagonalizationCap) throw SizeError("dense spectrum cap exceeded");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense_matrix(h), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

}  // namespace ucrbm
