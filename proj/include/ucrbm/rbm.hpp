#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "ucrbm/errors.hpp"
#include "ucrbm/rng.hpp"
#include "ucrbm/state.hpp"

namespace ucrbm {

/// Complex RBM parameters theta = {b, m, W}.
///
/// `w` is n_visible x n_hidden. When `unitary_coupled` is set every coupling
/// is purely imaginary (real part exactly zero), which is what makes each
/// visible-hidden interaction a unitary ZZ phase gate.
class RbmParams {
   public:
    RbmParams(Eigen::VectorXcd b, Eigen::VectorXcd m, Eigen::MatrixXcd w, bool unitary_coupled)
        : b_(std::move(b)), m_(std::move(m)), w_(std::move(w)), unitary_(unitary_coupled) {
        if (b_.size() < 1) throw ArgumentError("RBM needs at least one visible spin");
        if (w_.rows() != b_.size() || w_.cols() != m_.size()) {
            throw ArgumentError("coupling matrix must be n_visible x n_hidden");
        }
        if (!b_.allFinite() || !m_.allFinite() || !w_.allFinite()) {
            throw ArgumentError("RBM parameters must be finite");
        }
        if (unitary_ && w_.size() > 0 && w_.real().cwiseAbs().maxCoeff() != 0.0) {
            throw ArgumentError("unitary-coupled RBM requires Re(W) == 0");
        }
    }

    static RbmParams zeros(std::size_t n, std::size_t m, bool unitary_coupled) {
        const auto N = static_cast<Eigen::Index>(n);
        const auto M = static_cast<Eigen::Index>(m);
        return RbmParams(Eigen::VectorXcd::Zero(N), Eigen::VectorXcd::Zero(M),
                         Eigen::MatrixXcd::Zero(N, M), unitary_coupled);
    }

    std::size_t n_visible() const { return static_cast<std::size_t>(b_.size()); }
    std::size_t n_hidden() const { return static_cast<std::size_t>(m_.size()); }
    const Eigen::VectorXcd& b() const { return b_; }
    const Eigen::VectorXcd& m() const { return m_; }
    const Eigen::MatrixXcd& w() const { return w_; }
    bool unitary_coupled() const { return unitary_; }

    RbmParams with_b(Eigen::VectorXcd b) const { return {std::move(b), m_, w_, unitary_}; }
    RbmParams with_m(Eigen::VectorXcd m) const { return {b_, std::move(m), w_, unitary_}; }
    RbmParams with_w(Eigen::MatrixXcd w) const { return {b_, m_, std::move(w), unitary_}; }

   private:
    Eigen::VectorXcd b_;
    Eigen::VectorXcd m_;
    Eigen::MatrixXcd w_;
    bool unitary_;
};

/// Fixed ordering of the real variational degrees of freedom:
/// b^R (N), b^I (N), m^R (M), m^I (M), W^I column-major (N*M) and, only for
/// unconstrained couplings, W^R column-major (N*M).
class VariationalIndex {
   public:
    enum class Kind { bias_visible_real, bias_visible_imag, bias_hidden_real, bias_hidden_imag,
                      coupling_imag, coupling_real };

    struct Slot {
        Kind kind;
        std::size_t i;  // visible index (or hidden index for hidden biases)
        std::size_t j;  // hidden index for couplings, otherwise 0
    };

    VariationalIndex(std::size_t n_visible, std::size_t n_hidden, bool unitary_coupled)
        : n_(n_visible), m_(n_hidden), unitary_(unitary_coupled) {}

    explicit VariationalIndex(const RbmParams& p)
        : VariationalIndex(p.n_visible(), p.n_hidden(), p.unitary_coupled()) {}

    std::size_t n_visible() const { return n_; }
    std::size_t n_hidden() const { return m_; }
    bool unitary_coupled() const { return unitary_; }

    std::size_t size() const { return 2 * n_ + 2 * m_ + (unitary_ ? 1 : 2) * n_ * m_; }

    // Offsets of each block.
    std::size_t b_real_offset() const { return 0; }
    std::size_t b_imag_offset() const { return n_; }
    std::size_t m_real_offset() const { return 2 * n_; }
    std::size_t m_imag_offset() const { return 2 * n_ + m_; }
    std::size_t w_imag_offset() const { return 2 * n_ + 2 * m_; }
    std::size_t w_real_offset() const { return 2 * n_ + 2 * m_ + n_ * m_; }

    Slot slot(std::size_t k) const {
        if (k >= size()) throw ArgumentError("variational slot out of range");
        if (k < n_) return {Kind::bias_visible_real, k, 0};
        k -= n_;
        if (k < n_) return {Kind::bias_visible_imag, k, 0};
        k -= n_;
        if (k < m_) return {Kind::bias_hidden_real, k, 0};
        k -= m_;
        if (k < m_) return {Kind::bias_hidden_imag, k, 0};
        k -= m_;
        if (k < n_ * m_) return {Kind::coupling_imag, k % n_, k / n_};
        k -= n_ * m_;
        return {Kind::coupling_real, k % n_, k / n_};
    }

    /// True for the slots that belong to the visible biases only.
    bool is_visible_bias(std::size_t k) const { return k < 2 * n_; }

    Eigen::VectorXd flatten(const RbmParams& p) const {
        check(p);
        Eigen::VectorXd x(static_cast<Eigen::Index>(size()));
        const auto N = static_cast<Eigen::Index>(n_);
        const auto M = static_cast<Eigen::Index>(m_);
        x.segment(0, N) = p.b().real();
        x.segment(N, N) = p.b().imag();
        x.segment(2 * N, M) = p.m().real();
        x.segment(2 * N + M, M) = p.m().imag();
        const Eigen::MatrixXd wi = p.w().imag();
        const Eigen::MatrixXd wr = p.w().real();
        x.segment(2 * N + 2 * M, N * M) = Eigen::Map<const Eigen::VectorXd>(wi.data(), N * M);
        if (!unitary_) {
            x.segment(2 * N + 2 * M + N * M, N * M) = Eigen::Map<const Eigen::VectorXd>(wr.data(), N * M);
        }
        return x;
    }

    RbmParams unflatten(const Eigen::VectorXd& x) const {
        if (static_cast<std::size_t>(x.size()) != size()) throw ArgumentError("flat vector has wrong length");
        const auto N = static_cast<Eigen::Index>(n_);
        const auto M = static_cast<Eigen::Index>(m_);
        Eigen::VectorXcd b(N), m(M);
        for (Eigen::Index i = 0; i < N; ++i) b[i] = Complex(x[i], x[N + i]);
        for (Eigen::Index j = 0; j < M; ++j) m[j] = Complex(x[2 * N + j], x[2 * N + M + j]);
        Eigen::MatrixXcd w(N, M);
        const Eigen::Index wi0 = 2 * N + 2 * M;
        const Eigen::Index wr0 = wi0 + N * M;
        for (Eigen::Index j = 0; j < M; ++j) {
            for (Eigen::Index i = 0; i < N; ++i) {
                const double re = unitary_ ? 0.0 : x[wr0 + j * N + i];
                w(i, j) = Complex(re, x[wi0 + j * N + i]);
            }
        }
        return RbmParams(std::move(b), std::move(m), std::move(w), unitary_);
    }

   private:
    void check(const RbmParams& p) const {
        if (p.n_visible() != n_ || p.n_hidden() != m_ || p.unitary_coupled() != unitary_) {
            throw ArgumentError("parameters do not match variational index");
        }
    }

    std::size_t n_;
    std::size_t m_;
    bool unitary_;
};

/// Draws every independent real degree of freedom i.i.d. from N(0, stddev^2).
/// Slots absent under the unitary-coupled flag stay exactly zero.
inline RbmParams random_init(std::size_t n, std::size_t m, double stddev, std::uint64_t seed,
                             bool unitary_coupled) {
    if (n < 1) throw ArgumentError("random_init needs n >= 1");
    if (!(stddev >= 0.0) || !std::isfinite(stddev)) throw ArgumentError("stddev must be finite and >= 0");
    VariationalIndex index(n, m, unitary_coupled);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(index.size()));
    if (stddev > 0.0) {
        Rng rng(seed);
        std::normal_distribution<double> gauss(0.0, stddev);
        for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = gauss(rng);
    }
    return index.unflatten(x);
}

/// log cosh(x), stable for |Re x| far beyond the double exponent range.
///
/// Equal to the principal log of cosh(x) up to an integer multiple of 2*pi*i;
/// callers only consume exponentials and differences of nearby values.
inline Complex log_cosh(Complex x) {
    static const double log2 = std::log(2.0);
    if (x.real() < 0.0) x = -x;
    return x + std::log(1.0 + std::exp(-2.0 * x)) - log2;
}

/// Hidden pre-activations m_j + sum_i W_ij z_i for basis state `index`.
inline Eigen::VectorXcd hidden_activations(const RbmParams& p, Basis index) {
    Eigen::VectorXcd theta = p.m();
    for (std::size_t i = 0; i < p.n_visible(); ++i) {
        const double zi = spin_of(index, i);
        theta += zi * p.w().row(static_cast<Eigen::Index>(i)).transpose();
    }
    return theta;
}

/// Unnormalized log amplitude sum_i b_i z_i + sum_j log cosh(theta_j).
inline Complex log_amplitude(const RbmParams& p, Basis index) {
    Complex acc = 0.0;
    for (std::size_t i = 0; i < p.n_visible(); ++i) {
        acc += static_cast<double>(spin_of(index, i)) * p.b()[static_cast<Eigen::Index>(i)];
    }
    const Eigen::VectorXcd theta = hidden_activations(p, index);
    for (Eigen::Index j = 0; j < theta.size(); ++j) acc += log_cosh(theta[j]);
    return acc;
}

inline Complex log_amplitude(const RbmParams& p, const SpinConfig& z) {
    if (z.size() != p.n_visible()) throw ArgumentError("spin configuration length mismatch");
    return log_amplitude(p, z.index());
}

inline constexpr std::size_t kDefaultStateCap = 14;

/// Log amplitudes for all 2^N basis states.
inline Eigen::VectorXcd log_amplitude_table(const RbmParams& p, std::size_t cap = kDefaultStateCap) {
    if (p.n_visible() > cap) throw SizeError("visible count exceeds statevector cap");
    const auto dim = static_cast<Eigen::Index>(StateVector::dimension_for(p.n_visible()));
    Eigen::VectorXcd table(dim);
    for (Eigen::Index k = 0; k < dim; ++k) table[k] = log_amplitude(p, static_cast<Basis>(k));
    return table;
}

/// Normalized |Psi_v(theta)> built from the closed-form amplitudes.
inline StateVector exact_statevector(const RbmParams& p, std::size_t cap = kDefaultStateCap) {
    const Eigen::VectorXcd logs = log_amplitude_table(p, cap);
    const double shift = logs.real().maxCoeff();
    Eigen::VectorXcd amps(logs.size());
    for (Eigen::Index k = 0; k < logs.size(); ++k) amps[k] = std::exp(logs[k] - shift);
    amps /= amps.norm();
    return StateVector(p.n_visible(), std::move(amps));
}

/// O_n(z): derivative of the log amplitude with respect to each real slot.
inline Eigen::VectorXcd log_derivatives(const RbmParams& p, Basis index) {
    const VariationalIndex vi(p);
    const std::size_t n = p.n_visible();
    const std::size_t m = p.n_hidden();
    Eigen::VectorXcd o(static_cast<Eigen::Index>(vi.size()));
    const Eigen::VectorXcd theta = hidden_activations(p, index);
    Eigen::VectorXcd t(theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j) t[j] = std::tanh(theta[j]);

    for (std::size_t i = 0; i < n; ++i) {
        const double zi = spin_of(index, i);
        o[static_cast<Eigen::Index>(vi.b_real_offset() + i)] = zi;
        o[static_cast<Eigen::Index>(vi.b_imag_offset() + i)] = kI * zi;
    }
    for (std::size_t j = 0; j < m; ++j) {
        const Complex tj = t[static_cast<Eigen::Index>(j)];
        o[static_cast<Eigen::Index>(vi.m_real_offset() + j)] = tj;
        o[static_cast<Eigen::Index>(vi.m_imag_offset() + j)] = kI * tj;
        for (std::size_t i = 0; i < n; ++i) {
            const double zi = spin_of(index, i);
            o[static_cast<Eigen::Index>(vi.w_imag_offset() + j * n + i)] = kI * zi * tj;
            if (!p.unitary_coupled()) {
                o[static_cast<Eigen::Index>(vi.w_real_offset() + j * n + i)] = zi * tj;
            }
        }
    }
    return o;
}

inline Eigen::VectorXcd log_derivatives(const RbmParams& p, const SpinConfig& z) {
    if (z.size() != p.n_visible()) throw ArgumentError("spin configuration length mismatch");
    return log_derivatives(p, z.index());
}

/// <+| exp(m_real Z) |s>: cosh for s = +1, sinh for s = -1.
inline double r_factor(double m_real, int s) {
    if (s == 1) return std::cosh(m_real);
    if (s == -1) return std::sinh(m_real);
    throw ArgumentError("hidden outcome must be +1 or -1");
}

}  // namespace ucrbm
