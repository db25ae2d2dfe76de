#pragma once

#include <Eigen/Dense>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "ucrbm/errors.hpp"
#include "ucrbm/rbm.hpp"
#include "ucrbm/state.hpp"

namespace ucrbm {

/// Result of certifying lhs == scalar * rhs on a set of diagonal entries.
struct Proportionality {
    Complex scalar{0.0, 0.0};
    double violation = 0.0;  // ||lhs - scalar*rhs|| / ||lhs||
};

inline Proportionality certify_proportional(const Eigen::VectorXcd& lhs, const Eigen::VectorXcd& rhs) {
    const double rr = rhs.squaredNorm();
    Proportionality p;
    if (rr == 0.0) {
        p.violation = lhs.norm() == 0.0 ? 0.0 : 1.0;
        return p;
    }
    p.scalar = rhs.dot(lhs) / rr;
    const double ln = lhs.norm();
    p.violation = (lhs - p.scalar * rhs).norm() / (ln > 0.0 ? ln : 1.0);
    return p;
}

namespace detail {

inline std::string diagonal_text(const Eigen::VectorXcd& v) {
    std::string out = "[";
    char buf[64];
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%s(%.6g,%.6g)", k ? " " : "", v[k].real(), v[k].imag());
        out += buf;
    }
    return out + "]";
}

}  // namespace detail

// ---- e^{omega v_1 ... v_n} from two hidden spins with coupling i pi/4 ------

struct MonomialDecoupling {
    Complex omega;
    std::size_t n;
    Complex m_tilde;
    Complex c;          // certified scalar: e^{omega prod v} = c * cos^2(m_tilde + (pi/4) sum v)
    double violation;
    double offset;      // m_tilde = sign * arctan(e^{-omega}) - offset
    int sign;
};

/// Diagonal of e^{omega v_1...v_n} over the 2^n configurations.
inline Eigen::VectorXcd monomial_lhs(Complex omega, std::size_t n) {
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
    Eigen::VectorXcd d(dim);
    for (Eigen::Index x = 0; x < dim; ++x) {
        const double prod = (std::popcount(static_cast<unsigned long long>(x)) % 2) ? -1.0 : 1.0;
        d[x] = std::exp(omega * prod);
    }
    return d;
}

/// Diagonal of the two-hidden-spin contraction prod_{k=1,2} <+|e^{(i m + i pi/4 sum v) s_k}|+>.
inline Eigen::VectorXcd monomial_rhs(Complex m_tilde, std::size_t n) {
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
    Eigen::VectorXcd d(dim);
    for (Eigen::Index x = 0; x < dim; ++x) {
        const int sum = static_cast<int>(n) - 2 * std::popcount(static_cast<unsigned long long>(x));
        const Complex one = std::cos(m_tilde + std::numbers::pi / 4.0 * static_cast<double>(sum));
        d[x] = one * one;
    }
    return d;
}

namespace detail {

struct OffsetChoice {
    double offset;
    int sign;
};

inline std::map<std::size_t, OffsetChoice>& offset_cache() {
    static std::map<std::size_t, OffsetChoice> cache;
    return cache;
}

inline std::mutex& offset_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

/// Clears the per-degree offset cache (tests use this to re-run the search).
inline void reset_monomial_offset_cache() {
    std::lock_guard<std::mutex> lock(detail::offset_mutex());
    detail::offset_cache().clear();
}

/// Finds m_tilde among sign * arctan(e^{-omega}) - k pi/4 (k = 0..3) that makes
/// the contraction proportional to the monomial exponential. The choice that
/// works is cached per degree and reused.
inline MonomialDecoupling decouple_monomial(Complex omega, std::size_t n, double tol = 1e-8) {
    if (n < 1) throw ArgumentError("monomial degree must be >= 1");
    if (n > 20) throw SizeError("monomial degree too large for dense certification");
    if (!std::isfinite(omega.real()) || !std::isfinite(omega.imag())) throw ArgumentError("omega must be finite");
    const Eigen::VectorXcd lhs = monomial_lhs(omega, n);
    const Complex base = std::atan(std::exp(-omega));
    auto attempt = [&](double offset, int sign) {
        const Complex mt = static_cast<double>(sign) * base - offset;
        const Proportionality pr = certify_proportional(lhs, monomial_rhs(mt, n));
        return MonomialDecoupling{omega, n, mt, pr.scalar, pr.violation, offset, sign};
    };
    {
        std::lock_guard<std::mutex> lock(detail::offset_mutex());
        auto it = detail::offset_cache().find(n);
        if (it != detail::offset_cache().end()) {
            MonomialDecoupling d = attempt(it->second.offset, it->second.sign);
            if (d.violation <= tol) return d;
        }
    }
    MonomialDecoupling best{omega, n, 0.0, 0.0, 1e300, 0.0, 1};
    for (int k = 0; k < 4; ++k) {
        for (int sign : {1, -1}) {
            MonomialDecoupling d = attempt(k * std::numbers::pi / 4.0, sign);
            if (d.violation < best.violation) best = d;
            if (d.violation <= tol) {
                std::lock_guard<std::mutex> lock(detail::offset_mutex());
                detail::offset_cache()[n] = {d.offset, d.sign};
                return d;
            }
        }
    }
    throw IdentityError("monomial decoupling failed (violation " + std::to_string(best.violation) +
                        "); lhs " + detail::diagonal_text(lhs) + " rhs " +
                        detail::diagonal_text(monomial_rhs(best.m_tilde, n)));
}

// ---- real coupling removed with one extra hidden spin ---------------------

struct RealCouplingDecoupling {
    double w_real;
    double delta;    // certified scalar: e^{w v h} = delta * cos(omega_v v + omega_h h)
    double omega_v;
    double omega_h;
    double violation;
};

/// Diagonal over (v, h) with index bit 0 = v, bit 1 = h.
inline Eigen::VectorXcd real_coupling_lhs(double w) {
    Eigen::VectorXcd d(4);
    for (int x = 0; x < 4; ++x) d[x] = std::exp(w * spin_of(static_cast<Basis>(x), 0) * spin_of(static_cast<Basis>(x), 1));
    return d;
}

inline Eigen::VectorXcd real_coupling_rhs(double omega_v, double omega_h) {
    Eigen::VectorXcd d(4);
    for (int x = 0; x < 4; ++x) {
        d[x] = std::cos(omega_v * spin_of(static_cast<Basis>(x), 0) + omega_h * spin_of(static_cast<Basis>(x), 1));
    }
    return d;
}

inline RealCouplingDecoupling decouple_real_coupling(double w, double tol = 1e-10) {
    if (!std::isfinite(w)) throw ArgumentError("coupling must be finite");
    const double ov = 0.5 * std::acos(std::exp(-2.0 * std::abs(w)));
    // A negative coupling needs omega_h = +omega_v.
    const double oh = w >= 0.0 ? -ov : ov;
    const Proportionality pr = certify_proportional(real_coupling_lhs(w), real_coupling_rhs(ov, oh));
    if (pr.violation > tol) throw IdentityError("real-coupling decoupling failed");
    return {w, pr.scalar.real(), ov, oh, pr.violation};
}

// ---- hidden-hidden coupling through a deep layer --------------------------

struct HiddenPairDecoupling {
    Complex omega;
    Complex b;
    Complex c;  // certified scalar: e^{i omega h1 h2} = c * cos^2(b + (pi/4)(h1 + h2))
    double violation;
};

inline Eigen::VectorXcd hidden_pair_lhs(Complex omega) {
    Eigen::VectorXcd d(4);
    for (int x = 0; x < 4; ++x) {
        d[x] = std::exp(kI * omega * static_cast<double>(spin_of(static_cast<Basis>(x), 0) * spin_of(static_cast<Basis>(x), 1)));
    }
    return d;
}

inline Eigen::VectorXcd hidden_pair_rhs(Complex b) {
    Eigen::VectorXcd d(4);
    for (int x = 0; x < 4; ++x) {
        const double sum = spin_of(static_cast<Basis>(x), 0) + spin_of(static_cast<Basis>(x), 1);
        const Complex one = std::cos(b + std::numbers::pi / 4.0 * sum);
        d[x] = one * one;
    }
    return d;
}

inline HiddenPairDecoupling decouple_hidden_pair(Complex omega, double tol = 1e-8) {
    if (!std::isfinite(omega.real()) || !std::isfinite(omega.imag())) throw ArgumentError("omega must be finite");
    const Complex b = std::atan(std::exp(-kI * omega)) - std::numbers::pi / 2.0;
    const Proportionality pr = certify_proportional(hidden_pair_lhs(omega), hidden_pair_rhs(b));
    if (pr.violation > tol) throw IdentityError("hidden-pair decoupling failed");
    return {omega, b, pr.scalar, pr.violation};
}

// ---- polynomial form of the hidden-unit factor ---------------------------

struct PolynomialExpansion {
    std::size_t n;
    // coefficients[S] multiplies prod_{i in S} v_i; S is a bit mask over visible spins.
    Eigen::VectorXcd coefficients;
    double residual;
};

inline constexpr std::size_t kPolynomialCap = 4;

/// Character value prod_{i in S} v_i at configuration x.
inline double subset_character(std::size_t subset, Basis x) {
    return (std::popcount(static_cast<unsigned long long>(subset & x)) % 2) ? -1.0 : 1.0;
}

/// Expands sum_j log cosh(m_j + sum_i W_ij v_i) in the monomial basis. The
/// complex log is made continuous along a Gray-code walk of the configurations.
inline PolynomialExpansion rbm_polynomial_coefficients(const RbmParams& p) {
    const std::size_t n = p.n_visible();
    if (n > kPolynomialCap) throw SizeError("polynomial expansion limited to N <= 4");
    const std::size_t dim = std::size_t{1} << n;
    Eigen::VectorXcd f(static_cast<Eigen::Index>(dim));
    Complex prev = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        const Basis x = k ^ (k >> 1);
        const Eigen::VectorXcd theta = hidden_activations(p, x);
        Complex u = 0.0;
        for (Eigen::Index j = 0; j < theta.size(); ++j) {
            if (std::abs(std::cosh(theta[j])) <= 1e-14) {
                throw IdentityError("hidden factor vanishes at configuration " + SpinConfig::from_index(x, n).to_string());
            }
            u += log_cosh(theta[j]);
        }
        if (k > 0) {
            const double turns = std::round((u.imag() - prev.imag()) / (2.0 * std::numbers::pi));
            u -= Complex(0.0, 2.0 * std::numbers::pi * turns);
        }
        f[static_cast<Eigen::Index>(x)] = u;
        prev = u;
    }
    Eigen::MatrixXd chi(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t x = 0; x < dim; ++x) {
        for (std::size_t s = 0; s < dim; ++s) chi(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(s)) = subset_character(s, x);
    }
    const Eigen::MatrixXcd chic = chi.cast<Complex>();
    Eigen::VectorXcd coeff = chic.partialPivLu().solve(f);
    const double res = (chic * coeff - f).norm();
    if (res > 1e-10 * std::max(1.0, f.norm())) throw IdentityError("polynomial solve residual too large");
    return {n, std::move(coeff), res};
}

struct ConversionResult {
    RbmParams params;
    double fidelity;
    std::size_t n_monomials;
};

/// Exact rewrite of an arbitrary RBM as one with couplings fixed at i pi/4:
/// linear terms go into b, each higher monomial becomes two hidden spins.
inline ConversionResult rbm_to_unitary_coupled(const RbmParams& p, double coeff_tol = 1e-14) {
    const std::size_t n = p.n_visible();
    const PolynomialExpansion poly = rbm_polynomial_coefficients(p);
    Eigen::VectorXcd b = p.b();
    std::vector<std::pair<std::size_t, MonomialDecoupling>> monos;
    for (std::size_t s = 1; s < (std::size_t{1} << n); ++s) {
        const Complex c = poly.coefficients[static_cast<Eigen::Index>(s)];
        const int deg = std::popcount(static_cast<unsigned long long>(s));
        if (deg == 1) {
            b[std::countr_zero(static_cast<unsigned long long>(s))] += c;
        } else if (std::abs(c) > coeff_tol) {
            monos.emplace_back(s, decouple_monomial(c, static_cast<std::size_t>(deg)));
        }
    }
    const auto m_out = static_cast<Eigen::Index>(2 * monos.size());
    Eigen::VectorXcd m(m_out);
    Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), m_out);
    const Complex coupling(0.0, std::numbers::pi / 4.0);
    for (std::size_t k = 0; k < monos.size(); ++k) {
        const auto& [subset, d] = monos[k];
        for (Eigen::Index col : {static_cast<Eigen::Index>(2 * k), static_cast<Eigen::Index>(2 * k + 1)}) {
            m[col] = kI * d.m_tilde;
            for (std::size_t i = 0; i < n; ++i) {
                if ((subset >> i) & 1U) w(static_cast<Eigen::Index>(i), col) = coupling;
            }
        }
    }
    RbmParams out(std::move(b), std::move(m), std::move(w), true);
    const double f = fidelity(exact_statevector(p), exact_statevector(out));
    return {std::move(out), f, monos.size()};
}

}  // namespace ucrbm
