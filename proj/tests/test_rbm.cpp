#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace ucrbm;
using ucrbm::oracle::brute_force_amplitudes;

namespace {

Eigen::VectorXcd normalized(const Eigen::VectorXcd& v) { return v / v.norm(); }

// Align a to b's global phase before comparing amplitudes.
Eigen::VectorXcd phase_aligned(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    const Complex ov = a.dot(b);
    return a * (ov / std::abs(ov));
}

}  // namespace

TEST(RbmParams, RejectsBadShapes) {
    EXPECT_THROW(RbmParams(Eigen::VectorXcd(0), Eigen::VectorXcd(0), Eigen::MatrixXcd(0, 0), true), ArgumentError);
    EXPECT_THROW(RbmParams(Eigen::VectorXcd::Zero(2), Eigen::VectorXcd::Zero(1), Eigen::MatrixXcd::Zero(1, 1), true),
                 ArgumentError);
    Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(2, 1);
    w(0, 0) = Complex(0.1, 0.0);
    EXPECT_THROW(RbmParams(Eigen::VectorXcd::Zero(2), Eigen::VectorXcd::Zero(1), w, true), ArgumentError);
    EXPECT_NO_THROW(RbmParams(Eigen::VectorXcd::Zero(2), Eigen::VectorXcd::Zero(1), w, false));
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(2);
    b[1] = std::nan("");
    EXPECT_THROW(RbmParams(b, Eigen::VectorXcd::Zero(1), Eigen::MatrixXcd::Zero(2, 1), true), ArgumentError);
}

TEST(RbmParams, UnitaryFlagSurvivesMutation) {
    const RbmParams p = random_init(3, 2, 0.4, 5, true);
    EXPECT_EQ(p.w().real().cwiseAbs().maxCoeff(), 0.0);
    const VariationalIndex vi(p);
    Eigen::VectorXd x = vi.flatten(p);
    x.setConstant(0.7);
    const RbmParams q = vi.unflatten(x);
    EXPECT_TRUE(q.unitary_coupled());
    EXPECT_EQ(q.w().real().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(p.with_w(Eigen::MatrixXcd::Constant(3, 2, 1.0)), ArgumentError);
}

TEST(VariationalIndex, LayoutAndRoundTrip) {
    const VariationalIndex u(3, 2, true);
    EXPECT_EQ(u.size(), 2u * 3 + 2u * 2 + 6);
    const VariationalIndex c(3, 2, false);
    EXPECT_EQ(c.size(), 2u * 3 + 2u * 2 + 12);
    EXPECT_EQ(c.slot(0).kind, VariationalIndex::Kind::bias_visible_real);
    EXPECT_EQ(c.slot(3).kind, VariationalIndex::Kind::bias_visible_imag);
    EXPECT_EQ(c.slot(6).kind, VariationalIndex::Kind::bias_hidden_real);
    EXPECT_EQ(c.slot(8).kind, VariationalIndex::Kind::bias_hidden_imag);
    // Column-major couplings: slot 10 + 4 is visible 1 of hidden 1.
    const auto s = c.slot(10 + 4);
    EXPECT_EQ(s.kind, VariationalIndex::Kind::coupling_imag);
    EXPECT_EQ(s.i, 1u);
    EXPECT_EQ(s.j, 1u);
    EXPECT_EQ(c.slot(16).kind, VariationalIndex::Kind::coupling_real);
    EXPECT_THROW(c.slot(c.size()), ArgumentError);

    for (std::size_t n = 1; n <= 4; ++n) {
        for (std::size_t m = 0; m <= 4; ++m) {
            for (bool unitary : {true, false}) {
                const RbmParams p = random_init(n, m, 0.8, 100 * n + m, unitary);
                const VariationalIndex vi(p);
                const Eigen::VectorXd x = vi.flatten(p);
                EXPECT_EQ(vi.flatten(vi.unflatten(x)), x);
                const RbmParams q = vi.unflatten(x);
                EXPECT_EQ(q.b(), p.b());
                EXPECT_EQ(q.m(), p.m());
                EXPECT_EQ(q.w(), p.w());
            }
        }
    }
}

TEST(RandomInit, ZeroStddevGivesZeros) {
    const RbmParams p = random_init(3, 2, 0.0, 0, true);
    EXPECT_EQ(p.b().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(p.m().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(p.w().cwiseAbs().maxCoeff(), 0.0);
}

TEST(RandomInit, VarianceMatchesStddevSquared) {
    double sum = 0.0, sum2 = 0.0;
    std::size_t count = 0;
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
        const RbmParams p = random_init(2, 2, 0.1, seed, true);
        const Eigen::VectorXd x = VariationalIndex(p).flatten(p);
        sum += x.sum();
        sum2 += x.squaredNorm();
        count += static_cast<std::size_t>(x.size());
    }
    const double mean = sum / double(count);
    const double var = sum2 / double(count) - mean * mean;
    // Sampling error of the variance estimate is about 0.01 * sqrt(2 / 16000).
    EXPECT_NEAR(var, 0.01, 5e-4);
    EXPECT_NEAR(mean, 0.0, 5e-3);
}

TEST(RandomInit, RealCouplingsPopulatedWhenUnconstrained) {
    std::size_t zeros = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        const RbmParams p = random_init(4, 4, 0.1, seed, false);
        zeros += static_cast<std::size_t>((p.w().real().array() == 0.0).count());
    }
    EXPECT_EQ(zeros, 0u);
}

TEST(RandomInit, DeterministicPerSeed) {
    const RbmParams a = random_init(3, 3, 0.3, 42, false);
    const RbmParams b = random_init(3, 3, 0.3, 42, false);
    const RbmParams c = random_init(3, 3, 0.3, 43, false);
    EXPECT_EQ(a.w(), b.w());
    EXPECT_NE(a.w(), c.w());
    EXPECT_THROW(random_init(0, 1, 0.1, 1, true), ArgumentError);
    EXPECT_THROW(random_init(2, 1, -0.1, 1, true), ArgumentError);
}

TEST(LogAmplitude, TrivialCases) {
    const RbmParams zero = RbmParams::zeros(3, 2, true);
    for (Basis z = 0; z < 8; ++z) EXPECT_EQ(log_amplitude(zero, z), Complex(0.0));

    Eigen::VectorXcd b(1);
    b[0] = Complex(0.3, 0.2);
    const RbmParams single(b, Eigen::VectorXcd(0), Eigen::MatrixXcd(1, 0), true);
    const Complex l = log_amplitude(single, SpinConfig({+1}));
    EXPECT_NEAR(l.real(), 0.3, 1e-15);
    EXPECT_NEAR(l.imag(), 0.2, 1e-15);
}

TEST(LogAmplitude, MatchesHiddenSum) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const RbmParams p = random_init(2, 1, 0.7, seed, false);
        const Eigen::VectorXcd brute = brute_force_amplitudes(p);
        for (Basis z = 0; z < 4; ++z) {
            const Complex expected = std::log(brute[z]) - std::log(2.0);
            const Complex got = log_amplitude(p, z);
            EXPECT_NEAR(got.real(), expected.real(), 1e-12);
            // The imaginary part is defined modulo 2 pi.
            const double d = std::remainder(got.imag() - expected.imag(), 2.0 * M_PI);
            EXPECT_NEAR(d, 0.0, 1e-12);
        }
    }
}

TEST(LogAmplitude, LargeArgumentsStayFinite) {
    Eigen::VectorXcd m(1);
    m[0] = Complex(800.0, 0.3);
    const RbmParams p(Eigen::VectorXcd::Zero(1), m, Eigen::MatrixXcd::Zero(1, 1), true);
    const Complex l = log_amplitude(p, Basis{0});
    EXPECT_TRUE(std::isfinite(l.real()));
    EXPECT_NEAR(l.real(), 800.0 - std::log(2.0), 1e-9);
    EXPECT_NEAR(log_cosh(Complex(-1000.0, 0.0)).real(), 1000.0 - std::log(2.0), 1e-9);
}

TEST(ExactStatevector, TrivialCases) {
    const StateVector u = exact_statevector(RbmParams::zeros(2, 1, true));
    for (Basis z = 0; z < 4; ++z) EXPECT_NEAR(std::abs(u[z] - Complex(0.5)), 0.0, 1e-15);

    Eigen::VectorXcd b(1);
    b[0] = 0.5 * std::log(3.0);
    const StateVector s = exact_statevector(RbmParams(b, Eigen::VectorXcd(0), Eigen::MatrixXcd(1, 0), true));
    // Amplitudes are (e^b, e^-b) = (sqrt3, 1/sqrt3), i.e. (3, 1)/sqrt10 once normalized.
    EXPECT_NEAR(s[0].real(), 3.0 / std::sqrt(10.0), 1e-15);
    EXPECT_NEAR(s[1].real(), 1.0 / std::sqrt(10.0), 1e-15);
    EXPECT_NEAR(s.norm(), 1.0, 1e-15);

    // (sqrt3, 1)/2 needs b = ln(3)/4.
    b[0] = 0.25 * std::log(3.0);
    const StateVector q = exact_statevector(RbmParams(b, Eigen::VectorXcd(0), Eigen::MatrixXcd(1, 0), true));
    EXPECT_NEAR(q[0].real(), std::sqrt(3.0) / 2.0, 1e-15);
    EXPECT_NEAR(q[1].real(), 0.5, 1e-15);
}

TEST(ExactStatevector, MatchesBruteForce) {
    for (std::size_t n = 1; n <= 3; ++n) {
        for (std::size_t m = 0; m <= 3; ++m) {
            for (std::uint64_t seed = 0; seed < 100; ++seed) {
                const RbmParams p = random_init(n, m, 0.6, 1000 * n + 10 * m + seed, seed % 2 == 0);
                const Eigen::VectorXcd ref = normalized(brute_force_amplitudes(p));
                const Eigen::VectorXcd got = phase_aligned(exact_statevector(p).amplitudes(), ref);
                ASSERT_LE((got - ref).cwiseAbs().maxCoeff(), 1e-12) << "n=" << n << " m=" << m << " seed=" << seed;
            }
        }
    }
}

TEST(ExactStatevector, RespectsCap) {
    EXPECT_THROW(exact_statevector(RbmParams::zeros(5, 1, true), 4), SizeError);
}

TEST(LogDerivatives, TrivialStructure) {
    const RbmParams zero = RbmParams::zeros(3, 2, true);
    const VariationalIndex vi(zero);
    for (Basis z = 0; z < 8; ++z) {
        const Eigen::VectorXcd o = log_derivatives(zero, z);
        for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(o[vi.b_real_offset() + i], Complex(spin_of(z, i)));
        for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(o[vi.m_real_offset() + j], Complex(0.0));
    }
    const RbmParams p = random_init(3, 2, 0.5, 9, false);
    for (Basis z = 0; z < 8; ++z) {
        const Eigen::VectorXcd o = log_derivatives(p, z);
        for (std::size_t i = 0; i < 3; ++i) {
            EXPECT_NEAR(std::abs(o[vi.b_imag_offset() + i] - Complex(0, 1) * o[vi.b_real_offset() + i]), 0.0, 1e-15);
        }
    }
}

TEST(LogDerivatives, MatchFiniteDifferences) {
    const double step = 1e-6;
    for (bool unitary : {true, false}) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const RbmParams p = random_init(2, 2, 0.5, seed + 77, unitary);
            const VariationalIndex vi(p);
            const Eigen::VectorXd x = vi.flatten(p);
            for (Basis z = 0; z < 4; ++z) {
                const Eigen::VectorXcd o = log_derivatives(p, z);
                ASSERT_EQ(static_cast<std::size_t>(o.size()), vi.size());
                for (std::size_t k = 0; k < vi.size(); ++k) {
                    Eigen::VectorXd xp = x, xm = x;
                    xp[k] += step;
                    xm[k] -= step;
                    const Complex fd = (log_amplitude(vi.unflatten(xp), z) - log_amplitude(vi.unflatten(xm), z)) /
                                       (2.0 * step);
                    EXPECT_LE(std::abs(fd - o[k]), 1e-6) << "slot " << k << " z " << z;
                }
            }
        }
    }
}

TEST(RFactor, MatrixElements) {
    EXPECT_EQ(r_factor(0.0, +1), 1.0);
    EXPECT_EQ(r_factor(0.0, -1), 0.0);
    EXPECT_NEAR(r_factor(std::log(2.0), +1), 1.25, 1e-15);
    EXPECT_NEAR(r_factor(std::log(2.0), -1), 0.75, 1e-15);
    EXPECT_NEAR(r_factor(-0.3, -1), -std::sinh(0.3), 1e-15);
    EXPECT_THROW(r_factor(0.1, 0), ArgumentError);

    // <+| exp(m Z) |s> evaluated as a 2x2 matrix element.
    for (double mr : {-0.7, 0.0, 0.4}) {
        for (int s : {+1, -1}) {
            const double plus[2] = {M_SQRT1_2, M_SQRT1_2};
            const double ket[2] = {M_SQRT1_2, s * M_SQRT1_2};
            const double elem = plus[0] * std::exp(mr) * ket[0] + plus[1] * std::exp(-mr) * ket[1];
            EXPECT_NEAR(r_factor(mr, s), elem, 1e-15);
        }
    }
}

TEST(SpinConfig, IndexConvention) {
    const SpinConfig z = SpinConfig::from_index(0b10, 3);
    EXPECT_EQ(z[0], 1);
    EXPECT_EQ(z[1], -1);
    EXPECT_EQ(z[2], 1);
    EXPECT_EQ(z.index(), 0b10u);
    EXPECT_EQ(SpinConfig::from_string(z.to_string()).index(), z.index());
}
