#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "test_support.hpp"

using namespace ucrbm;

namespace {

RbmParams with_mr(const RbmParams& p, double scale, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    Eigen::VectorXcd m = p.m();
    for (auto& x : m) x = Complex(g(rng), x.imag());
    return p.with_m(m);
}

// Central finite-difference gradient of the dense energy over every real slot.
Eigen::VectorXd energy_gradient(const RbmParams& p, const PauliHamiltonian& h, double step) {
    const VariationalIndex vi(p);
    const Eigen::VectorXd x = vi.flatten(p);
    Eigen::VectorXd g(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        Eigen::VectorXd xp = x, xm = x;
        xp[k] += step;
        xm[k] -= step;
        g[k] = (oracle::energy_of(vi.unflatten(xp), h) - oracle::energy_of(vi.unflatten(xm), h)) / (2 * step);
    }
    return g;
}

double fraction_within(const Eigen::MatrixXd& got, const Eigen::MatrixXd& ref, const Eigen::MatrixXd& se, double k) {
    std::size_t ok = 0;
    for (Eigen::Index i = 0; i < got.size(); ++i) {
        ok += std::abs(got.data()[i] - ref.data()[i]) <= k * se.data()[i] + 1e-12;
    }
    return double(ok) / double(got.size());
}

}  // namespace

TEST(EstimatorMode, ParseAndPrint) {
    for (auto m : {EstimatorMode::exact, EstimatorMode::vmc, EstimatorMode::ensemble}) {
        EXPECT_EQ(parse_estimator_mode(to_string(m)), m);
    }
    EXPECT_THROW(parse_estimator_mode("metropolis"), ArgumentError);
}

TEST(LocalObservable, IdentityWord) {
    const PauliHamiltonian h(3, {{1.7, "III"}});
    const RbmParams p = random_init(3, 2, 0.5, 1, true);
    for (Basis z = 0; z < 8; ++z) EXPECT_NEAR(std::abs(local_observable(p, z, h) - Complex(1.7)), 0.0, 1e-15);
}

TEST(LocalObservable, UniformStateTransverseField) {
    const PauliHamiltonian h = build_tfi(4, 0.8).scaled(1.0);
    const PauliHamiltonian field(4, {{-0.8, "XIII"}, {-0.8, "IXII"}, {-0.8, "IIXI"}, {-0.8, "IIIX"}});
    const RbmParams zero = RbmParams::zeros(4, 3, true);
    for (Basis z = 0; z < 16; ++z) EXPECT_NEAR(std::abs(local_observable(zero, z, field) - Complex(-3.2)), 0.0, 1e-14);
    EXPECT_THROW(local_observable(zero, SpinConfig({1, 1}), field), ArgumentError);
}

TEST(LocalObservable, BornAverageIsDenseExpectation) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const RbmParams p = random_init(3, 3, 0.6, seed, seed % 2 == 0);
        const PauliHamiltonian h = build_tfi(3, 0.7);
        const StateVector psi = exact_statevector(p);
        Complex acc = 0.0;
        for (Basis z = 0; z < 8; ++z) acc += std::norm(psi[z]) * local_observable(p, z, h);
        EXPECT_NEAR(acc.real(), oracle::dense_energy(h, psi.amplitudes()), 1e-10);
        EXPECT_NEAR(acc.imag(), 0.0, 1e-10);
    }
}

TEST(ExpectationExact, Examples) {
    EXPECT_NEAR(expectation_exact(RbmParams::zeros(2, 2, true), build_tfi(2, 0.5)).value(), -1.0, 1e-14);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const RbmParams p = random_init(4, 3, 0.7, seed, false);
        const PauliHamiltonian h = oracle::random_hamiltonian(4, 12, seed + 9);
        EXPECT_NEAR(expectation_exact(p, h).value(), oracle::energy_of(p, h), 1e-10);
    }
    EXPECT_THROW(expectation_exact(RbmParams::zeros(3, 1, true), build_tfi(2, 1.0)), ArgumentError);
}

TEST(ExpectationVmc, ZeroParameters) {
    // On |++> the ZZ term contributes +-1 per sample, so only the mean is exact.
    const Estimate e = expectation_vmc(RbmParams::zeros(2, 2, true), build_tfi(2, 0.5), 10000, 3);
    EXPECT_NEAR(e.value(), -1.0, 4 * e.std_error);
    EXPECT_NEAR(e.std_error, 1.0 / std::sqrt(10000.0), 1e-3);
    EXPECT_EQ(e.n_samples, 10000u);
    EXPECT_EQ(e.mode, EstimatorMode::vmc);

    // With only X and I words the local energy is constant.
    const PauliHamiltonian field(2, {{-0.5, "XI"}, {-0.5, "IX"}, {0.25, "II"}});
    const Estimate c = expectation_vmc(RbmParams::zeros(2, 2, true), field, 1000, 3);
    EXPECT_NEAR(c.value(), -0.75, 1e-14);
    EXPECT_NEAR(c.std_error, 0.0, 1e-14);
}

TEST(ExpectationVmc, ConsistentWithExactOverRepeats) {
    const RbmParams p = random_init(4, 4, 0.4, 17, true);
    const PauliHamiltonian h = build_afh(4);
    const double exact = expectation_exact(p, h).value();
    std::size_t within = 0;
    const std::size_t repeats = 300;
    for (std::size_t r = 0; r < repeats; ++r) {
        const Estimate e = expectation_vmc(p, h, 2000, 1000 + r, 1);
        within += std::abs(e.value() - exact) <= 3 * e.std_error;
    }
    EXPECT_GE(double(within) / double(repeats), 0.99) << within;
}

TEST(ExpectationVmc, ErrorScalesAsInverseSqrtN) {
    const RbmParams p = random_init(3, 3, 0.5, 4, true);
    const PauliHamiltonian h = build_tfi(3, 1.0);
    std::vector<double> se;
    for (std::size_t n : {100u, 1000u, 10000u}) {
        double acc = 0.0;
        for (std::uint64_t s = 0; s < 20; ++s) acc += expectation_vmc(p, h, n, s, 1).std_error;
        se.push_back(acc / 20);
    }
    // Decade steps in n shrink the error by sqrt(10), within a factor 2.
    for (std::size_t k = 0; k + 1 < se.size(); ++k) {
        const double ratio = se[k] / se[k + 1];
        EXPECT_GT(ratio, std::sqrt(10.0) / 2);
        EXPECT_LT(ratio, std::sqrt(10.0) * 2);
    }
}

TEST(ExpectationEnsemble, ZeroParametersGiveExactPerSample) {
    // X and I words only: every basis state has the same local energy on |+++>.
    const PauliHamiltonian h(3, {{0.3, "XXI"}, {-0.7, "IIX"}, {1.1, "XXX"}, {0.2, "III"}});
    const RbmParams zero = RbmParams::zeros(3, 2, true);
    const double plus = oracle::dense_energy(h, StateVector::plus_state(3).amplitudes());
    SampleSource src(zero, EstimatorMode::ensemble, 4);
    for (const auto& s : src.draw(200)) {
        EXPECT_EQ(s.weight, 1.0);
        EXPECT_NEAR(local_observable(zero, s.z, h).real(), plus, 1e-12);
    }
    const Estimate e = expectation_ensemble(zero, h, 1000, 4);
    EXPECT_NEAR(e.value(), plus, 1e-12);
}

TEST(ExpectationEnsemble, ZeroRealHiddenBiasIsPostSelection) {
    const RbmParams p = random_init(3, 2, 0.6, 12, true).with_m(Eigen::VectorXcd::Constant(2, Complex(0.0, 0.3)));
    SampleSource src(p, EstimatorMode::ensemble, 8);
    for (const auto& s : src.draw(2000)) {
        const bool all_plus = std::all_of(s.s.begin(), s.s.end(), [](int v) { return v == 1; });
        EXPECT_EQ(s.weight, all_plus ? 1.0 : 0.0);
    }
    // Post-selected samples follow |Psi_v|^2, so the weighted mean matches vmc in distribution.
    const PauliHamiltonian h = build_tfi(3, 0.9);
    const double exact = expectation_exact(p, h).value();
    const Estimate e = expectation_ensemble(p, h, 20000, 9, 1);
    const Estimate v = expectation_vmc(p, h, 20000, 9, 1);
    EXPECT_LE(std::abs(e.value() - exact), 4 * e.std_error);
    EXPECT_LE(std::abs(e.value() - v.value()), 4 * std::hypot(e.std_error, v.std_error));
}

TEST(ExpectationEnsemble, ConsistentWithExactOverRepeats) {
    const RbmParams p = with_mr(random_init(2, 2, 0.7, 3, true), 0.6, 77);
    const PauliHamiltonian h = build_tfi(2, 0.6);
    const double exact = expectation_exact(p, h).value();
    std::size_t within = 0;
    const std::size_t repeats = 300;
    for (std::size_t r = 0; r < repeats; ++r) {
        const Estimate e = expectation_ensemble(p, h, 2000, 5000 + r, 1);
        within += std::abs(e.value() - exact) <= 3 * e.std_error;
    }
    EXPECT_GE(double(within) / double(repeats), 0.99) << within;
}

TEST(ExpectationEnsemble, WeightedRatioIsExactAtBranchLevel) {
    // E[sum w f] / E[sum w] from the branch table equals the closed-form energy.
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const std::size_t n = 1 + seed % 3;
        const std::size_t m = 1 + (seed / 3) % 3;
        const RbmParams p = with_mr(random_init(n, m, 0.7, seed, true), 0.7, seed + 50);
        const PauliHamiltonian h = n == 1 ? PauliHamiltonian(1, {{0.8, "X"}, {-0.3, "Z"}}) : build_tfi(n, 0.8);
        double num = 0.0, den = 0.0;
        for (const auto& b : enumerate_branches(p).rows) {
            for (Basis z = 0; z < (Basis{1} << n); ++z) {
                const double pz = b.branch_prob * std::norm(b.visible_state[z]);
                if (pz == 0.0) continue;
                num += pz * b.weight * local_observable(p, z, h).real();
                den += pz * b.weight;
            }
        }
        EXPECT_NEAR(num / den, expectation_exact(p, h).value(), 1e-10);
    }
}

TEST(SampleSource, ThreadCountDoesNotChangeSamples) {
    const RbmParams p = with_mr(random_init(3, 3, 0.5, 6, true), 0.4, 1);
    for (auto mode : {EstimatorMode::vmc, EstimatorMode::ensemble}) {
        SampleSource one(p, mode, 42, 1);
        SampleSource many(p, mode, 42, 4);
        EXPECT_EQ(one.draw(3000), many.draw(3000));
        EXPECT_EQ(one.draw(700), many.draw(700));
        EXPECT_EQ(one.preparations(), 3700u);
    }
    EXPECT_THROW(SampleSource(p, EstimatorMode::exact, 1), ArgumentError);
    EXPECT_THROW(SampleSource(random_init(2, 2, 0.3, 1, false), EstimatorMode::ensemble, 1), ArgumentError);
}

TEST(SampleLog, RoundTripAndErrors) {
    const RbmParams p = with_mr(random_init(3, 2, 0.5, 6, true), 0.4, 1);
    SampleSource ens(p, EstimatorMode::ensemble, 3);
    const std::vector<Sample> a = ens.draw(500);
    EXPECT_EQ(parse_sample_log(format_sample_log(a, 3)), a);
    SampleSource vmc(p, EstimatorMode::vmc, 3);
    const std::vector<Sample> b = vmc.draw(100);
    EXPECT_EQ(parse_sample_log(format_sample_log(b, 3)), b);

    const auto path = std::filesystem::temp_directory_path() / "ucrbm_sample_log_test.txt";
    write_sample_log(path.string(), a, 3);
    EXPECT_EQ(read_sample_log(path.string()), a);
    std::filesystem::remove(path);

    EXPECT_THROW(parse_sample_log("++ +-+\n"), ParseError);
    EXPECT_THROW(parse_sample_log("+x +-+ 1\n"), ParseError);
    EXPECT_THROW(parse_sample_log(". +0+ 1\n"), ParseError);
    try {
        parse_sample_log(". +++ 1\n. +++ one\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_THROW(read_sample_log("/nonexistent/dir/log.txt"), Error);
}

TEST(SampleEstimates, AllZeroWeightsAreReported) {
    const std::vector<Sample> dead{{{-1}, 0, 0.0}, {{-1}, 1, 0.0}};
    const RbmParams p = RbmParams::zeros(2, 1, true);
    EXPECT_THROW(estimate_from_samples(p, build_tfi(2, 1.0), dead, EstimatorMode::ensemble), DegenerateWeightError);
    EXPECT_THROW(compute_a_c_from_samples(p, build_tfi(2, 1.0), dead, EstimatorMode::ensemble),
                 DegenerateWeightError);
}

TEST(ComputeAcExact, ZeroParameterStructure) {
    const RbmParams zero = RbmParams::zeros(3, 2, true);
    const SrSystem sys = compute_a_c_exact(zero, build_tfi(3, 0.5));
    const Eigen::Index bias = 6;
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(sys.a.rows(), sys.a.cols());
    expected.topLeftCorner(bias, bias).setIdentity();
    EXPECT_LE((sys.a - expected).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(sys.n_preparations, 0u);
}

TEST(ComputeAcExact, SymmetricPositiveSemidefinite) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const RbmParams p = random_init(3, 3, 0.8, seed, seed % 3 == 0);
        const SrSystem sys = compute_a_c_exact(p, build_afh(3));
        EXPECT_EQ(sys.a, sys.a.transpose());
        EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sys.a).eigenvalues().minCoeff(), -1e-8);
    }
}

TEST(ComputeAcExact, ForceIsHalfNegativeGradient) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        for (bool unitary : {true, false}) {
            const RbmParams p = random_init(3, 2, 0.5, seed + 20, unitary);
            const PauliHamiltonian h = build_tfi(3, 0.7);
            const SrSystem sys = compute_a_c_exact(p, h);
            const Eigen::VectorXd g = energy_gradient(p, h, 1e-5);
            EXPECT_LE((sys.c + 0.5 * g).cwiseAbs().maxCoeff(), 1e-6);
            EXPECT_NEAR(sys.energy.value(), oracle::energy_of(p, h), 1e-12);
        }
    }
}

TEST(ComputeAcExact, StepAlongForceLowersEnergy) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const RbmParams p = random_init(3, 3, 0.6, seed + 300, true);
        const PauliHamiltonian h = build_tfi(3, 1.0);
        const SrSystem sys = compute_a_c_exact(p, h);
        if (sys.c.squaredNorm() < 1e-14) continue;
        const VariationalIndex vi(p);
        const RbmParams q = vi.unflatten(vi.flatten(p) + 1e-4 * sys.c);
        EXPECT_LT(oracle::energy_of(q, h), oracle::energy_of(p, h));
    }
}

TEST(ComputeAcSampled, ZeroParametersMatchExactStructure) {
    const RbmParams zero = RbmParams::zeros(3, 2, true);
    const PauliHamiltonian h = build_tfi(3, 0.5);
    const SrSystem ex = compute_a_c_exact(zero, h);
    for (auto mode : {EstimatorMode::vmc, EstimatorMode::ensemble}) {
        const SrSystem s = compute_a_c_sampled(zero, h, 20000, 5, mode, 2);
        EXPECT_GE(fraction_within(s.a, ex.a, s.a_std_error, 3.0), 0.95);
        EXPECT_EQ(s.n_preparations, 20000u);
    }
}

TEST(ComputeAcSampled, EntriesWithinThreeSigma) {
    // Pooled over instances: upper triangle of A plus every C entry.
    const PauliHamiltonian h = build_tfi(4, 0.8);
    for (auto mode : {EstimatorMode::vmc, EstimatorMode::ensemble}) {
        std::size_t ok = 0, total = 0;
        for (std::uint64_t seed = 0; seed < 6; ++seed) {
            const RbmParams p = with_mr(random_init(4, 4, 0.3, seed + 60, true), 0.3, seed);
            const SrSystem ex = compute_a_c_exact(p, h);
            const SrSystem s = compute_a_c_sampled(p, h, 20000, seed + 1, mode, 2);
            for (Eigen::Index r = 0; r < s.a.rows(); ++r) {
                for (Eigen::Index c = r; c < s.a.cols(); ++c) {
                    ok += std::abs(s.a(r, c) - ex.a(r, c)) <= 3 * s.a_std_error(r, c) + 1e-12;
                    ++total;
                }
                ok += std::abs(s.c[r] - ex.c[r]) <= 3 * s.c_std_error[r] + 1e-12;
                ++total;
            }
        }
        EXPECT_GE(double(ok) / double(total), 0.99) << to_string(mode) << " " << ok << "/" << total;
    }
}

TEST(ComputeAcSampled, ReplayFromLogIsBitwiseIdentical) {
    const RbmParams p = with_mr(random_init(3, 3, 0.4, 2, true), 0.3, 2);
    const PauliHamiltonian h = build_afh(3);
    std::vector<Sample> log;
    SampleSource src(p, EstimatorMode::ensemble, 12, 3);
    const SrSystem a = compute_a_c_sampled(src, h, 5000, &log);
    EXPECT_EQ(src.preparations(), 5000u);
    const SrSystem b = compute_a_c_from_samples(p, h, parse_sample_log(format_sample_log(log, 3)),
                                                EstimatorMode::ensemble, 4);
    EXPECT_EQ(a.a, b.a);
    EXPECT_EQ(a.c, b.c);
    EXPECT_EQ(a.a_std_error, b.a_std_error);
    EXPECT_EQ(a.energy.mean, b.energy.mean);
    EXPECT_EQ(a.energy.std_error, b.energy.std_error);
}

TEST(ComputeAc, DispatchesOnMode) {
    const RbmParams p = random_init(2, 2, 0.4, 2, true);
    const PauliHamiltonian h = build_afh(2);
    EXPECT_EQ(compute_a_c(p, h, EstimatorMode::exact, 0, 0).a, compute_a_c_exact(p, h).a);
    EXPECT_EQ(compute_a_c(p, h, EstimatorMode::vmc, 1000, 3, 1).c,
              compute_a_c_sampled(p, h, 1000, 3, EstimatorMode::vmc, 1).c);
    EXPECT_THROW(compute_a_c_sampled(p, h, 0, 3, EstimatorMode::vmc), ArgumentError);
}
