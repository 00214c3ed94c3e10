#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hillkdv/potential.hpp"
#include "oracle_values.hpp"

using namespace hillkdv;

TEST(MakePotential, EmptyTableIsZero) {
    const FourierPotential q = make_potential({}, true);
    EXPECT_TRUE(q.zero());
    EXPECT_EQ(q.max_index(), 0);
    EXPECT_EQ(q(0.37), cd(0.0));
}

TEST(MakePotential, TwoTermCosine) {
    const double a = 0.3;
    const FourierPotential q = make_potential({{1, a}, {-1, a}}, true);
    for (double x : {0.0, 0.1, 0.25, 0.7}) {
        EXPECT_NEAR(q(x).real(), 2 * a * std::cos(2 * pi * x), 1e-15);
        EXPECT_NEAR(q(x).imag(), 0.0, 1e-15);
    }
}

TEST(MakePotential, ConjugateSymmetryViolated) {
    try {
        make_potential({{1, cd(0, 1)}, {-1, cd(0, 1)}}, true);
        FAIL() << "expected NotReal";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotReal);
    }
}

TEST(MakePotential, NonZeroMeanRejected) {
    try {
        make_potential({{0, 1.0}}, false);
        FAIL() << "expected NonZeroMean";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonZeroMean);
    }
}

TEST(MakePotential, MissingPartnerIsNotReal) {
    EXPECT_THROW(make_potential({{2, 0.1}}, true), Error);
    EXPECT_NO_THROW(make_potential({{2, 0.1}}, false));
}

TEST(MakePotential, EmbeddingHasOnlyEvenIndices) {
    const FourierPotential q = cosine_potential(0.1, 1, 0.05, 3);
    EXPECT_EQ(q.embedded(2), cd(0.1));
    EXPECT_EQ(q.embedded(6), cd(0.05));
    EXPECT_EQ(q.embedded(1), cd(0.0));
    EXPECT_EQ(q.embedded(3), cd(0.0));
    EXPECT_EQ(q.embedded(-6), cd(0.05));
}

TEST(SeqNorm, AllZero) {
    std::vector<cd> z(5, 0.0);
    EXPECT_EQ(seq_norm(z, 1, SeqWeight::make(-0.25, 3)), 0.0);
}

TEST(SeqNorm, SingleUnitEntry) {
    std::vector<cd> z{1.0};
    EXPECT_DOUBLE_EQ(seq_norm(z, 1, SeqWeight::make(0.0, 2.0)), 1.0);
}

TEST(SeqNorm, HarmonicFourTerms) {
    std::vector<cd> z{1.0, 0.5, 1.0 / 3.0, 0.25};
    // (sum_{n=1}^4 (1+n)^{-2} n^{-4})^{1/4}
    EXPECT_NEAR(seq_norm(z, 1, SeqWeight::make(-0.5, 4.0)), oracle::seq_norm_harmonic, 1e-15);
}

TEST(SeqNorm, Homogeneous) {
    std::vector<cd> z{cd(0.3, -0.1), cd(-0.7, 0.2), cd(0.05, 0.4)};
    const SeqWeight w = SeqWeight::make(-0.3, 3.0);
    for (cd c : {cd(2.0, 0.0), cd(0.0, -0.5), cd(1.5, 2.5)}) {
        std::vector<cd> cz;
        for (cd v : z) cz.push_back(c * v);
        EXPECT_NEAR(seq_norm(cz, 1, w), std::abs(c) * seq_norm(z, 1, w), 1e-14);
    }
}

TEST(SeqNorm, MonotoneInModulus) {
    std::vector<cd> z{cd(0.3, -0.1), cd(-0.7, 0.2), cd(0.05, 0.4)};
    const SeqWeight w = SeqWeight::make(-0.5, 4.0);
    const double base = seq_norm(z, 1, w);
    for (std::size_t i = 0; i < z.size(); ++i) {
        std::vector<cd> bigger = z;
        bigger[i] *= 1.1;
        EXPECT_GT(seq_norm(bigger, 1, w), base);
    }
}

TEST(SeqWeight, RangeChecked) {
    EXPECT_THROW(SeqWeight::make(0.1, 2.0), Error);
    EXPECT_THROW(SeqWeight::make(-0.6, 2.0), Error);
    EXPECT_THROW(SeqWeight::make(0.0, 1.5), Error);
    EXPECT_THROW(SeqWeight::make(0.0, INFINITY), Error);
    try {
        SeqWeight::make(0.2, 2.0);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidWeight);
    }
}

TEST(Evaluate, ZeroPotential) { EXPECT_EQ(evaluate(make_potential({}, true), 0.42), cd(0.0)); }

TEST(Evaluate, CosineAtOrigin) { EXPECT_NEAR(evaluate(cosine_potential(0.15), 0.0).real(), 0.3, 1e-15); }

TEST(Evaluate, RandomMatchesTermByTermSum) {
    const FourierPotential q = random_potential(11, 1.0, 8, 0.2);
    const double x = 0.3;
    // summed from the highest mode down, pairing k with -k
    cd acc = 0.0;
    for (int k = 8; k >= 1; --k) {
        acc += q.coeff(k) * std::exp(cd(0.0, 2 * pi * k * x)) + q.coeff(-k) * std::exp(cd(0.0, -2 * pi * k * x));
    }
    EXPECT_NEAR(std::abs(evaluate(q, x) - acc), 0.0, 1e-15);
    EXPECT_NEAR(evaluate(q, x).imag(), 0.0, 1e-15);
}

TEST(DirectHamiltonian, ZeroPotential) {
    const DirectHamiltonian h = direct_hamiltonian(make_potential({}, true), 8);
    EXPECT_EQ(h.H_kdv, cd(0.0));
    EXPECT_EQ(h.H0, cd(0.0));
}

TEST(DirectHamiltonian, CosineFamily) {
    for (double a : {0.05, 0.1, 0.2, 1.0}) {
        const DirectHamiltonian h = direct_hamiltonian(cosine_potential(a), 16);
        EXPECT_NEAR(h.H_kdv.real(), 4 * pi * pi * a * a, 1e-13 * (1 + a * a));
        EXPECT_NEAR(h.H0.real(), a * a, 1e-15);
    }
}

TEST(DirectHamiltonian, TwoModeConvolutionOracle) {
    // 2(0.1) cos 2 pi x + 2(0.05) cos 4 pi x
    const DirectHamiltonian h = direct_hamiltonian(cosine_potential(0.1, 1, 0.05, 2), 32);
    EXPECT_NEAR(h.H_kdv.real(), oracle::two_mode_hkdv, 1e-14);
    EXPECT_NEAR(h.H0.real(), 0.0125, 1e-16);
}

TEST(DirectHamiltonian, ThreeModeComplexPhases) {
    const FourierPotential q = make_potential(
        {{1, cd(0.1, 0.03)}, {-1, cd(0.1, -0.03)}, {3, cd(-0.02, 0.05)}, {-3, cd(-0.02, -0.05)}}, true);
    const DirectHamiltonian h = direct_hamiltonian(q, 64);
    EXPECT_NEAR(h.H_kdv.real(), oracle::three_mode_hkdv, 1e-14);
    EXPECT_NEAR(h.H0.real(), oracle::three_mode_h0, 1e-16);
}

TEST(DirectHamiltonian, GridTooCoarse) {
    try {
        direct_hamiltonian(cosine_potential(0.1, 3), 9);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::GridTooCoarse);
    }
    EXPECT_NO_THROW(direct_hamiltonian(cosine_potential(0.1, 3), 10));
}

TEST(DirectHamiltonian, RealAndTranslationInvariant) {
    const FourierPotential q = random_potential(5, 1.0, 8, 0.3);
    const DirectHamiltonian h = direct_hamiltonian(q, 64);
    EXPECT_EQ(h.H_kdv.imag(), 0.0);
    for (int s = 1; s <= 8; ++s) {
        const double theta = 0.1234 * s;
        FourierPotential::Table t;
        for (const auto& [k, v] : q.coeffs()) t[k] = v * std::exp(cd(0.0, 2 * pi * k * theta));
        const DirectHamiltonian hs = direct_hamiltonian(make_potential(t, true), 64);
        EXPECT_NEAR(hs.H_kdv.real(), h.H_kdv.real(), 1e-10 * std::abs(h.H_kdv));
    }
}

TEST(DirectHamiltonian, ParsevalForH0) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const FourierPotential q = random_potential(seed, 0.75, 12, 0.4);
        const double h0 = direct_hamiltonian(q, 64).H0.real();
        // sum over positive k of |q_k|^2 equals (1/2) int q^2
        std::vector<std::pair<int, cd>> pos = q.positive_modes();
        const double n = seq_norm(pos, SeqWeight::make(0.0, 2.0));
        EXPECT_NEAR(h0, n * n, 1e-12 * h0);
    }
}

TEST(RandomPotential, Deterministic) {
    const FourierPotential a = random_potential(42, 1.0, 16, 0.1);
    const FourierPotential b = random_potential(42, 1.0, 16, 0.1);
    EXPECT_EQ(a.coeffs(), b.coeffs());
    const FourierPotential c = random_potential(43, 1.0, 16, 0.1);
    EXPECT_NE(a.coeffs(), c.coeffs());
}

TEST(RandomPotential, ZeroAmplitudeIsZero) { EXPECT_TRUE(random_potential(1, 0.0, 8, 0.0).zero()); }

TEST(RandomPotential, RealAndDecaying) {
    const FourierPotential q = random_potential(9, 1.0, 16, 0.1);
    EXPECT_TRUE(q.real());
    for (int k = 1; k <= 16; ++k) {
        EXPECT_EQ(q.coeff(-k), std::conj(q.coeff(k)));
        EXPECT_LE(std::abs(q.coeff(k)), 0.1 / (1 + k) + 1e-15);
        EXPECT_GE(std::abs(q.coeff(k)), 0.05 / (1 + k) - 1e-15);
    }
}

TEST(RandomPotential, WeightedNormFiniteAndReproducible) {
    const SeqWeight w = SeqWeight::make(-0.5, 4.0);
    const double n1 = seq_norm(random_potential(3, 1.0, 16, 0.1).positive_modes(), w);
    const double n2 = seq_norm(random_potential(3, 1.0, 16, 0.1).positive_modes(), w);
    EXPECT_TRUE(std::isfinite(n1));
    EXPECT_GT(n1, 0.0);
    EXPECT_EQ(n1, n2);
    // direct evaluation of the same sum
    double acc = 0.0;
    const FourierPotential q = random_potential(3, 1.0, 16, 0.1);
    for (int k = 1; k <= 16; ++k) acc += std::pow(1.0 + k, -2.0) * std::pow(std::abs(q.coeff(k)), 4);
    EXPECT_NEAR(n1, std::pow(acc, 0.25), 1e-15);
}

TEST(RandomPotential, InvalidCount) { EXPECT_THROW(random_potential(1, 1.0, 0, 0.1), Error); }
