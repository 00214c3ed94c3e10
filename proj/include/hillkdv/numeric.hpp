#pragma once

// Small numerical kernels shared by the spectral modules: accurate complex
// log1p/expm1, Gauss-Legendre rules, the lexicographic order on C and the
// zero-potential product tails.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

namespace hillkdv {

using cd = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cd I_unit{0.0, 1.0};

/// Tie band used by the lexicographic comparator and by the
/// collapsed-gap test.
inline double tie_band(double scale) { return 1e-9 * (1.0 + std::abs(scale)); }

/// First by real part, then by imaginary part; real parts within the tie
/// band compare equal.
inline bool lex_less(cd a, cd b) {
    const double band = tie_band(std::max(std::abs(a), std::abs(b)));
    if (std::abs(a.real() - b.real()) >= band) return a.real() < b.real();
    return a.imag() < b.imag();
}

inline cd log1p(cd z) {
    // Kahan's compensated form; exact at z == 0.
    const cd u = 1.0 + z;
    if (u == cd(1.0, 0.0)) return z;
    if (std::abs(z) > 0.5) return std::log(u);
    return std::log(u) * z / (u - 1.0);
}

inline cd expm1(cd z) {
    const double x = z.real(), y = z.imag();
    const double s = std::sin(0.5 * y);
    const double re = std::expm1(x) * std::cos(y) - 2.0 * s * s;
    const double im = std::exp(x) * std::sin(y);
    return {re, im};
}

/// Principal square root with cut on (-inf, 0].
inline cd sqrt_plus(cd z) { return std::sqrt(z); }

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
    std::vector<double> x;
    std::vector<double> w;

    explicit GaussLegendre(int n) : x(n), w(n) {
        for (int i = 0; i < n; ++i) {
            double z = std::cos(pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = z;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (z * p1 - p0) / (z * z - 1.0);
                const double dz = p1 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) break;
            }
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            x[i] = -z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
    }

    int size() const { return static_cast<int>(x.size()); }
};

/// sum_{m >= a} m^{-s} for integer a >= 1 and s > 1 (Euler-Maclaurin,
/// accurate once a is moderately large).
inline double hurwitz_tail(double s, double a) {
    return std::pow(a, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(a, -s) +
           s * std::pow(a, -s - 1.0) / 12.0 -
           s * (s + 1.0) * (s + 2.0) * std::pow(a, -s - 3.0) / 720.0;
}

/// prod_{m > M} (1 - lambda / (m^2 pi^2)): the part of the zero-potential
/// product sin(sqrt(lambda))/sqrt(lambda) beyond the cutoff M.
inline cd zero_potential_tail(cd lambda, int M) {
    const cd x = lambda / (pi * pi);
    const int L = std::max(M + 1, static_cast<int>(std::ceil(4.0 * std::sqrt(std::abs(x)))) + 16);
    cd log_sum = 0.0;
    cd prod = 1.0;
    for (int m = M + 1; m <= L; ++m) {
        prod *= 1.0 - x / (double(m) * m);
    }
    // sum_{m > L} log(1 - x/m^2) = -sum_j x^j/j * zeta(2j, L+1)
    cd xp = 1.0;
    for (int j = 1; j <= 20; ++j) {
        xp *= x;
        const cd term = xp / double(j) * hurwitz_tail(2.0 * j, L + 1.0);
        log_sum -= term;
        if (std::abs(term) < 1e-18 * (1.0 + std::abs(log_sum))) break;
    }
    return prod * std::exp(log_sum);
}

/// Deterministic uniform in [0,1) from a 64-bit engine word.
inline double unit_from_bits(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

} // namespace hillkdv
