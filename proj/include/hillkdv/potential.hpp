#pragma once

// Zero-mean periodic potentials stored as finite Fourier tables w.r.t.
// e^{2 pi i k x} on [0,1], weighted sequence norms and the direct
// (quadrature) evaluation of the KdV Hamiltonian.

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hillkdv/errors.hpp"
#include "hillkdv/numeric.hpp"

namespace hillkdv {

/// Exponent pair (s, p) of the weighted space l^{s,p}.
struct SeqWeight {
    double s = 0.0;
    double p = 2.0;

    static SeqWeight make(double s, double p) {
        if (!(s >= -0.5 && s <= 0.0) || !(p >= 2.0 && std::isfinite(p))) {
            throw Error(ErrorKind::InvalidWeight,
                        "need -1/2 <= s <= 0 and 2 <= p < inf, got s=" + std::to_string(s) +
                            " p=" + std::to_string(p));
        }
        return {s, p};
    }
};

/// <n> = 1 + |n|
inline double bracket(double n) { return 1.0 + std::abs(n); }

/// (sum_n <n>^{ps} |z_n|^p)^{1/p} over any range of (index, value) pairs.
template <class Range>
double seq_norm(const Range& values, SeqWeight w) {
    double acc = 0.0;
    for (const auto& [n, z] : values) {
        const double mag = std::abs(z);
        if (mag == 0.0) continue;
        acc += std::pow(bracket(n), w.p * w.s) * std::pow(mag, w.p);
    }
    return std::pow(acc, 1.0 / w.p);
}

/// Same as above for a contiguous sequence whose first entry has index
/// `first_index`.
inline double seq_norm(std::span<const cd> values, int first_index, SeqWeight w) {
    std::vector<std::pair<int, cd>> indexed;
    indexed.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        indexed.emplace_back(first_index + static_cast<int>(i), values[i]);
    }
    return seq_norm(indexed, w);
}

class FourierPotential {
public:
    using Table = std::map<int, cd>;

    FourierPotential() = default;

    /// Validating constructor; zero entries are dropped.
    FourierPotential(const Table& coeffs, bool real_flag) : real_(real_flag) {
        for (const auto& [k, v] : coeffs) {
            if (k == 0) throw Error(ErrorKind::NonZeroMean, "coefficient table has an entry at index 0");
            if (v != cd(0.0, 0.0)) coeffs_.emplace(k, v);
        }
        if (real_) {
            for (const auto& [k, v] : coeffs_) {
                const cd partner = coeff(-k);
                const double scale = std::max(std::abs(v), std::abs(partner));
                if (std::abs(partner - std::conj(v)) > 1e-14 * scale) {
                    throw Error(ErrorKind::NotReal,
                                "q_{-k} != conj(q_k) at k=" + std::to_string(k));
                }
            }
            // store exact conjugates so downstream reality is bitwise
            for (auto& [k, v] : coeffs_) {
                if (k < 0) v = std::conj(coeffs_.at(-k));
            }
        }
    }

    const Table& coeffs() const { return coeffs_; }
    bool real() const { return real_; }
    bool zero() const { return coeffs_.empty(); }

    cd coeff(int k) const {
        const auto it = coeffs_.find(k);
        return it == coeffs_.end() ? cd(0.0, 0.0) : it->second;
    }

    /// Coefficient w.r.t. e^{i pi j x} of the same function viewed on [0,2].
    cd embedded(int j) const { return (j % 2 == 0) ? coeff(j / 2) : cd(0.0, 0.0); }

    int max_index() const {
        int K = 0;
        for (const auto& [k, v] : coeffs_) K = std::max(K, std::abs(k));
        return K;
    }

    cd operator()(double x) const {
        cd acc = 0.0;
        for (const auto& [k, v] : coeffs_) acc += v * std::exp(cd(0.0, 2.0 * pi * k * x));
        return acc;
    }

    cd derivative(double x) const {
        cd acc = 0.0;
        for (const auto& [k, v] : coeffs_) {
            acc += v * cd(0.0, 2.0 * pi * k) * std::exp(cd(0.0, 2.0 * pi * k * x));
        }
        return acc;
    }

    /// Coefficients with positive index, (k, q_k) for k >= 1.
    std::vector<std::pair<int, cd>> positive_modes() const {
        std::vector<std::pair<int, cd>> out;
        for (const auto& [k, v] : coeffs_)
            if (k > 0) out.emplace_back(k, v);
        return out;
    }

    /// ||q||_{s,p} in the [0,2] index convention, i.e. sum <2k>^{sp} |q_k|^p.
    double embedded_norm(SeqWeight w) const {
        std::vector<std::pair<int, cd>> idx;
        for (const auto& [k, v] : coeffs_) idx.emplace_back(2 * k, v);
        return seq_norm(idx, w);
    }

    FourierPotential scaled(double c) const {
        Table t;
        for (const auto& [k, v] : coeffs_) t[k] = v * c;
        return FourierPotential(t, real_);
    }

private:
    Table coeffs_;
    bool real_ = true;
};

inline FourierPotential make_potential(const FourierPotential::Table& coeffs, bool real_flag) {
    return FourierPotential(coeffs, real_flag);
}

/// q(x) = 2 a cos(2 pi n x) + 2 b cos(2 pi m x)
inline FourierPotential cosine_potential(double a, int n = 1, double b = 0.0, int m = 2) {
    FourierPotential::Table t;
    if (a != 0.0) t[n] = t[-n] = a;
    if (b != 0.0) {
        t[m] += b;
        t[-m] += b;
    }
    return FourierPotential(t, true);
}

inline cd evaluate(const FourierPotential& pot, double x) { return pot(x); }

struct DirectHamiltonian {
    cd H_kdv;
    cd H0;
};

/// H^kdv = int (q'^2/2 + q^3) and H0 = int q^2/2 by the uniform trapezoid
/// rule, exact for trigonometric polynomials once grid_size >= 3K+1.
inline DirectHamiltonian direct_hamiltonian(const FourierPotential& pot, int grid_size) {
    const int K = pot.max_index();
    if (grid_size < 3 * K + 1) {
        throw Error(ErrorKind::GridTooCoarse, "grid_size " + std::to_string(grid_size) +
                                                  " < 3*max_index+1 = " + std::to_string(3 * K + 1));
    }
    if (pot.zero()) return {0.0, 0.0};
    cd h = 0.0, h0 = 0.0;
    for (int j = 0; j < grid_size; ++j) {
        const double x = static_cast<double>(j) / grid_size;
        const cd q = pot(x);
        const cd dq = pot.derivative(x);
        h += 0.5 * dq * dq + q * q * q;
        h0 += 0.5 * q * q;
    }
    h /= double(grid_size);
    h0 /= double(grid_size);
    if (pot.real()) {
        h = h.real();
        h0 = h0.real();
    }
    return {h, h0};
}

/// Real potential with |q_k| = amplitude <k>^{-decay} u_k, u_k ~ U[1/2,1],
/// uniformly random phases, k = 1..mode_count.
inline FourierPotential random_potential(std::uint64_t seed, double decay, int mode_count,
                                         double amplitude) {
    if (mode_count < 1) throw Error(ErrorKind::InvalidConfig, "mode_count must be >= 1");
    std::mt19937_64 eng(seed);
    FourierPotential::Table t;
    for (int k = 1; k <= mode_count; ++k) {
        const double u = 0.5 + 0.5 * unit_from_bits(eng());
        const double phase = 2.0 * pi * unit_from_bits(eng());
        const double mag = amplitude * std::pow(bracket(k), -decay) * u;
        if (mag == 0.0) continue;
        const cd v = std::polar(mag, phase);
        t[k] = v;
        t[-k] = std::conj(v);
    }
    return FourierPotential(t, true);
}

} // namespace hillkdv
