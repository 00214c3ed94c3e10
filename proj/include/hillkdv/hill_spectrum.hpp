#pragma once

// Periodic/antiperiodic and Dirichlet spectra of -d^2/dx^2 + q by
// Fourier-Galerkin truncation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hillkdv/errors.hpp"
#include "hillkdv/numeric.hpp"
#include "hillkdv/potential.hpp"

namespace hillkdv {

struct GalerkinConfig {
    int N = 64;
    double residual_tol = 1e-6;

    void validate() const {
        if (N < 8) throw Error(ErrorKind::InvalidConfig, "Galerkin N must be >= 8");
        if (!(residual_tol > 0.0)) throw Error(ErrorKind::InvalidConfig, "residual_tol must be > 0");
    }
};

struct HillSpectra {
    cd lambda0_plus{0.0, 0.0};
    std::vector<std::pair<cd, cd>> pairs; // pairs[n-1] = (lambda_n^-, lambda_n^+)
    std::vector<cd> mu;                    // mu[n-1]
    std::vector<cd> gamma;
    std::vector<cd> tau;
    std::vector<cd> crit;                  // empty until critical points are located
    std::vector<double> residual;          // truncation residual per n
    int n_max = 0;
    int threshold = 1;                     // strip condition holds for threshold <= n <= n_max
    bool real = true;

    cd minus(int n) const { return pairs.at(n - 1).first; }
    cd plus(int n) const { return pairs.at(n - 1).second; }
    cd gap(int n) const { return gamma.at(n - 1); }
    cd mid(int n) const { return tau.at(n - 1); }

    /// Gap below the tie band; treated as a double eigenvalue downstream.
    bool collapsed(int n) const {
        return std::abs(gamma.at(n - 1)) < tie_band(std::abs(tau.at(n - 1)));
    }

    void fill_derived() {
        gamma.clear();
        tau.clear();
        for (const auto& [lm, lp] : pairs) {
            gamma.push_back(lp - lm);
            tau.push_back(0.5 * (lp + lm));
        }
    }
};

namespace detail {

inline bool lex_equal(cd a, cd b) {
    const double band = tie_band(std::max(std::abs(a), std::abs(b)));
    return std::abs(a.real() - b.real()) < band && std::abs(a.imag() - b.imag()) < band;
}

struct BlockResult {
    std::vector<cd> values;       // lexicographically sorted
    std::vector<double> residual; // matching truncation residuals
};

// Block of the [0,2] exponential basis with indices of parity `par`.
inline BlockResult solve_block(const FourierPotential& pot, int N, int par) {
    std::vector<int> idx;
    for (int m = -N; m <= N; ++m)
        if (((m % 2) + 2) % 2 == par) idx.push_back(m);
    const int n = static_cast<int>(idx.size());
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) A(i, j) = pot.embedded(idx[i] - idx[j]);
        A(i, i) += (pi * idx[i]) * (pi * idx[i]);
    }

    Eigen::VectorXcd vals;
    Eigen::MatrixXcd vecs;
    if (pot.real()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A);
        if (es.info() != Eigen::Success) throw Error(ErrorKind::ConvergenceFailure, "Hermitian eigen-solver failed");
        vals = es.eigenvalues().cast<cd>();
        vecs = es.eigenvectors();
    } else {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A);
        if (es.info() != Eigen::Success) throw Error(ErrorKind::ConvergenceFailure, "complex eigen-solver failed");
        vals = es.eigenvalues();
        vecs = es.eigenvectors();
    }

    const int K2 = 2 * pot.max_index();
    std::vector<double> res(n, 0.0);
    for (int c = 0; c < n; ++c) {
        const Eigen::VectorXcd v = vecs.col(c) / vecs.col(c).norm();
        double acc = 0.0;
        for (int l = N + 1; l <= N + K2; ++l) {
            if (((l % 2) + 2) % 2 != par) continue;
            for (int sgn : {1, -1}) {
                cd s = 0.0;
                for (int j = 0; j < n; ++j) s += pot.embedded(sgn * l - idx[j]) * v(j);
                acc += std::norm(s);
            }
        }
        res[c] = std::sqrt(acc);
    }

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lex_less(vals(a), vals(b)); });
    BlockResult out;
    for (int i : order) {
        out.values.push_back(pot.real() ? cd(vals(i).real(), 0.0) : vals(i));
        out.residual.push_back(res[i]);
    }
    return out;
}

} // namespace detail

/// Periodic (n even) and antiperiodic (n odd) eigenvalues on [0,1], labelled
/// lambda_0^+ and (lambda_n^-, lambda_n^+) up to the reliable index n_max.
inline HillSpectra periodic_spectrum(const FourierPotential& pot, const GalerkinConfig& cfg) {
    cfg.validate();
    const int N = cfg.N;
    const detail::BlockResult even = detail::solve_block(pot, N, 0);
    const detail::BlockResult odd = detail::solve_block(pot, N, 1);

    HillSpectra sp;
    sp.real = pot.real();
    sp.lambda0_plus = even.values.at(0);
    const int cap = N / 2;
    for (int n = 1; n <= cap; ++n) {
        const auto& blk = (n % 2 == 0) ? even : odd;
        const int i = n - 1;
        sp.pairs.emplace_back(blk.values.at(i), blk.values.at(i + 1));
        sp.residual.push_back(std::max(blk.residual.at(i), blk.residual.at(i + 1)));
    }

    int consistent = cap;
    if (!pot.real()) {
        // block labelling must agree with the global lexicographic order
        std::vector<cd> all = even.values;
        all.insert(all.end(), odd.values.begin(), odd.values.end());
        std::stable_sort(all.begin(), all.end(), lex_less);
        for (int n = 1; n <= cap; ++n) {
            const cd gm = all.at(2 * n - 1), gp = all.at(2 * n);
            const auto& [bm, bp] = sp.pairs[n - 1];
            if (gm == bm && gp == bp) continue;
            for (int j = std::max(0, 2 * n - 2); j <= 2 * n; ++j) {
                if (detail::lex_equal(all.at(j), all.at(j + 1))) {
                    throw Error(ErrorKind::OrderingAmbiguity,
                                "tied eigenvalues near n=" + std::to_string(n) + " violate the parity rule");
                }
            }
            consistent = n - 1;
            break;
        }
    }

    auto strip_ok = [&](int n) {
        const double c = n * n * pi * pi;
        return std::abs(sp.pairs[n - 1].first - c) <= 0.5 * n && std::abs(sp.pairs[n - 1].second - c) <= 0.5 * n;
    };
    int res_ok = 0;
    while (res_ok < consistent && sp.residual[res_ok] <= cfg.residual_tol) ++res_ok;
    int n_max = 0;
    for (int n = res_ok; n >= 1; --n) {
        if (strip_ok(n)) {
            n_max = n;
            break;
        }
    }
    sp.n_max = n_max;
    sp.pairs.resize(n_max);
    sp.residual.resize(n_max);
    sp.fill_derived();
    int thr = n_max + 1;
    while (thr > 1 && strip_ok(thr - 1)) --thr;
    sp.threshold = std::min(thr, std::max(n_max, 1));
    return sp;
}

/// q^cos_k = int_0^1 q(x) cos(k pi x) dx from the coefficient table.
inline cd cosine_moment(const FourierPotential& pot, int k) {
    k = std::abs(k);
    if (k == 0) return 0.0;
    if (k % 2 == 0) return 0.5 * (pot.coeff(k / 2) + pot.coeff(-k / 2));
    cd acc = 0.0;
    for (const auto& [j, v] : pot.coeffs()) {
        acc += v * (I_unit / pi) * (1.0 / double(2 * j + k) + 1.0 / double(2 * j - k));
    }
    return acc;
}

/// Dirichlet eigenvalues on [0,1] in the sine basis sqrt(2) sin(m pi x),
/// 1 <= m <= N, lexicographically ordered.
inline std::vector<cd> dirichlet_spectrum(const FourierPotential& pot, const GalerkinConfig& cfg) {
    cfg.validate();
    const int N = cfg.N;
    std::vector<cd> qc(2 * N + 1);
    for (int k = 0; k <= 2 * N; ++k) qc[k] = cosine_moment(pot, k);

    std::vector<cd> out;
    if (pot.real()) {
        Eigen::MatrixXd A(N, N);
        for (int m = 1; m <= N; ++m)
            for (int n = 1; n <= N; ++n)
                A(m - 1, n - 1) = (qc[std::abs(m - n)] - qc[m + n]).real() + (m == n ? (m * pi) * (m * pi) : 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw Error(ErrorKind::ConvergenceFailure, "Dirichlet eigen-solver failed");
        for (int i = 0; i < N; ++i) out.emplace_back(es.eigenvalues()(i), 0.0);
    } else {
        Eigen::MatrixXcd A(N, N);
        for (int m = 1; m <= N; ++m)
            for (int n = 1; n <= N; ++n)
                A(m - 1, n - 1) = qc[std::abs(m - n)] - qc[m + n] + (m == n ? (m * pi) * (m * pi) : 0.0);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, false);
        if (es.info() != Eigen::Success) throw Error(ErrorKind::ConvergenceFailure, "Dirichlet eigen-solver failed");
        for (int i = 0; i < N; ++i) out.push_back(es.eigenvalues()(i));
        std::stable_sort(out.begin(), out.end(), lex_less);
    }
    return out;
}

/// Periodic and Dirichlet spectra together; mu is truncated to n_max.
inline HillSpectra hill_spectra(const FourierPotential& pot, const GalerkinConfig& cfg) {
    HillSpectra sp = periodic_spectrum(pot, cfg);
    std::vector<cd> mu = dirichlet_spectrum(pot, cfg);
    mu.resize(sp.n_max);
    sp.mu = std::move(mu);
    while (sp.threshold <= sp.n_max &&
           std::abs(sp.mu[sp.threshold - 1] - sp.threshold * sp.threshold * pi * pi) >= 0.5 * sp.threshold) {
        ++sp.threshold;
    }
    for (int n = sp.threshold; n <= sp.n_max; ++n) {
        if (std::abs(sp.mu[n - 1] - n * n * pi * pi) >= 0.5 * n) sp.threshold = n + 1;
    }
    return sp;
}

} // namespace hillkdv
