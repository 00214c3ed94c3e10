#pragma once

// Lyapunov-Schmidt reduction of the eigenvalue equation near n^2 pi^2: the
// operator T_n(lambda), the coefficients a_n, b_{+-n}, the 2x2 block B_n and
// the localization of its two roots. Indices follow the [0,2] convention.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "hillkdv/errors.hpp"
#include "hillkdv/numeric.hpp"
#include "hillkdv/potential.hpp"

namespace hillkdv {

enum class ReductionMode { DirectSolve, Neumann };

struct ReductionBlock {
    int n = 0;
    cd lambda{0.0, 0.0};
    cd a_n{0.0, 0.0};
    cd a_minus{0.0, 0.0}; // <K_n V e_{-n}, e_{-n}>
    cd b_plus{0.0, 0.0};  // b_n
    cd b_minus{0.0, 0.0}; // b_{-n}
    cd det{0.0, 0.0};
    int window = 0;
    int neumann_terms = -1; // -1: direct solve
};

/// max(4n, 4 (largest [0,2] mode index) + 2n)
inline int default_window(const FourierPotential& pot, int n) {
    return std::max(4 * n, 4 * (2 * pot.max_index()) + 2 * n);
}

namespace detail {

inline void check_window(int n, int window) {
    if (n < 1) throw Error(ErrorKind::PreconditionViolated, "gap index must be >= 1");
    if (window < 2 * n) {
        throw Error(ErrorKind::WindowTooSmall,
                    "window " + std::to_string(window) + " < 2n = " + std::to_string(2 * n));
    }
}

// T_n(lambda) as a sparse band matrix, same layout as Tn_matrix.
inline Eigen::SparseMatrix<cd> Tn_sparse(const FourierPotential& pot, int n, cd lambda, int window) {
    const int W = window, S = 2 * W + 1;
    const int K2 = 2 * pot.max_index();
    std::vector<Eigen::Triplet<cd>> entries;
    for (int k = -W; k <= W; ++k) {
        if (std::abs(k) == n) continue;
        const cd den = lambda - (k * pi) * (k * pi);
        for (int m = std::max(-W, k - K2); m <= std::min(W, k + K2); ++m) {
            const cd q = pot.embedded(m - k);
            if (q != cd(0.0)) entries.emplace_back(m + W, k + W, q / den);
        }
    }
    Eigen::SparseMatrix<cd> T(S, S);
    T.setFromTriplets(entries.begin(), entries.end());
    return T;
}

} // namespace detail

/// Dense T_n(lambda) on indices -window..window (row/column i <-> index i - window).
inline Eigen::MatrixXcd Tn_matrix(const FourierPotential& pot, int n, cd lambda, int window) {
    detail::check_window(n, window);
    const int W = window, S = 2 * W + 1;
    Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(S, S);
    if (pot.zero()) return T;
    const int K2 = 2 * pot.max_index();
    for (int k = -W; k <= W; ++k) {
        if (std::abs(k) == n) continue;
        const cd den = lambda - (k * pi) * (k * pi);
        for (int m = std::max(-W, k - K2); m <= std::min(W, k + K2); ++m) {
            const cd q = pot.embedded(m - k);
            if (q != cd(0.0)) T(m + W, k + W) = q / den;
        }
    }
    return T;
}

/// (T_n f)_m = sum_{|k| != n} q_{m-k} f_k / (lambda - k^2 pi^2).
inline Eigen::VectorXcd Tn_apply(const FourierPotential& pot, int n, cd lambda, const Eigen::VectorXcd& f,
                                 int window) {
    detail::check_window(n, window);
    if (f.size() != 2 * window + 1) throw Error(ErrorKind::PreconditionViolated, "sequence length != 2*window+1");
    return Tn_matrix(pot, n, lambda, window) * f;
}

namespace detail {

// Largest singular value of a sparse matrix: Lanczos on A^H A with full
// reorthogonalization, run until the top Ritz value settles.
inline double sparse_spectral_norm(const Eigen::SparseMatrix<cd>& A) {
    const int S = static_cast<int>(A.cols());
    if (A.nonZeros() == 0) return 0.0;
    const int kmax = std::min(S, 200);
    Eigen::MatrixXcd Q(S, kmax);
    Eigen::VectorXcd q(S);
    for (int i = 0; i < S; ++i) q(i) = cd(1.0 + 0.5 * std::sin(1.3 * i), 0.25 * std::cos(0.7 * i));
    q.normalize();
    std::vector<double> alpha, beta;
    double prev = -1.0;
    for (int k = 0; k < kmax; ++k) {
        Q.col(k) = q;
        Eigen::VectorXcd w = A.adjoint() * (A * q);
        const double a = q.dot(w).real();
        alpha.push_back(a);
        // two passes of Gram-Schmidt against all previous vectors
        for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(k + 1) * (Q.leftCols(k + 1).adjoint() * w);
        const double b = w.norm();
        Eigen::MatrixXd Tk = Eigen::MatrixXd::Zero(k + 1, k + 1);
        for (int i = 0; i <= k; ++i) {
            Tk(i, i) = alpha[i];
            if (i < k) Tk(i, i + 1) = Tk(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Tk, Eigen::EigenvaluesOnly);
        const double top = eig.eigenvalues().maxCoeff();
        if (b <= 1e-14 * std::abs(top) || (k >= 4 && std::abs(top - prev) <= 1e-14 * top)) {
            return std::sqrt(std::max(0.0, top));
        }
        prev = top;
        beta.push_back(b);
        q = w / b;
    }
    throw Error(ErrorKind::NotConverged, "Lanczos iteration for ||T_n|| did not settle");
}

} // namespace detail

/// Upper estimate of ||T_n(lambda)|| on l^{s,p} shifted by +-n, computed on
/// the truncation: spectral norm for p = 2, otherwise the Riesz-Thorin
/// interpolation of the l^1 and l^inf induced norms.
inline double shifted_norm_estimate(const FourierPotential& pot, int n, cd lambda, SeqWeight w, int window) {
    detail::check_window(n, window);
    if (pot.zero()) return 0.0;
    const Eigen::SparseMatrix<cd> T = detail::Tn_sparse(pot, n, lambda, window);
    const int W = window, S = 2 * W + 1;
    double best = 0.0;
    for (int l : {n, -n}) {
        Eigen::VectorXd d(S);
        for (int i = 0; i < S; ++i) d(i) = std::pow(bracket(i - W + l), w.s);
        const Eigen::SparseMatrix<cd> Tw = d.asDiagonal() * T * d.cwiseInverse().asDiagonal();
        double est;
        if (w.p == 2.0) {
            est = detail::sparse_spectral_norm(Tw);
        } else {
            Eigen::VectorXd col = Eigen::VectorXd::Zero(S), row = Eigen::VectorXd::Zero(S);
            for (int k = 0; k < Tw.outerSize(); ++k) {
                for (Eigen::SparseMatrix<cd>::InnerIterator it(Tw, k); it; ++it) {
                    col(it.col()) += std::abs(it.value());
                    row(it.row()) += std::abs(it.value());
                }
            }
            est = std::pow(col.maxCoeff(), 1.0 / w.p) * std::pow(row.maxCoeff(), 1.0 - 1.0 / w.p);
        }
        best = std::max(best, est);
    }
    return best;
}

/// a_n, b_{+-n} and det B_n(lambda) from K_n = (Id - T_n)^{-1}.
inline ReductionBlock reduction_block(const FourierPotential& pot, int n, cd lambda, int window,
                                      ReductionMode mode = ReductionMode::DirectSolve) {
    detail::check_window(n, window);
    ReductionBlock blk;
    blk.n = n;
    blk.lambda = lambda;
    blk.window = window;
    const int W = window, S = 2 * W + 1;
    const double nn = n * n * pi * pi;
    if (pot.zero()) {
        blk.det = (lambda - nn) * (lambda - nn);
        blk.neumann_terms = mode == ReductionMode::Neumann ? 0 : -1;
        return blk;
    }
    const Eigen::SparseMatrix<cd> T = detail::Tn_sparse(pot, n, lambda, window);
    Eigen::MatrixXcd rhs(S, 2);
    for (int i = 0; i < S; ++i) {
        rhs(i, 0) = pot.embedded(i - W - n);
        rhs(i, 1) = pot.embedded(i - W + n);
    }
    Eigen::MatrixXcd x;
    if (mode == ReductionMode::DirectSolve) {
        Eigen::SparseMatrix<cd> A(S, S);
        A.setIdentity();
        A -= T;
        A.makeCompressed();
        // natural ordering keeps the fill inside the band
        Eigen::SparseLU<Eigen::SparseMatrix<cd>, Eigen::NaturalOrdering<int>> lu(A);
        if (lu.info() != Eigen::Success) {
            throw Error(ErrorKind::NotConverged, "Id - T_" + std::to_string(n) + " is singular");
        }
        x = lu.solve(rhs);
    } else {
        x = rhs;
        Eigen::MatrixXcd term = rhs;
        int k = 0;
        double last = term.norm();
        int growth = 0;
        for (; k < 2000; ++k) {
            term = (T * term).eval();
            const double tn = term.norm();
            x += term;
            if (!std::isfinite(tn) || tn > 1e12 * rhs.norm()) break;
            growth = tn >= last ? growth + 1 : 0;
            if (growth > 50) break;
            last = tn;
            if (tn <= 1e-17 * x.norm()) break;
        }
        if (!(last <= 1e-15 * x.norm())) {
            throw Error(ErrorKind::NeumannDivergence, "Neumann series for K_" + std::to_string(n) + " does not converge");
        }
        blk.neumann_terms = k + 1;
    }
    blk.a_n = x(W + n, 0);
    blk.b_minus = x(W - n, 0);
    blk.b_plus = x(W + n, 1);
    blk.a_minus = x(W - n, 1);
    const cd d = lambda - nn - blk.a_n;
    blk.det = d * d - blk.b_plus * blk.b_minus;
    return blk;
}

/// Disc D_n = {|lambda - n^2 pi^2| < 4 sqrt(n) ||q||_{s,p}}; for q = 0 a
/// small disc of radius 1e-3 n.
inline double disc_radius(const FourierPotential& pot, int n, SeqWeight w) {
    if (pot.zero()) return 1e-3 * n;
    return 4.0 * std::sqrt(double(n)) * pot.embedded_norm(w);
}

/// Number of zeros of det B_n inside the circle |lambda - n^2 pi^2| = radius,
/// by tracking the argument with adaptive sampling.
inline int winding_number(const FourierPotential& pot, int n, int window, double radius) {
    const cd c(n * n * pi * pi, 0.0);
    for (int N = 64; N <= (1 << 14); N *= 2) {
        std::vector<cd> d(N);
        for (int j = 0; j < N; ++j) {
            d[j] = reduction_block(pot, n, c + radius * std::exp(cd(0.0, 2.0 * pi * j / N)), window).det;
        }
        double total = 0.0;
        bool fine = true;
        for (int j = 0; j < N; ++j) {
            const double step = std::arg(d[(j + 1) % N] / d[j]);
            if (std::abs(step) > pi / 4.0 || d[j] == cd(0.0)) fine = false;
            total += step;
        }
        if (fine) return static_cast<int>(std::lround(total / (2.0 * pi)));
    }
    throw Error(ErrorKind::NotConverged, "argument of det B_n not resolved on the disc boundary");
}

struct RootPair {
    cd xi1{0.0, 0.0};
    cd xi2{0.0, 0.0};
    int winding = 0;
    double radius = 0.0;
};

/// The two roots of det B_n in D_n by Newton iteration on
/// lambda - n^2 pi^2 - a_n -+ sqrt(b_n b_{-n}) from n^2 pi^2 -+ gamma_guess/2,
/// guarded by the argument principle on the boundary of D_n.
inline RootPair locate_roots(const FourierPotential& pot, int n, int window, cd gamma_guess = 0.0,
                             SeqWeight w = {0.0, 2.0}) {
    detail::check_window(n, window);
    RootPair out;
    out.radius = disc_radius(pot, n, w);
    const double nn = n * n * pi * pi;
    out.winding = winding_number(pot, n, window, out.radius);
    if (out.winding != 2) {
        throw Error(ErrorKind::RootCountMismatch,
                    "det B_" + std::to_string(n) + " has " + std::to_string(out.winding) + " zeros in D_n");
    }
    if (pot.zero()) {
        out.xi1 = out.xi2 = nn;
        return out;
    }
    auto solve = [&](double sign) {
        cd lam = nn + sign * 0.5 * gamma_guess;
        cd phi_prev = 0.0;
        bool have_phi = false;
        auto g = [&](cd l) {
            const ReductionBlock b = reduction_block(pot, n, l, window);
            cd phi = std::sqrt(b.b_plus * b.b_minus);
            if (have_phi && std::abs(phi + phi_prev) < std::abs(phi - phi_prev)) phi = -phi;
            return std::pair<cd, cd>{l - nn - b.a_n - sign * phi, phi};
        };
        // the branch of phi follows the sign convention at the start point
        {
            const ReductionBlock b = reduction_block(pot, n, lam, window);
            phi_prev = std::sqrt(b.b_plus * b.b_minus);
            if (phi_prev.real() < 0.0) phi_prev = -phi_prev;
            have_phi = true;
        }
        const double h = 1e-5 * (1.0 + std::abs(gamma_guess));
        for (int it = 0; it < 100; ++it) {
            auto [f, phi] = g(lam);
            phi_prev = phi;
            const cd fp = (g(lam + h).first - g(lam - h).first) / (2.0 * h);
            const cd step = f / fp;
            lam -= step;
            if (std::abs(lam - nn) > out.radius) {
                throw Error(ErrorKind::NewtonDivergence, "root iterate left D_" + std::to_string(n));
            }
            if (std::abs(step) <= 1e-15 * nn) return lam;
        }
        return lam;
    };
    out.xi1 = solve(-1.0);
    out.xi2 = solve(1.0);
    if (lex_less(out.xi2, out.xi1)) std::swap(out.xi1, out.xi2);
    return out;
}

/// max of |b_n b_{-n}|^{1/2} over 16 points on the boundary of D_n and the
/// 8 strip points n^2 pi^2 + {+-12n, +-6n, +-6n i, +-12n i}.
inline double xi_bound_sample_max(const FourierPotential& pot, int n, int window, double radius) {
    const double nn = n * n * pi * pi;
    std::vector<cd> pts;
    for (int j = 0; j < 16; ++j) pts.push_back(nn + radius * std::exp(cd(0.0, 2.0 * pi * j / 16)));
    for (double s : {12.0, -12.0, 6.0, -6.0}) pts.emplace_back(nn + s * n, 0.0);
    for (double s : {6.0, -6.0, 12.0, -12.0}) pts.emplace_back(nn, s * n);
    double best = 0.0;
    for (cd p : pts) {
        const ReductionBlock b = reduction_block(pot, n, p, window);
        best = std::max(best, std::sqrt(std::abs(b.b_plus * b.b_minus)));
    }
    return best;
}

/// Five sample points of the strip S_n.
inline std::array<cd, 5> strip_samples(int n) {
    const double nn = n * n * pi * pi;
    return {cd(nn, 0.0), cd(nn + 12.0 * n, 0.0), cd(nn - 12.0 * n, 0.0), cd(nn, 12.0 * n), cd(nn, -12.0 * n)};
}

/// Smallest n <= n_hi from which on the norm estimate is <= 1/2 at all strip
/// samples; n_hi + 1 when never reached.
inline int contraction_threshold(const FourierPotential& pot, SeqWeight w, int n_hi) {
    int thr = n_hi + 1;
    for (int n = n_hi; n >= 1; --n) {
        bool ok = true;
        for (cd lam : strip_samples(n)) {
            if (shifted_norm_estimate(pot, n, lam, w, default_window(pot, n)) > 0.5) {
                ok = false;
                break;
            }
        }
        if (!ok) break;
        thr = n;
    }
    return thr;
}

/// sum over integers m with |m| != n of |m^2 - n^2|^{-sigma}.
inline double hilbert_sum(int n, double sigma) {
    const int L = 8 * n + 16;
    double acc = std::pow(double(n), -2.0 * sigma);
    for (int m = 1; m <= L; ++m) {
        if (m == n) continue;
        acc += 2.0 * std::pow(std::abs(double(m) * m - double(n) * n), -sigma);
    }
    // m > L: m^{-2 sigma} (1 - n^2/m^2)^{-sigma} expanded in n^2/m^2
    double coef = 1.0, tail = 0.0, n2j = 1.0;
    for (int j = 0; j < 40; ++j) {
        const double term = coef * n2j * hurwitz_tail(2.0 * sigma + 2.0 * j, L + 1.0);
        tail += term;
        if (term < 1e-17 * tail) break;
        coef *= (sigma + j) / (j + 1.0);
        n2j *= double(n) * n;
    }
    return acc + 2.0 * tail;
}

} // namespace hillkdv
