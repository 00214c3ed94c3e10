#pragma once

// End-to-end experiments: decay of gap lengths and Dirichlet offsets, the
// concavity probe of H* near I = 0, and renormalized frequencies.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hillkdv/actions.hpp"
#include "hillkdv/discriminant.hpp"
#include "hillkdv/errors.hpp"
#include "hillkdv/hill_spectrum.hpp"
#include "hillkdv/parallel.hpp"
#include "hillkdv/potential.hpp"

namespace hillkdv {

struct PotentialSpec {
    bool random = false;
    FourierPotential::Table modes;
    bool real = true;
    std::uint64_t seed = 0;
    double alpha = 0.0;
    int count = 1;
    double amplitude = 0.0;

    FourierPotential build() const {
        if (random) return random_potential(seed, alpha, count, amplitude);
        return make_potential(modes, real);
    }
};

struct ExperimentConfig {
    PotentialSpec potential;
    int galerkin_n = 64;
    int product_m = 64;
    int n_cut = 32;        // 0: n_max / 2
    int ode_steps = 0;     // 0: automatic
    int contour_nodes = 64;
    double residual_tol = 1e-6;
    std::vector<SeqWeight> weights{{-0.5, 4.0}};
    std::vector<double> ladder{0.2, 0.1, 0.05, 0.025};
    int probe_mode = 1;
    int frequency_modes = 16;
    double frequency_step = 1e-3;
    int reduce_modes = 8;
    std::string spectra_file;
    int threads = 1;

    GalerkinConfig galerkin() const { return {galerkin_n, residual_tol}; }

    void validate() const {
        galerkin().validate();
        if (product_m < 1) throw Error(ErrorKind::InvalidConfig, "product_m must be >= 1");
        if (n_cut < 0) throw Error(ErrorKind::InvalidConfig, "n_cut must be >= 0");
        if (probe_mode < 1) throw Error(ErrorKind::InvalidConfig, "probe_mode must be >= 1");
        if (reduce_modes < 1) throw Error(ErrorKind::InvalidConfig, "reduce_modes must be >= 1");
        if (contour_nodes < 32 || (contour_nodes & (contour_nodes - 1)) != 0) {
            throw Error(ErrorKind::InvalidConfig, "contour_nodes must be a power of two >= 32");
        }
        if (threads < 1) throw Error(ErrorKind::InvalidConfig, "threads must be >= 1");
        if (weights.empty()) throw Error(ErrorKind::InvalidConfig, "weights must not be empty");
        for (const auto& w : weights) SeqWeight::make(w.s, w.p);
        validate_ladder(ladder);
    }

    /// Strictly decreasing, positive, >= 3 rungs spanning a decade in the
    /// action scale a^2.
    static void validate_ladder(const std::vector<double>& lad) {
        if (lad.size() < 3) throw Error(ErrorKind::InvalidConfig, "ladder needs at least 3 amplitudes");
        for (std::size_t i = 0; i < lad.size(); ++i) {
            if (!(lad[i] > 0.0)) throw Error(ErrorKind::InvalidConfig, "ladder amplitudes must be positive");
            if (i > 0 && !(lad[i] < lad[i - 1])) {
                throw Error(ErrorKind::InvalidConfig, "ladder must be strictly decreasing");
            }
        }
        const double span = lad.front() / lad.back();
        if (span * span < 10.0) throw Error(ErrorKind::InvalidConfig, "ladder spans less than a decade in a^2");
    }

    int effective_n_cut(int n_max) const { return n_cut > 0 ? std::min(n_cut, n_max) : n_max / 2; }
};

// ---- decay ------------------------------------------------------------------

struct DecayRow {
    int n;
    cd gamma;
    cd tau_minus_mu;
    double q_abs; // |q_{2n}| in the [0,2] convention, i.e. |q_n|
};

struct TailRow {
    int N;
    double T_gamma;
    double T_dirichlet;
    double coefficient_tail; // (6^p/2) sum_{n>=N} <2n>^{sp} (|q_n|^p + |q_-n|^p)
    double bound;            // coefficient_tail + C ||q||^{2p} / N
    bool holds;
};

struct WeightedTails {
    SeqWeight w;
    double q_norm = 0.0;
    double C = 0.0;
    std::vector<TailRow> rows;
    bool gamma_monotone = true;
    bool dirichlet_monotone = true;
    bool bound_holds = true;
};

struct DecayReport {
    std::vector<DecayRow> rows;
    std::vector<WeightedTails> tails;
    double gamma_vs_q_slope = 0.0; // log|gamma_n| against log|q_n|
    int slope_points = 0;
    int n_max = 0;
};

inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    if (n < 2) return 0.0;
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) mx += x[i], my += y[i];
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

inline DecayReport decay_check(const FourierPotential& pot, const HillSpectra& sp,
                               const std::vector<SeqWeight>& weights) {
    DecayReport rep;
    rep.n_max = sp.n_max;
    for (int n = 1; n <= sp.n_max; ++n) {
        const cd g = sp.collapsed(n) ? cd(0.0) : sp.gap(n);
        rep.rows.push_back({n, g, sp.mid(n) - sp.mu.at(n - 1), std::abs(pot.coeff(n))});
    }
    std::vector<int> ladder;
    for (int N = 1; N <= sp.n_max; N *= 2) ladder.push_back(N);

    for (const SeqWeight& w : weights) {
        WeightedTails wt;
        wt.w = w;
        wt.q_norm = pot.embedded_norm(w);
        auto tail = [&](int N, auto&& value) {
            double acc = 0.0;
            for (int n = sp.n_max; n >= N; --n) acc += std::pow(bracket(n), w.p * w.s) * std::pow(value(n), w.p);
            return acc;
        };
        const double pref = std::pow(6.0, w.p) / 2.0;
        for (int N : ladder) {
            TailRow r{};
            r.N = N;
            r.T_gamma = tail(N, [&](int n) { return std::abs(rep.rows[n - 1].gamma); });
            r.T_dirichlet = tail(N, [&](int n) { return std::abs(rep.rows[n - 1].tau_minus_mu); });
            double ct = 0.0;
            for (const auto& [k, v] : pot.coeffs()) {
                if (std::abs(k) >= N) ct += std::pow(bracket(2 * k), w.p * w.s) * std::pow(std::abs(v), w.p);
            }
            r.coefficient_tail = pref * ct;
            wt.rows.push_back(r);
        }
        const double qn2p = std::pow(wt.q_norm, 2.0 * w.p);
        if (!wt.rows.empty() && qn2p > 0.0) {
            const TailRow& r0 = wt.rows.front();
            wt.C = std::max(0.0, (r0.T_gamma - r0.coefficient_tail) * r0.N / qn2p);
        }
        for (std::size_t i = 0; i < wt.rows.size(); ++i) {
            TailRow& r = wt.rows[i];
            r.bound = r.coefficient_tail + (qn2p > 0.0 ? wt.C * qn2p / r.N : 0.0);
            r.holds = r.T_gamma <= r.bound * (1.0 + 1e-12) + 1e-300;
            wt.bound_holds = wt.bound_holds && r.holds;
            if (i > 0) {
                wt.gamma_monotone = wt.gamma_monotone && r.T_gamma <= wt.rows[i - 1].T_gamma;
                wt.dirichlet_monotone = wt.dirichlet_monotone && r.T_dirichlet <= wt.rows[i - 1].T_dirichlet;
            }
        }
        rep.tails.push_back(wt);
    }

    std::vector<double> x, y;
    for (const auto& r : rep.rows) {
        if (r.q_abs > 0.0 && std::abs(r.gamma) > 0.0) {
            x.push_back(std::log(r.q_abs));
            y.push_back(std::log(std::abs(r.gamma)));
        }
    }
    rep.slope_points = static_cast<int>(x.size());
    rep.gamma_vs_q_slope = fit_slope(x, y);
    return rep;
}

inline DecayReport decay_check(const ExperimentConfig& cfg) {
    cfg.validate();
    const FourierPotential pot = cfg.potential.build();
    return decay_check(pot, hill_spectra(pot, cfg.galerkin()), cfg.weights);
}

// ---- concavity --------------------------------------------------------------

struct ProbePoint {
    double a = 0.0;
    double b = 0.0;
    std::vector<double> I; // I_1..I_{n_cut}
    double H_star = 0.0;
    double residual = 0.0;
};

inline ProbePoint probe_point(const FourierPotential& pot, const ExperimentConfig& cfg) {
    const DiscriminantModel dm = build_model(pot, cfg.galerkin(), cfg.product_m, cfg.ode_steps, cfg.threads);
    HamiltonianOptions opt;
    opt.threads = cfg.threads;
    opt.nodes = cfg.contour_nodes;
    const HamiltonianReport rep = hamiltonian_report(pot, dm, cfg.effective_n_cut(dm.spectra().n_max), opt);
    ProbePoint p;
    for (const cd& v : rep.I) p.I.push_back(v.real());
    p.H_star = rep.H_star.real();
    p.residual = rep.residual;
    return p;
}

struct Extrapolation {
    double value = 0.0;
    double two_point = 0.0;
    double uncertainty = 0.0; // |value - two_point| / |value|
};

/// Intercept at x = 0 of a least-squares line through (x_i, y_i), with the
/// line through the two points of smallest x as a cross-check.
inline Extrapolation richardson(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    Extrapolation e;
    if (n < 2) return e;
    const double slope = fit_slope(x, y);
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) mx += x[i], my += y[i];
    mx /= n;
    my /= n;
    e.value = my - slope * mx;
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return x[a] < x[b]; });
    const double x1 = x[idx[0]], y1 = y[idx[0]], x2 = x[idx[1]], y2 = y[idx[1]];
    e.two_point = x2 != x1 ? y1 - (y2 - y1) / (x2 - x1) * x1 : y1;
    e.uncertainty = e.value != 0.0 ? std::abs(e.value - e.two_point) / std::abs(e.value) : 0.0;
    return e;
}

struct ConcavityReport {
    int mode = 1;
    std::vector<ProbePoint> ladder;       // single-mode family
    std::vector<double> ratio;            // H*/I_mode^2
    std::vector<double> omega_ratio;      // (dH*/dI) / mean I, consecutive rungs
    std::vector<double> omega_I;          // mean I of each difference
    Extrapolation ratio_limit;            // -> -3
    Extrapolation omega_limit;            // -> -6
    std::vector<ProbePoint> second_ladder; // mode + 1 alone
    std::vector<ProbePoint> mixed_ladder;  // both modes, b = sqrt(2) a
    double hess_11 = 0.0, hess_12 = 0.0, hess_22 = 0.0;
    bool strictly_negative = true;
};

inline FourierPotential mode_family(double a, int n, double b = 0.0, int m = 0) {
    FourierPotential::Table t;
    if (a != 0.0) t[n] = t[-n] = a;
    if (b != 0.0 && m > 0) {
        t[m] += b;
        t[-m] += b;
    }
    return FourierPotential(t, true);
}

inline ConcavityReport concavity_probe(const ExperimentConfig& cfg, bool mixed = true) {
    cfg.validate();
    ConcavityReport rep;
    const int n = cfg.probe_mode, m = cfg.probe_mode + 1;
    rep.mode = n;
    const int L = static_cast<int>(cfg.ladder.size());
    rep.ladder.resize(L);
    for (int i = 0; i < L; ++i) {
        rep.ladder[i] = probe_point(mode_family(cfg.ladder[i], n), cfg);
        rep.ladder[i].a = cfg.ladder[i];
    }
    std::vector<double> Is;
    for (const auto& p : rep.ladder) {
        const double I = p.I.size() >= std::size_t(n) ? p.I[n - 1] : 0.0;
        Is.push_back(I);
        rep.ratio.push_back(I > 0.0 ? p.H_star / (I * I) : 0.0);
        rep.strictly_negative = rep.strictly_negative && p.H_star < 0.0;
    }
    for (int i = 0; i + 1 < L; ++i) {
        const double dI = Is[i] - Is[i + 1];
        const double mean = 0.5 * (Is[i] + Is[i + 1]);
        const double w = dI != 0.0 ? (rep.ladder[i].H_star - rep.ladder[i + 1].H_star) / dI : 0.0;
        rep.omega_ratio.push_back(mean > 0.0 ? w / mean : 0.0);
        rep.omega_I.push_back(mean);
    }
    rep.ratio_limit = richardson(Is, rep.ratio);
    rep.omega_limit = richardson(rep.omega_I, rep.omega_ratio);
    if (rep.ratio_limit.uncertainty > 0.1 || rep.omega_limit.uncertainty > 0.1) {
        throw Error(ErrorKind::LadderTooShallow, "extrapolated limits disagree by more than 10%");
    }

    if (mixed) {
        rep.second_ladder.resize(L);
        rep.mixed_ladder.resize(L);
        for (int i = 0; i < L; ++i) {
            const double a = cfg.ladder[i];
            rep.second_ladder[i] = probe_point(mode_family(a, m), cfg);
            rep.second_ladder[i].b = a;
            rep.mixed_ladder[i] = probe_point(mode_family(a, n, std::sqrt(2.0) * a, m), cfg);
            rep.mixed_ladder[i].a = a;
            rep.mixed_ladder[i].b = std::sqrt(2.0) * a;
        }
        // H* = c11 I1^2 + c12 I1 I2 + c22 I2^2 + cubic terms
        std::vector<const ProbePoint*> pts;
        for (const auto& p : rep.ladder) pts.push_back(&p);
        for (const auto& p : rep.second_ladder) pts.push_back(&p);
        for (const auto& p : rep.mixed_ladder) pts.push_back(&p);
        const int P = static_cast<int>(pts.size());
        Eigen::MatrixXd A(P, 7);
        Eigen::VectorXd rhs(P);
        for (int i = 0; i < P; ++i) {
            const auto& I = pts[i]->I;
            const double x = I.size() >= std::size_t(n) ? I[n - 1] : 0.0;
            const double y = I.size() >= std::size_t(m) ? I[m - 1] : 0.0;
            const double s = 1.0 / (x * x + y * y); // relative weighting
            A.row(i) << x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y;
            A.row(i) *= std::sqrt(s);
            rhs(i) = pts[i]->H_star * std::sqrt(s);
        }
        const Eigen::VectorXd c = A.colPivHouseholderQr().solve(rhs);
        rep.hess_11 = 2.0 * c(0);
        rep.hess_12 = c(1);
        rep.hess_22 = 2.0 * c(2);
        for (const auto* p : pts) rep.strictly_negative = rep.strictly_negative && p->H_star < 0.0;
    }
    return rep;
}

// ---- frequencies --------------------------------------------------------------

struct FrequencyRow {
    int n;
    double I_n;     // at the base potential
    double omega;   // finite-difference dH*/dI_n
    double omega_over_I; // omega / mean I_n over the stencil
};

struct FrequencyReport {
    std::vector<FrequencyRow> rows;
    double sup_omega = 0.0;
    bool bounded = true; // sup over the upper half of n does not exceed twice the lower half
};

/// omega*_n from H* and I_n at base + delta 2cos(2 pi n x), delta in {h, 2h}.
inline FrequencyReport frequency_check(const ExperimentConfig& cfg) {
    cfg.validate();
    const FourierPotential base = cfg.potential.build();
    if (!base.real()) throw Error(ErrorKind::PreconditionViolated, "frequency check needs a real potential");
    FrequencyReport rep;
    const int count = cfg.frequency_modes;
    if (base.zero()) {
        for (int n = 1; n <= count; ++n) rep.rows.push_back({n, 0.0, 0.0, 0.0});
        return rep;
    }
    const ProbePoint p0 = probe_point(base, cfg);
    auto shifted = [&](int n, double d) {
        FourierPotential::Table t = base.coeffs();
        t[n] += d;
        t[-n] += d;
        return FourierPotential(t, true);
    };
    const double h = cfg.frequency_step;
    for (int n = 1; n <= count; ++n) {
        const ProbePoint p1 = probe_point(shifted(n, h), cfg);
        const ProbePoint p2 = probe_point(shifted(n, 2.0 * h), cfg);
        if (p1.I.size() < std::size_t(n) || p2.I.size() < std::size_t(n)) break;
        const double dI = p2.I[n - 1] - p1.I[n - 1];
        const double w = dI != 0.0 ? (p2.H_star - p1.H_star) / dI : 0.0;
        const double mean = 0.5 * (p1.I[n - 1] + p2.I[n - 1]);
        rep.rows.push_back({n, p0.I.size() >= std::size_t(n) ? p0.I[n - 1] : 0.0, w, mean > 0.0 ? w / mean : 0.0});
    }
    double lo = 0.0, hi = 0.0;
    const int half = static_cast<int>(rep.rows.size()) / 2;
    for (int i = 0; i < static_cast<int>(rep.rows.size()); ++i) {
        const double v = std::abs(rep.rows[i].omega);
        rep.sup_omega = std::max(rep.sup_omega, v);
        (i < half ? lo : hi) = std::max(i < half ? lo : hi, v);
    }
    rep.bounded = hi <= 2.0 * lo + 1e-12;
    return rep;
}

} // namespace hillkdv
