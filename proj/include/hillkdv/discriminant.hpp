#pragma once

// Floquet discriminant of -y'' + q y = lambda y: monodromy by a fourth
// order Magnus integrator, and the truncated product representations of
// Delta^2 - 4, Delta-dot, the canonical root and psi = Delta-dot / sqrt_c.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hillkdv/errors.hpp"
#include "hillkdv/hill_spectrum.hpp"
#include "hillkdv/numeric.hpp"
#include "hillkdv/parallel.hpp"
#include "hillkdv/potential.hpp"

namespace hillkdv {

inline int default_ode_steps(int max_index) { return std::max(2048, 64 * (1 + max_index)); }

/// Delta and its first two lambda-derivatives.
struct DiscriminantValue {
    cd delta;
    cd dot;
    cd ddot;
};

/// Value of a truncated product with an estimate of the neglected tail.
struct ProductValue {
    cd value;
    double tail_error;
};

namespace detail {

// cosh(sqrt z), sinh(sqrt z)/sqrt z and their first two z-derivatives
struct CoshSinc {
    cd C, S, C1, S1, C2, S2;
};

inline CoshSinc cosh_sinc(cd z) {
    CoshSinc r{};
    if (std::abs(z) < 0.5) {
        cd p[16];
        p[0] = 1.0;
        for (int k = 1; k < 16; ++k) p[k] = p[k - 1] * z;
        double fc = 1.0, fs = 1.0; // (2k)!, (2k+1)!
        for (int k = 0; k < 16; ++k) {
            if (k > 0) {
                fc *= (2.0 * k - 1.0) * (2.0 * k);
                fs *= (2.0 * k) * (2.0 * k + 1.0);
            }
            r.C += p[k] / fc;
            r.S += p[k] / fs;
            if (k >= 1) {
                r.C1 += double(k) * p[k - 1] / fc;
                r.S1 += double(k) * p[k - 1] / fs;
            }
            if (k >= 2) {
                r.C2 += double(k) * (k - 1) * p[k - 2] / fc;
                r.S2 += double(k) * (k - 1) * p[k - 2] / fs;
            }
        }
        return r;
    }
    const cd w = std::sqrt(z);
    r.C = std::cosh(w);
    r.S = std::sinh(w) / w;
    r.C1 = 0.5 * r.S;
    r.S1 = (r.C - r.S) / (2.0 * z);
    r.C2 = 0.5 * r.S1;
    r.S2 = (r.C1 - r.S1) / (2.0 * z) - r.S1 / z;
    return r;
}

inline double segment_distance(cd p, cd a, cd b) {
    const cd ab = b - a;
    const double len2 = std::norm(ab);
    if (len2 == 0.0) return std::abs(p - a);
    const double t = std::clamp(((p - a) * std::conj(ab)).real() / len2, 0.0, 1.0);
    return std::abs(p - (a + t * ab));
}

} // namespace detail

class DiscriminantModel {
public:
    DiscriminantModel(FourierPotential pot, HillSpectra spectra, int ode_steps = 0, int product_cutoff = 64)
        : pot_(std::move(pot)), spectra_(std::move(spectra)) {
        steps_ = ode_steps > 0 ? ode_steps : default_ode_steps(pot_.max_index());
        if (steps_ < 64 * (1 + pot_.max_index())) {
            throw Error(ErrorKind::InvalidConfig, "ode_steps below 64*(1+max mode index)");
        }
        if (product_cutoff < 1) throw Error(ErrorKind::InvalidConfig, "product cutoff must be >= 1");
        requested_M_ = product_cutoff;
        M_ = std::min(product_cutoff, spectra_.n_max);
        const double h = 1.0 / steps_;
        const double g = std::sqrt(3.0) / 6.0;
        q1_.resize(steps_);
        q2_.resize(steps_);
        for (int j = 0; j < steps_; ++j) {
            q1_[j] = pot_((j + 0.5 - g) * h);
            q2_[j] = pot_((j + 0.5 + g) * h);
        }
    }

    const FourierPotential& potential() const { return pot_; }
    const HillSpectra& spectra() const { return spectra_; }
    int ode_steps() const { return steps_; }
    /// Cutoff actually used by the products: min(requested, n_max).
    int cutoff() const { return M_; }
    int requested_cutoff() const { return requested_M_; }
    bool has_critical_points() const { return static_cast<int>(spectra_.crit.size()) >= M_; }

    void set_critical_points(std::vector<cd> crit) { spectra_.crit = std::move(crit); }

    // ---- ODE side ---------------------------------------------------------

    /// Monodromy trace and derivatives; order 0 skips the variational parts.
    DiscriminantValue evaluate(cd lambda, int order = 2) const {
        using M2 = Eigen::Matrix2cd;
        const double h = 1.0 / steps_;
        const double c = std::sqrt(3.0) * h * h / 12.0;
        const double zp = -h * h;
        M2 Om_d;
        Om_d << 0.0, 0.0, -h, 0.0;
        M2 M = M2::Identity(), dM = M2::Zero(), d2M = M2::Zero();
        for (int j = 0; j < steps_; ++j) {
            const cd qd = c * (q1_[j] - q2_[j]);
            const cd qb = 0.5 * (q1_[j] + q2_[j]) - lambda;
            M2 Om;
            Om << qd, h, h * qb, -qd;
            const cd z = qd * qd + h * h * qb;
            const detail::CoshSinc f = detail::cosh_sinc(z);
            const M2 E = f.C * M2::Identity() + f.S * Om;
            if (order == 0) {
                M = E * M;
                continue;
            }
            const M2 dE = (f.C1 * zp) * M2::Identity() + (f.S1 * zp) * Om + f.S * Om_d;
            if (order >= 2) {
                const M2 d2E = (f.C2 * zp * zp) * M2::Identity() + (f.S2 * zp * zp) * Om + (2.0 * f.S1 * zp) * Om_d;
                d2M = d2E * M + 2.0 * dE * dM + E * d2M;
            }
            dM = dE * M + E * dM;
            M = E * M;
        }
        return {M.trace(), dM.trace(), d2M.trace()};
    }

    cd delta(cd lambda) const { return evaluate(lambda, 0).delta; }
    cd delta_dot(cd lambda) const { return evaluate(lambda, 1).dot; }

    /// Delta-dot / sqrt(Delta^2 - 4) with the square-root sign taken from the
    /// canonical root at the same point.
    cd psi_ode(cd lambda) const {
        const DiscriminantValue v = evaluate(lambda, 1);
        cd s = std::sqrt(v.delta * v.delta - 4.0);
        const cd ref = canonical_root(lambda);
        if (std::abs(s - ref) > std::abs(s + ref)) s = -s;
        return v.dot / s;
    }

    // ---- product side -----------------------------------------------------

    bool open(int m) const { return !spectra_.collapsed(m); }

    /// Throws OnCut when lambda lies within 1e-12*n of an open gap G_n
    /// (n <= cutoff) or on G_0 = lambda_0^+ + (-inf, 0].
    void check_off_cuts(cd lambda) const {
        const cd d0 = lambda - spectra_.lambda0_plus;
        if (d0.real() <= 0.0 && std::abs(d0.imag()) < 1e-12) {
            throw Error(ErrorKind::OnCut, "lambda on the cut G_0");
        }
        for (int m = 1; m <= M_; ++m) {
            if (!open(m)) continue;
            if (detail::segment_distance(lambda, spectra_.minus(m), spectra_.plus(m)) < 1e-12 * m) {
                throw Error(ErrorKind::OnCut, "lambda on the gap G_" + std::to_string(m));
            }
        }
    }

    /// varsigma_n(lambda) = (tau_n - lambda) sqrt+(1 - gamma_n^2 / (4 (tau_n - lambda)^2)).
    cd standard_root(int n, cd lambda) const {
        if (n < 1 || n > spectra_.n_max) throw Error(ErrorKind::PreconditionViolated, "gap index out of range");
        const cd lm = spectra_.minus(n), lp = spectra_.plus(n);
        if (detail::segment_distance(lambda, lm, lp) < 1e-12 * n) {
            throw Error(ErrorKind::OnCut, "lambda on G_" + std::to_string(n));
        }
        const cd t = spectra_.mid(n) - lambda;
        const cd g = spectra_.gap(n);
        return t * sqrt_plus(1.0 - g * g / (4.0 * t * t));
    }

    /// -4 (lambda - lambda_0^+) prod_{m<=M} (lambda_m^+ - lambda)(lambda_m^- - lambda)/(m^4 pi^4) * tail^2
    ProductValue delta_sq_minus4_product(cd lambda) const {
        cd acc = -4.0 * (lambda - spectra_.lambda0_plus);
        for (int m = 1; m <= M_; ++m) {
            const double mm = m * m * pi * pi;
            acc *= (spectra_.plus(m) - lambda) / mm * ((spectra_.minus(m) - lambda) / mm);
        }
        const cd tail = zero_potential_tail(lambda, M_);
        return {acc * tail * tail, tail_error(lambda) * std::abs(acc * tail * tail)};
    }

    /// -prod_{m<=M} (lambda_m^. - lambda)/(m^2 pi^2) * tail
    ProductValue delta_dot_product(cd lambda) const {
        require_crit();
        cd acc = -1.0;
        for (int m = 1; m <= M_; ++m) acc *= (spectra_.crit[m - 1] - lambda) / (m * m * pi * pi);
        const cd v = acc * zero_potential_tail(lambda, M_);
        return {v, tail_error(lambda) * std::abs(v)};
    }

    /// -2i sqrt+(lambda - lambda_0^+) prod_{m<=M} varsigma_m(lambda)/(m^2 pi^2) * tail
    cd canonical_root(cd lambda) const {
        check_off_cuts(lambda);
        cd acc = -2.0 * I_unit * sqrt_plus(lambda - spectra_.lambda0_plus);
        for (int m = 1; m <= M_; ++m) {
            const cd t = spectra_.mid(m) - lambda;
            const cd vs = open(m) ? standard_root(m, lambda) : t;
            acc *= vs / (m * m * pi * pi);
        }
        return acc * zero_potential_tail(lambda, M_);
    }

    /// log of prod_{m<=M} (lambda_m^. - lambda)/varsigma_m(lambda), summed
    /// term by term so that the product near 1 keeps full relative accuracy.
    cd log_ratio(cd lambda) const { return log_ratio_impl(lambda, 0, 0, 0.0); }

    /// Same at lambda = edge + delta, where edge is lambda_n^+ (side > 0) or
    /// lambda_n^- (side < 0); the distances to the edges of G_n are formed
    /// from delta directly.
    cd log_ratio_edge(int n, int side, cd delta) const {
        const cd edge = side > 0 ? spectra_.plus(n) : spectra_.minus(n);
        return log_ratio_impl(edge + delta, n, side, delta);
    }

    cd psi_edge(int n, int side, cd delta) const {
        const cd edge = side > 0 ? spectra_.plus(n) : spectra_.minus(n);
        const cd lam = edge + delta;
        return psi_reference(lam) * std::exp(log_ratio_impl(lam, n, side, delta));
    }

    /// 1 / (2i sqrt+(lambda - lambda_0^+)), the zero-potential shape of psi.
    cd psi_reference(cd lambda) const {
        return 1.0 / (2.0 * I_unit * sqrt_plus(lambda - spectra_.lambda0_plus));
    }

    /// psi = Delta-dot / sqrt_c(Delta^2 - 4) from the ratio product.
    cd psi(cd lambda) const {
        check_off_cuts(lambda);
        return psi_unchecked(lambda);
    }

    /// psi without the cut guard, for quadrature nodes on validated paths.
    cd psi_unchecked(cd lambda) const { return psi_reference(lambda) * std::exp(log_ratio(lambda)); }

    /// Size of the last few retained log-factors of psi, scaled to the
    /// number of neglected ones.
    double psi_tail_error(cd lambda) const {
        if (M_ < 1) return 0.0;
        double last = 0.0;
        for (int m = std::max(1, M_ - 3); m <= M_; ++m) {
            if (!open(m)) continue;
            const cd t = spectra_.mid(m) - lambda;
            const cd g = spectra_.gap(m);
            last = std::max(last, std::abs((spectra_.crit[m - 1] - spectra_.mid(m)) / t) +
                                      std::abs(g * g / (8.0 * t * t)));
        }
        return last * M_;
    }

private:
    cd log_ratio_impl(cd lambda, int edge_n, int side, cd delta) const {
        require_crit();
        cd L = 0.0;
        for (int m = 1; m <= M_; ++m) {
            if (!open(m)) continue;
            const cd g = spectra_.gap(m);
            cd t, dp, dm;
            if (m == edge_n) {
                // tau - lambda, lambda^+ - lambda, lambda^- - lambda
                t = (side > 0 ? -0.5 : 0.5) * g - delta;
                dp = (side > 0 ? cd(0.0) : g) - delta;
                dm = (side > 0 ? -g : cd(0.0)) - delta;
            } else {
                t = spectra_.mid(m) - lambda;
                dp = spectra_.plus(m) - lambda;
                dm = spectra_.minus(m) - lambda;
            }
            const cd w = g * g / (4.0 * t * t);
            const cd log_root = std::abs(w) < 0.5 ? hillkdv::log1p(-w) : std::log(dp * dm / (t * t));
            L += hillkdv::log1p((spectra_.crit[m - 1] - spectra_.mid(m)) / t) - 0.5 * log_root;
        }
        return L;
    }

    void require_crit() const {
        if (!has_critical_points()) {
            throw Error(ErrorKind::PreconditionViolated, "critical points not located yet");
        }
    }

    // relative deviation of the last retained factors from the q=0 factors,
    // used as the scale of the neglected tail
    double tail_error(cd lambda) const {
        if (M_ < 1) return 0.0;
        double acc = 0.0;
        for (int m = std::max(1, M_ - 3); m <= M_; ++m) {
            const double mm = m * m * pi * pi;
            acc = std::max(acc, std::abs(spectra_.mid(m) - mm) / std::max(1e-300, std::abs(mm - lambda)));
        }
        return acc * M_ / 4.0;
    }

    FourierPotential pot_;
    HillSpectra spectra_;
    int steps_ = 0;
    int M_ = 0;
    int requested_M_ = 0;
    std::vector<cd> q1_, q2_;
};

/// Roots lambda_n^. of Delta-dot for n <= n_max by Newton iteration from
/// tau_n, confined to |lambda - tau_n| <= max(n/2, |gamma_n|).
inline std::vector<cd> critical_points(const DiscriminantModel& dm, const HillSpectra& spec, int threads = 1) {
    std::vector<cd> crit(spec.n_max);
    parallel_for(spec.n_max, threads, [&](int i) {
        const int n = i + 1;
        const cd tau = spec.mid(n);
        if (spec.collapsed(n)) {
            crit[i] = tau;
            return;
        }
        const double radius = std::max(0.5 * n, std::abs(spec.gap(n)));
        cd lam = tau;
        for (int it = 0; it < 60; ++it) {
            const DiscriminantValue v = dm.evaluate(lam, 2);
            cd step = v.dot / v.ddot;
            if (spec.real) step = step.real();
            lam -= step;
            if (!(std::abs(lam - tau) <= radius)) {
                throw Error(ErrorKind::NewtonDivergence, "critical point iterate left U_" + std::to_string(n));
            }
            if (std::abs(step) <= 1e-15 * (1.0 + std::abs(lam))) {
                crit[i] = lam;
                return;
            }
        }
        // accept a stalled iterate only if it is at roundoff level
        const DiscriminantValue v = dm.evaluate(lam, 2);
        if (std::abs(v.dot / v.ddot) > 1e-11 * (1.0 + std::abs(lam))) {
            throw Error(ErrorKind::NewtonDivergence, "critical point iteration stalled at n=" + std::to_string(n));
        }
        crit[i] = lam;
    });
    return crit;
}

/// Spectra, critical points and product model for a potential.
inline DiscriminantModel build_model(const FourierPotential& pot, const GalerkinConfig& cfg, int product_cutoff = 64,
                                     int ode_steps = 0, int threads = 1) {
    HillSpectra sp = hill_spectra(pot, cfg);
    DiscriminantModel dm(pot, sp, ode_steps, product_cutoff);
    dm.set_critical_points(critical_points(dm, sp, threads));
    return dm;
}

/// Same, reusing spectra computed elsewhere (for example loaded from a
/// report file).
inline DiscriminantModel build_model(const FourierPotential& pot, HillSpectra sp, int product_cutoff, int ode_steps,
                                     int threads) {
    sp.crit.clear();
    DiscriminantModel dm(pot, sp, ode_steps, product_cutoff);
    dm.set_critical_points(critical_points(dm, sp, threads));
    return dm;
}

} // namespace hillkdv
