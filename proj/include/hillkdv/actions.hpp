#pragma once

// F(lambda), F_n, actions I_n, the functionals R_n and the spectral form of
// the KdV Hamiltonian.

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hillkdv/discriminant.hpp"
#include "hillkdv/errors.hpp"
#include "hillkdv/numeric.hpp"
#include "hillkdv/parallel.hpp"
#include "hillkdv/potential.hpp"

namespace hillkdv {

struct GapContour {
    int n = 0;
    cd center{0.0, 0.0};
    double radius = 0.0;
    int nodes = 64;

    cd point(double theta) const { return center + radius * std::exp(cd(0.0, theta)); }
};

/// Circle around G_n: radius max(2|gamma_n|, 0.1 n), capped at 0.45 n unless
/// 2|gamma_n| is larger. Throws ContourTouchesGap when the circle comes
/// within reach of G_0 or a neighbouring open gap.
inline GapContour make_contour(const DiscriminantModel& dm, int n, int nodes = 64) {
    const HillSpectra& sp = dm.spectra();
    if (n < 1 || n > sp.n_max) throw Error(ErrorKind::PreconditionViolated, "gap index out of range");
    if (nodes < 32 || (nodes & (nodes - 1)) != 0) {
        throw Error(ErrorKind::InvalidConfig, "contour node count must be a power of two >= 32");
    }
    GapContour c;
    c.n = n;
    c.nodes = nodes;
    const double g = std::abs(sp.gap(n));
    c.center = sp.collapsed(n) ? cd(n * n * pi * pi, 0.0) : sp.mid(n);
    c.radius = std::max(2.0 * g, 0.1 * n);
    if (c.radius > 0.45 * n) c.radius = std::max(0.45 * n, 2.0 * g);

    const double clearance = 0.25 * c.radius;
    auto touches = [&](cd a, cd b) {
        const double d = detail::segment_distance(c.center, a, b);
        return d < c.radius + clearance;
    };
    const cd l0 = sp.lambda0_plus;
    if (touches(l0, l0 - 1e6)) throw Error(ErrorKind::ContourTouchesGap, "contour reaches G_0");
    for (int m = std::max(1, n - 2); m <= std::min(sp.n_max, n + 2); ++m) {
        if (m == n) continue;
        if (touches(sp.minus(m), sp.plus(m))) {
            throw Error(ErrorKind::ContourTouchesGap,
                        "contour of G_" + std::to_string(n) + " reaches G_" + std::to_string(m));
        }
    }
    if (!sp.collapsed(n) && detail::segment_distance(c.center, sp.minus(n), sp.plus(n)) + 0.5 * g >= c.radius) {
        throw Error(ErrorKind::ContourTouchesGap, "contour does not enclose G_" + std::to_string(n));
    }
    return c;
}

struct ContourValue {
    cd value;
    int nodes;
};

/// Raw line integral of f over the circle by the periodic trapezoid rule,
/// doubling the node count until two levels agree.
template <class Fn>
ContourValue contour_integral(Fn&& f, const GapContour& c, double tol = 1e-12, int max_nodes = 1 << 16) {
    int N = c.nodes;
    std::vector<cd> vals;
    auto node_sum = [&](int count, int stride, int offset, double& mag) {
        cd s = 0.0;
        for (int j = offset; j < count; j += stride) {
            const double th = 2.0 * pi * j / count;
            const cd e = std::exp(cd(0.0, th));
            const cd v = f(c.center + c.radius * e) * (I_unit * c.radius * e);
            s += v;
            mag += std::abs(v);
        }
        return s;
    };
    double mag = 0.0;
    cd sum = node_sum(N, 1, 0, mag);
    cd prev = sum * (2.0 * pi / N);
    while (N < max_nodes) {
        double mag_new = 0.0;
        const cd odd = node_sum(2 * N, 2, 1, mag_new);
        sum += odd;
        mag += mag_new;
        N *= 2;
        const cd cur = sum * (2.0 * pi / N);
        const double scale = std::abs(cur) + mag * (2.0 * pi / N);
        if (std::abs(cur - prev) <= tol * scale) return {cur, N};
        prev = cur;
    }
    throw Error(ErrorKind::NotConverged, "contour quadrature did not settle at " + std::to_string(max_nodes) + " nodes");
}

/// Piecewise-linear path for F_of: lambda_0^+ -> waypoints -> lambda.
struct PathSpec {
    std::vector<cd> waypoints; // empty: up, across, down at height `height`
    double height = 0.0;       // 0: automatic
};

namespace detail {

inline const GaussLegendre& gl_rule() {
    static const GaussLegendre rule(24);
    return rule;
}

// proper or touching intersection of segments [p1,p2] and [q1,q2]
inline bool segments_intersect(cd p1, cd p2, cd q1, cd q2) {
    auto cross = [](cd a, cd b) { return a.real() * b.imag() - a.imag() * b.real(); };
    const cd r = p2 - p1, s = q2 - q1;
    const double den = cross(r, s);
    const double scale = std::max({std::abs(r), std::abs(s), 1.0});
    if (std::abs(den) < 1e-14 * scale * scale) {
        // parallel: overlapping only if collinear and within reach
        return segment_distance(q1, p1, p2) < 1e-12 * scale || segment_distance(q2, p1, p2) < 1e-12 * scale ||
               segment_distance(p1, q1, q2) < 1e-12 * scale;
    }
    const double t = cross(q1 - p1, s) / den;
    const double u = cross(q1 - p1, r) / den;
    return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

enum class EndSingularity { None, Start, End };

// Panel breakpoints on [0,1]: uniform, plus geometric grading towards 0
// when that end carries a singular point. With a spacing function h(z) the
// part above the grading is walked in steps of length about h in z.
inline std::vector<double> panel_breaks(int panels, bool graded, cd base, cd dir,
                                        const std::function<double(cd)>& spacing) {
    std::vector<double> br{0.0};
    double t = 0.0;
    if (graded) {
        for (int k = 14; k >= 1; --k) br.push_back(std::ldexp(1.0, -k));
        t = 0.5;
    }
    if (!spacing) {
        const int upper = std::max(1, panels);
        for (int p = 1; p <= upper; ++p) br.push_back(t + (1.0 - t) * double(p) / upper);
        return br;
    }
    const double len = std::abs(dir);
    while (t < 1.0) {
        const cd z = base + dir * (graded ? t * t : t);
        const double speed = graded ? 2.0 * t * len : len;
        double dt = std::min(spacing(z) / speed, 0.25);
        if (t + dt > 1.0 - 0.25 * dt) dt = 1.0 - t;
        t += dt;
        br.push_back(t);
    }
    br.back() = 1.0;
    return br;
}

// int_a^b g(z, d) dz with composite Gauss-Legendre; a 1/sqrt singularity at
// one end is removed by z = a + (b-a) t^2 (or the mirror image). d is the
// exact offset of z from the singular end.
template <class G>
cd segment_integral(G&& g, cd a, cd b, int panels, EndSingularity sing,
                    const std::function<double(cd)>& spacing = nullptr) {
    const GaussLegendre& gl = gl_rule();
    const cd base = sing == EndSingularity::End ? b : a;
    const cd dir = sing == EndSingularity::End ? a - b : b - a;
    const std::vector<double> br = panel_breaks(panels, sing != EndSingularity::None, base, dir, spacing);
    cd acc = 0.0;
    for (std::size_t p = 0; p + 1 < br.size(); ++p) {
        const double t0 = br[p], t1 = br[p + 1];
        const double hm = 0.5 * (t1 - t0), cm = 0.5 * (t1 + t0);
        for (int k = 0; k < gl.size(); ++k) {
            const double t = cm + hm * gl.x[k];
            const double w = hm * gl.w[k];
            switch (sing) {
            case EndSingularity::None: acc += w * g(a + (b - a) * t, (b - a) * t) * (b - a); break;
            case EndSingularity::Start: {
                const cd d = (b - a) * (t * t);
                acc += w * g(a + d, d) * (2.0 * t) * (b - a);
                break;
            }
            case EndSingularity::End: {
                const cd d = (a - b) * (t * t);
                acc += w * g(b + d, d) * (2.0 * t) * (b - a);
                break;
            }
            }
        }
    }
    return acc;
}

inline void check_path_segment(const DiscriminantModel& dm, cd a, cd b, bool start_on_branch, bool end_on_branch) {
    const HillSpectra& sp = dm.spectra();
    for (int m = 1; m <= dm.cutoff(); ++m) {
        if (sp.collapsed(m)) continue;
        const cd lm = sp.minus(m), lp = sp.plus(m);
        if (!segments_intersect(a, b, lm, lp)) continue;
        // touching the gap at a declared branch-point endpoint is allowed
        const double eps = 1e-12 * (1.0 + std::abs(lp));
        const bool at_start = start_on_branch && (std::abs(a - lp) < eps || std::abs(a - lm) < eps);
        const bool at_end = end_on_branch && (std::abs(b - lp) < eps || std::abs(b - lm) < eps);
        if (at_start || at_end) {
            // still reject segments that run along the gap
            const cd other = at_start ? b : a;
            const cd tip = at_start ? a : b;
            const cd mid = 0.5 * (tip + other);
            if (segment_distance(mid, lm, lp) > 1e-9 * (1.0 + std::abs(mid)) ||
                segment_distance(tip + 1e-3 * (other - tip), lm, lp) > 0.0) {
                continue;
            }
        }
        throw Error(ErrorKind::PathCrossesCut, "integration path crosses G_" + std::to_string(m));
    }
    const cd l0 = sp.lambda0_plus;
    if (!start_on_branch || std::abs(a - l0) > 0.0) {
        if (segments_intersect(a, b, l0 - 1e12, l0)) {
            throw Error(ErrorKind::PathCrossesCut, "integration path crosses G_0");
        }
    }
}

} // namespace detail

/// Automatic clearance height for paths from lambda_0^+.
inline double default_path_height(const DiscriminantModel& dm) {
    const HillSpectra& sp = dm.spectra();
    double extent = std::abs(sp.lambda0_plus.imag());
    for (int m = 1; m <= sp.n_max; ++m) {
        extent = std::max({extent, std::abs(sp.minus(m).imag()), std::abs(sp.plus(m).imag())});
    }
    return std::max(4.0, 2.0 * extent + 4.0);
}

/// F(lambda) = int_{lambda_0^+}^{lambda} psi dz, evaluated as
/// -i sqrt+(lambda - lambda_0^+) + int psi_ref expm1(log_ratio) dz so that
/// the deviation from the zero-potential shape is integrated directly.
inline cd F_of(const DiscriminantModel& dm, cd lambda, const PathSpec& path = {}) {
    int edge_n = 0, edge_side = 0;
    for (int m = 1; m <= dm.cutoff(); ++m) {
        if (dm.spectra().collapsed(m)) continue;
        const double eps = 1e-12 * (1.0 + std::abs(lambda));
        if (std::abs(lambda - dm.spectra().plus(m)) < eps) edge_n = m, edge_side = 1;
        if (std::abs(lambda - dm.spectra().minus(m)) < eps) edge_n = m, edge_side = -1;
    }
    if (edge_n == 0) dm.check_off_cuts(lambda);
    if (edge_n != 0) lambda = edge_side > 0 ? dm.spectra().plus(edge_n) : dm.spectra().minus(edge_n);
    const cd l0 = dm.spectra().lambda0_plus;
    const double Y0 = path.height > 0.0 ? path.height : default_path_height(dm);
    std::vector<cd> pts{l0};
    if (path.waypoints.empty()) {
        const double Y = (lambda.imag() < 0.0 ? -1.0 : 1.0) * Y0;
        pts.push_back(l0 + cd(0.0, Y));
        pts.push_back(cd(lambda.real(), Y));
    } else {
        pts.insert(pts.end(), path.waypoints.begin(), path.waypoints.end());
    }
    pts.push_back(lambda);

    auto dev = [&](cd z, cd) { return dm.psi_reference(z) * hillkdv::expm1(dm.log_ratio(z)); };
    auto dev_end = [&](cd z, cd d) {
        return dm.psi_reference(z) * hillkdv::expm1(dm.log_ratio_edge(edge_n, edge_side, d));
    };
    const double panel_len = 0.5 * Y0;
    std::vector<cd> branch{l0};
    for (int m = 1; m <= dm.cutoff(); ++m) {
        if (dm.spectra().collapsed(m)) continue;
        branch.push_back(dm.spectra().minus(m));
        branch.push_back(dm.spectra().plus(m));
    }
    const std::function<double(cd)> spacing = [&](cd z) {
        double d = std::numeric_limits<double>::infinity();
        for (cd e : branch) d = std::min(d, std::abs(z - e));
        return std::max(panel_len, d);
    };
    cd D = 0.0;
    const int segs = static_cast<int>(pts.size()) - 1;
    for (int s = 0; s < segs; ++s) {
        const cd a = pts[s], b = pts[s + 1];
        if (std::abs(b - a) == 0.0) continue;
        const bool first = s == 0, last = s == segs - 1;
        detail::check_path_segment(dm, a, b, first, last);
        const int panels = std::max(2, static_cast<int>(std::ceil(std::abs(b - a) / panel_len)));
        auto sing = first ? detail::EndSingularity::Start
                          : (last ? detail::EndSingularity::End : detail::EndSingularity::None);
        if (first && last) {
            // direct segment: split to treat both ends
            const cd m = 0.5 * (a + b);
            D += detail::segment_integral(dev, a, m, panels, detail::EndSingularity::Start, spacing);
            D += edge_n ? detail::segment_integral(dev_end, m, b, panels, detail::EndSingularity::End, spacing)
                        : detail::segment_integral(dev, m, b, panels, detail::EndSingularity::End, spacing);
            continue;
        }
        if (last && edge_n) {
            D += detail::segment_integral(dev_end, a, b, panels, sing, spacing);
            continue;
        }
        D += detail::segment_integral(dev, a, b, panels, sing, spacing);
    }
    return -I_unit * sqrt_plus(lambda - l0) + D;
}

/// F_n(lambda) = int_{lambda_n^+}^{lambda} psi dz along the straight segment;
/// equals F(lambda) + i n pi.
inline cd F_n_of(const DiscriminantModel& dm, int n, cd lambda) {
    const HillSpectra& sp = dm.spectra();
    if (n < 1 || n > sp.n_max) throw Error(ErrorKind::PreconditionViolated, "gap index out of range");
    const cd lp = sp.plus(n);
    if (lambda == lp) return 0.0;
    dm.check_off_cuts(lambda);
    detail::check_path_segment(dm, lp, lambda, true, false);
    const double g = std::max(std::abs(sp.gap(n)), 1e-3 * n);
    const int panels = std::clamp(static_cast<int>(std::ceil(2.0 * std::abs(lambda - lp) / g)), 4, 64);
    return detail::segment_integral([&](cd, cd d) { return dm.psi_edge(n, 1, d); }, lp, lambda, panels,
                                    detail::EndSingularity::Start);
}

/// Contour quantities around one gap.
struct GapIntegrals {
    int n = 0;
    GapContour contour;
    cd I{0.0, 0.0};        // (1/pi) oint (lambda - center) psi
    cd I_alt{0.0, 0.0};    // -(1/pi) oint F_n
    cd R{0.0, 0.0};        // (1/pi) oint F_n^3
    cd F2_loop{0.0, 0.0};  // oint F_n^2
    cd psi_loop{0.0, 0.0}; // oint psi
    double F_sup = 0.0;    // max |F_n| over the contour nodes
    double psi_sup = 0.0;
    double I_gap = std::numeric_limits<double>::quiet_NaN();
    double R_gap = std::numeric_limits<double>::quiet_NaN();
    int nodes = 0;
    bool collapsed = false;
};

namespace detail {

struct LoopSums {
    cd I, I_alt, R, F2, psi;
    double F_sup, psi_sup;
};

inline LoopSums loop_sums(const std::vector<cd>& psi_vals, const GapContour& c, cd F_start) {
    const int N = static_cast<int>(psi_vals.size());
    std::vector<cd> g(N);
    std::vector<cd> e(N);
    for (int j = 0; j < N; ++j) {
        e[j] = std::exp(cd(0.0, 2.0 * pi * j / N));
        g[j] = psi_vals[j] * (I_unit * c.radius * e[j]);
    }
    // spectral antiderivative of the periodic integrand in theta
    Eigen::FFT<double> fft;
    std::vector<cd> ghat;
    fft.fwd(ghat, g);
    std::vector<cd> Ghat(N, 0.0);
    for (int k = 1; k < N; ++k) {
        const int kk = k < N / 2 ? k : k - N;
        if (kk == -N / 2) continue;
        Ghat[k] = ghat[k] / (I_unit * double(kk));
    }
    std::vector<cd> G;
    fft.inv(G, Ghat);
    LoopSums s{};
    const double dth = 2.0 * pi / N;
    for (int j = 0; j < N; ++j) {
        const cd F = F_start + (G[j] - G[0]);
        const cd dl = I_unit * c.radius * e[j];
        s.I += (c.radius * e[j]) * psi_vals[j] * dl;
        s.I_alt += F * dl;
        s.R += F * F * F * dl;
        s.F2 += F * F * dl;
        s.psi += g[j];
        s.F_sup = std::max(s.F_sup, std::abs(F));
        s.psi_sup = std::max(s.psi_sup, std::abs(psi_vals[j]));
    }
    s.I *= dth / pi;
    s.I_alt *= -dth / pi;
    s.R *= dth / pi;
    s.F2 *= dth;
    s.psi *= dth;
    return s;
}

} // namespace detail

/// (2/pi) int_gap arccosh^k((-1)^n Delta/2) dlambda, lambda = tau + (gamma/2) cos(theta).
/// Inside the gap arccosh((-1)^n Delta/2) = asinh(sqrt((Delta^2 - 4)/4)), and
/// Delta^2 - 4 is taken from its product form, which keeps full relative
/// accuracy where Delta itself is within roundoff of +-2.
inline double gap_arccosh_integral(const DiscriminantModel& dm, int n, int power, double tol = 1e-10) {
    const HillSpectra& sp = dm.spectra();
    const double tau = sp.mid(n).real(), g = sp.gap(n).real();
    auto f = [&](double th) {
        const double lam = tau + 0.5 * g * std::cos(th);
        const double d = std::max(0.0, dm.delta_sq_minus4_product(lam).value.real());
        return std::pow(std::asinh(0.5 * std::sqrt(d)), power) * 0.5 * g * std::sin(th);
    };
    int N = 32;
    double sum = 0.0;
    for (int j = 1; j < N; ++j) sum += f(pi * j / N);
    double prev = sum * pi / N;
    while (N < 4096) {
        for (int j = 1; j < 2 * N; j += 2) sum += f(pi * j / (2 * N));
        N *= 2;
        const double cur = sum * pi / N;
        if (std::abs(cur - prev) <= tol * std::abs(cur)) return 2.0 / pi * cur;
        prev = cur;
    }
    throw Error(ErrorKind::NotConverged, "gap quadrature did not settle for n=" + std::to_string(n));
}

/// I_n, R_n and the cross-check integrals on the contour c.
inline GapIntegrals gap_integrals(const DiscriminantModel& dm, int n, const GapContour& c, bool gap_forms = false,
                                  double tol = 1e-12, int max_nodes = 1 << 14) {
    const HillSpectra& sp = dm.spectra();
    GapIntegrals out;
    out.n = n;
    out.contour = c;
    if (sp.collapsed(n)) {
        out.collapsed = true;
        return out;
    }
    const cd start = c.center + c.radius;
    const cd F_start = F_n_of(dm, n, start);

    int N = c.nodes;
    std::vector<cd> vals(N);
    for (int j = 0; j < N; ++j) vals[j] = dm.psi(c.point(2.0 * pi * j / N));
    detail::LoopSums prev = detail::loop_sums(vals, c, F_start);
    for (;;) {
        if (2 * N > max_nodes) {
            throw Error(ErrorKind::NotConverged, "contour integrals for n=" + std::to_string(n) + " did not settle");
        }
        std::vector<cd> next(2 * N);
        for (int j = 0; j < N; ++j) {
            next[2 * j] = vals[j];
            next[2 * j + 1] = dm.psi(c.point(2.0 * pi * (2 * j + 1) / (2 * N)));
        }
        vals.swap(next);
        N *= 2;
        const detail::LoopSums cur = detail::loop_sums(vals, c, F_start);
        double magI = 0.0, magR = 0.0;
        for (int j = 0; j < N; ++j) magI += c.radius * c.radius * std::abs(vals[j]);
        magI *= 2.0 / N;
        magR = std::pow(cur.F_sup, 3) * c.radius * 2.0;
        const bool okI = std::abs(cur.I - prev.I) <= tol * (std::abs(cur.I) + magI);
        const bool okR = std::abs(cur.R - prev.R) <= tol * (std::abs(cur.R) + magR);
        prev = cur;
        if (okI && okR) break;
    }
    out.I = prev.I;
    out.I_alt = prev.I_alt;
    out.R = prev.R;
    out.F2_loop = prev.F2;
    out.psi_loop = prev.psi;
    out.F_sup = prev.F_sup;
    out.psi_sup = prev.psi_sup;
    out.nodes = N;
    if (sp.real) {
        out.I = out.I.real();
        out.R = out.R.real();
        if (gap_forms) {
            out.I_gap = gap_arccosh_integral(dm, n, 1);
            out.R_gap = -gap_arccosh_integral(dm, n, 3);
        }
    }
    return out;
}

inline cd action_In(const DiscriminantModel& dm, int n, const GapContour& c) { return gap_integrals(dm, n, c).I; }
inline cd R_n_of(const DiscriminantModel& dm, int n, const GapContour& c) { return gap_integrals(dm, n, c).R; }

struct HamiltonianReport {
    std::vector<GapIntegrals> gaps;
    std::vector<cd> I;
    std::vector<cd> R;
    cd H0{0.0, 0.0};          // direct, (1/2) int q^2
    cd H0_spectral{0.0, 0.0}; // sum 2 n pi I_n
    cd H_kdv_spectral{0.0, 0.0};
    cd H_kdv_direct{0.0, 0.0};
    cd H_star{0.0, 0.0};
    double residual = 0.0;
    double tail_indicator = 0.0; // |sum over the last quartile of n|
    double tail_bound = 0.0;     // neglected n > n_cut, priced by R_n ~ gamma^4/n^3
    int n_cut = 0;
};

struct HamiltonianOptions {
    int threads = 1;
    bool gap_forms = false;
    int grid = 0;       // direct quadrature grid, 0: max(64, 4K)
    int nodes = 64;
    double tol = 1e-12;
};

inline HamiltonianReport hamiltonian_report(const FourierPotential& pot, const DiscriminantModel& dm, int n_cut,
                                            const HamiltonianOptions& opt = {}) {
    const HillSpectra& sp = dm.spectra();
    HamiltonianReport rep;
    rep.n_cut = std::clamp(n_cut, 0, sp.n_max);
    rep.gaps.resize(rep.n_cut);
    parallel_for(rep.n_cut, opt.threads, [&](int i) {
        const int n = i + 1;
        if (sp.collapsed(n)) {
            rep.gaps[i].n = n;
            rep.gaps[i].collapsed = true;
            return;
        }
        const GapContour c = make_contour(dm, n, opt.nodes);
        const bool gf = opt.gap_forms && std::abs(sp.gap(n)) > 1e-8 * n;
        rep.gaps[i] = gap_integrals(dm, n, c, gf, opt.tol);
    });
    for (int n = 1; n <= rep.n_cut; ++n) {
        const GapIntegrals& g = rep.gaps[n - 1];
        rep.I.push_back(g.I);
        rep.R.push_back(g.R);
        const cd term = 8.0 * std::pow(n * pi, 3) * g.I + 8.0 * n * pi * g.R;
        rep.H_kdv_spectral += term;
        rep.H_star += 8.0 * n * pi * g.R;
        rep.H0_spectral += 2.0 * n * pi * g.I;
        if (4 * n > 3 * rep.n_cut) rep.tail_indicator += std::abs(term);
    }
    const int K = pot.max_index();
    const int grid = opt.grid > 0 ? opt.grid : std::max(64, 4 * K);
    const DirectHamiltonian direct = direct_hamiltonian(pot, grid);
    rep.H_kdv_direct = direct.H_kdv;
    rep.H0 = direct.H0;
    rep.residual = std::abs(rep.H_kdv_spectral - rep.H_kdv_direct) / std::max(1.0, std::abs(rep.H_kdv_direct));

    double C = 0.0;
    for (const auto& g : rep.gaps) {
        if (g.collapsed) continue;
        const double gm = std::abs(sp.gap(g.n));
        C = std::max(C, std::abs(g.R) * std::pow(g.n, 3) / std::pow(gm, 4));
    }
    for (int n = rep.n_cut + 1; n <= sp.n_max; ++n) {
        if (sp.collapsed(n)) continue;
        const double gm = std::abs(sp.gap(n));
        rep.tail_bound += 8.0 * n * pi * C * std::pow(gm, 4) / std::pow(n, 3) + pi * pi * n * n * gm * gm;
    }
    return rep;
}

struct F4Fit {
    double H0_est = 0.0;
    double Hkdv_est = 0.0;
    double c2 = 0.0;
    double rms = 0.0;
    std::vector<double> samples;
};

/// At most 16 band midpoints ((m + 1/2) pi)^2, geometrically spaced in m,
/// from m = max(4, 2 (largest open gap index)) across a decade in lambda.
inline std::vector<double> default_f4_samples(const DiscriminantModel& dm) {
    const HillSpectra& sp = dm.spectra();
    int top = 0;
    for (int m = 1; m <= dm.cutoff(); ++m)
        if (!sp.collapsed(m)) top = m;
    const int m_lo = std::max(4, 2 * top);
    const int m_hi = static_cast<int>(std::ceil(std::sqrt(10.0) * (m_lo + 0.5))) + 2;
    const int count = std::min(16, m_hi - m_lo + 1);
    std::vector<double> out;
    int last = -1;
    for (int i = 0; i < count; ++i) {
        const int m = static_cast<int>(std::lround(m_lo * std::pow(double(m_hi) / m_lo, double(i) / (count - 1))));
        if (m == last) continue;
        last = m;
        out.push_back(std::pow((m + 0.5) * pi, 2));
    }
    return out;
}

/// Least-squares fit of lambda^2 - F^4 = c0 + c1/lambda + c2/lambda^2, giving
/// H0 = c0 and H^kdv = 4 c1.
inline F4Fit f4_asymptotics(const DiscriminantModel& dm, const std::vector<double>& samples, int threads = 1) {
    if (samples.size() < 4) throw Error(ErrorKind::IllConditionedFit, "need at least 4 samples");
    const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    if (*lo <= 0.0 || *hi < 10.0 * *lo) throw Error(ErrorKind::IllConditionedFit, "samples span less than a decade");
    const cd l0 = dm.spectra().lambda0_plus;
    const int S = static_cast<int>(samples.size());
    std::vector<double> y(S);
    parallel_for(S, threads, [&](int i) {
        const double lam = samples[i];
        const cd G = -I_unit * sqrt_plus(lam - l0);
        const cd D = F_of(dm, lam) - G;
        // lambda^2 - (G + D)^4 with G^4 = (lambda - lambda_0)^2 expanded analytically
        const cd G2 = G * G, G3 = G2 * G, D2 = D * D;
        const cd v = 2.0 * lam * l0 - l0 * l0 - (4.0 * G3 * D + 6.0 * G2 * D2 + 4.0 * G * D2 * D + D2 * D2);
        y[i] = v.real();
    });
    Eigen::MatrixXd A(S, 3);
    Eigen::VectorXd b(S);
    for (int i = 0; i < S; ++i) {
        A(i, 0) = 1.0;
        A(i, 1) = 1.0 / samples[i];
        A(i, 2) = 1.0 / (samples[i] * samples[i]);
        b(i) = y[i];
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    F4Fit fit;
    fit.H0_est = c(0);
    fit.Hkdv_est = 4.0 * c(1);
    fit.c2 = c(2);
    fit.rms = std::sqrt((A * c - b).squaredNorm() / S);
    fit.samples = samples;
    return fit;
}

struct BirkhoffRow {
    int n;
    double magnitude; // |z_n| = sqrt(I_n)
    double ratio;     // |z_n| / ((|gamma_n| + |mu_n - tau_n|)/sqrt(n)), 0 when undefined
};

inline std::vector<BirkhoffRow> birkhoff_magnitudes(const HamiltonianReport& rep, const HillSpectra& sp,
                                                    double tol = 1e-9) {
    std::vector<BirkhoffRow> rows;
    for (int n = 1; n <= static_cast<int>(rep.I.size()); ++n) {
        const double In = rep.I[n - 1].real();
        if (In < -tol * (1.0 + std::abs(In))) {
            throw Error(ErrorKind::NegativeAction, "I_" + std::to_string(n) + " < 0");
        }
        const double z = std::sqrt(std::max(0.0, In));
        const double scale = (std::abs(sp.gap(n)) + std::abs(sp.mu.at(n - 1) - sp.mid(n))) / std::sqrt(double(n));
        rows.push_back({n, z, scale > 0.0 && z > 0.0 ? z / scale : 0.0});
    }
    return rows;
}

} // namespace hillkdv
