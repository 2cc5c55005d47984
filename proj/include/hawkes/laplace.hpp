#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "model.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "tails.hpp"

// Laplace-domain route to the renewal functions. Slower and less general than the
// time-stepping solver; kept as an independent cross-check.
namespace hawkes::laplace {

// Abate-Whitt Euler summation of the Bromwich integral on the line Re r = A / (2t).
// Discretisation error is about e^{-A} times the size of the function.
struct EulerOptions {
    double A = 18.4;
    int terms = 15;
    int euler = 11;
};

inline std::vector<cplx> euler_abscissae(double t, const EulerOptions& o = {}) {
    if (!(t > 0.0)) throw ConfigError("Laplace inversion needs t > 0");
    std::vector<cplx> r(o.terms + o.euler + 1);
    for (std::size_t k = 0; k < r.size(); ++k)
        r[k] = cplx(o.A, 2.0 * std::numbers::pi * static_cast<double>(k)) / (2.0 * t);
    return r;
}

// values[k] = F(euler_abscissae(t)[k]).
inline double euler_sum(const std::vector<cplx>& values, double t, const EulerOptions& o = {}) {
    const double scale = std::exp(o.A / 2.0) / t;
    std::vector<double> partial(values.size());
    double s = 0.5 * scale * values[0].real();
    partial[0] = s;
    for (std::size_t k = 1; k < values.size(); ++k) {
        s += (k % 2 ? -1.0 : 1.0) * scale * values[k].real();
        partial[k] = s;
    }
    double out = 0.0, binom = 1.0;
    const double w = std::ldexp(1.0, -o.euler);
    for (int j = 0; j <= o.euler; ++j) {
        out += binom * w * partial[o.terms + j];
        binom = binom * (o.euler - j) / (j + 1);
    }
    return out;
}

template <class F>
double invert(F&& transform, double t, const EulerOptions& o = {}) {
    auto r = euler_abscissae(t, o);
    std::vector<cplx> v(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) v[k] = transform(r[k]);
    return euler_sum(v, t, o);
}

// L{g}(r) for Re r > 0. The power-law integral is taken along the ray on which r u is
// real and positive, where the integrand decays like e^{-|r| x} without oscillating.
inline cplx kernel_transform(const KernelSpec& k, cplx r) {
    return std::visit(overloaded{[](const ZeroKernel&) { return cplx(0.0); },
                                 [r](const ExponentialKernel& e) { return 1.0 / (r + e.alpha); },
                                 [r](const PowerLawKernel& p) {
                                     const double a = std::abs(r);
                                     const cplx rot = std::conj(r) / a;  // e^{-i arg r}
                                     quad::DEOptions opt;
                                     opt.rel_tol = 1e-11;
                                     opt.abs_tol = 1e-14 * std::pow(p.c, -p.p);
                                     cplx v = quad::exp_sinh(
                                         [&](double y) { return std::exp(-y) * std::pow(p.c + y * rot / a, -p.p); },
                                         opt);
                                     return v * rot / a;
                                 }},
                      k);
}

inline cplx survival_transform(const SojournSpec& s, cplx r) {
    return std::visit(overloaded{[r](const InfiniteSojourn&) { return 1.0 / r; },
                                 [r](const ExponentialSojourn& e) { return 1.0 / (r + e.mu); },
                                 [r](const DeterministicSojourn& d) { return (1.0 - std::exp(-r * d.tau)) / r; }},
                      s);
}

// E[B_mj] L{g_mj}(r), with identical kernels transformed once.
inline Matrix<cplx> excitation_transform(const HawkesModel& m, cplx r) {
    Matrix<cplx> a(m.d, m.d, cplx(0.0));
    std::vector<std::pair<const KernelSpec*, cplx>> seen;
    for (std::size_t i = 0; i < m.d; ++i)
        for (std::size_t j = 0; j < m.d; ++j) {
            if (!m.active(i, j)) continue;
            const KernelSpec& k = m.kernels(i, j);
            cplx lg;
            bool found = false;
            for (const auto& [spec, v] : seen)
                if (*spec == k) {
                    lg = v;
                    found = true;
                    break;
                }
            if (!found) {
                lg = kernel_transform(k, r);
                seen.emplace_back(&k, lg);
            }
            a(i, j) = jump_mean(m.jumps(i, j)) * lg;
        }
    return a;
}

// Solves x_j = f_j + sum_{m in S} A(m, j) x_m over j in S.
inline std::vector<cplx> solve_row(const Matrix<cplx>& A, const std::vector<std::size_t>& S,
                                   const std::vector<cplx>& f) {
    const std::size_t s = S.size();
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(s, s);
    Eigen::VectorXcd rhs(s);
    for (std::size_t b = 0; b < s; ++b) {
        rhs(b) = f[b];
        for (std::size_t a = 0; a < s; ++a) M(b, a) -= A(S[a], S[b]);
    }
    Eigen::VectorXcd x = M.partialPivLu().solve(rhs);
    return std::vector<cplx>(x.data(), x.data() + s);
}

// L{R^Q_{i<-j}}(r) and L{R^lambda_{i<-j}}(r) for j = 0..d-1.
struct RowTransform {
    std::vector<cplx> Q, L;
};

inline RowTransform renewal_transform(const HawkesModel& m, std::size_t i, cplx r, const Matrix<cplx>& A) {
    std::vector<std::size_t> all(m.d);
    std::vector<cplx> fq(m.d, 0.0), fl(m.d, 0.0);
    for (std::size_t j = 0; j < m.d; ++j) {
        all[j] = j;
        fl[j] = A(i, j);
    }
    fq[i] = survival_transform(m.sojourns[i], r);
    return {solve_row(A, all, fq), solve_row(A, all, fl)};
}

inline RowTransform renewal_transform(const HawkesModel& m, std::size_t i, cplx r) {
    return renewal_transform(m, i, r, excitation_transform(m, r));
}

// R^Q_{i<-j}(u) and R^lambda_{i<-j}(u) by inversion. The root's own survival term
// (which may jump) is added back exactly, so only continuous functions are inverted.
struct RowValues {
    std::vector<double> Q, L;
};

inline RowValues renewal_row(const HawkesModel& m, std::size_t i, double u, const EulerOptions& o = {}) {
    auto r = euler_abscissae(u, o);
    std::vector<RowTransform> tr;
    for (cplx rk : r) tr.push_back(renewal_transform(m, i, rk));
    RowValues out{std::vector<double>(m.d), std::vector<double>(m.d)};
    std::vector<cplx> v(r.size());
    for (std::size_t j = 0; j < m.d; ++j) {
        for (std::size_t k = 0; k < r.size(); ++k)
            v[k] = tr[k].Q[j] - (i == j ? survival_transform(m.sojourns[i], r[k]) : cplx(0.0));
        out.Q[j] = euler_sum(v, u, o) + (i == j ? sojourn_survival(m.sojourns[i], u) : 0.0);
        for (std::size_t k = 0; k < r.size(); ++k) v[k] = tr[k].L[j];
        out.L[j] = euler_sum(v, u, o);
    }
    return out;
}

struct FractionalOptions {
    EulerOptions euler;
    double panel_phase = 4.0;  // largest oscillation phase per 8-point Gauss panel
    std::size_t threads = 0;
};

// Fractional renewal functions of row i at the requested times, columns j in I_i
// (entries [k * d + j]; other columns stay 0). The forcing transform is a Gauss sum of
// the inverted convolutions over [0, 2 max(times)]; e^{-r u} makes the rest negligible.
struct FractionalRow {
    std::vector<double> times;
    std::vector<double> Q, L;
};

inline FractionalRow fractional_row(const HawkesModel& m, const TailIndexReport& rep, std::size_t i,
                                    const std::vector<double>& times, const FractionalOptions& opt = {}) {
    detail::require_tail_range(rep, i);
    if (times.empty()) throw ConfigError("no evaluation times");
    double t_min = times.front(), t_max = times.front();
    for (double t : times) {
        if (!(t > 0.0)) throw ConfigError("Laplace inversion needs t > 0");
        t_min = std::min(t_min, t);
        t_max = std::max(t_max, t);
    }
    const std::size_t d = m.d;
    const double delta = rep.gamma_bar[i];
    const auto& S = rep.I[i];
    const auto& eo = opt.euler;

    const double H = 2.0 * t_max;
    const double omega = std::numbers::pi * (eo.terms + eo.euler) / t_min;
    const std::size_t panels = static_cast<std::size_t>(std::ceil(H * omega / opt.panel_phase));
    const double w = H / static_cast<double>(panels);
    static const auto rule = quad::gauss_legendre<8>();
    const std::size_t n_nodes = panels * rule.first.size();
    std::vector<double> node(n_nodes), weight(n_nodes);
    for (std::size_t p = 0; p < panels; ++p)
        for (std::size_t q = 0; q < rule.first.size(); ++q) {
            node[p * 8 + q] = (p + 0.5 + 0.5 * rule.first[q]) * w;
            weight[p * 8 + q] = 0.5 * w * rule.second[q];
        }

    // forcing values fq/fl[node * |S| + a]
    const std::size_t s = S.size();
    std::vector<double> fq(n_nodes * s, 0.0), fl(n_nodes * s, 0.0);
    parallel_for(n_nodes, opt.threads, [&](std::size_t k) {
        const double u = node[k];
        auto r = euler_abscissae(u, eo);
        std::vector<Matrix<cplx>> A;
        std::vector<RowTransform> tr;
        for (cplx rk : r) {
            A.push_back(excitation_transform(m, rk));
            tr.push_back(renewal_transform(m, i, rk, A.back()));
        }
        std::vector<cplx> vq(r.size()), vl(r.size());
        for (std::size_t a = 0; a < s; ++a) {
            const std::size_t j = S[a];
            for (std::size_t mm : rep.I2[i][j]) {
                // (g_mj * R_{i<-m})(u) = L^{-1}{L{g_mj} L{R_{i<-m}}}(u)
                const double eb = jump_mean(m.jumps(mm, j));
                for (std::size_t q = 0; q < r.size(); ++q) {
                    cplx lg = A[q](mm, j) / eb;
                    vq[q] = lg * tr[q].Q[mm];
                    vl[q] = lg * tr[q].L[mm];
                }
                const double C = rep.graph.C(mm, j);
                double cq = euler_sum(vq, u, eo);
                double cl = euler_sum(vl, u, eo) + (mm == i ? kernel_value(m.kernels(mm, j), u) : 0.0);
                fq[k * s + a] += C * std::pow(std::max(cq, 0.0), delta);
                fl[k * s + a] += C * std::pow(std::max(cl, 0.0), delta);
            }
        }
    });

    FractionalRow out{times, std::vector<double>(times.size() * d, 0.0), std::vector<double>(times.size() * d, 0.0)};
    parallel_for(times.size(), opt.threads, [&](std::size_t k) {
        const double t = times[k];
        auto r = euler_abscissae(t, eo);
        std::vector<std::vector<cplx>> xq(r.size()), xl(r.size());
        for (std::size_t q = 0; q < r.size(); ++q) {
            std::vector<cplx> Fq(s, 0.0), Fl(s, 0.0);
            for (std::size_t n = 0; n < n_nodes; ++n) {
                cplx e = weight[n] * std::exp(-r[q] * node[n]);
                for (std::size_t a = 0; a < s; ++a) {
                    Fq[a] += e * fq[n * s + a];
                    Fl[a] += e * fl[n * s + a];
                }
            }
            auto A = excitation_transform(m, r[q]);
            xq[q] = solve_row(A, S, Fq);
            xl[q] = solve_row(A, S, Fl);
        }
        std::vector<cplx> v(r.size());
        for (std::size_t a = 0; a < s; ++a) {
            for (std::size_t q = 0; q < r.size(); ++q) v[q] = xq[q][a];
            out.Q[k * d + S[a]] = euler_sum(v, t, eo);
            for (std::size_t q = 0; q < r.size(); ++q) v[q] = xl[q][a];
            out.L[k * d + S[a]] = euler_sum(v, t, eo);
        }
    });
    return out;
}

}  // namespace hawkes::laplace
