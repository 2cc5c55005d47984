#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "model.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

namespace hawkes {

struct Grid {
    double t = 1.0;
    std::size_t n = 512;

    Grid() = default;
    Grid(double t_, std::size_t n_) : t(t_), n(n_) {
        if (!(t_ > 0.0) || !std::isfinite(t_)) throw ConfigError("grid horizon must be positive and finite");
        if (n_ < 2) throw ConfigError("grid needs at least 2 steps");
    }
    double h() const { return t / static_cast<double>(n); }
    double u(std::size_t k) const { return t * static_cast<double>(k) / static_cast<double>(n); }
};

// s may be complex with Re s >= 0 (the characteristic-function continuation);
// the public real-s entry points only ever pass s >= 0.
struct TransformQuery {
    double t = 1.0;
    std::vector<cplx> s;
    std::vector<cplx> z;
};

struct TransformOptions {
    std::size_t grid_steps = 512;
    double tol = 1e-10;
    std::size_t max_iter = 200;
    cplx initial = 1.0;
    std::size_t threads = 0;
};

struct TransformField {
    Grid grid;
    std::size_t d = 0;
    std::vector<cplx> values;  // values[k * d + j] = G_j(u_k; s, z)
    TransformQuery query;
    std::size_t iterations = 0;
    double residual = 0.0;
    std::vector<double> residual_trace;

    cplx at(std::size_t k, std::size_t j) const { return values[k * d + j]; }
};

inline void check_query(const HawkesModel& m, const TransformQuery& q) {
    if (q.s.size() != m.d || q.z.size() != m.d) throw ConfigError("query vectors must have dimension d");
    for (std::size_t j = 0; j < m.d; ++j) {
        if (!std::isfinite(q.s[j].real()) || !std::isfinite(q.s[j].imag()) || q.s[j].real() < 0.0)
            throw ConfigError("query s must be finite with non-negative real part");
        if (!(std::abs(q.z[j]) <= 1.0 + 1e-12)) throw ConfigError("query z must satisfy |z| <= 1");
    }
    if (!(q.t >= 0.0) || !std::isfinite(q.t)) throw ConfigError("query t must be finite and non-negative");
}

namespace detail {

// Root factor E[z_j^{1{J_j > u}}] = 1 - (1 - z_j) P(J_j > u) on the grid nodes.
inline std::vector<cplx> query_root(const HawkesModel& m, const TransformQuery& q, const Grid& g) {
    std::vector<cplx> root((g.n + 1) * m.d);
    for (std::size_t j = 0; j < m.d; ++j) {
        auto f = [&](double u) { return 1.0 - (1.0 - q.z[j]) * sojourn_survival(m.sojourns[j], u); };
        auto br = sojourn_breakpoints(m.sojourns[j]);
        for (std::size_t k = 0; k <= g.n; ++k) root[k * m.d + j] = quad::dual_cell_value(f, g.u(k), g.h(), g.t, br);
    }
    return root;
}

// Tables that stay fixed while phi is iterated for one (model, query, grid).
// root[k * d + j] is the factor contributed by the cluster's own root at age u_k.
class PhiContext {
public:
    PhiContext(const HawkesModel& m, const std::vector<cplx>& s, const Grid& g, std::vector<cplx> root)
        : m_(m), grid_(g), d_(m.d), root_(std::move(root)) {
        const std::size_t n = g.n;
        for (std::size_t mm = 0; mm < d_; ++mm)
            for (std::size_t j = 0; j < d_; ++j) {
                if (!m.active(mm, j)) continue;
                Pair p;
                p.m = mm;
                p.j = j;
                p.g.resize(n + 1);
                for (std::size_t k = 0; k <= n; ++k) p.g[k] = kernel_value(m.kernels(mm, j), g.u(k));
                p.sg.resize(n + 1);
                for (std::size_t k = 0; k <= n; ++k) p.sg[k] = s[mm] * p.g[k];
                if (auto e = std::get_if<ExponentialKernel>(&m.kernels(mm, j))) {
                    p.exponential = true;
                    p.q = std::exp(-e->alpha * g.h());
                }
                pairs_.push_back(std::move(p));
            }
    }
    PhiContext(const HawkesModel& m, const TransformQuery& q, const Grid& g) : PhiContext(m, q.s, g, query_root(m, q, g)) {}

    // out = phi(in)
    void apply(const std::vector<cplx>& in, std::vector<cplx>& out) const {
        const std::size_t n = grid_.n;
        const double h = grid_.h();
        out = root_;
        std::vector<cplx> D(n + 1), conv(n + 1);
        for (const auto& p : pairs_) {
            for (std::size_t k = 0; k <= n; ++k) D[k] = 1.0 - in[k * d_ + p.m];
            conv[0] = 0.0;
            if (p.exponential) {
                cplx S = D[0];
                double qk = 1.0;
                for (std::size_t k = 1; k <= n; ++k) {
                    S = D[k] + p.q * S;
                    qk *= p.q;
                    conv[k] = h * (S - 0.5 * D[k] - 0.5 * qk * D[0]);
                }
            } else {
                for (std::size_t k = 1; k <= n; ++k) {
                    cplx s = 0.5 * (p.g[0] * D[k] + p.g[k] * D[0]);
                    for (std::size_t l = 1; l < k; ++l) s += p.g[l] * D[k - l];
                    conv[k] = h * s;
                }
            }
            const JumpSpec& b = m_.jumps(p.m, p.j);
            for (std::size_t k = 0; k <= n; ++k) out[k * d_ + p.j] *= jump_lst(b, p.sg[k] + conv[k]);
        }
    }

private:
    struct Pair {
        std::size_t m = 0, j = 0;
        std::vector<double> g;
        std::vector<cplx> sg;
        bool exponential = false;
        double q = 0.0;
    };
    const HawkesModel& m_;
    Grid grid_;
    std::size_t d_;
    std::vector<cplx> root_;
    std::vector<Pair> pairs_;
};

}  // namespace detail

// One application of phi to an existing field (same grid and query).
inline TransformField phi_apply(const HawkesModel& m, const TransformField& field) {
    check_query(m, field.query);
    if (field.values.size() != (field.grid.n + 1) * m.d) throw ConfigError("field does not match grid and dimension");
    detail::PhiContext ctx(m, field.query, field.grid);
    TransformField out = field;
    ctx.apply(field.values, out.values);
    double res = 0.0;
    for (std::size_t x = 0; x < out.values.size(); ++x) res = std::max(res, std::abs(out.values[x] - field.values[x]));
    out.residual = res;
    return out;
}

inline TransformField constant_field(const HawkesModel& m, const TransformQuery& q, const Grid& g, cplx value) {
    TransformField f;
    f.grid = g;
    f.d = m.d;
    f.query = q;
    f.values.assign((g.n + 1) * m.d, value);
    return f;
}

namespace detail {

inline void iterate(const PhiContext& ctx, TransformField& f, const TransformOptions& opt) {
    std::vector<cplx> next;
    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
        ctx.apply(f.values, next);
        double res = 0.0;
        for (std::size_t x = 0; x < next.size(); ++x) res = std::max(res, std::abs(next[x] - f.values[x]));
        f.values.swap(next);
        f.iterations = it;
        f.residual = res;
        f.residual_trace.push_back(res);
        if (res < opt.tol) return;
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "residual %.3e above tolerance %.3e", f.residual, opt.tol);
    throw NonConvergenceError("fixed-point iteration did not converge: " + std::string(buf) + " after " +
                                  std::to_string(opt.max_iter) + " iterations",
                              f.residual_trace);
}

}  // namespace detail

inline TransformField fixed_point(const HawkesModel& m, const TransformQuery& q, const Grid& g,
                                  const TransformOptions& opt = {}) {
    require_valid(m);
    require_stable(m);
    check_query(m, q);
    if (std::abs(opt.initial) > 1.0) throw ConfigError("initial field must lie in the unit disc");
    detail::PhiContext ctx(m, q, g);
    TransformField f = constant_field(m, q, g, opt.initial);
    detail::iterate(ctx, f, opt);
    return f;
}

inline TransformField fixed_point(const HawkesModel& m, const TransformQuery& q, const Grid& g, double tol,
                                  std::size_t max_iter) {
    TransformOptions opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    return fixed_point(m, q, g, opt);
}

// J(u_k) for every grid node u_k, from one field: the cluster transforms do not
// depend on the observation horizon. The root's own factor integrates in closed form;
// the trapezoid rule only sees G_j minus that factor, which vanishes without excitation.
inline std::vector<cplx> joint_transform_curve(const HawkesModel& m, const TransformField& f) {
    const std::size_t n = f.grid.n, d = m.d;
    const double h = f.grid.h();
    auto root = detail::query_root(m, f.query, f.grid);
    std::vector<cplx> out(n + 1);
    std::vector<cplx> offspring(d, 0.0);
    for (std::size_t k = 0; k <= n; ++k) {
        if (k > 0)
            for (std::size_t j = 0; j < d; ++j)
                offspring[j] += 0.5 * h * (f.at(k - 1, j) - root[(k - 1) * d + j] + f.at(k, j) - root[k * d + j]);
        cplx e = 0.0;
        double u = f.grid.u(k);
        for (std::size_t j = 0; j < d; ++j) {
            cplx own = -(1.0 - f.query.z[j]) * sojourn_survival_integral(m.sojourns[j], u);
            e += m.base_rates[j] * (own + offspring[j] - f.query.s[j]);
        }
        out[k] = std::exp(e);
    }
    return out;
}

inline cplx joint_transform(const HawkesModel& m, const TransformQuery& q, const TransformOptions& opt = {}) {
    check_query(m, q);
    if (q.t == 0.0) {
        require_valid(m);
        cplx e = 0.0;
        for (std::size_t j = 0; j < m.d; ++j) e -= m.base_rates[j] * q.s[j];
        return std::exp(e);
    }
    auto f = fixed_point(m, q, Grid(q.t, opt.grid_steps), opt);
    return joint_transform_curve(m, f).back();
}

inline cplx joint_transform(const HawkesModel& m, const TransformQuery& q, const Grid& g,
                            const TransformOptions& opt = {}) {
    if (std::abs(g.t - q.t) > 1e-12 * std::max(1.0, q.t)) throw ConfigError("grid horizon must equal query t");
    TransformOptions o = opt;
    o.grid_steps = g.n;
    return joint_transform(m, q, o);
}

inline TransformQuery make_query(std::size_t d, double t, const std::vector<double>& s, const std::vector<cplx>& z) {
    TransformQuery q;
    q.t = t;
    q.s.assign(d, 0.0);
    q.z.assign(d, 1.0);
    if (!s.empty()) {
        if (s.size() != d) throw ConfigError("s must have dimension d");
        for (std::size_t j = 0; j < d; ++j) q.s[j] = s[j];
    }
    if (!z.empty()) {
        if (z.size() != d) throw ConfigError("z must have dimension d");
        q.z = z;
    }
    return q;
}

inline cplx pgf_Q(const HawkesModel& m, double t, const std::vector<cplx>& z, const TransformOptions& opt = {}) {
    return joint_transform(m, make_query(m.d, t, {}, z), opt);
}

inline double lst_lambda(const HawkesModel& m, double t, const std::vector<double>& s, const TransformOptions& opt = {}) {
    for (double v : s)
        if (v < 0.0) throw ConfigError("s must be non-negative");
    return joint_transform(m, make_query(m.d, t, s, {}), opt).real();
}

inline cplx joint_N_lambda(const HawkesModel& m, double t, const std::vector<double>& s, const std::vector<cplx>& z,
                           const TransformOptions& opt = {}) {
    for (double v : s)
        if (v < 0.0) throw ConfigError("s must be non-negative");
    return joint_transform(m.with_infinite_sojourns(), make_query(m.d, t, s, z), opt);
}

// E[prod_i y_i^{Q_i(t)} z_i^{Q_i(t + tau)}]. A cluster is tracked by its age w at time
// t + tau; it is observed at both times when w >= tau and only at t + tau otherwise.
// Its transform K_j(w) solves the usual fixed point with root factor
// E[y_j^{1{w >= tau, J > w - tau}} z_j^{1{J > w}}], and the pgf is
// prod_j exp(lambda_j int_0^{t + tau} (K_j(w) - 1) dw).
inline cplx two_time_pgf(const HawkesModel& m, double t, double tau, const std::vector<cplx>& y,
                         const std::vector<cplx>& z, const TransformOptions& opt = {}) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be positive");
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("t must be positive");
    if (y.size() != m.d || z.size() != m.d) throw ConfigError("y and z must have dimension d");
    for (std::size_t j = 0; j < m.d; ++j)
        if (!(std::abs(y[j]) <= 1.0 + 1e-12) || !(std::abs(z[j]) <= 1.0 + 1e-12))
            throw ConfigError("y and z must lie in the unit disc");
    require_valid(m);
    require_stable(m);
    if (std::abs(opt.initial) > 1.0) throw ConfigError("initial field must lie in the unit disc");
    const Grid g(t + tau, opt.grid_steps);
    std::vector<cplx> root((g.n + 1) * m.d);
    for (std::size_t j = 0; j < m.d; ++j) {
        const auto& so = m.sojourns[j];
        auto f = [&](double w) -> cplx {
            double late = sojourn_survival(so, w);
            if (w < tau) return 1.0 - (1.0 - z[j]) * late;
            double early = sojourn_survival(so, w - tau);
            return late * y[j] * z[j] + (early - late) * y[j] + (1.0 - early);
        };
        std::vector<double> br{tau};
        for (double b : sojourn_breakpoints(so)) {
            br.push_back(b);
            br.push_back(b + tau);
        }
        for (std::size_t k = 0; k <= g.n; ++k) root[k * m.d + j] = quad::dual_cell_value(f, g.u(k), g.h(), g.t, br);
    }
    TransformQuery q = make_query(m.d, g.t, {}, z);
    detail::PhiContext ctx(m, q.s, g, root);
    TransformField field = constant_field(m, q, g, opt.initial);
    detail::iterate(ctx, field, opt);
    // the root factor minus 1 integrates in closed form; the trapezoid rule sees the rest
    cplx e = 0.0;
    std::vector<cplx> col(g.n + 1);
    for (std::size_t j = 0; j < m.d; ++j) {
        auto I = [&](double u) { return sojourn_survival_integral(m.sojourns[j], u); };
        cplx own = -(1.0 - z[j]) * I(tau) + y[j] * (z[j] - 1.0) * (I(t + tau) - I(tau)) + (y[j] - 1.0) * I(t);
        for (std::size_t k = 0; k <= g.n; ++k) col[k] = field.at(k, j) - root[k * m.d + j];
        e += m.base_rates[j] * (own + quad::trapezoid(col, g.h()));
    }
    return std::exp(e);
}

// LST of the compound process Z_i(t) = sum of claims U_i over the N_i(t) events.
inline double compound_lst(const HawkesModel& m, double t, const std::vector<double>& s,
                           const std::vector<std::function<double(double)>>& claim_lsts,
                           const TransformOptions& opt = {}) {
    if (s.size() != m.d || claim_lsts.size() != m.d) throw ConfigError("s and claim LSTs must have dimension d");
    std::vector<cplx> z(m.d);
    for (std::size_t i = 0; i < m.d; ++i) {
        if (s[i] < 0.0) throw ConfigError("s must be non-negative");
        double v = claim_lsts[i](s[i]);
        if (!(v > 0.0 && v <= 1.0)) throw ConfigError("claim LST values must lie in (0, 1]");
        z[i] = v;
    }
    return joint_N_lambda(m, t, std::vector<double>(m.d, 0.0), z, opt).real();
}

struct PmfResult {
    std::vector<double> pmf;
    double renormalization_error = 0.0;  // |1 - sum of returned probabilities|
    double tail_mass_estimate = 0.0;     // recovered mass on k > max_k
    bool aliasing_warning = false;
    std::size_t points = 0;
};

// P(Q_i(t) = k), k = 0..max_k, by inverting the pgf on M = 4 (max_k + 1) points of the unit circle.
inline PmfResult pmf_Q(const HawkesModel& m, double t, std::size_t i, std::size_t max_k,
                       const TransformOptions& opt = {}) {
    if (i >= m.d) throw ConfigError("component out of range");
    if (!(t > 0.0)) throw ConfigError("t must be positive");
    require_valid(m);
    require_stable(m);
    const std::size_t M = 4 * (max_k + 1);
    const std::size_t half = M / 2;
    std::vector<cplx> P(half + 1);
    parallel_for(half + 1, opt.threads, [&](std::size_t l) {
        std::vector<cplx> z(m.d, 1.0);
        z[i] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(l) / static_cast<double>(M));
        P[l] = pgf_Q(m, t, z, opt);
    });
    auto value = [&](std::size_t l) { return l <= half ? P[l] : std::conj(P[M - l]); };
    std::vector<double> raw(M);
    for (std::size_t k = 0; k < M; ++k) {
        cplx s = 0.0;
        for (std::size_t l = 0; l < M; ++l) {
            std::size_t e = (l * k) % M;
            s += value(l) * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(e) / static_cast<double>(M));
        }
        raw[k] = s.real() / static_cast<double>(M);
    }
    PmfResult r;
    r.points = M;
    double total = 0.0;
    for (std::size_t k = 0; k <= max_k; ++k) {
        double p = std::clamp(raw[k], 0.0, 1.0);
        r.pmf.push_back(p);
        total += p;
    }
    for (std::size_t k = max_k + 1; k < M; ++k) r.tail_mass_estimate += raw[k];
    r.tail_mass_estimate = std::max(0.0, r.tail_mass_estimate);
    r.renormalization_error = std::abs(1.0 - total);
    r.aliasing_warning = r.tail_mass_estimate > 1e-6;
    return r;
}

}  // namespace hawkes
