#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "model.hpp"
#include "renewal.hpp"
#include "transform.hpp"

namespace hawkes {

enum class MomentKind { MeanQ, MeanLambda, VarQ, VarLambda, CrossQQ, CrossQLambda, TwoTimeQQ };

struct MomentRequest {
    MomentKind kind = MomentKind::MeanQ;
    std::size_t i = 0;
    std::size_t j = 0;
    double t = 1.0;
    double tau = 0.0;
    double step = 1e-3;
};

struct MomentValue {
    double value = 0.0;
    double error = 0.0;
};

// Moments use a tighter fixed point than plain transform queries: the stencils
// divide transform noise by step^2.
inline TransformOptions moment_transform_defaults() {
    TransformOptions o;
    o.tol = 1e-13;
    o.max_iter = 1000;
    return o;
}

inline std::string moment_name(const MomentRequest& r) {
    auto i = std::to_string(r.i + 1), j = std::to_string(r.j + 1);
    switch (r.kind) {
        case MomentKind::MeanQ: return "mean_Q" + i;
        case MomentKind::MeanLambda: return "mean_lambda" + i;
        case MomentKind::VarQ: return "var_Q" + i;
        case MomentKind::VarLambda: return "var_lambda" + i;
        case MomentKind::CrossQQ: return "cross_QQ" + i + j;
        case MomentKind::CrossQLambda: return "cross_Qlambda" + i + j;
        case MomentKind::TwoTimeQQ: return "two_time_QQ" + i + j;
    }
    return "unknown";
}

namespace detail {

// X = sum_i a_i Q_i + b_i lambda_i; psi(theta) = E[exp(i theta X)].
struct Functional {
    std::vector<double> a, b;
};

inline TransformQuery cf_query(const Functional& f, double t, double theta) {
    const std::size_t d = f.a.size();
    TransformQuery q;
    q.t = t;
    q.s.resize(d);
    q.z.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        q.z[i] = std::polar(1.0, theta * f.a[i]);
        q.s[i] = cplx(0.0, -theta * f.b[i]);
    }
    return q;
}

// psi(theta) at every node of g.
inline std::vector<cplx> cf_curve(const HawkesModel& m, const Functional& f, double theta, const Grid& g,
                                  const TransformOptions& opt) {
    auto field = fixed_point(m, cf_query(f, g.t, theta), g, opt);
    return joint_transform_curve(m, field);
}

inline double first_from_cf(cplx psi, double theta) { return psi.imag() / theta; }
inline double second_from_cf(cplx psi, double theta) { return 2.0 * (1.0 - psi.real()) / (theta * theta); }

inline MomentValue richardson(double coarse, double fine) {
    double r = (4.0 * fine - coarse) / 3.0;
    return {r, std::abs(r - fine)};
}

// Functionals whose first and second moments combine into the request:
// value = sum_k w1_k E[X_k] + w2_k E[X_k^2] + (var? -E[X_0]^2).
struct Plan {
    std::vector<Functional> fs;
    std::vector<double> second_weight;
    bool variance = false;
    bool first_only = false;
};

inline Functional unit(std::size_t d, std::size_t q_index, std::size_t l_index, double qa = 0.0, double lb = 0.0) {
    Functional f{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    if (qa != 0.0) f.a[q_index] += qa;
    if (lb != 0.0) f.b[l_index] += lb;
    return f;
}

inline Plan plan_for(const HawkesModel& m, const MomentRequest& r) {
    const std::size_t d = m.d;
    Plan p;
    switch (r.kind) {
        case MomentKind::MeanQ:
            p.fs = {unit(d, r.i, 0, 1.0)};
            p.first_only = true;
            break;
        case MomentKind::MeanLambda:
            p.fs = {unit(d, 0, r.i, 0.0, 1.0)};
            p.first_only = true;
            break;
        case MomentKind::VarQ:
            p.fs = {unit(d, r.i, 0, 1.0)};
            p.variance = true;
            break;
        case MomentKind::VarLambda:
            p.fs = {unit(d, 0, r.i, 0.0, 1.0)};
            p.variance = true;
            break;
        case MomentKind::CrossQQ: {
            Functional plus{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)}, minus = plus;
            plus.a[r.i] += 1.0;
            plus.a[r.j] += 1.0;
            minus.a[r.i] += 1.0;
            minus.a[r.j] -= 1.0;
            p.fs = {plus, minus};
            p.second_weight = {0.25, -0.25};
            break;
        }
        case MomentKind::CrossQLambda: {
            Functional plus{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)}, minus = plus;
            plus.a[r.i] = 1.0;
            plus.b[r.j] = 1.0;
            minus.a[r.i] = 1.0;
            minus.b[r.j] = -1.0;
            p.fs = {plus, minus};
            p.second_weight = {0.25, -0.25};
            break;
        }
        case MomentKind::TwoTimeQQ: break;
    }
    return p;
}

inline void check_request(const HawkesModel& m, const MomentRequest& r) {
    if (r.i >= m.d || r.j >= m.d) throw ConfigError("moment indices out of range");
    if (!(r.step > 0.0) || !(r.step < 1.0)) throw ConfigError("stencil step must lie in (0, 1)");
    if (r.kind == MomentKind::TwoTimeQQ && !(r.tau > 0.0)) throw ConfigError("two-time moments need tau > 0");
    if (!(r.t >= 0.0) || !std::isfinite(r.t)) throw ConfigError("moment time must be finite and non-negative");
}

// Combine cf values psi[f][level] (levels: theta, theta/2) into the requested moment.
inline MomentValue combine(const Plan& p, const std::vector<std::vector<cplx>>& psi, double theta) {
    double th[2] = {theta, theta / 2};
    if (p.first_only) return richardson(first_from_cf(psi[0][0], th[0]), first_from_cf(psi[0][1], th[1]));
    if (p.variance) {
        auto m1 = richardson(first_from_cf(psi[0][0], th[0]), first_from_cf(psi[0][1], th[1]));
        auto m2 = richardson(second_from_cf(psi[0][0], th[0]), second_from_cf(psi[0][1], th[1]));
        return {m2.value - m1.value * m1.value, m2.error + 2.0 * std::abs(m1.value) * m1.error};
    }
    MomentValue out;
    for (std::size_t f = 0; f < p.fs.size(); ++f) {
        auto m2 = richardson(second_from_cf(psi[f][0], th[0]), second_from_cf(psi[f][1], th[1]));
        out.value += p.second_weight[f] * m2.value;
        out.error += std::abs(p.second_weight[f]) * m2.error;
    }
    return out;
}

inline MomentValue two_time_moment(const HawkesModel& m, const MomentRequest& r, const TransformOptions& opt) {
    double th[2] = {r.step, r.step / 2};
    double second[2][2];
    for (int sign = 0; sign < 2; ++sign)
        for (int lv = 0; lv < 2; ++lv) {
            std::vector<cplx> y(m.d, 1.0), z(m.d, 1.0);
            y[r.i] = std::polar(1.0, th[lv]);
            z[r.j] = std::polar(1.0, sign == 0 ? th[lv] : -th[lv]);
            second[sign][lv] = second_from_cf(two_time_pgf(m, r.t, r.tau, y, z, opt), th[lv]);
        }
    auto plus = richardson(second[0][0], second[0][1]);
    auto minus = richardson(second[1][0], second[1][1]);
    return {0.25 * (plus.value - minus.value), 0.25 * (plus.error + minus.error)};
}

}  // namespace detail

inline MomentValue moment(const HawkesModel& m, const MomentRequest& r,
                          const TransformOptions& opt = moment_transform_defaults()) {
    require_valid(m);
    require_stable(m);
    detail::check_request(m, r);
    if (r.kind == MomentKind::TwoTimeQQ) {
        if (r.t == 0.0) return {0.0, 0.0};
        return detail::two_time_moment(m, r, opt);
    }
    auto plan = detail::plan_for(m, r);
    double th[2] = {r.step, r.step / 2};
    std::vector<std::vector<cplx>> psi(plan.fs.size(), std::vector<cplx>(2));
    for (std::size_t f = 0; f < plan.fs.size(); ++f)
        for (int lv = 0; lv < 2; ++lv) psi[f][lv] = joint_transform(m, detail::cf_query(plan.fs[f], r.t, th[lv]), opt);
    return detail::combine(plan, psi, r.step);
}

// The moment at t_k = k T / (K - 1), k = 0..K-1, from one fixed point per stencil
// point on [0, T]; the grid is refined to a multiple of K - 1 of at least opt.grid_steps.
inline std::vector<MomentValue> moment_curve(const HawkesModel& m, MomentRequest r, double T, std::size_t K,
                                             const TransformOptions& opt = moment_transform_defaults()) {
    require_valid(m);
    require_stable(m);
    if (K < 2) throw ConfigError("moment curve needs at least 2 time points");
    if (!(T > 0.0)) throw ConfigError("moment curve horizon must be positive");
    r.t = T;
    detail::check_request(m, r);
    std::vector<MomentValue> out(K);
    if (r.kind == MomentKind::TwoTimeQQ) {
        for (std::size_t k = 0; k < K; ++k) {
            r.t = T * static_cast<double>(k) / static_cast<double>(K - 1);
            out[k] = moment(m, r, opt);
        }
        return out;
    }
    std::size_t stride = (opt.grid_steps + K - 2) / (K - 1);
    Grid g(T, stride * (K - 1));
    auto plan = detail::plan_for(m, r);
    double th[2] = {r.step, r.step / 2};
    std::vector<std::vector<std::vector<cplx>>> curves(plan.fs.size(), std::vector<std::vector<cplx>>(2));
    std::vector<std::pair<std::size_t, int>> jobs;
    for (std::size_t f = 0; f < plan.fs.size(); ++f)
        for (int lv = 0; lv < 2; ++lv) jobs.emplace_back(f, lv);
    parallel_for(jobs.size(), opt.threads, [&](std::size_t x) {
        auto [f, lv] = jobs[x];
        curves[f][lv] = detail::cf_curve(m, plan.fs[f], th[lv], g, opt);
    });
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<std::vector<cplx>> psi(plan.fs.size(), std::vector<cplx>(2));
        for (std::size_t f = 0; f < plan.fs.size(); ++f)
            for (int lv = 0; lv < 2; ++lv) psi[f][lv] = curves[f][lv][k * stride];
        out[k] = detail::combine(plan, psi, r.step);
    }
    return out;
}

// E[Q_i(t)] = sum_j lambda_j int_0^t R^Q_ij(u) du.
inline double mean_via_renewal(const HawkesModel& m, std::size_t i, double t, std::size_t grid_steps = 512) {
    if (i >= m.d) throw ConfigError("component out of range");
    if (t == 0.0) return 0.0;
    auto sol = solve_renewal(m, Grid(t, grid_steps));
    double s = 0.0;
    for (std::size_t j = 0; j < m.d; ++j) s += m.base_rates[j] * sol.integral(sol.RQ, i, j);
    return s;
}

// E[lambda_i(t)] = lambda_i,inf + sum_j lambda_j int_0^t R^lambda_ij(u) du.
inline double mean_lambda_via_renewal(const HawkesModel& m, std::size_t i, double t, std::size_t grid_steps = 512) {
    if (i >= m.d) throw ConfigError("component out of range");
    if (t == 0.0) return m.base_rates[i];
    auto sol = solve_renewal(m, Grid(t, grid_steps));
    double s = m.base_rates[i];
    for (std::size_t j = 0; j < m.d; ++j) s += m.base_rates[j] * sol.integral(sol.RL, i, j);
    return s;
}

}  // namespace hawkes
