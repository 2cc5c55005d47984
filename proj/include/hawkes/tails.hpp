#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "graph.hpp"
#include "model.hpp"
#include "renewal.hpp"

namespace hawkes {

class NotIrreducibleError : public OutOfScopeError {
public:
    using OutOfScopeError::OutOfScopeError;
};

struct TailIndexReport {
    HawkesGraph graph;
    ClassDecomposition classes;
    Matrix<char> reach;
    Matrix<double> delta;                          // +inf where no APT edge feeds (i, j)
    std::vector<double> gamma_bar;                 // +inf when no heavy tail reaches i
    std::vector<std::vector<std::size_t>> I;       // argmin_j delta_ij
    std::vector<std::vector<std::vector<std::size_t>>> I2;  // I2[i][j] = I_ij, non-empty for j in I_i
    std::vector<double> omega;                     // Gamma(1 - gamma_bar_i)
};

namespace detail {

inline bool ties(double a, double b) {
    return std::isfinite(a) && std::isfinite(b) && std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

// m feeds the (i, .) row when m = i (root or direct excitation) or m reaches i.
inline bool feeds(const Matrix<char>& reach, std::size_t i, std::size_t m) { return m == i || reach(i, m); }

}  // namespace detail

inline TailIndexReport tail_indices(const HawkesModel& m) {
    require_valid(m);
    std::vector<std::string> bad;
    for (std::size_t i = 0; i < m.d; ++i)
        for (std::size_t j = 0; j < m.d; ++j)
            if (m.active(i, j) && std::holds_alternative<ExponentialJump>(m.jumps(i, j)))
                bad.push_back("(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
    if (!bad.empty()) {
        std::string msg = "tail analysis needs Pareto or constant jumps on every edge; offending cells:";
        for (const auto& b : bad) msg += " " + b;
        throw UnsupportedConfigurationError(msg);
    }

    const std::size_t d = m.d;
    const double inf = std::numeric_limits<double>::infinity();
    TailIndexReport r;
    r.graph = build_graph(m);
    r.classes = classify(r.graph);
    r.reach = reachability(r.graph);
    r.delta = Matrix<double>(d, d, inf);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t mm = 0; mm < d; ++mm)
                if (detail::feeds(r.reach, i, mm) && !std::isnan(r.graph.gamma(mm, j)))
                    r.delta(i, j) = std::min(r.delta(i, j), r.graph.gamma(mm, j));
    r.gamma_bar.assign(d, inf);
    r.I.assign(d, {});
    r.I2.assign(d, std::vector<std::vector<std::size_t>>(d));
    r.omega.assign(d, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) r.gamma_bar[i] = std::min(r.gamma_bar[i], r.delta(i, j));
        if (std::isinf(r.gamma_bar[i])) continue;
        for (std::size_t j = 0; j < d; ++j) {
            if (!detail::ties(r.delta(i, j), r.gamma_bar[i])) continue;
            r.I[i].push_back(j);
            for (std::size_t mm = 0; mm < d; ++mm)
                if (detail::feeds(r.reach, i, mm) && !std::isnan(r.graph.gamma(mm, j)) &&
                    detail::ties(r.graph.gamma(mm, j), r.delta(i, j)))
                    r.I2[i][j].push_back(mm);
        }
        r.omega[i] = std::tgamma(1.0 - r.gamma_bar[i]);
    }
    return r;
}

enum class TailProcess { N, Q, Lambda };

namespace detail {

inline void require_tail_range(const TailIndexReport& rep, std::size_t i) {
    double g = rep.gamma_bar[i];
    if (!(g > 1.0 && g < 2.0)) {
        std::ostringstream os;
        os << "component " << i + 1 << " has tail index " << g
           << "; asymptotics are implemented only for tail indices in (1, 2)";
        throw OutOfScopeError(os.str());
    }
}

}  // namespace detail

// Fills RQbar/RLbar for the requested rows (default: every row with a finite tail index).
inline void solve_renewal_fractional(const HawkesModel& m, RenewalSolution& base, const TailIndexReport& rep,
                                     std::optional<std::vector<std::size_t>> rows = std::nullopt) {
    const std::size_t d = m.d, n = base.grid.n;
    const Grid& g = base.grid;
    if (!rows) {
        rows.emplace();
        for (std::size_t i = 0; i < d; ++i)
            if (std::isfinite(rep.gamma_bar[i])) rows->push_back(i);
    }
    base.RQbar.assign((n + 1) * d * d, 0.0);
    base.RLbar.assign((n + 1) * d * d, 0.0);
    base.fractional_rows.assign(d, 0);
    for (std::size_t i : *rows) {
        detail::require_tail_range(rep, i);
        const double delta = rep.gamma_bar[i];
        const auto& S = rep.I[i];
        // forcing[(k * d + j)] for j in I_i
        std::vector<double> fq((n + 1) * d, 0.0), fl((n + 1) * d, 0.0);
        std::vector<double> rq(n + 1), rl(n + 1);
        for (std::size_t j : S) {
            std::vector<double> sq(n + 1, 0.0), sl(n + 1, 0.0);
            for (std::size_t mm : rep.I2[i][j]) {
                const double C = rep.graph.C(mm, j);
                for (std::size_t k = 0; k <= n; ++k) {
                    rq[k] = base.at(base.RQ, k, i, mm);
                    rl[k] = base.at(base.RL, k, i, mm);
                }
                auto cq = detail::grid_convolution(m.kernels(mm, j), g, rq);
                auto cl = detail::grid_convolution(m.kernels(mm, j), g, rl);
                for (std::size_t k = 0; k <= n; ++k) {
                    double direct = mm == i ? kernel_value(m.kernels(mm, j), g.u(k)) : 0.0;
                    sq[k] += C * std::pow(std::max(cq[k], 0.0), delta);
                    sl[k] += C * std::pow(std::max(direct + cl[k], 0.0), delta);
                }
            }
            for (std::size_t k = 0; k <= n; ++k) {
                fq[k * d + j] = sq[k];
                fl[k * d + j] = sl[k];
            }
        }
        auto xq = detail::volterra_solve(m, g, S, [&](std::size_t k, std::size_t j) { return fq[k * d + j]; });
        auto xl = detail::volterra_solve(m, g, S, [&](std::size_t k, std::size_t j) { return fl[k * d + j]; });
        for (std::size_t k = 0; k <= n; ++k)
            for (std::size_t a = 0; a < S.size(); ++a) {
                base.RQbar[(k * d + i) * d + S[a]] = xq[k * S.size() + a];
                base.RLbar[(k * d + i) * d + S[a]] = xl[k * S.size() + a];
            }
        base.fractional_rows[i] = 1;
    }
}

struct TailAsymptote {
    double coefficient = 0.0;
    double index = 0.0;
    double operator()(double x) const { return coefficient * std::pow(x, -index); }
};

struct TailOptions {
    std::size_t grid_steps = 1024;
};

// P(X_i(t) > x) ~ coefficient * x^(-index) for X in {N, Q, lambda}.
inline TailAsymptote tail_asymptote(const HawkesModel& model, double t, std::size_t i, TailProcess process,
                                    const TailOptions& opt = {}) {
    if (i >= model.d) throw ConfigError("component out of range");
    HawkesModel m = process == TailProcess::N ? model.with_infinite_sojourns() : model;
    auto rep = tail_indices(m);
    detail::require_tail_range(rep, i);
    auto sol = solve_renewal(m, Grid(t, opt.grid_steps));
    solve_renewal_fractional(m, sol, rep, std::vector<std::size_t>{i});
    const auto& T = process == TailProcess::Lambda ? sol.RLbar : sol.RQbar;
    TailAsymptote a;
    a.index = rep.gamma_bar[i];
    for (std::size_t j : rep.I[i]) a.coefficient += m.base_rates[j] * sol.integral(T, i, j);
    return a;
}

// P(<c, Q(t)> > x) ~ coefficient * x^(-gamma) on an irreducible graph.
inline TailAsymptote linear_combination_tail(const HawkesModel& m, double t, const std::vector<double>& c,
                                             const TailOptions& opt = {}) {
    if (c.size() != m.d) throw ConfigError("weight vector must have dimension d");
    for (double v : c)
        if (!(v >= 0.0)) throw ConfigError("weights must be non-negative");
    auto rep = tail_indices(m);
    if (rep.classes.classes.size() != 1)
        throw NotIrreducibleError("linear-combination tails are implemented for irreducible Hawkes graphs only");
    for (std::size_t i = 0; i < m.d; ++i) detail::require_tail_range(rep, i);
    auto sol = solve_renewal(m, Grid(t, opt.grid_steps));
    solve_renewal_fractional(m, sol, rep);
    TailAsymptote a;
    a.index = rep.gamma_bar[0];
    for (std::size_t i = 0; i < m.d; ++i) {
        if (c[i] == 0.0) continue;
        double s = 0.0;
        for (std::size_t j : rep.I[i]) s += m.base_rates[j] * sol.integral(sol.RQbar, i, j);
        a.coefficient += std::pow(c[i], a.index) * s;
    }
    return a;
}

}  // namespace hawkes
