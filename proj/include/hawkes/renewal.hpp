#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "model.hpp"
#include "quadrature.hpp"
#include "transform.hpp"

namespace hawkes {

// Tensors are indexed [(k * d + i) * d + j] for R_ij(u_k).
struct RenewalSolution {
    Grid grid;
    std::size_t d = 0;
    std::vector<double> RQ, RL;
    std::vector<double> RQbar, RLbar;  // filled for j in I_i only
    std::vector<char> fractional_rows;

    double at(const std::vector<double>& T, std::size_t k, std::size_t i, std::size_t j) const {
        return T[(k * d + i) * d + j];
    }
    // Trapezoid integral of R_ij over [0, grid.t].
    double integral(const std::vector<double>& T, std::size_t i, std::size_t j) const {
        std::vector<double> col(grid.n + 1);
        for (std::size_t k = 0; k <= grid.n; ++k) col[k] = at(T, k, i, j);
        return quad::trapezoid(col, grid.h());
    }
};

namespace detail {

// Solves x_j(u) = f_j(u) + sum_{m in S} E[B_mj] (g_mj * x_m)(u), j in S, by
// product-trapezoid stepping. forcing(k, j) supplies f_j(u_k); returns x[k * |S| + a].
template <class Forcing>
std::vector<double> volterra_solve(const HawkesModel& m, const Grid& g, const std::vector<std::size_t>& S,
                                   Forcing forcing) {
    const std::size_t n = g.n, s = S.size();
    const double h = g.h();
    // w[(a * s + b)][l] = E[B_{S_a S_b}] g_{S_a S_b}(u_l)
    std::vector<std::vector<double>> w(s * s);
    for (std::size_t a = 0; a < s; ++a)
        for (std::size_t b = 0; b < s; ++b) {
            std::size_t mm = S[a], j = S[b];
            if (!m.active(mm, j)) continue;
            auto& col = w[a * s + b];
            col.resize(n + 1);
            double eb = jump_mean(m.jumps(mm, j));
            for (std::size_t l = 0; l <= n; ++l) col[l] = eb * kernel_value(m.kernels(mm, j), g.u(l));
        }
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(s, s);
    for (std::size_t a = 0; a < s; ++a)
        for (std::size_t b = 0; b < s; ++b)
            if (!w[a * s + b].empty()) A(b, a) -= 0.5 * h * w[a * s + b][0];
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    double det = std::abs(lu.determinant());
    if (!(det > 1e-8))
        throw NonConvergenceError("renewal step matrix is near-singular; refine the grid (increase grid steps)");

    std::vector<double> x((n + 1) * s, 0.0);
    for (std::size_t b = 0; b < s; ++b) x[b] = forcing(0, S[b]);
    Eigen::VectorXd rhs(s);
    for (std::size_t k = 1; k <= n; ++k) {
        for (std::size_t b = 0; b < s; ++b) {
            double acc = forcing(k, S[b]);
            for (std::size_t a = 0; a < s; ++a) {
                const auto& col = w[a * s + b];
                if (col.empty()) continue;
                double c = 0.5 * col[k] * x[a];
                for (std::size_t l = 1; l < k; ++l) c += col[l] * x[(k - l) * s + a];
                acc += h * c;
            }
            rhs(b) = acc;
        }
        Eigen::VectorXd sol = lu.solve(rhs);
        for (std::size_t b = 0; b < s; ++b) x[k * s + b] = sol(b);
    }
    return x;
}

// Trapezoid values of (g * f)(u_k) for one kernel and one sampled function f.
inline std::vector<double> grid_convolution(const KernelSpec& kernel, const Grid& g, const std::vector<double>& f) {
    const std::size_t n = g.n;
    std::vector<double> gv(n + 1), out(n + 1, 0.0);
    for (std::size_t l = 0; l <= n; ++l) gv[l] = kernel_value(kernel, g.u(l));
    for (std::size_t k = 1; k <= n; ++k) {
        double c = 0.5 * (gv[0] * f[k] + gv[k] * f[0]);
        for (std::size_t l = 1; l < k; ++l) c += gv[l] * f[k - l];
        out[k] = g.h() * c;
    }
    return out;
}

}  // namespace detail

inline RenewalSolution solve_renewal(const HawkesModel& m, const Grid& g) {
    require_valid(m);
    require_stable(m);
    const std::size_t d = m.d, n = g.n;
    RenewalSolution r;
    r.grid = g;
    r.d = d;
    r.RQ.assign((n + 1) * d * d, 0.0);
    r.RL.assign((n + 1) * d * d, 0.0);
    std::vector<std::size_t> all(d);
    for (std::size_t j = 0; j < d; ++j) all[j] = j;
    for (std::size_t i = 0; i < d; ++i) {
        std::vector<double> surv(n + 1);
        auto br = sojourn_breakpoints(m.sojourns[i]);
        for (std::size_t k = 0; k <= n; ++k)
            surv[k] = quad::dual_cell_value([&](double u) { return sojourn_survival(m.sojourns[i], u); }, g.u(k), g.h(),
                                            g.t, br);
        auto xq = detail::volterra_solve(m, g, all, [&](std::size_t k, std::size_t j) { return i == j ? surv[k] : 0.0; });
        auto xl = detail::volterra_solve(m, g, all, [&](std::size_t k, std::size_t j) {
            return m.active(i, j) ? jump_mean(m.jumps(i, j)) * kernel_value(m.kernels(i, j), g.u(k)) : 0.0;
        });
        for (std::size_t k = 0; k <= n; ++k)
            for (std::size_t j = 0; j < d; ++j) {
                r.RQ[(k * d + i) * d + j] = xq[k * d + j];
                r.RL[(k * d + i) * d + j] = xl[k * d + j];
            }
    }
    return r;
}

}  // namespace hawkes
