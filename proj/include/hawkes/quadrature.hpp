#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "errors.hpp"

namespace hawkes::quad {

struct DEOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
};

// Exp-sinh double-exponential rule for integrals over [0, inf), real or complex valued.
template <class F>
auto exp_sinh(F&& f, const DEOptions& opt = {}) {
    static thread_local boost::math::quadrature::exp_sinh<double> rule;
    double err = 0.0, l1 = 0.0;
    auto v = rule.integrate(f, opt.rel_tol, &err, &l1);
    if (!(err <= std::max(opt.abs_tol, opt.rel_tol * l1)))
        throw NonConvergenceError("exp-sinh quadrature did not reach tolerance");
    return v;
}

// n-point Gauss-Legendre nodes and weights on [-1, 1], ascending.
template <unsigned N>
std::pair<std::vector<double>, std::vector<double>> gauss_legendre() {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    std::vector<std::pair<double, double>> nodes;
    for (std::size_t i = 0; i < a.size(); ++i) {
        nodes.emplace_back(a[i], w[i]);
        if (a[i] != 0.0) nodes.emplace_back(-a[i], w[i]);
    }
    std::sort(nodes.begin(), nodes.end());
    std::pair<std::vector<double>, std::vector<double>> out;
    for (auto [x, wx] : nodes) {
        out.first.push_back(x);
        out.second.push_back(wx);
    }
    return out;
}

// Grid value for node u of a piecewise-smooth f on [0, T] with step h. Away from the
// breaks this is f(u); a node whose dual cell (u - h/2, u + h/2) contains a break gets
// the cell average instead, which keeps trapezoid sums second order across the jump.
template <class F>
auto dual_cell_value(F&& f, double u, double h, double T, const std::vector<double>& breaks) {
    using R = decltype(f(u));
    double lo = std::max(0.0, u - 0.5 * h), hi = std::min(T, u + 0.5 * h);
    std::vector<double> cuts{lo};
    bool straddles = false;
    for (double b : breaks) {
        if (b > lo && b < hi) cuts.push_back(b);
        // a break exactly at the right end T still splits the clipped half cell
        if ((b > lo && b < hi) || (b == hi && hi < u + 0.5 * h)) straddles = true;
    }
    if (!straddles || !(hi > lo)) return f(u);
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(hi);
    static const auto rule = gauss_legendre<8>();
    R sum{};
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        double a = cuts[c], b = cuts[c + 1];
        for (std::size_t q = 0; q < rule.first.size(); ++q)
            sum += f(0.5 * (a + b) + 0.5 * (b - a) * rule.first[q]) * (0.5 * (b - a) * rule.second[q]);
    }
    return sum / (hi - lo);
}

// Trapezoid rule over equally spaced samples.
template <class T>
T trapezoid(const std::vector<T>& y, double h) {
    if (y.size() < 2) return T{};
    T s = 0.5 * (y.front() + y.back());
    for (std::size_t k = 1; k + 1 < y.size(); ++k) s += y[k];
    return s * h;
}

}  // namespace hawkes::quad
