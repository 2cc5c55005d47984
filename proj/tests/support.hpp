#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <hawkes/model.hpp>
#include <hawkes/rng.hpp>

namespace testing_support {

using namespace hawkes;

inline HawkesModel figure3_model() {
    HawkesModel m(2);
    m.base_rates = {0.5, 0.5};
    m.sojourns = {ExponentialSojourn{2.0}, ExponentialSojourn{2.0}};
    const double alpha[2] = {2.3, 2.0};
    const double b[2][2] = {{1.3, 0.6}, {0.8, 0.5}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            m.kernels(i, j) = ExponentialKernel{alpha[i]};
            m.jumps(i, j) = ConstantJump{b[i][j]};
        }
    return m;
}

inline HawkesModel power_law_model() {
    HawkesModel m(2);
    m.base_rates = {1.0, 1.0};
    m.sojourns = {ExponentialSojourn{1.5}, ExponentialSojourn{1.5}};
    const double c[2] = {1.5, 2.0}, p[2] = {2.5, 3.0};
    const double b[2][2] = {{1.5, 0.5}, {1.0, 0.5}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            m.kernels(i, j) = PowerLawKernel{c[i], p[i]};
            m.jumps(i, j) = ConstantJump{b[i][j]};
        }
    return m;
}

// One-way cross-excitation 2 -> 1 and a heavy-tailed self-loop on 2.
inline HawkesModel tail_model(bool power_law) {
    HawkesModel m(2);
    m.base_rates = {0.5, 1.5};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            m.kernels(i, j) = power_law ? KernelSpec{PowerLawKernel{1.0, i == 0 ? 2.5 : 3.5}}
                                        : KernelSpec{ExponentialKernel{1.5}};
    m.jumps(0, 1) = ConstantJump{1.0};
    m.jumps(1, 1) = ParetoJump{1.0, 1.8};
    return m;
}

inline HawkesModel mginf_model(double lambda, double mu) {
    HawkesModel m(1);
    m.base_rates = {lambda};
    m.sojourns = {ExponentialSojourn{mu}};
    m.kernels(0, 0) = ExponentialKernel{1.0};
    return m;
}

inline HawkesModel poisson_model(std::size_t d, double lambda) {
    HawkesModel m(d);
    for (auto& b : m.base_rates) b = lambda;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) m.kernels(i, j) = ExponentialKernel{1.0};
    return m;
}

struct RandomModelOptions {
    std::size_t max_dim = 3;
    double min_rho = 0.2;
    double max_rho = 0.8;
    bool pareto = false;
};

// Random stable model with light-tailed jumps, rescaled to a target spectral radius.
inline HawkesModel random_model(Rng& rng, const RandomModelOptions& opt = {}) {
    std::size_t d = 1 + static_cast<std::size_t>(rng.uniform() * opt.max_dim);
    HawkesModel m(d);
    for (auto& b : m.base_rates) b = 0.2 + 1.3 * rng.uniform();
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            if (rng.uniform() < 0.5)
                m.kernels(i, j) = ExponentialKernel{0.5 + 2.5 * rng.uniform()};
            else
                m.kernels(i, j) = PowerLawKernel{0.5 + 1.5 * rng.uniform(), 1.5 + 2.0 * rng.uniform()};
            double u = rng.uniform();
            if (u < 0.25)
                m.jumps(i, j) = ZeroJump{};
            else if (u < 0.65)
                m.jumps(i, j) = ConstantJump{0.2 + rng.uniform()};
            else if (!opt.pareto)
                m.jumps(i, j) = ExponentialJump{0.2 + rng.uniform()};
            else
                m.jumps(i, j) = ParetoJump{0.2 + rng.uniform(), 1.3 + 0.6 * rng.uniform()};
        }
    for (std::size_t i = 0; i < d; ++i) {
        double u = rng.uniform();
        if (u < 0.3)
            m.sojourns[i] = InfiniteSojourn{};
        else if (u < 0.8)
            m.sojourns[i] = ExponentialSojourn{0.5 + 2.0 * rng.uniform()};
        else
            m.sojourns[i] = DeterministicSojourn{0.5 + 1.5 * rng.uniform()};
    }
    double rho = branching_matrix(m).spectral_radius;
    if (rho > 0.0) {
        double target = opt.min_rho + (opt.max_rho - opt.min_rho) * rng.uniform();
        double f = target / rho;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                auto& b = m.jumps(i, j);
                if (auto c = std::get_if<ConstantJump>(&b)) c->b *= f;
                if (auto e = std::get_if<ExponentialJump>(&b)) e->mean *= f;
                if (auto p = std::get_if<ParetoJump>(&b)) p->C *= std::pow(f, p->gamma);
            }
    }
    return m;
}

inline double kolmogorov_q(double lambda) {
    if (lambda < 1e-3) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 200; ++k) {
        double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

// Two-sample Kolmogorov-Smirnov p-value (asymptotic); ties handled by stepping over equal values.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double dmax = 0.0;
    while (i < a.size() || j < b.size()) {
        double v = std::min(i < a.size() ? a[i] : INFINITY, j < b.size() ? b[j] : INFINITY);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        dmax = std::max(dmax, std::abs(i / na - j / nb));
    }
    double en = std::sqrt(na * nb / (na + nb));
    return kolmogorov_q((en + 0.12 + 0.11 / en) * dmax);
}

// One-sample KS p-value against a continuous CDF.
template <class Cdf>
double ks_one_sample(std::vector<double> x, Cdf cdf) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double dmax = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        double f = cdf(x[k]);
        dmax = std::max({dmax, std::abs((k + 1) / n - f), std::abs(f - k / n)});
    }
    double en = std::sqrt(n);
    return kolmogorov_q((en + 0.12 + 0.11 / en) * dmax);
}

}  // namespace testing_support
