#include <catch_amalgamated.hpp>

#include <array>

#include <hawkes/moments.hpp>

#include "support.hpp"

using namespace hawkes;
using namespace testing_support;
using Catch::Approx;

namespace {

// d = 1, g(t) = e^{-alpha t}, B = b, J = inf. The generator closes on
// (E N, E lambda, E N^2, E N lambda, E lambda^2); integrate that ODE by RK4.
struct ScalarMoments {
    double mean_N, mean_lambda, var_N, var_lambda, cross_N_lambda;
};

ScalarMoments scalar_hawkes_moments(double lam0, double alpha, double b, double t) {
    using V = std::array<double, 5>;
    auto rhs = [&](const V& y) {
        double EN = y[0], EL = y[1], ENL = y[3], ELL = y[4];
        V d;
        d[0] = EL;
        d[1] = -alpha * (EL - lam0) + b * EL;
        d[2] = 2 * ENL + EL;
        d[3] = -alpha * ENL + alpha * lam0 * EN + b * ENL + ELL + b * EL;
        d[4] = -2 * alpha * ELL + 2 * alpha * lam0 * EL + 2 * b * ELL + b * b * EL;
        return d;
    };
    V y = {0.0, lam0, 0.0, 0.0, lam0 * lam0};
    const int steps = 20000;
    const double h = t / steps;
    for (int s = 0; s < steps; ++s) {
        V k1 = rhs(y), y2, y3, y4;
        for (int i = 0; i < 5; ++i) y2[i] = y[i] + 0.5 * h * k1[i];
        V k2 = rhs(y2);
        for (int i = 0; i < 5; ++i) y3[i] = y[i] + 0.5 * h * k2[i];
        V k3 = rhs(y3);
        for (int i = 0; i < 5; ++i) y4[i] = y[i] + h * k3[i];
        V k4 = rhs(y4);
        for (int i = 0; i < 5; ++i) y[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    return {y[0], y[1], y[2] - y[0] * y[0], y[4] - y[1] * y[1], y[3]};
}

HawkesModel scalar_model(double lam0, double alpha, double b) {
    HawkesModel m(1);
    m.base_rates = {lam0};
    m.kernels(0, 0) = ExponentialKernel{alpha};
    m.jumps(0, 0) = ConstantJump{b};
    return m;
}

MomentRequest req(MomentKind k, std::size_t i, std::size_t j, double t, double tau = 0.0) {
    MomentRequest r;
    r.kind = k;
    r.i = i;
    r.j = j;
    r.t = t;
    r.tau = tau;
    return r;
}

}  // namespace

TEST_CASE("M/G/infinity moments") {
    auto m = mginf_model(1.0, 2.0);
    const double mean = (1 - std::exp(-2.0)) / 2;
    auto q = moment(m, req(MomentKind::MeanQ, 0, 0, 1.0));
    CHECK(q.value == Approx(mean).margin(1e-5));
    CHECK(q.value == Approx(0.4323).margin(1e-4));
    // Poisson occupancy: variance equals mean; lambda is constant
    CHECK(moment(m, req(MomentKind::VarQ, 0, 0, 1.0)).value == Approx(mean).margin(1e-5));
    CHECK(moment(m, req(MomentKind::MeanLambda, 0, 0, 1.0)).value == Approx(1.0).margin(1e-8));
    CHECK(std::abs(moment(m, req(MomentKind::VarLambda, 0, 0, 1.0)).value) < 1e-6);
    CHECK(moment(m, req(MomentKind::CrossQLambda, 0, 0, 1.0)).value == Approx(mean).margin(1e-5));
}

TEST_CASE("independent Poisson components have product cross moments") {
    auto m = poisson_model(2, 0.6);
    m.sojourns = {ExponentialSojourn{1.0}, ExponentialSojourn{3.0}};
    double m1 = 0.6 * (1 - std::exp(-2.0)), m2 = 0.6 * (1 - std::exp(-6.0)) / 3;
    CHECK(moment(m, req(MomentKind::CrossQQ, 0, 1, 2.0)).value == Approx(m1 * m2).margin(2e-5));
    CHECK(moment(m, req(MomentKind::CrossQQ, 0, 0, 2.0)).value == Approx(m1 + m1 * m1).margin(2e-5));
}

TEST_CASE("moments at t = 0") {
    auto m = figure3_model();
    CHECK(moment(m, req(MomentKind::MeanLambda, 0, 0, 0.0)).value == Approx(0.5).margin(1e-9));
    CHECK(std::abs(moment(m, req(MomentKind::MeanQ, 1, 0, 0.0)).value) < 1e-9);
    CHECK(std::abs(moment(m, req(MomentKind::VarLambda, 1, 0, 0.0)).value) < 1e-6);
    CHECK(moment(m, req(MomentKind::TwoTimeQQ, 0, 1, 0.0, 1.0)).value == 0.0);
}

TEST_CASE("scalar exponential Hawkes moments match the moment ODE") {
    const double lam0 = 0.7, alpha = 1.8, b = 0.9, t = 3.0;
    auto m = scalar_model(lam0, alpha, b);
    auto ref = scalar_hawkes_moments(lam0, alpha, b, t);
    TransformOptions o = moment_transform_defaults();
    o.grid_steps = 2048;
    auto rel = [](double a, double e) { return std::abs(a - e) / std::abs(e); };
    CHECK(rel(moment(m, req(MomentKind::MeanQ, 0, 0, t), o).value, ref.mean_N) < 1e-5);
    CHECK(rel(moment(m, req(MomentKind::MeanLambda, 0, 0, t), o).value, ref.mean_lambda) < 1e-5);
    CHECK(rel(moment(m, req(MomentKind::VarQ, 0, 0, t), o).value, ref.var_N) < 1e-4);
    CHECK(rel(moment(m, req(MomentKind::VarLambda, 0, 0, t), o).value, ref.var_lambda) < 1e-4);
    CHECK(rel(moment(m, req(MomentKind::CrossQLambda, 0, 0, t), o).value, ref.cross_N_lambda) < 1e-4);

    // closed forms for the means: kappa = alpha - b
    const double kappa = alpha - b;
    CHECK(ref.mean_lambda == Approx(lam0 + lam0 * b * (1 - std::exp(-kappa * t)) / kappa).epsilon(1e-10));
    CHECK(ref.mean_N == Approx(lam0 * (t + b / kappa * (t - (1 - std::exp(-kappa * t)) / kappa))).epsilon(1e-10));
}

TEST_CASE("transform and renewal routes give the same mean") {
    auto m = figure3_model();
    for (std::size_t i = 0; i < 2; ++i) {
        double tr = moment(m, req(MomentKind::MeanQ, i, 0, 5.0)).value;
        double rn = mean_via_renewal(m, i, 5.0);
        CHECK(std::abs(tr - rn) <= 1e-3 * std::abs(rn));
        double trl = moment(m, req(MomentKind::MeanLambda, i, 0, 5.0)).value;
        double rnl = mean_lambda_via_renewal(m, i, 5.0);
        CHECK(std::abs(trl - rnl) <= 1e-3 * std::abs(rnl));
    }
    Rng rng(31);
    for (int rep = 0; rep < 5; ++rep) {
        auto r = random_model(rng);
        for (std::size_t i = 0; i < r.d; ++i) {
            double tr = moment(r, req(MomentKind::MeanQ, i, 0, 3.0)).value;
            double rn = mean_via_renewal(r, i, 3.0, 1024);
            CHECK(std::abs(tr - rn) <= std::max(1e-3 * std::abs(rn), 1e-6));
        }
    }
}

TEST_CASE("renewal mean intensity approaches the stationary value") {
    auto m = figure3_model();
    auto lam = stationary_intensity(m);
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(mean_lambda_via_renewal(m, i, 40.0, 2048) == Approx(lam[i]).epsilon(0.01));
    CHECK(mean_via_renewal(m, 0, 0.0) == 0.0);
    CHECK(mean_lambda_via_renewal(m, 1, 0.0) == 0.5);
}

TEST_CASE("variances are non-negative on random models") {
    Rng rng(12);
    for (int rep = 0; rep < 8; ++rep) {
        auto m = random_model(rng);
        for (std::size_t i = 0; i < m.d; ++i) {
            for (double t : {0.5, 3.0}) {
                CHECK(moment(m, req(MomentKind::VarQ, i, 0, t)).value > -1e-6);
                CHECK(moment(m, req(MomentKind::VarLambda, i, 0, t)).value > -1e-6);
            }
        }
    }
}

TEST_CASE("halving the stencil step stays within the error estimate") {
    auto m = figure3_model();
    for (auto k : {MomentKind::MeanQ, MomentKind::VarQ, MomentKind::VarLambda, MomentKind::CrossQQ}) {
        auto r = req(k, 0, 1, 4.0);
        auto a = moment(m, r);
        r.step /= 2;
        auto b = moment(m, r);
        INFO(moment_name(r) << ": " << a.value << " (" << a.error << ") vs " << b.value);
        CHECK(std::abs(a.value - b.value) < std::max(a.error, 1e-12) + std::max(b.error, 1e-12));
    }
}

TEST_CASE("moment curves agree with pointwise moments") {
    auto m = figure3_model();
    auto r = req(MomentKind::CrossQLambda, 0, 0, 0.0);
    auto curve = moment_curve(m, r, 4.0, 5);
    // same step as the curve's grid (4 / 512), so only the iteration tolerance separates them
    for (std::size_t k = 0; k < 5; ++k) {
        r.t = k * 1.0;
        TransformOptions o = moment_transform_defaults();
        o.grid_steps = std::max<std::size_t>(2, 128 * k);
        auto v = moment(m, r, o);
        CHECK(curve[k].value == Approx(v.value).epsilon(1e-7).margin(1e-9));
    }
    CHECK_THROWS_AS(moment_curve(m, r, 4.0, 1), ConfigError);
}

TEST_CASE("two-time moments decorrelate at long lags") {
    auto m = figure3_model();
    const double t = 10.0, tau = 20.0;
    double two = moment(m, req(MomentKind::TwoTimeQQ, 0, 1, t, tau)).value;
    double a = moment(m, req(MomentKind::MeanQ, 0, 0, t)).value;
    double b = moment(m, req(MomentKind::MeanQ, 1, 0, t + tau)).value;
    CHECK(two == Approx(a * b).epsilon(0.05));
    auto lam = stationary_intensity(m);
    CHECK(two == Approx(lam[0] / 2 * lam[1] / 2).epsilon(0.05));
    // at short lags the positive correlation is visible
    double near = moment(m, req(MomentKind::TwoTimeQQ, 0, 1, t, 0.2)).value;
    double bn = moment(m, req(MomentKind::MeanQ, 1, 0, t + 0.2)).value;
    CHECK(near > a * bn);
}

TEST_CASE("two-time moment of a Poisson process") {
    // N Poisson(lam): E[N(t) N(t + tau)] = lam t + lam^2 t (t + tau)
    HawkesModel m(1);
    m.base_rates = {0.9};
    m.kernels(0, 0) = ExponentialKernel{1.0};
    double v = moment(m, req(MomentKind::TwoTimeQQ, 0, 0, 1.5, 2.0)).value;
    CHECK(v == Approx(0.9 * 1.5 + 0.81 * 1.5 * 3.5).epsilon(1e-6));
}

TEST_CASE("moment requests are validated") {
    auto m = figure3_model();
    CHECK_THROWS_AS(moment(m, req(MomentKind::MeanQ, 2, 0, 1.0)), ConfigError);
    CHECK_THROWS_AS(moment(m, req(MomentKind::TwoTimeQQ, 0, 0, 1.0, 0.0)), ConfigError);
    auto r = req(MomentKind::MeanQ, 0, 0, 1.0);
    r.step = 0.0;
    CHECK_THROWS_AS(moment(m, r), ConfigError);
    CHECK(moment_name(req(MomentKind::CrossQLambda, 0, 1, 1.0)) == "cross_Qlambda12");
}
