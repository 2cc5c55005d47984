#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include <hawkes/model.hpp>

#include "support.hpp"

using namespace hawkes;
using Catch::Approx;

TEST_CASE("kernel values and integrals match closed forms") {
    CHECK(kernel_value(ExponentialKernel{2.0}, 0.0) == 1.0);
    CHECK(kernel_value(ExponentialKernel{2.0}, 1.0) == Approx(0.1353352832366127).epsilon(1e-14));
    CHECK(kernel_value(PowerLawKernel{1.5, 2.5}, 0.0) == Approx(std::exp(-2.5 * std::log(1.5))).epsilon(1e-14));
    CHECK(kernel_value(PowerLawKernel{1.5, 2.5}, 0.0) == Approx(0.36289).margin(1e-5));
    CHECK(kernel_value(ZeroKernel{}, 3.0) == 0.0);
    CHECK_THROWS_AS(kernel_value(ExponentialKernel{1.0}, -1.0), ConfigError);

    CHECK(kernel_integral(ExponentialKernel{2.0}, 1.0) == Approx(0.43233235838169365).epsilon(1e-14));
    CHECK(kernel_integral(PowerLawKernel{1.5, 2.5}, 0.0) == 0.0);
    CHECK(kernel_integral(ExponentialKernel{2.0}, 0.0) == 0.0);
}

TEST_CASE("power-law L1 norm agrees with quadrature to infinity") {
    boost::math::quadrature::exp_sinh<double> integrator;
    for (auto [c, p] : {std::pair{1.5, 2.5}, std::pair{0.7, 1.3}, std::pair{2.0, 3.5}}) {
        double oracle = integrator.integrate([c = c, p = p](double t) { return std::pow(c + t, -p); });
        CHECK(kernel_l1_norm(PowerLawKernel{c, p}) == Approx(oracle).epsilon(1e-10));
    }
    CHECK(kernel_l1_norm(PowerLawKernel{1.5, 2.5}) == Approx(0.36289).margin(1e-5));
}

TEST_CASE("kernel integral is monotone and bounded by the L1 norm") {
    Rng rng(11);
    for (int rep = 0; rep < 200; ++rep) {
        KernelSpec k = rep % 2 ? KernelSpec{ExponentialKernel{0.1 + 5 * rng.uniform()}}
                               : KernelSpec{PowerLawKernel{0.1 + 3 * rng.uniform(), 1.05 + 3 * rng.uniform()}};
        double prev = 0.0, l1 = kernel_l1_norm(k);
        for (double u = 0.0; u < 50.0; u += 0.37) {
            double v = kernel_integral(k, u);
            CHECK(v >= prev - 1e-15);
            CHECK(v <= l1 * (1 + 1e-12));
            prev = v;
        }
        // offset quantile inverts the normalized integral
        double u = 0.1 + 4 * rng.uniform(), w = rng.uniform();
        double v = kernel_offset_quantile(k, u, w);
        CHECK(kernel_integral(k, v) / kernel_integral(k, u) == Approx(w).margin(1e-10));
    }
}

TEST_CASE("jump LST closed forms") {
    CHECK(jump_lst(ConstantJump{1.3}, 0.0) == 1.0);
    CHECK(jump_lst(ConstantJump{1.3}, 1.0) == Approx(std::exp(-1.3)).epsilon(1e-14));
    CHECK(jump_lst(ConstantJump{1.3}, 1.0) == Approx(0.27253).margin(1e-5));
    CHECK(jump_lst(ExponentialJump{2.0}, 0.5) == Approx(0.5).epsilon(1e-14));
    CHECK(jump_lst(ZeroJump{}, 4.0) == 1.0);
    CHECK(jump_lst(ParetoJump{1.0, 1.8}, 0.0) == 1.0);
    CHECK_THROWS_AS(jump_lst(ConstantJump{1.0}, -0.1), ConfigError);
}

TEST_CASE("Pareto LST matches quadrature against the Lomax density") {
    boost::math::quadrature::exp_sinh<double> integrator;
    for (auto [C, g] : {std::pair{1.0, 1.8}, std::pair{0.3, 1.2}, std::pair{4.0, 1.95}}) {
        ParetoJump p{C, g};
        double sigma = std::pow(C, 1.0 / g);
        auto density = [&](double b) { return g / sigma * std::pow(1.0 + b / sigma, -g - 1.0); };
        for (double x : {1e-6, 1e-3, 0.5, 2.0, 40.0}) {
            double oracle = integrator.integrate([&](double b) { return std::exp(-x * b) * density(b); });
            CHECK(jump_lst(p, x) == Approx(oracle).margin(1e-9));
        }
    }
}

TEST_CASE("Pareto LST at complex arguments matches Fourier and Kronrod oracles") {
    ParetoJump p{1.0, 1.8};
    double sigma = p.scale(), g = p.gamma;
    auto density = [&](double b) { return g / sigma * std::pow(1.0 + b / sigma, -g - 1.0); };
    // purely imaginary argument: characteristic function via Ooura's method
    for (double w : {0.05, 0.7, 3.0}) {
        boost::math::quadrature::ooura_fourier_cos<double> cosq;
        boost::math::quadrature::ooura_fourier_sin<double> sinq;
        double re = cosq.integrate(density, w).first;
        double im = -sinq.integrate(density, w).first;
        cplx v = jump_lst(JumpSpec{p}, cplx(0.0, w));
        CHECK(v.real() == Approx(re).margin(1e-8));
        CHECK(v.imag() == Approx(im).margin(1e-8));
    }
    // argument with positive real part
    cplx x(0.4, -1.3);
    auto re = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double b) { return (std::exp(-x * b) * density(b)).real(); }, 0.0, std::numeric_limits<double>::infinity(),
        15, 1e-13);
    auto im = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double b) { return (std::exp(-x * b) * density(b)).imag(); }, 0.0, std::numeric_limits<double>::infinity(),
        15, 1e-13);
    cplx v = jump_lst(JumpSpec{p}, x);
    CHECK(v.real() == Approx(re).margin(1e-8));
    CHECK(v.imag() == Approx(im).margin(1e-8));
}

TEST_CASE("jump LST is non-increasing and convex with value one at zero") {
    for (JumpSpec j : {JumpSpec{ConstantJump{0.8}}, JumpSpec{ExponentialJump{1.5}}, JumpSpec{ParetoJump{1.0, 1.8}},
                       JumpSpec{ParetoJump{2.0, 1.3}}}) {
        CHECK(jump_lst(j, 0.0) == 1.0);
        double h = 0.05;
        std::vector<double> v;
        for (int k = 0; k < 80; ++k) v.push_back(jump_lst(j, k * h));
        for (std::size_t k = 1; k < v.size(); ++k) CHECK(v[k] <= v[k - 1] + 1e-12);
        for (std::size_t k = 1; k + 1 < v.size(); ++k) CHECK(v[k - 1] - 2 * v[k] + v[k + 1] >= -1e-10);
    }
}

TEST_CASE("Pareto sampling reproduces the survival function and tail constant") {
    ParetoJump p{1.0, 1.8};
    Rng rng(5);
    std::vector<double> xs;
    for (int k = 0; k < 20000; ++k) xs.push_back(sample_jump(JumpSpec{p}, rng));
    double pv = testing_support::ks_one_sample(xs, [&](double x) { return 1.0 - jump_survival(JumpSpec{p}, x); });
    CHECK(pv > 0.01);
    CHECK(jump_survival(JumpSpec{p}, 1e8) * std::pow(1e8, 1.8) == Approx(1.0).epsilon(1e-6));
    CHECK(jump_mean(JumpSpec{p}) == Approx(1.25).epsilon(1e-14));
}

TEST_CASE("sojourn survival conventions") {
    CHECK(sojourn_survival(InfiniteSojourn{}, 100.0) == 1.0);
    CHECK(sojourn_survival(ExponentialSojourn{2.0}, 1.0) == Approx(0.1353352832366127).epsilon(1e-14));
    CHECK(sojourn_survival(DeterministicSojourn{1.0}, 1.0) == 0.0);
    CHECK(sojourn_survival(DeterministicSojourn{1.0}, 0.999) == 1.0);
}

TEST_CASE("validation lists every violated constraint") {
    HawkesModel ok(1);
    ok.base_rates = {0.5};
    ok.kernels(0, 0) = ExponentialKernel{1.0};
    ok.jumps(0, 0) = ConstantJump{0.5};
    CHECK(validate(ok).ok());

    HawkesModel bad = ok;
    bad.kernels(0, 0) = PowerLawKernel{1.0, 1.0};
    auto r = validate(bad);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].find("p must exceed 1") != std::string::npos);

    bad = ok;
    bad.base_rates = {0.0};
    r = validate(bad);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].find("base rate must be positive") != std::string::npos);

    bad = ok;
    bad.base_rates = {-1.0};
    bad.jumps(0, 0) = ParetoJump{1.0, 0.9};
    bad.sojourns[0] = ExponentialSojourn{-2.0};
    CHECK(validate(bad).violations.size() == 3);

    bad = ok;
    bad.jumps(0, 0) = ConstantJump{-0.1};
    CHECK(validate(bad).violations.size() == 1);
}

TEST_CASE("Figure-3 branching matrix, spectral radius and stationary intensity") {
    auto m = testing_support::figure3_model();
    auto b = branching_matrix(m);
    const double h[2][2] = {{1.3 / 2.3, 0.6 / 2.3}, {0.8 / 2.0, 0.5 / 2.0}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(b.entries(i, j) == Approx(h[i][j]).epsilon(1e-14));
    CHECK(b.entries(0, 0) == Approx(0.5652).margin(1e-4));
    CHECK(b.entries(0, 1) == Approx(0.2609).margin(1e-4));
    double tr = h[0][0] + h[1][1], det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    double rho = 0.5 * (tr + std::sqrt(tr * tr - 4 * det));
    CHECK(b.spectral_radius == Approx(rho).epsilon(1e-10));
    CHECK(b.spectral_radius == Approx(0.767).margin(1e-3));
    CHECK(is_stable(m));
    CHECK(bivariate_stability_condition(b.entries));

    // Cramer's rule on (I - H) lambda = lambda_inf
    double a11 = 1 - h[0][0], a12 = -h[0][1], a21 = -h[1][0], a22 = 1 - h[1][1];
    double D = a11 * a22 - a12 * a21;
    double l1 = (0.5 * a22 - a12 * 0.5) / D, l2 = (a11 * 0.5 - 0.5 * a21) / D;
    auto lam = stationary_intensity(m);
    CHECK(lam[0] == Approx(l1).epsilon(1e-12));
    CHECK(lam[1] == Approx(l2).epsilon(1e-12));
    CHECK(lam[0] == Approx(2.279).margin(1e-3));
    CHECK(lam[1] == Approx(1.882).margin(1e-3));
}

TEST_CASE("stationary intensity residual and instability error") {
    Rng rng(3);
    for (int rep = 0; rep < 30; ++rep) {
        auto m = testing_support::random_model(rng);
        auto lam = stationary_intensity(m);
        auto h = branching_matrix(m).entries;
        for (std::size_t i = 0; i < m.d; ++i) {
            double r = lam[i] - m.base_rates[i];
            for (std::size_t j = 0; j < m.d; ++j) r -= h(i, j) * lam[j];
            CHECK(std::abs(r) < 1e-10);
        }
    }
    auto m = testing_support::figure3_model();
    m.jumps(0, 0) = ConstantJump{3.0};
    CHECK_FALSE(is_stable(m));
    try {
        stationary_intensity(m);
        FAIL("expected instability error");
    } catch (const InstabilityError& e) {
        CHECK(e.spectral_radius() > 1.0);
        CHECK(std::string(e.what()).find("spectral radius") != std::string::npos);
    }
}

TEST_CASE("bivariate stability inequality agrees with the spectral radius") {
    Rng rng(17);
    int stable = 0;
    for (int rep = 0; rep < 100; ++rep) {
        Matrix<double> h(2, 2);
        h(0, 0) = 0.99 * rng.uniform();
        h(1, 1) = 0.99 * rng.uniform();
        h(0, 1) = 1.5 * rng.uniform();
        h(1, 0) = 1.5 * rng.uniform();
        bool by_rho = perron_root(h) < 1.0;
        stable += by_rho;
        CHECK(by_rho == bivariate_stability_condition(h));
    }
    CHECK(stable > 10);
    CHECK(stable < 90);

    // both self-excitations supercritical: the product of (1 - h_ii) is positive again
    Matrix<double> h(2, 2);
    h(0, 0) = 1.6;
    h(1, 1) = 1.4;
    h(0, 1) = 0.1;
    h(1, 0) = 0.1;
    CHECK((1.0 - h(0, 0)) * (1.0 - h(1, 1)) > h(0, 1) * h(1, 0));
    CHECK_FALSE(bivariate_stability_condition(h));
    CHECK(perron_root(h) > 1.0);
}

TEST_CASE("Perron root of periodic and reducible matrices") {
    Matrix<double> a(2, 2, 0.0);
    a(0, 1) = 1.0;
    a(1, 0) = 1.0;
    CHECK(perron_root(a) == Approx(1.0).epsilon(1e-10));
    Matrix<double> b(3, 3, 0.0);
    b(0, 0) = 0.5;
    b(2, 1) = 0.3;
    CHECK(perron_root(b) == Approx(0.5).epsilon(1e-10));
    Matrix<double> z(2, 2, 0.0);
    CHECK(perron_root(z) == Approx(0.0).margin(1e-12));
}
