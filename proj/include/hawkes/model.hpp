#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace hawkes {

using cplx = std::complex<double>;

template <class T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, const T& fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> data_;
};

// ---- kernels -------------------------------------------------------------

struct ZeroKernel {
    bool operator==(const ZeroKernel&) const = default;
};
struct ExponentialKernel {
    double alpha;
    bool operator==(const ExponentialKernel&) const = default;
};
struct PowerLawKernel {
    double c;
    double p;
    bool operator==(const PowerLawKernel&) const = default;
};
using KernelSpec = std::variant<ZeroKernel, ExponentialKernel, PowerLawKernel>;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline void require_nonnegative_time(double t) {
    if (!(t >= 0.0)) throw ConfigError("time argument must be non-negative");
}

inline double kernel_value(const KernelSpec& k, double t) {
    require_nonnegative_time(t);
    return std::visit(overloaded{[](const ZeroKernel&) { return 0.0; },
                                 [t](const ExponentialKernel& e) { return std::exp(-e.alpha * t); },
                                 [t](const PowerLawKernel& p) { return std::pow(p.c + t, -p.p); }},
                      k);
}

inline double kernel_integral(const KernelSpec& k, double u) {
    require_nonnegative_time(u);
    return std::visit(overloaded{[](const ZeroKernel&) { return 0.0; },
                                 [u](const ExponentialKernel& e) { return -std::expm1(-e.alpha * u) / e.alpha; },
                                 [u](const PowerLawKernel& p) {
                                     double a = std::pow(p.c, 1.0 - p.p);
                                     double b = std::pow(p.c + u, 1.0 - p.p);
                                     return (a - b) / (p.p - 1.0);
                                 }},
                      k);
}

inline double kernel_l1_norm(const KernelSpec& k) {
    return std::visit(overloaded{[](const ZeroKernel&) { return 0.0; },
                                 [](const ExponentialKernel& e) { return 1.0 / e.alpha; },
                                 [](const PowerLawKernel& p) { return std::pow(p.c, 1.0 - p.p) / (p.p - 1.0); }},
                      k);
}

// Inverse of v -> G(v)/G(u) on [0, u]: the offset with density g(v)/G(u) at quantile w.
inline double kernel_offset_quantile(const KernelSpec& k, double u, double w) {
    double v = std::visit(overloaded{[](const ZeroKernel&) { return 0.0; },
                                     [u, w](const ExponentialKernel& e) {
                                         return -std::log1p(w * std::expm1(-e.alpha * u)) / e.alpha;
                                     },
                                     [u, w](const PowerLawKernel& p) {
                                         double a = std::pow(p.c, 1.0 - p.p);
                                         double b = std::pow(p.c + u, 1.0 - p.p);
                                         return std::pow(a - w * (a - b), 1.0 / (1.0 - p.p)) - p.c;
                                     }},
                          k);
    return std::clamp(v, 0.0, u);
}

inline bool is_zero(const KernelSpec& k) { return std::holds_alternative<ZeroKernel>(k); }

// ---- jump sizes ----------------------------------------------------------

struct ZeroJump {};
struct ConstantJump {
    double b;
};
struct ExponentialJump {
    double mean;
};
// Lomax law: P(B > x) = (1 + x/sigma)^(-gamma), sigma = C^(1/gamma).
struct ParetoJump {
    double C;
    double gamma;
    double scale() const { return std::pow(C, 1.0 / gamma); }
};
using JumpSpec = std::variant<ZeroJump, ConstantJump, ExponentialJump, ParetoJump>;

inline bool is_zero(const JumpSpec& j) {
    if (std::holds_alternative<ZeroJump>(j)) return true;
    if (auto c = std::get_if<ConstantJump>(&j)) return c->b == 0.0;
    return false;
}

inline double jump_mean(const JumpSpec& j) {
    return std::visit(overloaded{[](const ZeroJump&) { return 0.0; }, [](const ConstantJump& c) { return c.b; },
                                 [](const ExponentialJump& e) { return e.mean; },
                                 [](const ParetoJump& p) { return p.scale() / (p.gamma - 1.0); }},
                      j);
}

inline double jump_survival(const JumpSpec& j, double x) {
    if (x < 0.0) return 1.0;
    return std::visit(overloaded{[](const ZeroJump&) { return 0.0; },
                                 [x](const ConstantJump& c) { return x < c.b ? 1.0 : 0.0; },
                                 [x](const ExponentialJump& e) { return std::exp(-x / e.mean); },
                                 [x](const ParetoJump& p) { return std::pow(1.0 + x / p.scale(), -p.gamma); }},
                      j);
}

// 1 - E[exp(-x B)] for the Lomax law at Re x >= 0. The contour is rotated onto
// arg(b) = -arg(x) so the integrand decays like exp(-y) along the real y axis.
inline cplx pareto_lst_complement(const ParetoJump& p, cplx x) {
    double r = std::abs(x);
    if (r == 0.0) return 0.0;
    double theta = std::clamp(std::arg(x), -std::numbers::pi / 2, std::numbers::pi / 2);
    cplx w = std::polar(1.0, -theta) / (r * p.scale());
    double g = p.gamma;
    quad::DEOptions opt;
    opt.abs_tol = 1e-16;
    opt.rel_tol = 1e-13;
    return quad::exp_sinh([&](double y) { return std::exp(-y) * std::pow(1.0 + y * w, -g); }, opt);
}

inline cplx jump_lst(const JumpSpec& j, cplx x) {
    return std::visit(overloaded{[](const ZeroJump&) { return cplx(1.0); },
                                 [x](const ConstantJump& c) { return std::exp(-c.b * x); },
                                 [x](const ExponentialJump& e) { return 1.0 / (1.0 + e.mean * x); },
                                 [x](const ParetoJump& p) { return 1.0 - pareto_lst_complement(p, x); }},
                      j);
}

inline double jump_lst(const JumpSpec& j, double x) {
    if (x < 0.0) throw ConfigError("jump_lst argument must be non-negative");
    return jump_lst(j, cplx(x)).real();
}

inline double sample_jump(const JumpSpec& j, Rng& rng) {
    return std::visit(overloaded{[](const ZeroJump&) { return 0.0; }, [](const ConstantJump& c) { return c.b; },
                                 [&rng](const ExponentialJump& e) { return e.mean * -std::log(rng.uniform()); },
                                 [&rng](const ParetoJump& p) {
                                     return p.scale() * std::expm1(-std::log(rng.uniform()) / p.gamma);
                                 }},
                      j);
}

// ---- sojourns ------------------------------------------------------------

struct InfiniteSojourn {};
struct ExponentialSojourn {
    double mu;
};
struct DeterministicSojourn {
    double tau;
};
using SojournSpec = std::variant<InfiniteSojourn, ExponentialSojourn, DeterministicSojourn>;

inline double sojourn_survival(const SojournSpec& s, double u) {
    require_nonnegative_time(u);
    return std::visit(overloaded{[](const InfiniteSojourn&) { return 1.0; },
                                 [u](const ExponentialSojourn& e) { return std::exp(-e.mu * u); },
                                 [u](const DeterministicSojourn& d) { return u < d.tau ? 1.0 : 0.0; }},
                      s);
}

// int_0^u P(J > v) dv.
inline double sojourn_survival_integral(const SojournSpec& s, double u) {
    require_nonnegative_time(u);
    return std::visit(overloaded{[u](const InfiniteSojourn&) { return u; },
                                 [u](const ExponentialSojourn& e) { return -std::expm1(-e.mu * u) / e.mu; },
                                 [u](const DeterministicSojourn& d) { return std::min(u, d.tau); }},
                      s);
}

// Ages at which the survival function jumps.
inline std::vector<double> sojourn_breakpoints(const SojournSpec& s) {
    if (auto d = std::get_if<DeterministicSojourn>(&s)) return {d->tau};
    return {};
}

inline double sample_sojourn(const SojournSpec& s, Rng& rng) {
    return std::visit(overloaded{[](const InfiniteSojourn&) { return std::numeric_limits<double>::infinity(); },
                                 [&rng](const ExponentialSojourn& e) { return rng.exponential(e.mu); },
                                 [](const DeterministicSojourn& d) { return d.tau; }},
                      s);
}

// ---- model ---------------------------------------------------------------

// kernels(i, j) = g_ij and jumps(i, j) = B_ij: the effect of an event in j on target i.
struct HawkesModel {
    std::size_t d = 0;
    std::vector<double> base_rates;
    Matrix<KernelSpec> kernels;
    Matrix<JumpSpec> jumps;
    std::vector<SojournSpec> sojourns;

    HawkesModel() = default;
    explicit HawkesModel(std::size_t dim)
        : d(dim),
          base_rates(dim, 1.0),
          kernels(dim, dim, ZeroKernel{}),
          jumps(dim, dim, ZeroJump{}),
          sojourns(dim, InfiniteSojourn{}) {}

    // Edge present in the excitation graph.
    bool active(std::size_t i, std::size_t j) const { return !is_zero(jumps(i, j)) && !is_zero(kernels(i, j)); }

    HawkesModel with_infinite_sojourns() const {
        HawkesModel m = *this;
        std::fill(m.sojourns.begin(), m.sojourns.end(), SojournSpec{InfiniteSojourn{}});
        return m;
    }
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

inline ValidationReport validate(const HawkesModel& m) {
    ValidationReport r;
    auto add = [&r](const std::string& where, const std::string& what) { r.violations.push_back(where + ": " + what); };
    auto cell = [](std::size_t i, std::size_t j) {
        return "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
    };
    if (m.d == 0) add("dimension", "dimension must be at least 1");
    if (m.base_rates.size() != m.d) add("base_rates", "expected " + std::to_string(m.d) + " entries");
    if (m.sojourns.size() != m.d) add("sojourns", "expected " + std::to_string(m.d) + " entries");
    if (m.kernels.rows() != m.d || m.kernels.cols() != m.d) add("kernels", "matrix shape must be d x d");
    if (m.jumps.rows() != m.d || m.jumps.cols() != m.d) add("jumps", "matrix shape must be d x d");
    if (!r.ok()) return r;

    for (std::size_t i = 0; i < m.d; ++i) {
        double b = m.base_rates[i];
        if (!(b > 0.0) || !std::isfinite(b)) add("base_rate " + std::to_string(i + 1), "base rate must be positive");
    }
    for (std::size_t i = 0; i < m.d; ++i)
        for (std::size_t j = 0; j < m.d; ++j) {
            std::visit(overloaded{[](const ZeroKernel&) {},
                                  [&](const ExponentialKernel& e) {
                                      if (!(e.alpha > 0.0) || !std::isfinite(e.alpha))
                                          add("kernel " + cell(i, j), "alpha must be positive");
                                  },
                                  [&](const PowerLawKernel& p) {
                                      if (!(p.c > 0.0) || !std::isfinite(p.c))
                                          add("kernel " + cell(i, j), "c must be positive");
                                      if (!(p.p > 1.0) || !std::isfinite(p.p))
                                          add("kernel " + cell(i, j), "p must exceed 1");
                                  }},
                       m.kernels(i, j));
            std::visit(overloaded{[](const ZeroJump&) {},
                                  [&](const ConstantJump& c) {
                                      if (!(c.b >= 0.0) || !std::isfinite(c.b))
                                          add("jump " + cell(i, j), "size must be non-negative");
                                  },
                                  [&](const ExponentialJump& e) {
                                      if (!(e.mean > 0.0) || !std::isfinite(e.mean))
                                          add("jump " + cell(i, j), "mean must be positive");
                                  },
                                  [&](const ParetoJump& p) {
                                      if (!(p.C > 0.0) || !std::isfinite(p.C))
                                          add("jump " + cell(i, j), "tail constant must be positive");
                                      if (!(p.gamma > 1.0) || !std::isfinite(p.gamma))
                                          add("jump " + cell(i, j), "gamma must exceed 1");
                                  }},
                       m.jumps(i, j));
        }
    for (std::size_t i = 0; i < m.d; ++i)
        std::visit(overloaded{[](const InfiniteSojourn&) {},
                              [&](const ExponentialSojourn& e) {
                                  if (!(e.mu > 0.0) || !std::isfinite(e.mu))
                                      add("sojourn " + std::to_string(i + 1), "rate must be positive");
                              },
                              [&](const DeterministicSojourn& s) {
                                  if (!(s.tau >= 0.0) || !std::isfinite(s.tau))
                                      add("sojourn " + std::to_string(i + 1), "duration must be non-negative");
                              }},
                   m.sojourns[i]);
    return r;
}

inline void require_valid(const HawkesModel& m) {
    auto r = validate(m);
    if (r.ok()) return;
    std::string msg = "invalid model:";
    for (const auto& v : r.violations) msg += " [" + v + "]";
    throw ConfigError(msg);
}

// ---- branching and stability --------------------------------------------

struct BranchingMatrix {
    Matrix<double> entries;
    double spectral_radius = 0.0;
};

// Perron root of a non-negative matrix. Power iteration on A + I (aperiodic even
// when A is not), falling back to a dense eigen-solve if the cap is reached.
inline double perron_root(const Matrix<double>& a, double tol = 1e-12, int max_iter = 10000) {
    const std::size_t d = a.rows();
    Rng rng(0x5eedULL, d);
    std::vector<double> x(d), y(d);
    for (auto& v : x) v = 0.5 + rng.uniform();
    double prev = -1.0;
    for (int it = 0; it < max_iter; ++it) {
        double norm = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            double s = x[i];
            for (std::size_t j = 0; j < d; ++j) s += a(i, j) * x[j];
            y[i] = s;
            norm = std::max(norm, s);
        }
        for (std::size_t i = 0; i < d; ++i) x[i] = y[i] / norm;
        double est = norm - 1.0;
        if (it > 2 && std::abs(est - prev) <= tol * std::max(1.0, std::abs(est))) return std::max(est, 0.0);
        prev = est;
    }
    Eigen::MatrixXd e(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) e(i, j) = a(i, j);
    Eigen::EigenSolver<Eigen::MatrixXd> es(e, false);
    double rho = 0.0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) rho = std::max(rho, std::abs(es.eigenvalues()[k]));
    return rho;
}

inline BranchingMatrix branching_matrix(const HawkesModel& m) {
    BranchingMatrix b;
    b.entries = Matrix<double>(m.d, m.d, 0.0);
    for (std::size_t i = 0; i < m.d; ++i)
        for (std::size_t j = 0; j < m.d; ++j)
            if (m.active(i, j)) b.entries(i, j) = jump_mean(m.jumps(i, j)) * kernel_l1_norm(m.kernels(i, j));
    b.spectral_radius = perron_root(b.entries);
    return b;
}

inline bool is_stable(const HawkesModel& m) { return branching_matrix(m).spectral_radius < 1.0; }

inline void require_stable(const HawkesModel& m) {
    double rho = branching_matrix(m).spectral_radius;
    if (!(rho < 1.0)) {
        std::ostringstream os;
        os << "model is unstable: spectral radius " << rho << " >= 1";
        throw InstabilityError(os.str(), rho);
    }
}

inline std::vector<double> stationary_intensity(const HawkesModel& m) {
    require_valid(m);
    require_stable(m);
    auto h = branching_matrix(m).entries;
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m.d, m.d);
    Eigen::VectorXd rhs(m.d);
    for (std::size_t i = 0; i < m.d; ++i) {
        rhs(i) = m.base_rates[i];
        for (std::size_t j = 0; j < m.d; ++j) a(i, j) -= h(i, j);
    }
    Eigen::VectorXd sol = a.partialPivLu().solve(rhs);
    return {sol.data(), sol.data() + sol.size()};
}

// Bivariate inequality (1 - h11)(1 - h22) > h12 h21. On its own it also holds when both
// diagonal entries exceed 1, so h11 < 1 is required as well (h22 < 1 then follows).
inline bool bivariate_stability_condition(const Matrix<double>& h) {
    return h(0, 0) < 1.0 && (1.0 - h(0, 0)) * (1.0 - h(1, 1)) > h(0, 1) * h(1, 0);
}

}  // namespace hawkes
