#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace hawkes {

struct EventRecord {
    double time = 0.0;
    std::size_t component = 0;
    double sojourn = std::numeric_limits<double>::infinity();
    int generation = 0;
    std::optional<std::size_t> parent;
    // lambda_component just before the event; recorded by the thinning sampler only.
    double intensity = std::numeric_limits<double>::quiet_NaN();
};

// marks[r * d + m] is the jump B_{m k} drawn at event r (k its component); it
// drives both lambda_m and the offspring of r in m.
struct SamplePath {
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::size_t d = 0;
    std::vector<EventRecord> events;
    std::vector<double> marks;

    double mark(std::size_t r, std::size_t m) const { return marks[r * d + m]; }
};

struct ClusterSample {
    std::size_t source = 0;
    std::vector<double> u_grid;
    // counts_Q[k * d + i] = S^Q_{i<-j}(u_k), load_lambda[k * d + i] = S^lambda_{i<-j}(u_k)
    std::vector<double> counts_Q;
    std::vector<double> load_lambda;
};

struct SimulationOptions {
    std::size_t event_cap = 1'000'000;
    bool genealogy = true;
};

struct PathState {
    std::vector<double> N, Q, lambda;
};

namespace detail {

inline void check_cap(const SamplePath& p, std::size_t cap) {
    if (p.events.size() > cap)
        throw CapExceededError("event cap of " + std::to_string(cap) + " exceeded; raise the cap or shorten the horizon");
}

// Intensity vector lambda(t) of a path being built forward in time.
class IntensityTracker {
public:
    explicit IntensityTracker(const HawkesModel& m) : m_(m), acc_(m.d * m.d, 0.0), lam_(m.d), hist_(m.d) {
        for (std::size_t i = 0; i < m.d; ++i)
            for (std::size_t k = 0; k < m.d; ++k)
                if (m.active(i, k) && std::holds_alternative<PowerLawKernel>(m.kernels(i, k))) power_sources_.push_back(k);
        std::sort(power_sources_.begin(), power_sources_.end());
        power_sources_.erase(std::unique(power_sources_.begin(), power_sources_.end()), power_sources_.end());
    }

    void reset() {
        std::fill(acc_.begin(), acc_.end(), 0.0);
        lam_ = m_.base_rates;
        for (auto& h : hist_) h.clear();
        now_ = 0.0;
    }

    void advance(double t, const SamplePath& p) {
        const std::size_t d = m_.d;
        lam_ = m_.base_rates;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t k = 0; k < d; ++k) {
                if (!m_.active(i, k)) continue;
                if (auto e = std::get_if<ExponentialKernel>(&m_.kernels(i, k))) {
                    double& a = acc_[i * d + k];
                    a *= std::exp(-e->alpha * (t - now_));
                    lam_[i] += a;
                } else if (auto pl = std::get_if<PowerLawKernel>(&m_.kernels(i, k))) {
                    double s = 0.0;
                    for (std::size_t r : hist_[k]) s += p.mark(r, i) * std::pow(pl->c + t - p.events[r].time, -pl->p);
                    lam_[i] += s;
                }
            }
        now_ = t;
    }

    void add_event(std::size_t r, const SamplePath& p) {
        const std::size_t d = m_.d;
        std::size_t k = p.events[r].component;
        for (std::size_t i = 0; i < d; ++i) {
            if (!m_.active(i, k)) continue;
            double b = p.mark(r, i);
            if (std::holds_alternative<ExponentialKernel>(m_.kernels(i, k))) acc_[i * d + k] += b;
            lam_[i] += b * kernel_value(m_.kernels(i, k), 0.0);
        }
        if (std::binary_search(power_sources_.begin(), power_sources_.end(), k)) hist_[k].push_back(r);
    }

    const std::vector<double>& intensity() const { return lam_; }

private:
    const HawkesModel& m_;
    std::vector<double> acc_;
    std::vector<double> lam_;
    std::vector<std::vector<std::size_t>> hist_;
    std::vector<std::size_t> power_sources_;
    double now_ = 0.0;
};

inline void draw_marks(const HawkesModel& m, std::size_t k, Rng& rng, double* out) {
    for (std::size_t i = 0; i < m.d; ++i) out[i] = m.active(i, k) ? sample_jump(m.jumps(i, k), rng) : 0.0;
}

inline void thinning_into(const HawkesModel& m, double horizon, Rng& rng, const SimulationOptions& opt, SamplePath& p,
                          IntensityTracker& tr) {
    const std::size_t d = m.d;
    p.horizon = horizon;
    p.d = d;
    p.events.clear();
    p.marks.clear();
    tr.reset();
    double t = 0.0;
    for (;;) {
        const auto& lam0 = tr.intensity();
        double bound = std::accumulate(lam0.begin(), lam0.end(), 0.0);
        t += rng.exponential(bound);
        if (t > horizon) break;
        tr.advance(t, p);
        const auto& lam = tr.intensity();
        double total = std::accumulate(lam.begin(), lam.end(), 0.0);
        if (rng.uniform() * bound > total) continue;
        double x = rng.uniform() * total;
        std::size_t comp = 0;
        for (; comp + 1 < d; ++comp) {
            x -= lam[comp];
            if (x < 0.0) break;
        }
        EventRecord ev;
        ev.time = t;
        ev.component = comp;
        ev.intensity = lam[comp];
        ev.sojourn = sample_sojourn(m.sojourns[comp], rng);
        if (opt.genealogy) {
            double y = rng.uniform() * lam[comp] - m.base_rates[comp];
            for (std::size_t r = 0; y >= 0.0 && r < p.events.size(); ++r) {
                std::size_t k = p.events[r].component;
                if (!m.active(comp, k)) continue;
                y -= p.mark(r, comp) * kernel_value(m.kernels(comp, k), t - p.events[r].time);
                if (y < 0.0) {
                    ev.parent = r;
                    ev.generation = p.events[r].generation + 1;
                }
            }
        }
        std::size_t r = p.events.size();
        p.events.push_back(ev);
        p.marks.resize(p.marks.size() + d);
        draw_marks(m, comp, rng, p.marks.data() + r * d);
        tr.add_event(r, p);
        check_cap(p, opt.event_cap);
    }
}

// Appends the offspring cascade of every event from index `first` on.
inline void grow_clusters(const HawkesModel& m, double horizon, Rng& rng, const SimulationOptions& opt, SamplePath& p,
                          std::size_t first) {
    const std::size_t d = m.d;
    std::vector<std::size_t> stack;
    for (std::size_t r = p.events.size(); r-- > first;) stack.push_back(r);
    while (!stack.empty()) {
        std::size_t r = stack.back();
        stack.pop_back();
        const double t0 = p.events[r].time;
        const std::size_t k = p.events[r].component;
        const int gen = p.events[r].generation;
        p.events[r].sojourn = sample_sojourn(m.sojourns[k], rng);
        draw_marks(m, k, rng, p.marks.data() + r * d);
        const double u = horizon - t0;
        for (std::size_t i = 0; i < d; ++i) {
            if (!m.active(i, k)) continue;
            double b = p.marks[r * d + i];
            std::uint64_t n = rng.poisson(b * kernel_integral(m.kernels(i, k), u));
            for (std::uint64_t c = 0; c < n; ++c) {
                EventRecord ev;
                ev.time = t0 + kernel_offset_quantile(m.kernels(i, k), u, rng.uniform());
                ev.component = i;
                ev.generation = gen + 1;
                ev.parent = r;
                p.events.push_back(ev);
                p.marks.resize(p.marks.size() + d);
                stack.push_back(p.events.size() - 1);
                check_cap(p, opt.event_cap);
            }
        }
    }
}

inline void cluster_into(const HawkesModel& m, double horizon, Rng& rng, const SimulationOptions& opt, SamplePath& p) {
    const std::size_t d = m.d;
    p.horizon = horizon;
    p.d = d;
    p.events.clear();
    p.marks.clear();
    for (std::size_t j = 0; j < d; ++j) {
        std::uint64_t n = rng.poisson(m.base_rates[j] * horizon);
        for (std::uint64_t c = 0; c < n; ++c) {
            EventRecord ev;
            ev.time = rng.uniform() * horizon;
            ev.component = j;
            p.events.push_back(ev);
        }
    }
    p.marks.assign(p.events.size() * d, 0.0);
    check_cap(p, opt.event_cap);
    grow_clusters(m, horizon, rng, opt, p, 0);
}

// Sorts by time (stable) and rewrites parent ids to the new positions.
inline void sort_path(SamplePath& p) {
    const std::size_t n = p.events.size(), d = p.d;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p.events[a].time < p.events[b].time; });
    std::vector<std::size_t> pos(n);
    for (std::size_t r = 0; r < n; ++r) pos[order[r]] = r;
    std::vector<EventRecord> ev(n);
    std::vector<double> mk(n * d);
    for (std::size_t r = 0; r < n; ++r) {
        ev[r] = p.events[order[r]];
        if (ev[r].parent) ev[r].parent = pos[*ev[r].parent];
        std::copy_n(p.marks.begin() + order[r] * d, d, mk.begin() + r * d);
    }
    p.events = std::move(ev);
    p.marks = std::move(mk);
}

inline void require_horizon(double horizon) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive and finite");
}

}  // namespace detail

inline SamplePath simulate_thinning(const HawkesModel& m, double horizon, std::uint64_t seed,
                                    const SimulationOptions& opt = {}) {
    require_valid(m);
    require_stable(m);
    detail::require_horizon(horizon);
    Rng rng(seed);
    SamplePath p;
    p.seed = seed;
    detail::IntensityTracker tr(m);
    detail::thinning_into(m, horizon, rng, opt, p, tr);
    return p;
}

inline SamplePath simulate_cluster(const HawkesModel& m, double horizon, std::uint64_t seed,
                                   const SimulationOptions& opt = {}) {
    require_valid(m);
    require_stable(m);
    detail::require_horizon(horizon);
    Rng rng(seed);
    SamplePath p;
    p.seed = seed;
    detail::cluster_into(m, horizon, rng, opt, p);
    detail::sort_path(p);
    return p;
}

inline void path_state_into(const SamplePath& p, const HawkesModel& m, double t, PathState& s) {
    const std::size_t d = m.d;
    s.N.assign(d, 0.0);
    s.Q.assign(d, 0.0);
    s.lambda = m.base_rates;
    for (std::size_t r = 0; r < p.events.size(); ++r) {
        const auto& e = p.events[r];
        if (e.time > t) continue;
        s.N[e.component] += 1.0;
        if (!(e.time + e.sojourn <= t)) s.Q[e.component] += 1.0;
        if (e.time < t)
            for (std::size_t i = 0; i < d; ++i)
                if (m.active(i, e.component))
                    s.lambda[i] += p.mark(r, i) * kernel_value(m.kernels(i, e.component), t - e.time);
    }
}

inline PathState path_state(const SamplePath& p, const HawkesModel& m, double t) {
    if (!(t >= 0.0) || t > p.horizon) throw ConfigError("path_state: t must lie in [0, horizon]");
    PathState s;
    path_state_into(p, m, t, s);
    return s;
}

// One cluster rooted at an immigrant of component j at time 0, observed at the cluster ages in u_grid.
inline ClusterSample simulate_single_cluster(const HawkesModel& m, std::size_t j, const std::vector<double>& u_grid,
                                             std::uint64_t seed, const SimulationOptions& opt = {}) {
    require_valid(m);
    require_stable(m);
    if (j >= m.d) throw ConfigError("source component out of range");
    if (u_grid.empty()) throw ConfigError("u grid must not be empty");
    double horizon = *std::max_element(u_grid.begin(), u_grid.end());
    if (!(horizon >= 0.0)) throw ConfigError("cluster ages must be non-negative");
    Rng rng(seed);
    SamplePath p;
    p.horizon = horizon;
    p.d = m.d;
    EventRecord root;
    root.component = j;
    p.events.push_back(root);
    p.marks.assign(m.d, 0.0);
    detail::grow_clusters(m, horizon, rng, opt, p, 0);

    ClusterSample cs;
    cs.source = j;
    cs.u_grid = u_grid;
    cs.counts_Q.assign(u_grid.size() * m.d, 0.0);
    cs.load_lambda.assign(u_grid.size() * m.d, 0.0);
    PathState st;
    for (std::size_t k = 0; k < u_grid.size(); ++k) {
        path_state_into(p, m, u_grid[k], st);
        for (std::size_t i = 0; i < m.d; ++i) {
            cs.counts_Q[k * m.d + i] = st.Q[i];
            cs.load_lambda[k * m.d + i] = st.lambda[i] - m.base_rates[i];
        }
    }
    return cs;
}

inline void write_path_csv(std::ostream& os, const SamplePath& p) {
    os << "event_id,time,component,generation,parent_id,sojourn\n";
    char buf[64];
    for (std::size_t r = 0; r < p.events.size(); ++r) {
        const auto& e = p.events[r];
        os << r << ',';
        std::snprintf(buf, sizeof buf, "%.17g", e.time);
        os << buf << ',' << e.component + 1 << ',' << e.generation << ',';
        if (e.parent) os << *e.parent;
        os << ',';
        if (std::isinf(e.sojourn))
            os << "inf";
        else {
            std::snprintf(buf, sizeof buf, "%.17g", e.sojourn);
            os << buf;
        }
        os << '\n';
    }
}

// ---- Monte Carlo estimators ---------------------------------------------

enum class Sampler { Thinning, Cluster };

struct McOptions {
    Sampler sampler = Sampler::Thinning;
    std::size_t threads = 0;
    std::size_t chunk = 1024;
    std::size_t event_cap = 1'000'000;
};

struct McStat {
    double value = 0.0;
    double std_error = 0.0;
};

struct McMomentRow {
    double t;
    std::string statistic;
    double value;
    double std_error;
};

struct McMoments {
    std::vector<double> t_grid;
    std::size_t d = 0;
    std::size_t runs = 0;
    // indexed [k * d + i] or [(k * d + i) * d + j]
    std::vector<McStat> mean_Q, var_Q, mean_lambda, var_lambda, cross_QQ, cross_Qlambda;

    const McStat& at(const std::vector<McStat>& v, std::size_t k, std::size_t i) const { return v[k * d + i]; }
    const McStat& at(const std::vector<McStat>& v, std::size_t k, std::size_t i, std::size_t j) const {
        return v[(k * d + i) * d + j];
    }

    std::vector<McMomentRow> rows() const {
        std::vector<McMomentRow> out;
        for (std::size_t k = 0; k < t_grid.size(); ++k) {
            double t = t_grid[k];
            for (std::size_t i = 0; i < d; ++i) {
                auto id = std::to_string(i + 1);
                out.push_back({t, "mean_Q" + id, at(mean_Q, k, i).value, at(mean_Q, k, i).std_error});
                out.push_back({t, "var_Q" + id, at(var_Q, k, i).value, at(var_Q, k, i).std_error});
                out.push_back({t, "mean_lambda" + id, at(mean_lambda, k, i).value, at(mean_lambda, k, i).std_error});
                out.push_back({t, "var_lambda" + id, at(var_lambda, k, i).value, at(var_lambda, k, i).std_error});
            }
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) {
                    auto id = std::to_string(i + 1) + std::to_string(j + 1);
                    if (j > i) out.push_back({t, "cross_QQ" + id, at(cross_QQ, k, i, j).value, at(cross_QQ, k, i, j).std_error});
                    out.push_back(
                        {t, "cross_Qlambda" + id, at(cross_Qlambda, k, i, j).value, at(cross_Qlambda, k, i, j).std_error});
                }
        }
        return out;
    }
};

namespace detail {

struct PowerSums {
    long double s[5] = {0, 0, 0, 0, 0};
    void add(double x) {
        long double p = 1;
        for (int k = 1; k <= 4; ++k) {
            p *= x;
            s[k] += p;
        }
    }
    void merge(const PowerSums& o) {
        for (int k = 1; k <= 4; ++k) s[k] += o.s[k];
    }
    McStat mean(std::size_t n) const {
        long double m = s[1] / n;
        long double var = (s[2] - n * m * m) / (n - 1);
        return {static_cast<double>(m), std::sqrt(std::max(0.0, static_cast<double>(var / n)))};
    }
    McStat variance(std::size_t n) const {
        long double m = s[1] / n;
        long double m2 = s[2] / n - m * m;
        long double m4 = s[4] / n - 4 * m * s[3] / n + 6 * m * m * s[2] / n - 3 * m * m * m * m;
        long double var = m2 * n / (n - 1);
        long double v = (m4 - var * var * (n - 3.0L) / (n - 1.0L)) / n;
        return {static_cast<double>(var), std::sqrt(std::max(0.0, static_cast<double>(v)))};
    }
};

struct MomentAcc {
    std::size_t d, K;
    std::vector<PowerSums> q, l;       // [k*d+i]
    std::vector<PowerSums> qq, ql;     // [(k*d+i)*d+j], first two sums used
    MomentAcc(std::size_t d_, std::size_t K_) : d(d_), K(K_), q(K_ * d_), l(K_ * d_), qq(K_ * d_ * d_), ql(K_ * d_ * d_) {}
    void merge(const MomentAcc& o) {
        for (std::size_t x = 0; x < q.size(); ++x) q[x].merge(o.q[x]), l[x].merge(o.l[x]);
        for (std::size_t x = 0; x < qq.size(); ++x) qq[x].merge(o.qq[x]), ql[x].merge(o.ql[x]);
    }
};

inline void simulate_replication(const HawkesModel& m, double horizon, std::uint64_t seed, std::uint64_t rep,
                                 const McOptions& opt, SamplePath& p, IntensityTracker& tr) {
    Rng rng(seed, rep);
    SimulationOptions so;
    so.event_cap = opt.event_cap;
    so.genealogy = false;
    if (opt.sampler == Sampler::Thinning)
        thinning_into(m, horizon, rng, so, p, tr);
    else
        cluster_into(m, horizon, rng, so, p);
}

inline double wilson_half(double p, double n, double z) { return z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)); }

}  // namespace detail

inline McMoments mc_moments(const HawkesModel& m, const std::vector<double>& t_grid, std::size_t runs,
                            std::uint64_t seed, const McOptions& opt = {}) {
    require_valid(m);
    require_stable(m);
    if (runs < 2) throw ConfigError("mc_moments needs at least 2 runs");
    if (t_grid.empty()) throw ConfigError("t grid must not be empty");
    for (double t : t_grid)
        if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("t grid values must be finite and non-negative");
    const std::size_t d = m.d, K = t_grid.size();
    double horizon = std::max(*std::max_element(t_grid.begin(), t_grid.end()), 1e-12);
    std::size_t chunk = std::max<std::size_t>(1, opt.chunk);
    std::size_t n_chunks = (runs + chunk - 1) / chunk;
    std::vector<detail::MomentAcc> parts(n_chunks, detail::MomentAcc(d, K));

    parallel_for(n_chunks, opt.threads, [&](std::size_t c) {
        SamplePath p;
        detail::IntensityTracker tr(m);
        PathState st;
        auto& acc = parts[c];
        std::size_t end = std::min(runs, (c + 1) * chunk);
        for (std::size_t rep = c * chunk; rep < end; ++rep) {
            detail::simulate_replication(m, horizon, seed, rep, opt, p, tr);
            for (std::size_t k = 0; k < K; ++k) {
                path_state_into(p, m, t_grid[k], st);
                for (std::size_t i = 0; i < d; ++i) {
                    acc.q[k * d + i].add(st.Q[i]);
                    acc.l[k * d + i].add(st.lambda[i]);
                    for (std::size_t j = 0; j < d; ++j) {
                        acc.qq[(k * d + i) * d + j].add(st.Q[i] * st.Q[j]);
                        acc.ql[(k * d + i) * d + j].add(st.Q[i] * st.lambda[j]);
                    }
                }
            }
        }
    });
    detail::MomentAcc total(d, K);
    for (const auto& part : parts) total.merge(part);

    McMoments out;
    out.t_grid = t_grid;
    out.d = d;
    out.runs = runs;
    for (std::size_t x = 0; x < K * d; ++x) {
        out.mean_Q.push_back(total.q[x].mean(runs));
        out.var_Q.push_back(total.q[x].variance(runs));
        out.mean_lambda.push_back(total.l[x].mean(runs));
        out.var_lambda.push_back(total.l[x].variance(runs));
    }
    for (std::size_t x = 0; x < K * d * d; ++x) {
        out.cross_QQ.push_back(total.qq[x].mean(runs));
        out.cross_Qlambda.push_back(total.ql[x].mean(runs));
    }
    return out;
}

struct TailEstimate {
    double probability = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t exceedances = 0;
    bool low_count = false;  // fewer than 10 exceedances
};

enum class Process { N, Q, Lambda };

struct McTail {
    double t = 0.0;
    std::size_t d = 0;
    std::size_t runs = 0;
    std::vector<double> thresholds;
    std::vector<TailEstimate> N, Q, lambda;  // [i * thresholds + k]

    const TailEstimate& at(Process p, std::size_t i, std::size_t k) const {
        const auto& v = p == Process::N ? N : p == Process::Q ? Q : lambda;
        return v[i * thresholds.size() + k];
    }
};

// Empirical P(X_i(t) > x) for X in {N, Q, lambda} with 95% Wilson intervals.
inline McTail mc_tail(const HawkesModel& m, double t, const std::vector<double>& thresholds, std::size_t runs,
                      std::uint64_t seed, McOptions opt = {Sampler::Cluster}) {
    require_valid(m);
    require_stable(m);
    detail::require_horizon(t);
    if (runs < 1) throw ConfigError("mc_tail needs at least 1 run");
    const std::size_t d = m.d, K = thresholds.size();
    std::vector<double> sorted = thresholds;
    std::sort(sorted.begin(), sorted.end());
    std::size_t chunk = std::max<std::size_t>(1, opt.chunk) * 16;
    std::size_t n_chunks = (runs + chunk - 1) / chunk;
    // bucket b counts values exceeding exactly the b smallest thresholds
    std::vector<std::vector<std::uint64_t>> parts(n_chunks, std::vector<std::uint64_t>(3 * d * (K + 1), 0));

    parallel_for(n_chunks, opt.threads, [&](std::size_t c) {
        SamplePath p;
        detail::IntensityTracker tr(m);
        PathState st;
        auto& buckets = parts[c];
        std::size_t end = std::min(runs, (c + 1) * chunk);
        for (std::size_t rep = c * chunk; rep < end; ++rep) {
            detail::simulate_replication(m, t, seed, rep, opt, p, tr);
            path_state_into(p, m, t, st);
            const std::vector<double>* vals[3] = {&st.N, &st.Q, &st.lambda};
            for (std::size_t pr = 0; pr < 3; ++pr)
                for (std::size_t i = 0; i < d; ++i) {
                    double v = (*vals[pr])[i];
                    std::size_t b = std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
                    ++buckets[(pr * d + i) * (K + 1) + b];
                }
        }
    });

    McTail out;
    out.t = t;
    out.d = d;
    out.runs = runs;
    out.thresholds = thresholds;
    std::vector<TailEstimate>* dest[3] = {&out.N, &out.Q, &out.lambda};
    const double z = 1.96, n = static_cast<double>(runs);
    for (std::size_t pr = 0; pr < 3; ++pr) {
        dest[pr]->assign(d * K, TailEstimate{});
        for (std::size_t i = 0; i < d; ++i) {
            std::vector<std::uint64_t> b(K + 1, 0);
            for (const auto& part : parts)
                for (std::size_t x = 0; x <= K; ++x) b[x] += part[(pr * d + i) * (K + 1) + x];
            // exceed[k] = number of values strictly above sorted[k]
            std::vector<std::uint64_t> exceed(K, 0);
            std::uint64_t run = 0;
            for (std::size_t k = K; k-- > 0;) {
                run += b[k + 1];
                exceed[k] = run;
            }
            for (std::size_t k = 0; k < K; ++k) {
                std::size_t sk = std::lower_bound(sorted.begin(), sorted.end(), thresholds[k]) - sorted.begin();
                TailEstimate e;
                e.exceedances = exceed[sk];
                e.probability = exceed[sk] / n;
                double centre = (e.probability + z * z / (2 * n)) / (1 + z * z / n);
                double half = detail::wilson_half(e.probability, n, z) / (1 + z * z / n);
                e.ci_lo = std::max(0.0, centre - half);
                e.ci_hi = std::min(1.0, centre + half);
                e.low_count = e.exceedances < 10;
                (*dest[pr])[i * K + k] = e;
            }
        }
    }
    return out;
}

}  // namespace hawkes
