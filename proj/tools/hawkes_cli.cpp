#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <hawkes/graph.hpp>
#include <hawkes/model_io.hpp>
#include <hawkes/moments.hpp>
#include <hawkes/simulate.hpp>
#include <hawkes/tails.hpp>
#include <hawkes/transform.hpp>

using namespace hawkes;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

enum Exit { kOk = 0, kConfig = 2, kNumeric = 3, kOutOfScope = 4 };

std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(what + ": cannot parse '" + s + "' as a number");
    }
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    if (s.empty()) return out;
    for (const auto& item : split(s, ',')) out.push_back(parse_double(item, what));
    return out;
}

// "a", "a+bi", "a-bi", or polar "r@theta" (theta in radians).
cplx parse_complex(std::string s, const std::string& what) {
    if (auto at = s.find('@'); at != std::string::npos)
        return std::polar(parse_double(s.substr(0, at), what), parse_double(s.substr(at + 1), what));
    if (s.empty() || s.back() != 'i') return parse_double(s, what);
    s.pop_back();
    for (std::size_t k = s.size(); k-- > 1;)
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E')
            return {parse_double(s.substr(0, k), what), parse_double(s.substr(k), what)};
    return {0.0, parse_double(s, what)};
}

std::vector<cplx> parse_complex_list(const std::string& s, const std::string& what) {
    std::vector<cplx> out;
    if (s.empty()) return out;
    for (const auto& item : split(s, ',')) out.push_back(parse_complex(item, what));
    return out;
}

// "start:stop:count" (inclusive, evenly spaced) or a comma list.
std::vector<double> parse_grid(const std::string& s, const std::string& what) {
    auto parts = split(s, ':');
    if (parts.size() == 1) return parse_list(s, what);
    if (parts.size() != 3) throw ConfigError(what + ": expected start:stop:count");
    double a = parse_double(parts[0], what), b = parse_double(parts[1], what);
    double c = parse_double(parts[2], what);
    if (!(c >= 2) || c != std::floor(c)) throw ConfigError(what + ": count must be an integer >= 2");
    if (!(b > a)) throw ConfigError(what + ": stop must exceed start");
    std::vector<double> out;
    auto n = static_cast<std::size_t>(c);
    for (std::size_t k = 0; k < n; ++k) out.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1));
    return out;
}

struct Common {
    std::string model_path;
    std::string out;
    std::uint64_t seed = 1;
    std::size_t grid_steps = 0;  // 0: the owning module's default
    double tol = 1e-10;
    std::size_t runs = 100000;
    std::size_t threads = 0;
};

class Output {
public:
    explicit Output(const std::string& path) : path_(path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw ConfigError("cannot open output file '" + path + "'");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::unique_ptr<std::ofstream> file_;
};

void write_manifest(const Common& c, const std::string& sub, const json& options, const HawkesModel& m) {
    if (c.out.empty()) return;
    json doc;
    doc["tool"] = "hawkes";
    doc["version"] = kToolVersion;
    doc["subcommand"] = sub;
    doc["model_path"] = c.model_path;
    doc["model"] = model_to_json(m);
    doc["options"] = options;
    doc["options"]["seed"] = c.seed;
    doc["options"]["runs"] = c.runs;
    doc["artifact"] = c.out;
    std::ofstream f(c.out + ".manifest.json", std::ios::binary);
    if (!f) throw ConfigError("cannot write run manifest next to '" + c.out + "'");
    f << doc.dump(2) << '\n';
}

TransformOptions transform_options(const Common& c) {
    TransformOptions o;
    if (c.grid_steps) o.grid_steps = c.grid_steps;
    o.tol = c.tol;
    o.threads = c.threads;
    return o;
}

std::size_t component_index(int one_based, const HawkesModel& m) {
    if (one_based < 1 || static_cast<std::size_t>(one_based) > m.d)
        throw ConfigError("component must lie in 1.." + std::to_string(m.d));
    return static_cast<std::size_t>(one_based - 1);
}

// mean_Q1, var_lambda2, cross_QQ12, cross_Qlambda11, two_time_QQ12
MomentRequest parse_statistic(const std::string& name, const HawkesModel& m) {
    static const std::vector<std::pair<std::string, MomentKind>> prefixes = {
        {"mean_Q", MomentKind::MeanQ},         {"mean_lambda", MomentKind::MeanLambda},
        {"var_Q", MomentKind::VarQ},           {"var_lambda", MomentKind::VarLambda},
        {"cross_QQ", MomentKind::CrossQQ},     {"cross_Qlambda", MomentKind::CrossQLambda},
        {"two_time_QQ", MomentKind::TwoTimeQQ}};
    for (const auto& [p, kind] : prefixes) {
        if (name.rfind(p, 0) != 0) continue;
        std::string idx = name.substr(p.size());
        bool pair = kind == MomentKind::CrossQQ || kind == MomentKind::CrossQLambda || kind == MomentKind::TwoTimeQQ;
        if (idx.size() != (pair ? 2u : 1u) || idx.find_first_not_of("123456789") != std::string::npos) continue;
        MomentRequest r;
        r.kind = kind;
        r.i = component_index(idx[0] - '0', m);
        r.j = pair ? component_index(idx[1] - '0', m) : 0;
        return r;
    }
    throw ConfigError("unknown statistic '" + name + "' (components are single digits 1-9)");
}

int run_validate(const Common& c) {
    HawkesModel m;
    try {
        m = load_model(c.model_path);
    } catch (const ConfigError& e) {
        std::cout << "invalid: " << e.what() << '\n';
        return kConfig;
    }
    Output out(c.out);
    auto& os = out.stream();
    auto report = validate(m);
    json opts = json::object();
    if (!report.ok()) {
        os << "invalid\n";
        for (const auto& msg : report.violations) os << "  " << msg << '\n';
        write_manifest(c, "validate", opts, m);
        return kConfig;
    }
    auto b = branching_matrix(m);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", b.spectral_radius);
    if (b.spectral_radius >= 1.0) {
        os << "valid, unstable, rho=" << buf << '\n';
        write_manifest(c, "validate", opts, m);
        return kConfig;
    }
    os << "valid, stable, rho=" << buf << '\n';
    os << "spectral_radius," << num(b.spectral_radius) << '\n';
    auto lam = stationary_intensity(m);
    for (std::size_t i = 0; i < m.d; ++i) os << "stationary_lambda" << i + 1 << ',' << num(lam[i]) << '\n';
    write_manifest(c, "validate", opts, m);
    return kOk;
}

int run_simulate(const Common& c, double horizon, const std::string& sampler, const std::string& t_grid) {
    auto m = load_model(c.model_path);
    Sampler s;
    if (sampler == "thinning")
        s = Sampler::Thinning;
    else if (sampler == "cluster")
        s = Sampler::Cluster;
    else
        throw ConfigError("sampler must be 'thinning' or 'cluster'");
    Output out(c.out);
    json opts{{"sampler", sampler}};
    if (t_grid.empty()) {
        if (!(horizon > 0.0)) throw ConfigError("--horizon must be positive");
        auto p = s == Sampler::Thinning ? simulate_thinning(m, horizon, c.seed) : simulate_cluster(m, horizon, c.seed);
        write_path_csv(out.stream(), p);
        opts["horizon"] = horizon;
    } else {
        auto grid = parse_grid(t_grid, "--t-grid");
        McOptions mo;
        mo.sampler = s;
        mo.threads = c.threads;
        auto est = mc_moments(m, grid, c.runs, c.seed, mo);
        auto& os = out.stream();
        os << "t,statistic,value,std_error\n";
        for (const auto& r : est.rows())
            os << num(r.t) << ',' << r.statistic << ',' << num(r.value) << ',' << num(r.std_error) << '\n';
        opts["t_grid"] = t_grid;
    }
    write_manifest(c, "simulate", opts, m);
    return kOk;
}

int run_transform(const Common& c, double t, const std::string& s_list, const std::string& z_list) {
    auto m = load_model(c.model_path);
    auto q = make_query(m.d, t, parse_list(s_list, "--s"), parse_complex_list(z_list, "--z"));
    for (const auto& s : q.s)
        if (s.real() < 0.0) throw ConfigError("--s entries must be non-negative");
    auto opt = transform_options(c);
    cplx value;
    std::size_t iterations = 0;
    double residual = 0.0;
    if (t == 0.0) {
        value = joint_transform(m, q, opt);
    } else {
        auto f = fixed_point(m, q, Grid(t, opt.grid_steps), opt);
        value = joint_transform_curve(m, f).back();
        iterations = f.iterations;
        residual = f.residual;
    }
    Output out(c.out);
    auto& os = out.stream();
    os << "value_re,value_im,iterations,residual\n";
    os << num(value.real()) << ',' << num(value.imag()) << ',' << iterations << ',' << num(residual) << '\n';
    write_manifest(c, "transform", json{{"t", t}, {"s", s_list}, {"z", z_list}, {"grid_steps", opt.grid_steps}, {"tol", opt.tol}}, m);
    return kOk;
}

int run_pmf(const Common& c, double t, int component, std::size_t max_k) {
    auto m = load_model(c.model_path);
    auto opt = transform_options(c);
    auto r = pmf_Q(m, t, component_index(component, m), max_k, opt);
    if (r.aliasing_warning)
        std::cerr << "warning: estimated mass beyond k=" << max_k << " is " << r.tail_mass_estimate
                  << "; increase --max-k\n";
    Output out(c.out);
    auto& os = out.stream();
    os << "k,probability\n";
    for (std::size_t k = 0; k < r.pmf.size(); ++k) os << k << ',' << num(r.pmf[k]) << '\n';
    write_manifest(c, "pmf", json{{"t", t}, {"component", component}, {"max_k", max_k}, {"grid_steps", opt.grid_steps}, {"tol", opt.tol}}, m);
    return kOk;
}

int run_moments(const Common& c, const std::string& t_grid, const std::string& stats, double tau, double step,
                bool tol_given) {
    auto m = load_model(c.model_path);
    auto grid = parse_grid(t_grid, "--t-grid");
    for (double t : grid)
        if (!(t >= 0.0)) throw ConfigError("--t-grid entries must be non-negative");
    TransformOptions opt = moment_transform_defaults();
    if (c.grid_steps) opt.grid_steps = c.grid_steps;
    opt.threads = c.threads;
    if (tol_given) opt.tol = c.tol;

    // a grid starting at 0 with even spacing is served by one fixed point per stencil point
    const std::size_t K = grid.size();
    bool curve = K >= 2 && grid.front() == 0.0;
    for (std::size_t k = 0; curve && k < K; ++k)
        curve = std::abs(grid[k] - grid.back() * static_cast<double>(k) / static_cast<double>(K - 1)) <=
                1e-12 * grid.back();

    std::vector<MomentRequest> reqs;
    for (const auto& name : split(stats, ',')) {
        auto r = parse_statistic(name, m);
        r.tau = tau;
        r.step = step;
        reqs.push_back(r);
    }
    // rows are (t, statistic) with statistics in request order
    std::vector<std::vector<MomentValue>> values(reqs.size(), std::vector<MomentValue>(K));
    for (std::size_t a = 0; a < reqs.size(); ++a) {
        if (curve) {
            values[a] = moment_curve(m, reqs[a], grid.back(), K, opt);
        } else {
            for (std::size_t k = 0; k < K; ++k) {
                auto r = reqs[a];
                r.t = grid[k];
                values[a][k] = moment(m, r, opt);
            }
        }
    }
    Output out(c.out);
    auto& os = out.stream();
    os << "t,statistic,value,error_estimate\n";
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t a = 0; a < reqs.size(); ++a)
            os << num(grid[k]) << ',' << moment_name(reqs[a]) << ',' << num(values[a][k].value) << ','
               << num(values[a][k].error) << '\n';
    write_manifest(c, "moments", json{{"t_grid", t_grid},
                        {"statistics", stats},
                        {"tau", tau},
                        {"step", step},
                        {"grid_steps", opt.grid_steps},
                        {"tol", opt.tol}}, m);
    return kOk;
}

int run_graph(const Common& c) {
    auto m = load_model(c.model_path);
    require_valid(m);
    auto g = build_graph(m);
    auto cls = classify(g);
    // tail indices only exist when every edge carries a Pareto or constant jump
    std::vector<double> gamma_bar(m.d, std::numeric_limits<double>::quiet_NaN());
    try {
        gamma_bar = tail_indices(m).gamma_bar;
    } catch (const UnsupportedConfigurationError&) {
    }
    Output out(c.out);
    auto& os = out.stream();
    os << "class,members,recurrent,gamma_bar\n";
    for (std::size_t pos = 0; pos < cls.topological_order.size(); ++pos) {
        std::size_t id = cls.topological_order[pos];
        std::string members;
        for (std::size_t v : cls.classes[id]) members += (members.empty() ? "" : " ") + std::to_string(v + 1);
        os << pos + 1 << ',' << members << ',' << (cls.recurrent[id] ? 1 : 0) << ','
           << num(gamma_bar[cls.classes[id].front()]) << '\n';
    }
    write_manifest(c, "graph", json::object(), m);
    return kOk;
}

int run_tails(const Common& c, double t, const std::string& process, const std::string& x_list, double x_min,
              double x_max, std::size_t x_points) {
    auto m = load_model(c.model_path);
    TailProcess tp;
    Process mp;
    if (process == "N") {
        tp = TailProcess::N;
        mp = Process::N;
    } else if (process == "Q") {
        tp = TailProcess::Q;
        mp = Process::Q;
    } else if (process == "lambda") {
        tp = TailProcess::Lambda;
        mp = Process::Lambda;
    } else {
        throw ConfigError("--process must be N, Q or lambda");
    }
    std::vector<double> xs;
    if (!x_list.empty()) {
        xs = parse_list(x_list, "--x");
    } else {
        if (!(x_min > 0.0) || !(x_max > x_min) || x_points < 2) throw ConfigError("need 0 < --x-min < --x-max and --x-points >= 2");
        for (std::size_t k = 0; k < x_points; ++k)
            xs.push_back(x_min * std::pow(x_max / x_min, static_cast<double>(k) / static_cast<double>(x_points - 1)));
    }
    for (double x : xs)
        if (!(x > 0.0)) throw ConfigError("thresholds must be positive");
    TailOptions to;
    if (c.grid_steps) to.grid_steps = c.grid_steps;
    std::vector<TailAsymptote> asym;
    for (std::size_t i = 0; i < m.d; ++i) asym.push_back(tail_asymptote(m, t, i, tp, to));
    McTail mc;
    if (c.runs > 0) {
        McOptions mo;
        mo.sampler = Sampler::Cluster;
        mo.threads = c.threads;
        mc = mc_tail(m, t, xs, c.runs, c.seed, mo);
    }
    Output out(c.out);
    auto& os = out.stream();
    os << "x,component,asymptote,mc_estimate,mc_ci_lo,mc_ci_hi\n";
    for (std::size_t i = 0; i < m.d; ++i)
        for (std::size_t k = 0; k < xs.size(); ++k) {
            os << num(xs[k]) << ',' << i + 1 << ',' << num(asym[i](xs[k])) << ',';
            if (c.runs > 0) {
                const auto& e = mc.at(mp, i, k);
                os << num(e.probability) << ',' << num(e.ci_lo) << ',' << num(e.ci_hi);
            } else {
                os << ",,";
            }
            os << '\n';
        }
    write_manifest(c, "tails",
                   json{{"t", t}, {"process", process}, {"x", x_list}, {"x_min", x_min}, {"x_max", x_max},
                        {"x_points", x_points}, {"grid_steps", to.grid_steps}},
                   m);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multivariate Hawkes and population processes: transforms, moments, simulation, tails"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML/INI file with option values; unknown keys are rejected");
    app.allow_config_extras(CLI::config_extras_mode::error);

    Common c;
    if (const char* env = std::getenv("HAWKES_TOL")) {
        try {
            c.tol = parse_double(env, "HAWKES_TOL");
        } catch (const ConfigError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kConfig;
        }
    }
    bool tol_given = std::getenv("HAWKES_TOL") != nullptr;
    auto add_common = [&](CLI::App* sub, bool grid, bool tol, bool mc) {
        sub->add_option("--model", c.model_path, "Model file (JSON, schema hawkes-model/1)")->required();
        sub->add_option("--out", c.out, "Output path (default stdout); a run manifest is written to <out>.manifest.json");
        sub->add_option("--threads", c.threads, "Worker cap (0 = hardware concurrency)");
        if (grid) sub->add_option("--grid-steps", c.grid_steps, "Grid steps on [0, t] (default 512; 1024 for tails)");
        if (tol)
            sub->add_option_function<double>(
                   "--tol", [&](double v) { c.tol = v; tol_given = true; },
                   "Fixed-point tolerance (default 1e-10; 1e-13 for moments; env HAWKES_TOL)");
        if (mc) {
            sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
            sub->add_option("--runs", c.runs, "Monte Carlo replications")->capture_default_str();
        }
    };

    auto* validate_cmd = app.add_subcommand("validate", "Check a model file and report stability");
    add_common(validate_cmd, false, false, false);

    double horizon = 0.0;
    std::string sampler = "thinning", sim_grid;
    auto* simulate_cmd = app.add_subcommand("simulate", "Simulate one path, or Monte Carlo moments on a t-grid");
    add_common(simulate_cmd, false, false, true);
    simulate_cmd->add_option("--horizon", horizon, "Path horizon (single-path mode)");
    simulate_cmd->add_option("--sampler", sampler, "thinning or cluster")->capture_default_str();
    simulate_cmd->add_option("--t-grid", sim_grid, "start:stop:count or comma list (estimator mode)");

    double t = 1.0;
    std::string s_list, z_list;
    auto* transform_cmd = app.add_subcommand("transform", "Joint transform E[prod z^Q e^{-s lambda}] at time t");
    add_common(transform_cmd, true, true, false);
    transform_cmd->add_option("--t", t, "Time")->capture_default_str();
    transform_cmd->add_option("--s", s_list, "Comma list of s_i >= 0 (default 0)");
    transform_cmd->add_option("--z", z_list, "Comma list of z_i: a, a+bi or polar r@theta (default 1)");

    int component = 1;
    std::size_t max_k = 50;
    auto* pmf_cmd = app.add_subcommand("pmf", "Probability mass function of Q_i(t)");
    add_common(pmf_cmd, true, true, false);
    pmf_cmd->add_option("--t", t, "Time")->capture_default_str();
    pmf_cmd->add_option("--component", component, "Component (1-based)")->capture_default_str();
    pmf_cmd->add_option("--max-k", max_k, "Largest k reported")->capture_default_str();

    std::string moment_grid = "0:10:21", stats = "mean_Q1,mean_lambda1,var_Q1,var_lambda1,cross_Qlambda11,cross_QQ12";
    double tau = 0.0, step = 1e-3;
    auto* moments_cmd = app.add_subcommand("moments", "Moments from the transform on a t-grid");
    add_common(moments_cmd, true, true, false);
    moments_cmd->add_option("--t-grid", moment_grid, "start:stop:count or comma list")->capture_default_str();
    moments_cmd->add_option("--stats", stats, "Comma list of statistics")->capture_default_str();
    moments_cmd->add_option("--tau", tau, "Lag for two_time_QQ statistics");
    moments_cmd->add_option("--step", step, "Characteristic-function stencil step")->capture_default_str();

    auto* graph_cmd = app.add_subcommand("graph", "Hawkes graph classes and tail indices");
    add_common(graph_cmd, false, false, false);

    std::string process = "N", x_list;
    double x_min = 1.0, x_max = 1000.0;
    std::size_t x_points = 31;
    auto* tails_cmd = app.add_subcommand("tails", "Tail asymptotes with Monte Carlo estimates");
    add_common(tails_cmd, true, false, true);
    tails_cmd->add_option("--t", t, "Time")->capture_default_str();
    tails_cmd->add_option("--process", process, "N, Q or lambda")->capture_default_str();
    tails_cmd->add_option("--x", x_list, "Comma list of thresholds (overrides the log range)");
    tails_cmd->add_option("--x-min", x_min, "Smallest threshold")->capture_default_str();
    tails_cmd->add_option("--x-max", x_max, "Largest threshold")->capture_default_str();
    tails_cmd->add_option("--x-points", x_points, "Log-spaced threshold count")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*validate_cmd) return run_validate(c);
        if (*simulate_cmd) return run_simulate(c, horizon, sampler, sim_grid);
        if (*transform_cmd) return run_transform(c, t, s_list, z_list);
        if (*pmf_cmd) return run_pmf(c, t, component, max_k);
        if (*moments_cmd) return run_moments(c, moment_grid, stats, tau, step, tol_given);
        if (*graph_cmd) return run_graph(c);
        if (*tails_cmd) return run_tails(c, t, process, x_list, x_min, x_max, x_points);
    } catch (const OutOfScopeError& e) {
        std::cerr << "out of scope: " << e.what() << '\n';
        return kOutOfScope;
    } catch (const NonConvergenceError& e) {
        std::cerr << "did not converge: " << e.what() << '\n';
        return kNumeric;
    } catch (const CapExceededError& e) {
        std::cerr << "event cap exceeded: " << e.what() << '\n';
        return kNumeric;
    } catch (const InstabilityError& e) {
        std::cerr << "unstable model: " << e.what() << '\n';
        return kConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumeric;
    }
    return kConfig;
}
