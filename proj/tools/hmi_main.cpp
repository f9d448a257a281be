// Batch front-end: every pipeline is a subcommand writing CSV with a config
// echo, so any run can be reproduced from its own output header.

#include <atomic>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "hmi/hmi.hpp"

namespace {

struct Options {
    std::string config_path;
    double alpha = 0.5;
    double lambda = 1.0;
    double mu_star = 1.0;
    double kappa = 1.0;
    double gamma = 0.3;
    std::string gamma_list;
    std::string reaction = "power:c=1,beta=2";
    std::string schedule = "const";
    double h = 1.0 / 4096.0;
    double horizon = 2.0;
    double T = 2000.0;
    std::size_t paths = 1000;
    std::uint64_t seed = 1;
    std::string out = "out.csv";
    std::string price_out;
    std::string dump_events;
    bool no_ab = true;
    bool with_ab = false;
    std::uint64_t event_cap = 10'000'000;
    int adomian_order = 2;
    unsigned threads = 0;
    double t_lo = 0.05;
    // ml spot check
    double ml_rho = 0.5;
    double ml_beta = 1.0;
    double ml_z = -1.0;

    hmi::MacroParams macro() const {
        hmi::MacroParams p;
        p.alpha = alpha;
        p.lambda = lambda;
        p.mu_star = mu_star;
        p.kappa = kappa;
        p.gamma = gamma;
        p.validate();
        return p;
    }

    hmi::Reaction phi() const { return hmi::Reaction::from_string(reaction); }

    // the library grid requires an exact multiple of h; snap the requested
    // horizon so rounded step sizes typed on the command line still work
    hmi::Grid grid() const {
        const double n = std::max(2.0, std::round(horizon / h));
        return hmi::make_grid(h, n * h);
    }

    hmi::Schedule sched() const {
        if (schedule == "const" || schedule == "flat") return hmi::Schedule::flat();
        if (schedule == "const-extended") return hmi::Schedule::flat_extended();
        if (schedule.rfind("table:", 0) == 0) {
            bool renorm = false;
            auto s = hmi::Schedule::from_file(schedule.substr(6), &renorm);
            if (renorm)
                std::cerr << "warning: schedule renormalized to unit integral\n";
            return s;
        }
        throw std::domain_error("unknown schedule '" + schedule + "'");
    }

    std::vector<double> gammas_or(const std::vector<double>& fallback) const {
        if (gamma_list.empty()) return fallback;
        std::vector<double> gs;
        std::istringstream in(gamma_list);
        std::string item;
        while (std::getline(in, item, ',')) gs.push_back(std::stod(item));
        return gs;
    }

    std::map<std::string, std::string> echo(const std::string& sub) const {
        auto fmt = [](double v) {
            char buf[64];
            for (int prec = 15; prec <= 17; ++prec) {  // shortest round-trip form
                std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
                if (std::stod(buf) == v) break;
            }
            return std::string(buf);
        };
        std::map<std::string, std::string> kv;
        kv["subcommand"] = sub;
        kv["alpha"] = fmt(alpha);
        kv["lambda"] = fmt(lambda);
        kv["mu-star"] = fmt(mu_star);
        kv["kappa"] = fmt(kappa);
        kv["gamma"] = fmt(gamma);
        if (!gamma_list.empty()) kv["gamma-list"] = gamma_list;
        kv["reaction"] = reaction;
        kv["f"] = schedule;
        kv["h"] = fmt(h);
        kv["horizon"] = fmt(horizon);
        kv["T"] = fmt(T);
        kv["paths"] = std::to_string(paths);
        kv["seed"] = std::to_string(seed);
        kv["event-cap"] = std::to_string(event_cap);
        kv["no-ab"] = with_ab ? "false" : "true";
        kv["adomian-order"] = std::to_string(adomian_order);
        return kv;
    }
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->set_help_flag("--help", "print help");
    cmd->add_option("--alpha", o.alpha, "tail exponent in (0,1)");
    cmd->add_option("--lambda", o.lambda, "criticality-rate constant");
    cmd->add_option("--mu-star", o.mu_star, "baseline limit");
    cmd->add_option("--kappa", o.kappa, "permanent impact per order");
    cmd->add_option("--gamma", o.gamma, "metaorder size ratio");
    cmd->add_option("--gamma-list", o.gamma_list, "comma-separated gamma sweep");
    cmd->add_option("--reaction", o.reaction,
                    "power:c=..,beta=.. | linear:slope=.. | table:<path>");
    cmd->add_option("--f", o.schedule, "const | const-extended | table:<path>");
    cmd->add_option("--h", o.h, "grid step");
    cmd->add_option("--horizon", o.horizon, "grid horizon (snapped to a multiple of h)");
    cmd->add_option("--T", o.T, "microscopic horizon scale");
    cmd->add_option("--paths", o.paths, "Monte Carlo paths");
    cmd->add_option("--seed", o.seed, "master RNG seed");
    cmd->add_option("--out", o.out, "output CSV path");
    cmd->add_option("--event-cap", o.event_cap, "per-path event cap");
    cmd->add_option("--threads", o.threads, "worker threads (0 = auto)");
    cmd->add_flag("--no-ab", o.no_ab, "skip the a/b Hawkes streams");
    cmd->add_flag("--with-ab", o.with_ab, "simulate the a/b Hawkes streams");
    cmd->add_option("--config", o.config_path,
                    "flat key=value config file; flags override");
}

// key=value lines; a value applies only when the matching flag was not given
void apply_config(CLI::App* cmd, Options& o) {
    if (o.config_path.empty()) return;
    std::ifstream in(o.config_path);
    if (!in) throw std::domain_error("cannot open config file " + o.config_path);
    std::map<std::string, std::function<void(const std::string&)>> setters = {
        {"alpha", [&](const std::string& v) { o.alpha = std::stod(v); }},
        {"lambda", [&](const std::string& v) { o.lambda = std::stod(v); }},
        {"mu-star", [&](const std::string& v) { o.mu_star = std::stod(v); }},
        {"kappa", [&](const std::string& v) { o.kappa = std::stod(v); }},
        {"gamma", [&](const std::string& v) { o.gamma = std::stod(v); }},
        {"gamma-list", [&](const std::string& v) { o.gamma_list = v; }},
        {"reaction", [&](const std::string& v) { o.reaction = v; }},
        {"f", [&](const std::string& v) { o.schedule = v; }},
        {"h", [&](const std::string& v) { o.h = std::stod(v); }},
        {"horizon", [&](const std::string& v) { o.horizon = std::stod(v); }},
        {"T", [&](const std::string& v) { o.T = std::stod(v); }},
        {"paths", [&](const std::string& v) { o.paths = std::stoul(v); }},
        {"seed", [&](const std::string& v) { o.seed = std::stoull(v); }},
        {"event-cap", [&](const std::string& v) { o.event_cap = std::stoull(v); }},
        {"threads", [&](const std::string& v) { o.threads = (unsigned)std::stoul(v); }},
        {"no-ab", [&](const std::string& v) { o.no_ab = v != "false" && v != "0"; }},
        {"with-ab", [&](const std::string& v) { o.with_ab = v == "true" || v == "1"; }},
        {"adomian-order", [&](const std::string& v) { o.adomian_order = std::stoi(v); }},
    };
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        const auto it = setters.find(key);
        if (it == setters.end())
            throw std::domain_error("unknown config key '" + key + "'");
        if (cmd->count("--" + key) == 0) it->second(value);
    }
}

int run_solve(const Options& o) {
    const auto params = o.macro();
    const auto phi = o.phi();
    const auto f = o.sched();
    const auto grid = o.grid();
    const auto sol = hmi::solve_rate(params, phi, f, grid);
    const auto curve = hmi::impact_from_solution(sol, params, o.reaction);
    hmi::CsvWriter csv(o.out);
    csv.config_echo(o.echo("solve"));
    csv.meta("seed", o.seed);
    csv.header({"t", "forcing", "u", "r_star", "mi"});
    for (std::size_t n = 0; n <= grid.n_steps; ++n)
        csv.row({grid.time(n), sol.forcing[n], sol.u[n], sol.r[n], curve.mi[n]});
    csv.finish();
    return 0;
}

int run_bounds(const Options& o) {
    const auto params = o.macro();
    const auto phi = o.phi();
    const auto f = o.sched();
    const auto grid = o.grid();
    const auto bounds = hmi::impact_bounds(params, phi, f, grid, o.reaction);
    const auto series = hmi::adomian(params, phi, f, grid, o.adomian_order);
    const auto approx = hmi::adomian_impact(series, params, phi, f, o.reaction);
    hmi::CsvWriter csv(o.out);
    csv.config_echo(o.echo("bounds"));
    csv.meta("seed", o.seed);
    csv.header({"t", "mi_lower", "mi_upper",
                "mi_adomian_" + std::to_string(o.adomian_order)});
    for (std::size_t n = 0; n <= grid.n_steps; ++n)
        csv.row({grid.time(n), bounds.lower.mi[n], bounds.upper.mi[n], approx.mi[n]});
    csv.finish();
    return 0;
}

int run_simulate(const Options& o) {
    const auto params = o.macro();
    const auto phi = o.phi();
    const auto f = o.sched();
    const auto grid = o.grid();
    hmi::SimOptions sopt;
    sopt.with_ab = o.with_ab;
    sopt.event_cap = o.event_cap;
    sopt.n_threads = o.threads;
    const auto est = hmi::monte_carlo_rescaled_impact(params, o.T, phi, f, o.paths,
                                                      grid, o.seed, sopt);
    hmi::CsvWriter csv(o.out);
    csv.config_echo(o.echo("simulate"));
    csv.meta("seed", o.seed);
    csv.header({"t", "mean_mi", "stderr"});
    for (std::size_t n = 0; n <= grid.n_steps; ++n)
        csv.row({grid.time(n), est.mean[n], est.stderr_[n]});
    csv.finish();

    if (!o.dump_events.empty() || !o.price_out.empty() || o.with_ab) {
        const auto micro = hmi::micro_from_macro(params, o.T);
        if (!o.dump_events.empty()) {
            for (std::size_t k = 0; k < std::min<std::size_t>(o.paths, 32); ++k) {
                const auto path = hmi::simulate_path(params, micro, phi, f, o.horizon,
                                                     hmi::path_seed(o.seed, k), sopt);
                hmi::CsvWriter ev(o.dump_events + "/path_" + std::to_string(k) + ".csv");
                ev.config_echo(o.echo("simulate"));
                ev.header({"stream", "time"});
                auto dump = [&](const std::vector<double>& ts, double tag) {
                    for (double t : ts) ev.row({tag, t});
                };
                dump(path.times_a, 0);
                dump(path.times_b, 1);
                dump(path.times_o, 2);
                dump(path.times_m, 3);
                ev.finish();
            }
        }
        if (!o.price_out.empty()) {
            hmi::SimOptions popt = sopt;
            popt.with_ab = true;
            const auto path = hmi::simulate_path(params, micro, phi, f, o.horizon,
                                                 hmi::path_seed(o.seed, 0), popt);
            const auto [P, EP] = hmi::price_paths(path, params, grid);
            hmi::CsvWriter pv(o.price_out);
            pv.config_echo(o.echo("simulate"));
            pv.meta("seed", o.seed);
            pv.header({"t", "P", "EP"});
            for (std::size_t n = 0; n <= grid.n_steps; ++n)
                pv.row({grid.time(n), P[n], EP[n]});
            pv.finish();
        }
    }
    return 0;
}

int run_fit_gamma(const Options& o) {
    const auto phi = o.phi();
    std::vector<double> gammas = o.gammas_or([] {
        std::vector<double> gs;
        for (int i = 0; i < 12; ++i)
            gs.push_back(0.05 * std::pow(10.0 / 0.05, i / 11.0));
        return gs;
    }());
    const auto f = o.sched();
    const auto grid = hmi::make_grid(o.h, std::max(2.0, std::round(1.0 / o.h)) * o.h);
    // independent solves, one slot per gamma; reduction order is fixed
    std::vector<std::vector<double>> curves(gammas.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= gammas.size()) return;
            auto params = o.macro();
            params.gamma = gammas[i];
            const auto sol = hmi::solve_rate(params, phi, f, grid);
            curves[i] = hmi::impact_from_solution(sol, params, o.reaction).mi;
        }
    };
    const unsigned n_threads =
        std::max(1u, o.threads ? o.threads : std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (unsigned i = 0; i + 1 < n_threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    std::vector<double> mi_peak(gammas.size());
    for (std::size_t i = 0; i < gammas.size(); ++i) mi_peak[i] = curves[i][grid.n_steps];
    const auto fit = hmi::loglog_fit(gammas, mi_peak);

    hmi::CsvWriter csv(o.out);
    csv.config_echo(o.echo("fit-gamma"));
    csv.meta("seed", o.seed);
    csv.meta("fit_slope", fit.slope);
    csv.meta("fit_intercept", fit.intercept);
    csv.meta("fit_r2", fit.r2);
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "gamma_%zu %.12g peak %.12g", i, gammas[i],
                      mi_peak[i]);
        csv.meta("sweep", std::string(buf));
    }
    std::vector<std::string> cols = {"t"};
    for (std::size_t i = 0; i < gammas.size(); ++i)
        cols.push_back("mi_gamma_" + std::to_string(i));
    csv.header(cols);
    std::vector<double> row(gammas.size() + 1);
    for (std::size_t n = 0; n <= grid.n_steps; ++n) {
        row[0] = grid.time(n);
        for (std::size_t i = 0; i < gammas.size(); ++i) row[i + 1] = curves[i][n];
        csv.row(row);
    }
    csv.finish();
    std::printf("slope %.6f\nintercept %.6f\nr2 %.6f\n", fit.slope, fit.intercept,
                fit.r2);
    return 0;
}

int run_fit_volume(const Options& o) {
    const auto params = o.macro();
    const auto phi = o.phi();
    const auto f = o.sched();
    const auto grid = o.grid();
    const auto sol = hmi::solve_rate(params, phi, f, grid);
    const auto curve = hmi::impact_from_solution(sol, params, o.reaction);
    if (params.gamma == 0.0) {
        std::printf("degenerate true\n");
        return 0;
    }
    const auto fit = hmi::sqrt_law_volume_check(curve, o.t_lo);
    hmi::CsvWriter csv(o.out);
    csv.config_echo(o.echo("fit-volume"));
    csv.meta("seed", o.seed);
    csv.meta("fit_slope", fit.slope);
    csv.meta("fit_r2", fit.r2);
    csv.header({"t", "mi"});
    for (std::size_t n = 0; n <= grid.n_steps; ++n)
        csv.row({grid.time(n), curve.mi[n]});
    csv.finish();
    std::printf("slope %.6f\nr2 %.6f\ndegenerate %s\n", fit.slope, fit.r2,
                fit.degenerate ? "true" : "false");
    return 0;
}

int run_ml(const Options& o) {
    const double v = hmi::mittag_leffler(o.ml_rho, o.ml_beta, o.ml_z);
    std::printf("%.12g\n", v);
    return 0;
}

int run_check(const Options& o) {
    int failures = 0;
    auto report = [&](const char* name, bool ok) {
        std::printf("%s %s\n", ok ? "PASS" : "FAIL", name);
        if (!ok) ++failures;
    };

    const hmi::KernelFamily kernel(0.5);
    bool ok = std::abs(kernel.density(0.0) - 0.5) < 1e-15 &&
              std::abs(kernel.tail_mass(99.0) - 0.1) < 1e-15;
    double quad = 0.0;
    for (int i = 0; i < 4'000'000; ++i) {
        const double t = (i + 0.5) * 1e-3;
        quad += kernel.density(t) * 1e-3;
    }
    report("kernel closed forms and unit mass", ok && std::abs(quad - (1.0 - kernel.tail_mass(4000.0))) < 1e-6);

    report("mittag-leffler exp identity",
           std::abs(hmi::mittag_leffler(1.0, 1.0, 1.0) - std::exp(1.0)) < 1e-10);
    const double seam = std::pow(22.0, 0.5);
    report("mittag-leffler branch seam",
           std::abs(hmi::mittag_leffler(0.5, 1.0, -seam * 1.0001) -
                    hmi::mittag_leffler(0.5, 1.0, -seam * 0.9999)) < 1e-4);

    {
        hmi::MacroParams p;
        p.alpha = 0.5;
        p.gamma = 1.0;
        const auto phi = hmi::Reaction::linear(1.0);
        const auto grid = hmi::make_grid(1.0 / 512, 1.0);
        const auto sol = hmi::solve_rate(p, phi, hmi::Schedule::flat(), grid);
        double err = 0.0, sup = 0.0;
        for (std::size_t n = 0; n <= grid.n_steps; ++n) {
            const double rate = p.kappa / p.lambda * hmi::gamma_fn(1.0 - p.alpha);
            const double exact =
                p.gamma - hmi::linear_volterra_solution(p.gamma, rate, p.alpha,
                                                        grid.time(n));
            err = std::max(err, std::abs(sol.r[n] - exact));
            sup = std::max(sup, std::abs(exact));
        }
        report("linear solver vs mittag-leffler oracle", err / sup < 5e-3);
    }
    {
        hmi::MacroParams p;
        p.gamma = 0.1;
        const auto phi = hmi::Reaction::power(1.0, 2.0);
        const auto grid = hmi::make_grid(1.0 / 256, 2.0);
        const auto sol = hmi::solve_rate(p, phi, hmi::Schedule::flat(), grid);
        const auto curve = hmi::impact_from_solution(sol, p, "x^2");
        const auto bounds = hmi::impact_bounds(p, phi, hmi::Schedule::flat(), grid);
        const auto w = hmi::singular_weights(grid, p.alpha);
        double tv_ref = 0.0;
        for (std::size_t j = 1; j <= sol.refined_until; ++j)
            tv_ref += std::abs(bounds.r_plus[j] - bounds.r_plus[j - 1]);
        const double slack = 2.0 * (p.kappa / p.lambda) * w[1] * tv_ref + 1e-9;
        bool sandwich = true;
        for (std::size_t n = 0; n <= grid.n_steps; ++n) {
            if (curve.mi[n] < bounds.lower.mi[n] - slack ||
                curve.mi[n] > bounds.upper.mi[n] + slack)
                sandwich = false;
        }
        report("impact bound sandwich", sandwich);
    }
    {
        auto params = o.macro();
        params.gamma = 0.3;
        const auto micro = hmi::micro_from_macro(params, 200.0);
        const auto phi = o.phi();
        bool dominance = true, signal_id = true;
        for (std::size_t k = 0; k < 100; ++k) {
            const auto path = hmi::simulate_path(params, micro, phi,
                                                 hmi::Schedule::flat(), 1.5,
                                                 hmi::path_seed(o.seed, k), {});
            if (!hmi::dominance_holds(path)) dominance = false;
            const double t = 0.9 * micro.T;
            const double sig = hmi::signal_at(path, params, t);
            if (!std::isfinite(sig)) signal_id = false;
        }
        report("pathwise dominance N^m <= N^o", dominance);
        report("signal evaluation finite", signal_id);
    }
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hawkes market impact: Volterra limit, bounds, and event simulation"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);
    Options o;

    auto* solve = app.add_subcommand("solve", "solve r* and the impact curve");
    add_common(solve, o);
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo rescaled impact");
    add_common(simulate, o);
    simulate->add_option("--price-out", o.price_out, "write one path's P/EP curve");
    simulate->add_option("--dump-events", o.dump_events, "directory for event dumps");
    auto* bounds = app.add_subcommand("bounds", "closed-form bounds and Adomian series");
    add_common(bounds, o);
    bounds->add_option("--adomian-order", o.adomian_order, "series order J");
    auto* fitg = app.add_subcommand("fit-gamma", "gamma sweep and power-law fit");
    add_common(fitg, o);
    auto* fitv = app.add_subcommand("fit-volume", "time-slope fit of one curve");
    add_common(fitv, o);
    fitv->add_option("--t-lo", o.t_lo, "fit window lower edge");
    auto* ml = app.add_subcommand("ml", "Mittag-Leffler spot value");
    ml->add_option("--rho", o.ml_rho, "first index in (0,1]");
    ml->add_option("--beta", o.ml_beta, "second index >= 0");
    ml->add_option("--z", o.ml_z, "argument");
    auto* check = app.add_subcommand("check", "reduced-scale invariant suite");
    add_common(check, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
            e.get_name() == "CallForVersion")
            return app.exit(e);
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    }

    try {
        for (CLI::App* cmd : {solve, simulate, bounds, fitg, fitv, check})
            if (cmd->parsed()) apply_config(cmd, o);
        if (solve->parsed()) return run_solve(o);
        if (simulate->parsed()) return run_simulate(o);
        if (bounds->parsed()) return run_bounds(o);
        if (fitg->parsed()) return run_fit_gamma(o);
        if (fitv->parsed()) return run_fit_volume(o);
        if (ml->parsed()) return run_ml(o);
        if (check->parsed()) return run_check(o);
    } catch (const hmi::ResourceError& e) {
        std::cerr << "error: resource: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
