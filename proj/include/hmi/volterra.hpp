#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmi/params.hpp"
#include "hmi/reaction.hpp"
#include "hmi/schedule.hpp"
#include "hmi/special.hpp"

namespace hmi {

struct Grid {
    double h = 0.0;
    std::size_t n_steps = 0;

    double time(std::size_t j) const { return h * static_cast<double>(j); }
    double horizon() const { return h * static_cast<double>(n_steps); }
};

inline Grid make_grid(double h, double horizon) {
    if (!(h > 0.0) || !(horizon > 0.0))
        throw std::domain_error("grid: step and horizon must be > 0");
    const double n_real = horizon / h;
    const auto n = static_cast<std::size_t>(std::llround(n_real));
    if (n < 2) throw std::domain_error("grid: need at least 2 steps");
    if (std::abs(static_cast<double>(n) * h - horizon) > 1e-12 * std::max(1.0, horizon))
        throw std::domain_error("grid: horizon must be an integer multiple of h");
    return Grid{h, n};
}

// Product-integration weights for the kernel (t_n - s)^{-alpha}, exact on
// piecewise-constant integrands. Stationary: the cell [t_j, t_{j+1}] seen
// from node t_n has weight w[n-j],
//   w[m] = ((m h)^{1-alpha} - ((m-1) h)^{1-alpha}) / (1-alpha),
// and sum_{m=1}^{n} w[m] = t_n^{1-alpha}/(1-alpha) by telescoping.
inline std::vector<double> singular_weights(const Grid& grid, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("singular_weights: alpha must be in (0,1)");
    const double p = 1.0 - alpha;
    std::vector<double> w(grid.n_steps + 1);
    w[0] = 0.0;
    double prev = 0.0;
    for (std::size_t m = 1; m <= grid.n_steps; ++m) {
        const double cur = std::pow(grid.time(m), p);
        w[m] = (cur - prev) / p;
        prev = cur;
    }
    return w;
}

// One solve of the macroscopic fixed point
//   r(t) = Phi( (kappa/lambda) int_0^t (t-s)^{-alpha} (gamma f(s) - r(s)) ds )
// on a uniform grid. u holds the argument of Phi at each node, so
// r[j] = Phi(u[j]) exactly; forcing holds gamma f(t_j).
struct VolterraSolution {
    Grid grid;
    double alpha = 0.0, lambda = 0.0, kappa = 0.0, gamma = 0.0;
    std::vector<double> r, u, forcing;
    // nodes 1..refined_until were solved on the startup-refined auxiliary
    // grid; their u comes from the fine quadrature
    std::size_t refined_until = 0;
};

struct SolveOptions {
    int bisect_iters = 60;
    double bisect_atol = 1e-12;
    // The first startup_cells coarse cells are solved on a startup_refine x
    // finer auxiliary grid; the plain scheme's error is concentrated in the
    // t^{(1-alpha)} startup layer and this removes it without touching the
    // scheme elsewhere. startup_refine = 1 disables.
    std::size_t startup_cells = 32;
    std::size_t startup_refine = 64;
};

namespace detail {

// Core recursion with the current node treated implicitly: the left-endpoint
// value of the newest cell is replaced by the unknown r_n. Assumes r[0..n0-1]
// and u[0..n0-1] are already filled.
inline void solve_nodes(const Grid& grid, double alpha, double kap_over_lam,
                        const Reaction& phi, const std::vector<double>& g,
                        double g_sup, const std::vector<double>& w,
                        std::vector<double>& r, std::vector<double>& u, std::size_t n0,
                        const SolveOptions& opt) {
    const double p = 1.0 - alpha;
    for (std::size_t n = std::max<std::size_t>(n0, 1); n <= grid.n_steps; ++n) {
        double s = 0.0;
        // memory sum over settled cells j = 0 .. n-2
        const double* wp = w.data() + 2;
        for (std::size_t j = n - 1; j-- > 0;) {
            s += *wp++ * (g[j] - r[j]);
        }
        const double tail = g[n - 1];
        const double w1 = w[1];
        auto u_of = [&](double rn) { return kap_over_lam * (s + w1 * (tail - rn)); };

        const double u_at_zero = u_of(0.0);
        if (u_at_zero <= 0.0 || phi(u_at_zero) == 0.0) {
            r[n] = 0.0;
            u[n] = u_at_zero;
            continue;
        }
        // a-priori cap: r <= Phi(kappa gamma ||f||_inf t^{1-alpha}/(lambda(1-alpha)))
        const double cap_arg =
            kap_over_lam * g_sup * std::pow(grid.time(n), p) / p;
        const double cap = phi(cap_arg);
        double lo = 0.0, hi = cap;
        for (int it = 0; it < opt.bisect_iters && hi - lo > opt.bisect_atol; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid - phi(u_of(mid)) < 0.0)
                lo = mid;
            else
                hi = mid;
        }
        const double rn = 0.5 * (lo + hi);
        u[n] = u_of(rn);
        r[n] = phi(u[n]);  // keeps r = Phi(u) exact at the recorded point
    }
}

}  // namespace detail

inline VolterraSolution solve_rate(const MacroParams& params, const Reaction& phi,
                                   const Schedule& f, const Grid& grid,
                                   const SolveOptions& opt = {}) {
    params.validate();
    if (grid.n_steps < 2) throw std::domain_error("solve_rate: invalid grid");

    VolterraSolution sol;
    sol.grid = grid;
    sol.alpha = params.alpha;
    sol.lambda = params.lambda;
    sol.kappa = params.kappa;
    sol.gamma = params.gamma;
    sol.r.assign(grid.n_steps + 1, 0.0);
    sol.u.assign(grid.n_steps + 1, 0.0);
    sol.forcing.assign(grid.n_steps + 1, 0.0);
    for (std::size_t j = 0; j <= grid.n_steps; ++j)
        sol.forcing[j] = params.gamma * f(grid.time(j));

    const double kap_over_lam = params.kappa / params.lambda;
    const double g_sup = params.gamma * f.max_value();
    const auto w = singular_weights(grid, params.alpha);

    std::size_t n0 = 1;
    const std::size_t m0 = std::min(opt.startup_cells, grid.n_steps);
    if (opt.startup_refine > 1 && m0 >= 1 && params.gamma > 0.0) {
        const std::size_t q = opt.startup_refine;
        Grid fine{grid.h / static_cast<double>(q), m0 * q};
        std::vector<double> gf(fine.n_steps + 1), rf(fine.n_steps + 1, 0.0),
            uf(fine.n_steps + 1, 0.0);
        for (std::size_t j = 0; j <= fine.n_steps; ++j)
            gf[j] = params.gamma * f(fine.time(j));
        const auto wf = singular_weights(fine, params.alpha);
        detail::solve_nodes(fine, params.alpha, kap_over_lam, phi, gf, g_sup, wf, rf,
                            uf, 1, opt);
        for (std::size_t j = 1; j <= m0; ++j) {
            sol.r[j] = rf[j * q];
            sol.u[j] = uf[j * q];
        }
        sol.refined_until = m0;
        n0 = m0 + 1;
    }
    detail::solve_nodes(grid, params.alpha, kap_over_lam, phi, sol.forcing, g_sup, w,
                        sol.r, sol.u, n0, opt);
    return sol;
}

// Self-consistency of the exact scaling law r*(gamma,t) = gamma r*(1, gamma^{-v} t)
// for power reactions with constant forcing, v = (1-beta)/(beta (1-alpha)).
inline double scaling_exponent(double alpha, double beta) {
    return (1.0 - beta) / (beta * (1.0 - alpha));
}

inline double scaling_collapse_check(const Reaction& phi, double gamma,
                                     const VolterraSolution& sol1,
                                     const VolterraSolution& solg) {
    if (phi.kind() != Reaction::Kind::Power || !(phi.power_beta() > 1.0))
        throw std::domain_error("scaling_collapse_check: needs a power reaction, beta > 1");
    const double v = scaling_exponent(sol1.alpha, phi.power_beta());
    const double stretch = std::pow(gamma, -v);
    if (stretch * solg.grid.horizon() > sol1.grid.horizon() * (1.0 + 1e-12))
        throw std::domain_error("scaling_collapse_check: reference horizon too short");
    double dev = 0.0;
    for (std::size_t n = 0; n <= solg.grid.n_steps; ++n) {
        const double t1 = stretch * solg.grid.time(n);
        const double pos = t1 / sol1.grid.h;
        const auto j = std::min(static_cast<std::size_t>(pos), sol1.grid.n_steps - 1);
        const double wgt = pos - static_cast<double>(j);
        const double r1 = (1.0 - wgt) * sol1.r[j] + wgt * sol1.r[j + 1];
        dev = std::max(dev, std::abs(solg.r[n] - gamma * r1) / gamma);
    }
    return dev;
}

// Tail-level fit against the asymptotic level
//   t^{1-alpha} (gamma - r*(t)) -> lambda Phi^{-1}(gamma) / (kappa G(1-a) G(a)).
// The solution must come from constant (extended) forcing.
struct TailFitReport {
    bool conclusive = false;
    double c_hat = 0.0;
    double target = 0.0;
    double rel_error = 0.0;
    double plateau_slope = 0.0;
};

inline TailFitReport asymptotic_level_check(const VolterraSolution& sol,
                                            const MacroParams& params,
                                            const Reaction& phi) {
    TailFitReport rep;
    rep.target = params.lambda * phi.inverse(params.gamma) /
                 (params.kappa * gamma_fn(1.0 - params.alpha) * gamma_fn(params.alpha));
    const double H = sol.grid.horizon();
    const std::size_t n_lo =
        static_cast<std::size_t>(std::ceil(0.1 * H / sol.grid.h));
    if (n_lo + 8 > sol.grid.n_steps) return rep;  // inconclusive: grid too short
    const double p = 1.0 - sol.alpha;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t n = n_lo; n <= sol.grid.n_steps; ++n) {
        sum += std::pow(sol.grid.time(n), p) * (sol.forcing[n] - sol.r[n]);
        ++count;
    }
    rep.c_hat = sum / static_cast<double>(count);
    const double c_lo =
        std::pow(sol.grid.time(n_lo), p) * (sol.forcing[n_lo] - sol.r[n_lo]);
    const double c_hi = std::pow(H, p) * (sol.forcing[sol.grid.n_steps] -
                                          sol.r[sol.grid.n_steps]);
    rep.plateau_slope = std::abs(c_hi - c_lo) / std::max(std::abs(rep.c_hat), 1e-300);
    rep.conclusive = rep.plateau_slope < 1e-2;
    rep.rel_error = std::abs(rep.c_hat - rep.target) / std::abs(rep.target);
    return rep;
}

}  // namespace hmi
