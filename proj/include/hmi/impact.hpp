#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmi/volterra.hpp"

namespace hmi {

enum class Provenance { Solved, Simulated, BoundLower, BoundUpper, Series };

inline const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::Solved: return "solved";
        case Provenance::Simulated: return "simulated";
        case Provenance::BoundLower: return "bound_lower";
        case Provenance::BoundUpper: return "bound_upper";
        case Provenance::Series: return "series";
    }
    return "?";
}

struct ImpactCurve {
    Grid grid;
    std::vector<double> mi;
    Provenance provenance = Provenance::Solved;
    MacroParams params;
    std::string phi_desc;
};

namespace detail {

// Shared discrete form of MI = kappa int (1 + lambda^{-1}(t-s)^{-alpha}) (g - r) ds:
// left-endpoint rectangles for the regular part, product-integration weights
// for the singular part with the newest cell carrying the node value r_n
// (mirrors the solver, so solved/bound/series curves share one quadrature).
inline std::vector<double> assemble_mi(const Grid& grid, double alpha, double lambda,
                                       double kappa, const std::vector<double>& g,
                                       const std::vector<double>& r) {
    const auto w = singular_weights(grid, alpha);
    std::vector<double> mi(grid.n_steps + 1, 0.0);
    double rect = 0.0;
    for (std::size_t n = 1; n <= grid.n_steps; ++n) {
        rect += grid.h * (g[n - 1] - r[n - 1]);
        double sing = w[1] * (g[n - 1] - r[n]);
        const double* wp = w.data() + 2;
        for (std::size_t j = n - 1; j-- > 0;) {
            sing += *wp++ * (g[j] - r[j]);
        }
        mi[n] = kappa * rect + (kappa / lambda) * sing;
    }
    return mi;
}

}  // namespace detail

// Macroscopic impact curve from a solved rate. The singular component is not
// re-derived: it equals u by construction, and that identity is checked here
// against an independent recomputation on a logarithmic subset of nodes.
inline ImpactCurve impact_from_solution(const VolterraSolution& sol,
                                        const MacroParams& params,
                                        const std::string& phi_desc = "") {
    ImpactCurve curve;
    curve.grid = sol.grid;
    curve.provenance = Provenance::Solved;
    curve.params = params;
    curve.phi_desc = phi_desc;
    curve.mi.assign(sol.grid.n_steps + 1, 0.0);

    double rect = 0.0;
    for (std::size_t n = 1; n <= sol.grid.n_steps; ++n) {
        rect += sol.grid.h * (sol.forcing[n - 1] - sol.r[n - 1]);
        curve.mi[n] = params.kappa * rect + sol.u[n];
    }

    const auto w = singular_weights(sol.grid, sol.alpha);
    const double kap_over_lam = params.kappa / params.lambda;
    for (std::size_t n = sol.grid.n_steps; n > sol.refined_until; n /= 2) {
        double sing = w[1] * (sol.forcing[n - 1] - sol.r[n]);
        for (std::size_t j = 0; j + 1 < n; ++j) sing += w[n - j] * (sol.forcing[j] - sol.r[j]);
        if (std::abs(kap_over_lam * sing - sol.u[n]) > 1e-10 * (1.0 + std::abs(sol.u[n])))
            throw std::logic_error("impact_from_solution: singular part disagrees with u");
        if (n == 1) break;
    }
    return curve;
}

struct PmiTmi {
    double pmi_estimate = 0.0;
    std::vector<double> tmi;
    bool tail_unresolved = false;
};

// Finite-horizon permanent/transient split. pmi integrates gamma f - r over
// the computed horizon only; the flag reports when the uncomputed tail of r
// could still move the estimate by more than ~1%.
inline PmiTmi decompose_pmi_tmi(const ImpactCurve& curve, const VolterraSolution& sol) {
    if (!(curve.grid.horizon() > 1.0))
        throw std::domain_error("decompose_pmi_tmi: horizon must exceed the metaorder");
    PmiTmi out;
    double rect = 0.0;
    for (std::size_t j = 0; j < sol.grid.n_steps; ++j)
        rect += sol.grid.h * (sol.forcing[j] - sol.r[j]);
    out.pmi_estimate = curve.params.kappa * rect;
    out.tmi.assign(curve.mi.size(), 0.0);
    for (std::size_t n = 0; n < curve.mi.size(); ++n)
        out.tmi[n] = curve.mi[n] - out.pmi_estimate;
    const double tail_scale =
        curve.params.kappa * sol.r[sol.grid.n_steps] * sol.grid.horizon();
    out.tail_unresolved = tail_scale >= 0.01 * std::abs(out.pmi_estimate);
    return out;
}

struct FitReport {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t n_points = 0;
    bool degenerate = false;
};

inline FitReport loglog_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    FitReport rep;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] > 0.0 && ys[i] > 0.0) {
            lx.push_back(std::log(xs[i]));
            ly.push_back(std::log(ys[i]));
        }
    }
    rep.n_points = lx.size();
    if (lx.size() < 2) {
        rep.degenerate = true;
        return rep;
    }
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        rep.degenerate = true;
        return rep;
    }
    rep.slope = sxy / sxx;
    rep.intercept = my - rep.slope * mx;
    rep.r2 = (sxy * sxy) / (sxx * syy);
    return rep;
}

// Large-participation ratio check against the closed-form level
//   MI(gamma,t) ~ gamma^{1/beta} c^{-1/beta} (1 + lambda t^alpha/(alpha G(1-a)G(a))),
// computed through the exact scaling identity from one reference solve of
// r*(1,.) with constant forcing, so large gamma needs no huge grids.
struct GammaRatioReport {
    std::vector<double> gammas;
    std::vector<double> mi;
    std::vector<double> ratio;
    double top_decade_slope = 0.0;
};

inline GammaRatioReport sqrt_law_gamma_check(const MacroParams& base, const Reaction& phi,
                                             const std::vector<double>& gammas, double t,
                                             double h_reference) {
    if (phi.kind() != Reaction::Kind::Power || !(phi.power_beta() > 1.0))
        throw std::domain_error("sqrt_law_gamma_check: needs a power reaction, beta > 1");
    if (!(t > 0.0 && t < 1.0))
        throw std::domain_error("sqrt_law_gamma_check: t must be in (0,1)");
    if (gammas.empty()) throw std::domain_error("sqrt_law_gamma_check: empty gamma list");

    const double beta = phi.power_beta();
    const double c = phi.power_c();
    const double v = scaling_exponent(base.alpha, beta);
    double gamma_max = 0.0;
    for (double g : gammas) gamma_max = std::max(gamma_max, g);
    const double horizon = std::pow(gamma_max, -v) * t * (1.0 + 2.0 * h_reference);

    MacroParams ref = base;
    ref.gamma = 1.0;
    const auto grid = make_grid(h_reference, std::ceil(horizon / h_reference) * h_reference);
    const auto sol = solve_rate(ref, phi, Schedule::flat_extended(), grid);

    // cumulative trapezoid of (1 - r*(1,.))
    std::vector<double> integral(grid.n_steps + 1, 0.0);
    for (std::size_t n = 1; n <= grid.n_steps; ++n) {
        integral[n] = integral[n - 1] +
                      0.5 * grid.h * ((1.0 - sol.r[n - 1]) + (1.0 - sol.r[n]));
    }
    auto interp = [&](const std::vector<double>& a, double x) {
        const double pos = x / grid.h;
        const auto j = std::min(static_cast<std::size_t>(pos), grid.n_steps - 1);
        const double wgt = pos - static_cast<double>(j);
        return (1.0 - wgt) * a[j] + wgt * a[j + 1];
    };

    const double level =
        1.0 + base.lambda * std::pow(t, base.alpha) /
                  (base.alpha * gamma_fn(1.0 - base.alpha) * gamma_fn(base.alpha));

    GammaRatioReport rep;
    rep.gammas = gammas;
    for (double g : gammas) {
        const double tau = std::pow(g, -v) * t;
        const double mi = base.kappa * std::pow(g, v + 1.0) * interp(integral, tau) +
                          std::pow(g * interp(sol.r, tau) / c, 1.0 / beta);
        rep.mi.push_back(mi);
        rep.ratio.push_back(mi * std::pow(c, 1.0 / beta) * std::pow(g, -1.0 / beta) / level);
    }
    std::vector<double> gx, gy;
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        if (gammas[i] >= gamma_max / 10.0) {
            gx.push_back(gammas[i]);
            gy.push_back(rep.mi[i]);
        }
    }
    rep.top_decade_slope = loglog_fit(gx, gy).slope;
    return rep;
}

// Time-slope fit of a single impact curve on [t_lo, 1] (the square-root law
// in cumulated volume at constant participation).
inline FitReport sqrt_law_volume_check(const ImpactCurve& curve, double t_lo = 0.05) {
    const std::size_t n_lo = static_cast<std::size_t>(std::ceil(t_lo / curve.grid.h));
    const std::size_t n_hi =
        std::min(curve.grid.n_steps,
                 static_cast<std::size_t>(std::floor(1.0 / curve.grid.h)));
    if (n_lo >= n_hi) throw std::domain_error("sqrt_law_volume_check: empty fit window");
    std::vector<double> ts, ys;
    for (std::size_t n = n_lo; n <= n_hi; ++n) {
        ts.push_back(curve.grid.time(n));
        ys.push_back(curve.mi[n]);
    }
    return loglog_fit(ts, ys);
}

}  // namespace hmi
