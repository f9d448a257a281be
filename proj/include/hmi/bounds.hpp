#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "hmi/impact.hpp"
#include "hmi/volterra.hpp"

namespace hmi {

// F_{alpha,lambda}(t) = lambda^{-1} int_0^t (t-s)^{-alpha} f(s) ds on the grid
// nodes, with the solver's product-integration weights (exact for the flat
// schedule: t^{1-alpha}/(lambda (1-alpha))).
inline std::vector<double> forcing_integral(const Schedule& f, double alpha,
                                            double lambda, const Grid& grid) {
    const auto w = singular_weights(grid, alpha);
    std::vector<double> fs(grid.n_steps + 1);
    for (std::size_t j = 0; j <= grid.n_steps; ++j) fs[j] = f(grid.time(j));
    std::vector<double> F(grid.n_steps + 1, 0.0);
    for (std::size_t n = 1; n <= grid.n_steps; ++n) {
        double s = 0.0;
        const double* wp = w.data() + 1;
        for (std::size_t j = n; j-- > 0;) s += *wp++ * fs[j];
        F[n] = s / lambda;
    }
    return F;
}

struct ImpactBounds {
    ImpactCurve lower;  // assembled from r*_+
    ImpactCurve upper;  // assembled from r*_-
    std::vector<double> r_plus;
    std::vector<double> r_minus;
};

// Closed-form small-participation bounds:
//   r*_+(s) = Phi(gamma kappa F(s)),
//   r*_-(s) = Phi(gamma kappa F(s) - kappa int_0^s lambda^{-1}(s-u)^{-alpha} r*_+(u) du),
// and MI_-/+ assembled from r*_+/- with the shared quadrature.
inline ImpactBounds impact_bounds(const MacroParams& params, const Reaction& phi,
                                  const Schedule& f, const Grid& grid,
                                  const std::string& phi_desc = "") {
    params.validate();
    const auto F = forcing_integral(f, params.alpha, params.lambda, grid);
    const auto w = singular_weights(grid, params.alpha);

    ImpactBounds out;
    out.r_plus.assign(grid.n_steps + 1, 0.0);
    out.r_minus.assign(grid.n_steps + 1, 0.0);
    for (std::size_t n = 0; n <= grid.n_steps; ++n)
        out.r_plus[n] = phi(params.gamma * params.kappa * F[n]);
    for (std::size_t n = 1; n <= grid.n_steps; ++n) {
        double s = 0.0;
        const double* wp = w.data() + 1;
        for (std::size_t j = n; j-- > 0;) s += *wp++ * out.r_plus[j];
        out.r_minus[n] = phi(params.gamma * params.kappa * F[n] -
                             params.kappa / params.lambda * s);
    }

    std::vector<double> g(grid.n_steps + 1);
    for (std::size_t j = 0; j <= grid.n_steps; ++j)
        g[j] = params.gamma * f(grid.time(j));

    out.lower.grid = grid;
    out.lower.provenance = Provenance::BoundLower;
    out.lower.params = params;
    out.lower.phi_desc = phi_desc;
    out.lower.mi = detail::assemble_mi(grid, params.alpha, params.lambda, params.kappa,
                                       g, out.r_plus);
    out.upper.grid = grid;
    out.upper.provenance = Provenance::BoundUpper;
    out.upper.params = params;
    out.upper.phi_desc = phi_desc;
    out.upper.mi = detail::assemble_mi(grid, params.alpha, params.lambda, params.kappa,
                                       g, out.r_minus);
    return out;
}

struct AdomianSeries {
    int order = 0;
    Grid grid;
    std::vector<std::vector<double>> u_terms;  // u_terms[l-1] holds u_l on the nodes

    // u_(J)(gamma, t_n) = sum_{l=1}^{J} gamma^l u_l(t_n), Horner in gamma
    std::vector<double> assemble_u(double gamma) const {
        std::vector<double> acc(grid.n_steps + 1, 0.0);
        for (int l = order; l >= 1; --l) {
            const auto& ul = u_terms[static_cast<std::size_t>(l - 1)];
            for (std::size_t n = 0; n <= grid.n_steps; ++n)
                acc[n] = gamma * (acc[n] + ul[n]);
        }
        return acc;
    }
};

// Order-by-order expansion of the fixed point in powers of gamma:
//   u_1 + kappa Phi'(0) L[u_1] = kappa F,
//   u_l + kappa Phi'(0) L[u_l] = -kappa sum_{j=2}^{l} (Phi^(j)(0)/j!)
//                                 L[ sum_{k1+..+kj=l} u_{k1} ... u_{kj} ],
// with L[x](t) = lambda^{-1} int_0^t (t-s)^{-alpha} x(s) ds discretized by the
// solver's weights. The composition sums are the gamma^l coefficients of
// U(gamma)^j, built by polynomial convolution of the node arrays.
inline AdomianSeries adomian(const MacroParams& params, const Reaction& phi,
                             const Schedule& f, const Grid& grid, int J) {
    if (J < 1) throw std::domain_error("adomian: order must be >= 1");
    params.validate();
    const auto taylor = phi.taylor_at_zero(J);  // throws for non-smooth reactions
    const double phi1 = taylor[1];

    const auto F = forcing_integral(f, params.alpha, params.lambda, grid);
    const auto w = singular_weights(grid, params.alpha);
    const double kap = params.kappa;
    const double kap_over_lam = params.kappa / params.lambda;
    const std::size_t nn = grid.n_steps + 1;

    AdomianSeries out;
    out.order = J;
    out.grid = grid;
    out.u_terms.assign(static_cast<std::size_t>(J), std::vector<double>(nn, 0.0));

    // pw[j][d]: gamma^d coefficient of U^j (node arrays); pw[1][d] = u_d
    std::vector<std::vector<std::vector<double>>> pw(
        static_cast<std::size_t>(J) + 1,
        std::vector<std::vector<double>>(static_cast<std::size_t>(J) + 1));

    std::vector<double> rhs(nn), src(nn);
    for (int l = 1; l <= J; ++l) {
        std::fill(rhs.begin(), rhs.end(), 0.0);
        if (l == 1) {
            for (std::size_t n = 0; n < nn; ++n) rhs[n] = kap * F[n];
        } else {
            // coefficient of gamma^l in U^j for j = 2..l, from lower orders
            for (int j = 2; j <= l; ++j) {
                auto& dst = pw[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)];
                dst.assign(nn, 0.0);
                for (int m = 1; m <= l - (j - 1); ++m) {
                    const auto& a = out.u_terms[static_cast<std::size_t>(m - 1)];
                    const auto& b = (j - 1 == 1)
                                        ? out.u_terms[static_cast<std::size_t>(l - m - 1)]
                                        : pw[static_cast<std::size_t>(j - 1)]
                                            [static_cast<std::size_t>(l - m)];
                    if (b.empty()) continue;
                    for (std::size_t n = 0; n < nn; ++n) dst[n] += a[n] * b[n];
                }
            }
            std::fill(src.begin(), src.end(), 0.0);
            bool any = false;
            for (int j = 2; j <= l; ++j) {
                const double coeff = taylor[static_cast<std::size_t>(j)];
                if (coeff == 0.0) continue;
                any = true;
                const auto& cjl =
                    pw[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)];
                for (std::size_t n = 0; n < nn; ++n) src[n] += coeff * cjl[n];
            }
            if (any) {
                for (std::size_t n = 1; n <= grid.n_steps; ++n) {
                    double s = 0.0;
                    const double* wp = w.data() + 1;
                    for (std::size_t m = n; m-- > 0;) s += *wp++ * src[m];
                    rhs[n] = -kap * s / params.lambda;
                }
            }
        }
        auto& ul = out.u_terms[static_cast<std::size_t>(l - 1)];
        if (phi1 == 0.0) {
            ul = rhs;
        } else {
            // linear Volterra solve, node value implicit in its own cell
            for (std::size_t n = 1; n <= grid.n_steps; ++n) {
                double s = 0.0;
                const double* wp = w.data() + 2;
                for (std::size_t j = n - 1; j-- > 0;) s += *wp++ * ul[j];
                ul[n] = (rhs[n] - kap_over_lam * phi1 * s) /
                        (1.0 + kap_over_lam * phi1 * w[1]);
            }
        }
    }
    return out;
}

// MI curve from the assembled series: rates Phi(u_(J)(gamma, .)) through the
// shared quadrature. J=1 and J=2 coincide with the closed-form bounds for
// reactions with Phi'(0)=0.
inline ImpactCurve adomian_impact(const AdomianSeries& series, const MacroParams& params,
                                  const Reaction& phi, const Schedule& f,
                                  const std::string& phi_desc = "") {
    const auto u = series.assemble_u(params.gamma);
    std::vector<double> r(u.size()), g(u.size());
    for (std::size_t n = 0; n < u.size(); ++n) {
        r[n] = phi(u[n]);
        g[n] = params.gamma * f(series.grid.time(n));
    }
    ImpactCurve curve;
    curve.grid = series.grid;
    curve.provenance = Provenance::Series;
    curve.params = params;
    curve.phi_desc = phi_desc;
    curve.mi = detail::assemble_mi(series.grid, params.alpha, params.lambda,
                                   params.kappa, g, r);
    return curve;
}

}  // namespace hmi
