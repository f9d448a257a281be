#pragma once

#include <cmath>
#include <stdexcept>

namespace hmi {

// Macroscopic model parameters. gamma is the metaorder size ratio (the
// participation rate is gamma/(1+gamma)), kappa the permanent impact per
// unit order.
struct MacroParams {
    double alpha = 0.5;    // kernel tail exponent, in (0,1)
    double lambda = 1.0;   // criticality-rate constant, > 0
    double mu_star = 1.0;  // baseline limit, >= 0
    double kappa = 1.0;    // permanent impact per order, > 0
    double gamma = 0.3;    // metaorder size ratio, >= 0

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::domain_error("alpha must be in (0,1)");
        if (!(lambda > 0.0)) throw std::domain_error("lambda must be > 0");
        if (!(mu_star >= 0.0)) throw std::domain_error("mu_star must be >= 0");
        if (!(kappa > 0.0)) throw std::domain_error("kappa must be > 0");
        if (!(gamma >= 0.0)) throw std::domain_error("gamma must be >= 0");
    }
};

// The concrete self-exciting kernel family
//   phi(t) = alpha (1+t)^{-(1+alpha)},
// chosen so that ||phi||_1 = 1 and t^alpha int_t^inf phi -> K = 1 exactly,
// with closed forms for the tail and the transient weight.
struct KernelFamily {
    double alpha;
    static constexpr double K = 1.0;

    explicit KernelFamily(double a) : alpha(a) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::domain_error("kernel: alpha must be in (0,1)");
    }

    double density(double t) const {
        if (!(t >= 0.0)) throw std::domain_error("kernel density: t must be >= 0");
        return alpha * std::pow(1.0 + t, -(1.0 + alpha));
    }

    // int_t^inf phi(s) ds = (1+t)^{-alpha}
    double tail_mass(double t) const {
        if (!(t >= 0.0)) throw std::domain_error("kernel tail: t must be >= 0");
        if (alpha == 0.5) return 1.0 / std::sqrt(1.0 + t);  // hot path in the simulator
        return std::pow(1.0 + t, -alpha);
    }
};

// Microscopic parameters at horizon scale T. The damping solves
// T^alpha (1 - a_T) = lambda K exactly; this is the identity under which
// zeta^T(tT) dt -> lambda^{-1} t^{-alpha} dt, the kernel of the macroscopic
// fixed-point equation, and beta^T = mu^T/(1-a_T) satisfies
// T^{1-2 alpha} beta^T = mu*/(K lambda).
struct MicroParams {
    double T;       // horizon scale
    double alpha;   // copied from MacroParams
    double a_T;     // kernel damping, in (0,1)
    double mu_T;    // baseline intensity
    double beta_T;  // long-run intensity mu_T / (1 - a_T)

    KernelFamily kernel() const { return KernelFamily(alpha); }

    // zeta^T(t) = a_T/(1-a_T) * (1+t)^{-alpha}, strictly decreasing
    double zeta(double t) const {
        return a_T / (1.0 - a_T) * kernel_tail(t);
    }

    double xi(double t) const { return 1.0 + zeta(t); }

    // R^T(t) = int_0^t zeta^T(sT) ds, closed form; converges to
    // t^{1-alpha} / ((1-alpha) lambda) as T -> infinity
    double zeta_measure_cdf(double t) const {
        if (!(t >= 0.0)) throw std::domain_error("zeta_measure_cdf: t must be >= 0");
        const double one_m_alpha = 1.0 - alpha;
        return a_T / (T * (1.0 - a_T) * one_m_alpha) *
               (std::pow(1.0 + t * T, one_m_alpha) - 1.0);
    }

private:
    double kernel_tail(double t) const {
        if (alpha == 0.5) return 1.0 / std::sqrt(1.0 + t);
        return std::pow(1.0 + t, -alpha);
    }
};

// Smallest admissible horizon scale: a_T in (0,1) requires T > (lambda K)^{1/alpha}.
inline double min_horizon_scale(const MacroParams& p) {
    return std::pow(p.lambda * KernelFamily::K, 1.0 / p.alpha);
}

inline MicroParams micro_from_macro(const MacroParams& p, double T) {
    p.validate();
    if (!(T > 0.0)) throw std::domain_error("micro horizon scale T must be > 0");
    const double one_m_a = p.lambda * KernelFamily::K / std::pow(T, p.alpha);
    if (!(one_m_a > 0.0 && one_m_a < 1.0)) {
        throw std::domain_error("T below admissibility threshold (lambda K)^(1/alpha)");
    }
    MicroParams m;
    m.T = T;
    m.alpha = p.alpha;
    m.a_T = 1.0 - one_m_a;
    m.mu_T = p.mu_star * std::pow(T, p.alpha - 1.0);
    m.beta_T = m.mu_T / one_m_a;  // zero baseline gives a degenerate flow scale
    return m;
}

}  // namespace hmi
