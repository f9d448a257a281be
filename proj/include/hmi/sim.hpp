#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hmi/params.hpp"
#include "hmi/reaction.hpp"
#include "hmi/rng.hpp"
#include "hmi/schedule.hpp"
#include "hmi/volterra.hpp"

namespace hmi {

struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimOptions {
    bool with_ab = false;
    std::uint64_t event_cap = 10'000'000;  // per path and stream
    double delta_max = 0.0;                // envelope refresh cap; 0 = auto
    unsigned n_threads = 0;                // 0 = hardware concurrency
};

// One realized trajectory. Event times are strictly increasing within each
// stream; a/b are only populated when the full model is simulated.
struct EventPath {
    std::vector<double> times_a, times_b, times_o, times_m;
    std::uint64_t seed = 0;
    MicroParams micro{};
    bool has_ab = false;
};

namespace detail {

// sum of zeta^T(t - T_k) over the first k event times (all <= t)
inline double zeta_sum(const MicroParams& m, const std::vector<double>& times,
                       std::size_t k, double t) {
    const double scale = m.a_T / (1.0 - m.a_T);
    double s = 0.0;
    if (m.alpha == 0.5) {
        for (std::size_t i = 0; i < k; ++i) s += 1.0 / std::sqrt(1.0 + (t - times[i]));
    } else {
        for (std::size_t i = 0; i < k; ++i) s += std::pow(1.0 + (t - times[i]), -m.alpha);
    }
    return scale * s;
}

inline std::size_t count_upto(const std::vector<double>& times, double t) {
    return static_cast<std::size_t>(
        std::upper_bound(times.begin(), times.end(), t) - times.begin());
}

}  // namespace detail

// Inhomogeneous Poisson metaorder arrivals with rate gamma beta^T f(t/T),
// sampled segment by segment on the piecewise-constant pieces of f.
inline std::vector<double> simulate_metaorder(const MicroParams& micro,
                                              const MacroParams& macro,
                                              const Schedule& f, Rng& rng,
                                              std::uint64_t event_cap = 10'000'000) {
    if (f.is_extended())
        throw std::domain_error("simulate_metaorder: schedule must end at 1");
    std::vector<double> times;
    if (macro.gamma == 0.0) return times;
    // exact on the schedule's own piecewise-constant cells
    const std::size_t segments = f.cells();
    const double seg_len = micro.T / static_cast<double>(segments);
    for (std::size_t s = 0; s < segments; ++s) {
        const double a = static_cast<double>(s) * seg_len;
        const double b = a + seg_len;
        const double rate = macro.gamma * micro.beta_T * f.cell_value(s);
        if (rate <= 0.0) continue;
        double t = a;
        while (true) {
            t += rng.exponential(rate);
            if (t >= b) break;
            times.push_back(t);
            if (times.size() > event_cap)
                throw ResourceError("metaorder event cap exceeded");
        }
    }
    return times;
}

// Trader arrivals by thinning. The proposal envelope drops the m-terms of the
// signal: zeta^T >= 0 and Phi^T increasing make Phi^T(kappa sum_o zeta^T) an
// exact upper bound, constant between o-events; it is refreshed at every
// accepted event and at least every delta_max.
inline std::vector<double> simulate_trader(const MicroParams& micro,
                                           const MacroParams& macro, const Reaction& phi,
                                           const std::vector<double>& times_o,
                                           double horizon, Rng& rng,
                                           double delta_max = 0.0,
                                           std::uint64_t event_cap = 10'000'000) {
    std::vector<double> times_m;
    if (!(micro.beta_T > 0.0)) return times_m;  // no flow scale, no trader
    if (delta_max <= 0.0) {
        delta_max = 0.1 * micro.T / std::max(1.0, macro.gamma * micro.beta_T);
    }
    double t = 0.0;
    std::size_t ko = 0;  // o-events with time <= t
    while (t < horizon) {
        while (ko < times_o.size() && times_o[ko] <= t) ++ko;
        const double next_o = ko < times_o.size() ? times_o[ko] : horizon;
        const double seg_end = std::min({horizon, t + delta_max, next_o});
        const double env_signal = macro.kappa * detail::zeta_sum(micro, times_o, ko, t);
        const double lam_bar = phi.micro(micro, env_signal);
        if (!(lam_bar > 0.0)) {
            t = seg_end;
            continue;
        }
        while (true) {
            t += rng.exponential(lam_bar);
            if (t >= seg_end) {
                t = seg_end;
                break;
            }
            const double sig =
                macro.kappa * (detail::zeta_sum(micro, times_o, ko, t) -
                               detail::zeta_sum(micro, times_m, times_m.size(), t));
            const double lam_true = phi.micro(micro, sig);
            if (rng.uniform() * lam_bar <= lam_true) {
                times_m.push_back(t);
                if (times_m.size() > event_cap)
                    throw ResourceError("trader event cap exceeded");
                break;  // refresh envelope at the accepted event
            }
        }
    }
    return times_m;
}

// One self-exciting stream by Ogata thinning; the bound mu^T + a^T sum phi(.)
// evaluated at the current time stays valid until the next event because phi
// is decreasing.
inline std::vector<double> simulate_hawkes(const MicroParams& micro, double horizon,
                                           Rng& rng,
                                           std::uint64_t event_cap = 10'000'000) {
    const KernelFamily kernel(micro.alpha);
    std::vector<double> times;
    double t = 0.0;
    auto intensity = [&](double at) {
        double s = 0.0;
        for (double tk : times) s += kernel.density(at - tk);
        return micro.mu_T + micro.a_T * s;
    };
    double lam_bar = intensity(0.0);
    while (true) {
        t += rng.exponential(lam_bar);
        if (t >= horizon) break;
        const double lam_true = intensity(t);
        if (rng.uniform() * lam_bar <= lam_true) {
            times.push_back(t);
            if (times.size() > event_cap) throw ResourceError("hawkes event cap exceeded");
            lam_bar = intensity(t);  // jump of a^T phi(0)
        } else {
            lam_bar = lam_true;  // tighten; intensity keeps decreasing until next event
        }
    }
    return times;
}

inline std::pair<std::vector<double>, std::vector<double>> simulate_hawkes_pair(
    const MicroParams& micro, double horizon, Rng& rng_a, Rng& rng_b,
    std::uint64_t event_cap = 10'000'000) {
    return {simulate_hawkes(micro, horizon, rng_a, event_cap),
            simulate_hawkes(micro, horizon, rng_b, event_cap)};
}

inline EventPath simulate_path(const MacroParams& macro, const MicroParams& micro,
                               const Reaction& phi, const Schedule& f,
                               double horizon_rescaled, std::uint64_t seed,
                               const SimOptions& opt = {}) {
    EventPath path;
    path.seed = seed;
    path.micro = micro;
    const double horizon = horizon_rescaled * micro.T;
    Rng rng_o(splitmix64(seed ^ 0x6F6F6F6FULL));
    Rng rng_m(splitmix64(seed ^ 0x6D6D6D6DULL));
    path.times_o = simulate_metaorder(micro, macro, f, rng_o, opt.event_cap);
    path.times_m = simulate_trader(micro, macro, phi, path.times_o, horizon, rng_m,
                                   opt.delta_max, opt.event_cap);
    if (opt.with_ab) {
        Rng rng_a(splitmix64(seed ^ 0x61616161ULL));
        Rng rng_b(splitmix64(seed ^ 0x62626262ULL));
        auto ab = simulate_hawkes_pair(micro, horizon, rng_a, rng_b, opt.event_cap);
        path.times_a = std::move(ab.first);
        path.times_b = std::move(ab.second);
        path.has_ab = true;
    }
    return path;
}

// Pathwise market impact kappa sum xi^T(t - T^o_k) - kappa sum xi^T(t - T^m_k)
// at the rescaled grid nodes (microscopic times t_n T). Only o/m streams enter.
inline std::vector<double> pathwise_impact(const EventPath& path, const MacroParams& macro,
                                           const Grid& rescaled_grid) {
    const MicroParams& m = path.micro;
    std::vector<double> mi(rescaled_grid.n_steps + 1, 0.0);
    for (std::size_t n = 0; n <= rescaled_grid.n_steps; ++n) {
        const double t = rescaled_grid.time(n) * m.T;
        const std::size_t ko = detail::count_upto(path.times_o, t);
        const std::size_t km = detail::count_upto(path.times_m, t);
        const double zo = detail::zeta_sum(m, path.times_o, ko, t);
        const double zm = detail::zeta_sum(m, path.times_m, km, t);
        mi[n] = macro.kappa * (static_cast<double>(ko) + zo -
                               static_cast<double>(km) - zm);
    }
    return mi;
}

// Dominance N^m_t <= N^o_t for every t, checked at the m-event
// instants (the only places the inequality can first fail).
inline bool dominance_holds(const EventPath& path) {
    for (std::size_t i = 0; i < path.times_m.size(); ++i) {
        if (i + 1 > detail::count_upto(path.times_o, path.times_m[i])) return false;
    }
    return true;
}

// signal P - EP = kappa int zeta^T(t-s) d(N^o - N^m); o/m streams only
inline double signal_at(const EventPath& path, const MacroParams& macro, double t) {
    const MicroParams& m = path.micro;
    const std::size_t ko = detail::count_upto(path.times_o, t);
    const std::size_t km = detail::count_upto(path.times_m, t);
    return macro.kappa * (detail::zeta_sum(m, path.times_o, ko, t) -
                          detail::zeta_sum(m, path.times_m, km, t));
}

// Market and efficient price on the rescaled grid, P_0 = 0.
inline std::pair<std::vector<double>, std::vector<double>> price_paths(
    const EventPath& path, const MacroParams& macro, const Grid& rescaled_grid) {
    if (!path.has_ab)
        throw std::domain_error("price_paths: path was simulated without a/b streams");
    const MicroParams& m = path.micro;
    std::vector<double> P(rescaled_grid.n_steps + 1, 0.0);
    std::vector<double> EP(rescaled_grid.n_steps + 1, 0.0);
    auto xi_sum = [&](const std::vector<double>& times, double t, std::size_t k) {
        return static_cast<double>(k) + detail::zeta_sum(m, times, k, t);
    };
    for (std::size_t n = 0; n <= rescaled_grid.n_steps; ++n) {
        const double t = rescaled_grid.time(n) * m.T;
        const std::size_t ka = detail::count_upto(path.times_a, t);
        const std::size_t kb = detail::count_upto(path.times_b, t);
        const std::size_t ko = detail::count_upto(path.times_o, t);
        const std::size_t km = detail::count_upto(path.times_m, t);
        const double ab_part = xi_sum(path.times_a, t, ka) - xi_sum(path.times_b, t, kb);
        P[n] = macro.kappa * (ab_part + xi_sum(path.times_o, t, ko) -
                              xi_sum(path.times_m, t, km));
        EP[n] = macro.kappa * ab_part +
                macro.kappa * (static_cast<double>(ko) - static_cast<double>(km));
    }
    return {P, EP};
}

struct RescaledImpactEstimate {
    Grid grid;
    std::vector<double> mean;
    std::vector<double> stderr_;
    std::size_t n_paths = 0;
};

// Monte Carlo mean of MI^T_{tT}/(T beta^T) over independent seeded paths.
// Path k uses stream path_seed(seed, k); rows are reduced in path order, so
// the estimate is bit-identical for any thread count.
inline RescaledImpactEstimate monte_carlo_rescaled_impact(
    const MacroParams& macro, double T, const Reaction& phi, const Schedule& f,
    std::size_t n_paths, const Grid& rescaled_grid, std::uint64_t seed,
    const SimOptions& opt = {}) {
    if (n_paths < 2) throw std::domain_error("monte_carlo: need n_paths >= 2");
    const MicroParams micro = micro_from_macro(macro, T);
    if (!(micro.beta_T > 0.0))
        throw std::domain_error("monte_carlo: mu_star must be > 0 (zero flow scale)");
    const double scale = 1.0 / (T * micro.beta_T);
    const std::size_t nn = rescaled_grid.n_steps + 1;

    std::vector<std::vector<double>> rows(n_paths);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error_msg;
    std::mutex error_mu;

    auto worker = [&]() {
        while (true) {
            const std::size_t k = next.fetch_add(1);
            if (k >= n_paths || failed.load()) return;
            try {
                const auto path = simulate_path(macro, micro, phi, f,
                                                rescaled_grid.horizon(),
                                                path_seed(seed, k), opt);
                auto mi = pathwise_impact(path, macro, rescaled_grid);
                for (double& x : mi) x *= scale;
                rows[k] = std::move(mi);
            } catch (const std::exception& e) {
                const std::lock_guard<std::mutex> lock(error_mu);
                failed.store(true);
                if (error_msg.empty()) error_msg = e.what();
            }
        }
    };
    unsigned n_threads = opt.n_threads ? opt.n_threads
                                       : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(n_paths));
    std::vector<std::thread> pool;
    for (unsigned i = 0; i + 1 < n_threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failed.load()) throw ResourceError(error_msg);

    RescaledImpactEstimate est;
    est.grid = rescaled_grid;
    est.n_paths = n_paths;
    est.mean.assign(nn, 0.0);
    est.stderr_.assign(nn, 0.0);
    for (std::size_t k = 0; k < n_paths; ++k)
        for (std::size_t n = 0; n < nn; ++n) est.mean[n] += rows[k][n];
    const double np = static_cast<double>(n_paths);
    for (double& x : est.mean) x /= np;
    for (std::size_t k = 0; k < n_paths; ++k)
        for (std::size_t n = 0; n < nn; ++n) {
            const double d = rows[k][n] - est.mean[n];
            est.stderr_[n] += d * d;
        }
    for (double& x : est.stderr_) x = std::sqrt(x / (np - 1.0) / np);
    return est;
}

}  // namespace hmi
