#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "hmi/impact.hpp"
#include "hmi/sim.hpp"

using namespace hmi;

namespace {

MacroParams base_params() {
    MacroParams p;
    p.alpha = 0.5;
    p.lambda = 1.0;
    p.mu_star = 1.0;
    p.gamma = 0.3;
    return p;
}

}  // namespace

TEST_CASE("metaorder sampling: support, emptiness, first moment") {
    auto p = base_params();
    const auto micro = micro_from_macro(p, 400.0);

    MacroParams zero = p;
    zero.gamma = 0.0;
    Rng rng(5);
    CHECK(simulate_metaorder(micro, zero, Schedule::flat(), rng).empty());

    double total = 0.0;
    const int paths = 1000;
    for (int k = 0; k < paths; ++k) {
        Rng r(path_seed(17, k));
        const auto times = simulate_metaorder(micro, p, Schedule::flat(), r);
        for (double t : times) {
            CHECK(t >= 0.0);
            CHECK(t <= micro.T);
        }
        for (std::size_t i = 1; i < times.size(); ++i) CHECK(times[i] > times[i - 1]);
        total += static_cast<double>(times.size());
    }
    const double mean = total / paths;
    const double expect = p.gamma * micro.beta_T * micro.T;
    CHECK(std::abs(mean - expect) < 3.0 * std::sqrt(expect / paths));

    CHECK_THROWS_AS(simulate_metaorder(micro, p, Schedule::flat_extended(), rng),
                    std::domain_error);
}

TEST_CASE("trader thinning: no orders means no reaction, dominance holds") {
    auto p = base_params();
    const auto micro = micro_from_macro(p, 300.0);
    const auto phi = Reaction::power(1.0, 2.0);
    Rng rng(3);
    CHECK(simulate_trader(micro, p, phi, {}, 450.0, rng).empty());

    for (int k = 0; k < 300; ++k) {
        const auto path =
            simulate_path(p, micro, phi, Schedule::flat(), 1.5, path_seed(23, k), {});
        CHECK(dominance_holds(path));
        for (std::size_t i = 1; i < path.times_m.size(); ++i)
            CHECK(path.times_m[i] > path.times_m[i - 1]);
    }
}

TEST_CASE("event streams are pairwise disjoint") {
    auto p = base_params();
    const auto micro = micro_from_macro(p, 200.0);
    const auto phi = Reaction::power(1.0, 2.0);
    SimOptions opt;
    opt.with_ab = true;
    std::size_t collisions = 0;
    for (int k = 0; k < 50; ++k) {
        const auto path =
            simulate_path(p, micro, phi, Schedule::flat(), 1.5, path_seed(31, k), opt);
        std::vector<double> all;
        for (const auto* s : {&path.times_a, &path.times_b, &path.times_o, &path.times_m})
            all.insert(all.end(), s->begin(), s->end());
        std::sort(all.begin(), all.end());
        for (std::size_t i = 1; i < all.size(); ++i)
            if (all[i] == all[i - 1]) ++collisions;
    }
    CHECK(collisions == 0);
}

TEST_CASE("trader thinning reproduces the exact first-arrival law") {
    // single metaorder event at 0: the first reaction time has the closed-form
    // hazard Lambda(t) = kappa^2 A^2 log(1+t) / (T^2 beta^T) for Phi = x^2,
    // alpha = 1/2, A = a_T/(1-a_T)
    auto p = base_params();
    p.kappa = 5.0;
    const double T = 100.0;
    const auto micro = micro_from_macro(p, T);
    const auto phi = Reaction::power(1.0, 2.0);
    const std::vector<double> times_o = {0.0};
    const double A = micro.a_T / (1.0 - micro.a_T);
    const auto hazard = [&](double t) {
        return p.kappa * p.kappa * A * A * std::log1p(t) / (T * T * micro.beta_T);
    };
    const double horizon = 1.5 * T;
    const double p_arrive = 1.0 - std::exp(-hazard(horizon));
    const int n = 5000, bins = 10;
    std::vector<double> expected(bins), counts(bins, 0.0);
    for (int b = 0; b < bins - 1; ++b) expected[b] = n * p_arrive / (bins - 1);
    expected[bins - 1] = n * (1.0 - p_arrive);
    for (int k = 0; k < n; ++k) {
        Rng rng(path_seed(11, k));
        const auto tm = simulate_trader(micro, p, phi, times_o, horizon, rng);
        if (tm.empty()) {
            counts[bins - 1] += 1.0;
            continue;
        }
        const double u = (1.0 - std::exp(-hazard(tm[0]))) / p_arrive;
        counts[std::min(bins - 2, static_cast<int>(u * (bins - 1)))] += 1.0;
    }
    double chi2 = 0.0;
    for (int b = 0; b < bins; ++b)
        chi2 += (counts[b] - expected[b]) * (counts[b] - expected[b]) / expected[b];
    CHECK(chi2 < 27.877);  // chi-square 0.999 quantile, 9 dof
}

TEST_CASE("trader thinning with a saturated tabulated reaction is Poisson") {
    // a dense metaorder cluster keeps the signal on the flat part of the
    // response, so the reaction count over the horizon is exactly Poisson
    auto p = base_params();
    const double T = 100.0;
    const auto micro = micro_from_macro(p, T);
    const double level = 0.04;
    const auto phi = Reaction::table({0.0, 1e-9, 1.0}, {0.0, level, level});
    std::vector<double> times_o;
    for (int i = 0; i < 400; ++i) times_o.push_back(1e-6 * (i + 1));
    const double horizon = 1.5 * T;
    const double mu = micro.beta_T * level * horizon;
    const int n = 5000, bins = 12;
    std::vector<double> expected(bins, 0.0), counts(bins, 0.0);
    double pk = std::exp(-mu);
    double rest = n;
    for (int k = 0; k < bins - 1; ++k) {
        expected[k] = n * pk;
        rest -= expected[k];
        pk *= mu / (k + 1);
    }
    expected[bins - 1] = rest;
    for (int k = 0; k < n; ++k) {
        Rng rng(path_seed(13, k));
        const auto tm = simulate_trader(micro, p, phi, times_o, horizon, rng);
        counts[std::min<int>(bins - 1, static_cast<int>(tm.size()))] += 1.0;
    }
    double chi2 = 0.0;
    for (int b = 0; b < bins; ++b)
        chi2 += (counts[b] - expected[b]) * (counts[b] - expected[b]) / expected[b];
    CHECK(chi2 < 31.264);  // chi-square 0.999 quantile, 11 dof
}

TEST_CASE("hawkes pair: renewal-equation mean, independence, degenerate baseline") {
    auto p = base_params();
    const double T = 100.0;
    const auto micro = micro_from_macro(p, T);
    const double horizon = 150.0;

    // quadrature oracle for E[N_t]: E[lambda] solves the renewal equation
    const int N = 3000;
    const double dt = horizon / N;
    const KernelFamily kernel(p.alpha);
    std::vector<double> El(N + 1);
    El[0] = micro.mu_T;
    const double g0 = 0.5 * kernel.density(0.0);
    for (int n = 1; n <= N; ++n) {
        double conv = 0.5 * kernel.density(n * dt) * El[0];
        for (int j = 1; j < n; ++j) conv += kernel.density((n - j) * dt) * El[j];
        El[n] = (micro.mu_T + micro.a_T * dt * conv) / (1.0 - micro.a_T * dt * g0);
    }
    double expected_count = 0.0;
    for (int n = 0; n < N; ++n) expected_count += 0.5 * (El[n] + El[n + 1]) * dt;

    const int paths = 1000;
    double sum_a = 0, sum_b = 0, sum_ab = 0, sum_a2 = 0, sum_b2 = 0;
    for (int k = 0; k < paths; ++k) {
        Rng ra(path_seed(21, 2 * k)), rb(path_seed(21, 2 * k + 1));
        const auto ab = simulate_hawkes_pair(micro, horizon, ra, rb);
        const double na = static_cast<double>(ab.first.size());
        const double nb = static_cast<double>(ab.second.size());
        sum_a += na;
        sum_b += nb;
        sum_ab += na * nb;
        sum_a2 += na * na;
        sum_b2 += nb * nb;
    }
    const double ma = sum_a / paths, mb = sum_b / paths;
    const double va = sum_a2 / paths - ma * ma, vb = sum_b2 / paths - mb * mb;
    CHECK(ma >= micro.mu_T * horizon);  // self-excitation only adds events
    CHECK(std::abs(ma - expected_count) < 4.0 * std::sqrt(va / paths));
    CHECK(std::abs(mb - expected_count) < 4.0 * std::sqrt(vb / paths));
    const double corr = (sum_ab / paths - ma * mb) / std::sqrt(va * vb);
    CHECK(std::abs(corr) < 0.1);

    // zero baseline: no events at all
    MacroParams quiet = p;
    quiet.mu_star = 0.0;
    const auto m0 = micro_from_macro(quiet, T);
    Rng rng(1);
    CHECK(simulate_hawkes(m0, horizon, rng).empty());

    // event cap converts runaway paths into a resource error
    CHECK_THROWS_AS(simulate_hawkes(micro, 1e7, rng, 50), ResourceError);
}

TEST_CASE("pathwise impact closed forms on synthetic paths") {
    auto p = base_params();
    p.kappa = 1.3;
    const auto micro = micro_from_macro(p, 400.0);
    const auto grid = make_grid(1.0 / 8, 1.0);

    EventPath empty;
    empty.micro = micro;
    for (double v : pathwise_impact(empty, p, grid)) CHECK(v == 0.0);

    // one metaorder event at s, no reaction: MI(t) = kappa (1 + zeta(t-s))
    EventPath one;
    one.micro = micro;
    one.times_o = {40.0};
    const auto mi = pathwise_impact(one, p, grid);
    for (std::size_t n = 0; n <= grid.n_steps; ++n) {
        const double t = grid.time(n) * micro.T;
        if (t < 40.0) {
            CHECK(mi[n] == 0.0);
        } else {
            CHECK(mi[n] ==
                  doctest::Approx(p.kappa * (1.0 + micro.zeta(t - 40.0))).epsilon(1e-13));
        }
    }

    // balanced books long after the events: the impact washes out to kappa (n_o - n_m)
    EventPath balanced;
    balanced.micro = micro;
    balanced.times_o = {1.0, 2.0, 3.0};
    balanced.times_m = {1.5, 2.5, 3.5};
    const auto late = make_grid(0.5, 1.0);
    const double tail = pathwise_impact(balanced, p, late)[2];  // t = T = 400
    CHECK(std::abs(tail) < p.kappa * 3.0 * micro.zeta(396.0) * 0.01 + 1e-3);
}

TEST_CASE("price paths: P-EP equals the o/m signal and collapses without o/m") {
    auto p = base_params();
    const auto micro = micro_from_macro(p, 200.0);
    const auto phi = Reaction::power(1.0, 2.0);
    const auto grid = make_grid(1.0 / 16, 1.5);
    SimOptions opt;
    opt.with_ab = true;
    const auto path = simulate_path(p, micro, phi, Schedule::flat(), 1.5, 777, opt);
    REQUIRE(path.has_ab);
    const auto [P, EP] = price_paths(path, p, grid);
    for (std::size_t n = 0; n <= grid.n_steps; ++n) {
        const double sig = signal_at(path, p, grid.time(n) * micro.T);
        CHECK(P[n] - EP[n] == doctest::Approx(sig).epsilon(1e-10));
    }

    // only a/b events: market and efficient price coincide
    EventPath ab_only;
    ab_only.micro = micro;
    ab_only.has_ab = true;
    ab_only.times_a = {1.0, 7.0, 55.0};
    ab_only.times_b = {3.0, 90.0};
    const auto [P2, EP2] = price_paths(ab_only, p, grid);
    for (std::size_t n = 0; n <= grid.n_steps; ++n)
        CHECK(P2[n] == doctest::Approx(EP2[n]).epsilon(1e-13));

    EventPath no_ab;
    no_ab.micro = micro;
    CHECK_THROWS_AS(price_paths(no_ab, p, grid), std::domain_error);
}

TEST_CASE("monte carlo estimate: determinism across thread counts") {
    auto p = base_params();
    const auto phi = Reaction::power(1.0, 2.0);
    const auto grid = make_grid(1.0 / 16, 2.0);
    SimOptions one;
    one.n_threads = 1;
    SimOptions two;
    two.n_threads = 2;
    const auto a = monte_carlo_rescaled_impact(p, 300.0, phi, Schedule::flat(), 64,
                                               grid, 4242, one);
    const auto b = monte_carlo_rescaled_impact(p, 300.0, phi, Schedule::flat(), 64,
                                               grid, 4242, two);
    REQUIRE(a.mean.size() == b.mean.size());
    CHECK(std::memcmp(a.mean.data(), b.mean.data(), a.mean.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(a.stderr_.data(), b.stderr_.data(),
                      a.stderr_.size() * sizeof(double)) == 0);

    // identical seeds give identical event lists
    const auto micro = micro_from_macro(p, 300.0);
    const auto p1 = simulate_path(p, micro, phi, Schedule::flat(), 2.0, 99, {});
    const auto p2 = simulate_path(p, micro, phi, Schedule::flat(), 2.0, 99, {});
    CHECK(p1.times_o == p2.times_o);
    CHECK(p1.times_m == p2.times_m);

    MacroParams zero = p;
    zero.gamma = 0.0;
    const auto z = monte_carlo_rescaled_impact(zero, 300.0, phi, Schedule::flat(), 16,
                                               grid, 1, one);
    for (std::size_t n = 0; n < z.mean.size(); ++n) {
        CHECK(z.mean[n] == 0.0);
        CHECK(z.stderr_[n] == 0.0);
    }
}

TEST_CASE("front-loaded schedule: simulation tracks the limit through the table path") {
    auto p = base_params();
    const auto phi = Reaction::power(1.0, 2.0);
    const auto f = Schedule::piecewise({2.0, 0.5, 1.0, 0.5});
    const auto grid = make_grid(1.0 / 16, 1.5);
    SimOptions opt;
    opt.n_threads = 2;
    const auto est =
        monte_carlo_rescaled_impact(p, 500.0, phi, f, 400, grid, 97, opt);
    const auto volat = make_grid(1.0 / 512, 1.5);
    const auto curve = impact_from_solution(solve_rate(p, phi, f, volat), p);
    double peak = 0.0;
    for (double v : curve.mi) peak = std::max(peak, v);
    for (std::size_t n = 0; n <= grid.n_steps; ++n) {
        const auto j = static_cast<std::size_t>(std::llround(grid.time(n) / volat.h));
        CHECK(std::abs(est.mean[n] - curve.mi[j]) <
              std::max(4.0 * est.stderr_[n], 0.1 * peak));
    }
}

TEST_CASE("rescaled monte carlo tracks the volterra limit at small scale") {
    auto p = base_params();
    const auto phi = Reaction::power(1.0, 2.0);
    const auto grid = make_grid(1.0 / 32, 2.0);
    SimOptions opt;
    opt.n_threads = 2;
    const auto est = monte_carlo_rescaled_impact(p, 500.0, phi, Schedule::flat(), 400,
                                                 grid, 7, opt);
    const auto volat = make_grid(1.0 / 512, 2.0);
    const auto curve = impact_from_solution(solve_rate(p, phi, Schedule::flat(), volat), p);
    double peak = 0.0;
    for (double v : curve.mi) peak = std::max(peak, v);
    for (std::size_t n = 0; n <= grid.n_steps; ++n) {
        const auto j = static_cast<std::size_t>(std::llround(grid.time(n) / volat.h));
        const double gap = std::abs(est.mean[n] - curve.mi[j]);
        CHECK(gap < std::max(4.0 * est.stderr_[n], 0.1 * peak));
    }
}
