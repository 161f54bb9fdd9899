#include <cmath>
#include <random>

#include "doctest.h"
#include "liqhedge/yield_model.hpp"
#include "oracles.hpp"

using namespace liqhedge;
using doctest::Approx;

namespace {

VasicekParams deterministic(double r_inf) {
    VasicekParams p;
    p.volatility = 0.0;
    p.long_run_level = r_inf;
    p.initial_rate = r_inf;
    return p;
}

}  // namespace

TEST_CASE("bond price of a zero-maturity bond is one") {
    for (double r : {-0.02, 0.0, 0.05, 0.3}) {
        CHECK(bond_price(VasicekParams{}, r, 0.0) == 1.0);
        CHECK(bond_price(VasicekParams{0.7, 0.01, 0.2, 0.0}, r, 0.0) == 1.0);
    }
}

TEST_CASE("bond price on a deterministic flat curve") {
    const VasicekParams p = deterministic(0.05);
    for (double tau : {0.5, 1.0, 7.0, 30.0})
        CHECK(bond_price(p, 0.05, tau) == Approx(std::exp(-0.05 * tau)).epsilon(1e-14));
}

TEST_CASE("bond price agrees with an Euler Monte Carlo oracle") {
    const VasicekParams p;
    for (double tau : {1.0, 5.0, 10.0}) {
        const auto mc = oracle::euler_bond_price(p.mean_reversion, p.long_run_level, p.volatility, 0.05, tau,
                                                 static_cast<int>(tau * 1000), 20'000, 11);
        const double closed = bond_price(p, 0.05, tau);
        CAPTURE(tau);
        CHECK(std::abs(mc.mean - closed) <= 4 * mc.se() + 1e-6);
        CHECK(std::abs(mc.mean / closed - 1.0) < 5e-4);
    }
    const double yield10 = -std::log(bond_price(p, 0.05, 10.0)) / 10.0;
    CHECK(yield10 >= 0.028);
    CHECK(yield10 <= 0.05);
}

TEST_CASE("zero-coupon yields stay in the reported range") {
    const VasicekParams p;
    for (int T = 1; T <= 10; ++T) {
        const double y = -std::log(bond_price(p, p.initial_rate, double(T))) / T;
        CAPTURE(T);
        CHECK(y >= 0.028);
        CHECK(y <= 0.051);
    }
}

TEST_CASE("affine coefficients reproduce the bond price") {
    const VasicekParams p{0.3, 0.04, 0.02, 0.01};
    for (double tau : {0.25, 2.0, 9.0}) {
        const AffineBond ab = affine_bond(p, tau);
        CHECK(std::exp(-ab.a - ab.b * 0.037) == Approx(bond_price(p, 0.037, tau)).epsilon(1e-14));
    }
}

TEST_CASE("advance_rate") {
    const VasicekParams p;
    SUBCASE("mean reversion limit") { CHECK(advance_rate(p, 0.2, 1e4, 0.0) == Approx(p.long_run_level).epsilon(1e-14)); }
    SUBCASE("deterministic drift") {
        VasicekParams q = p;
        q.volatility = 0.0;
        for (double g : {-2.0, 0.0, 3.0})
            CHECK(advance_rate(q, 0.09, 2.5, g) == Approx(0.05 + std::exp(-0.25) * 0.04).epsilon(1e-14));
    }
    SUBCASE("unit draw over one year") {
        CHECK(advance_rate(p, 0.05, 1.0, 1.0) ==
              Approx(0.05 + 0.05 * std::sqrt((1 - std::exp(-0.2)) / 0.2)).epsilon(1e-14));
    }
    SUBCASE("zero horizon") { CHECK(advance_rate(p, 0.031, 0.0, 2.0) == 0.031); }
}

TEST_CASE("transition law matches the conditional moments") {
    const VasicekParams p;
    const double r_prev = 0.08;
    const double eta = 1.5;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    oracle::Stat st;
    oracle::Stat sq;
    const double mean = p.long_run_level + std::exp(-p.mean_reversion * eta) * (r_prev - p.long_run_level);
    const double var = p.volatility * p.volatility * (1 - std::exp(-2 * p.mean_reversion * eta)) / (2 * p.mean_reversion);
    for (int k = 0; k < 1'000'000; ++k) {
        const double r = advance_rate(p, r_prev, eta, normal(rng));
        st.add(r);
        sq.add((r - mean) * (r - mean));
    }
    CHECK(std::abs(st.mean - mean) <= 4 * st.se());
    CHECK(std::abs(sq.mean - var) <= 4 * sq.se());
    CHECK(transition_stddev(p, eta) == Approx(std::sqrt(var)).epsilon(1e-14));
}

TEST_CASE("transition variance agrees with an Euler simulation") {
    const VasicekParams p;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal;
    const int steps = 200;
    const double dt = 1.0 / steps;
    oracle::Stat st;
    for (int k = 0; k < 100'000; ++k) {
        double r = 0.05;
        for (int s = 0; s < steps; ++s) r += p.mean_reversion * (p.long_run_level - r) * dt + p.volatility * std::sqrt(dt) * normal(rng);
        st.add((r - 0.05) * (r - 0.05));
    }
    const double exact = transition_stddev(p, 1.0) * transition_stddev(p, 1.0);
    // Euler variance bias is O(A dt)
    CHECK(std::abs(st.mean - exact) <= 4 * st.se() + exact * p.mean_reversion * dt);
}

TEST_CASE("forward_rate") {
    CHECK(forward_rate(0.9, 0.9, 1.0, 2.0) == 0.0);
    CHECK(forward_rate(1.0, 0.5, 3.0, 4.0) == 1.0);
    const VasicekParams p;
    const double b = bond_price(p, 0.05, 1.0);
    CHECK(forward_rate(1.0, b, 1.0, 2.0) == Approx(1.0 / b - 1.0).epsilon(1e-15));
    CHECK_THROWS_AS(forward_rate(1.0, 0.0, 1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(forward_rate(1.0, -0.5, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("at-the-money rate") {
    SUBCASE("deterministic curve") {
        const VasicekParams p = deterministic(0.04);
        const auto tenor = TenorStructure::annual(4);
        double annuity = 0.0;
        for (int i = 1; i <= 4; ++i) annuity += std::exp(-0.04 * tenor.date(i));
        const double expected = (std::exp(-0.04 * tenor.date(0)) - std::exp(-0.04 * tenor.date(4))) / annuity;
        CHECK(at_the_money_rate(p, tenor) == Approx(expected).epsilon(1e-13));
    }
    SUBCASE("one period starting today") {
        const VasicekParams p;
        const TenorStructure tenor(1.0, {1.0, 2.5});
        const double b = bond_price(p, p.initial_rate, 1.5);
        CHECK(at_the_money_rate(p, tenor) == Approx((1.0 / b - 1.0) / 1.5).epsilon(1e-13));
    }
    SUBCASE("defaults give a rate near the long-run level with zero Monte Carlo value") {
        const VasicekParams p;
        const auto tenor = TenorStructure::annual(1);
        const double r = at_the_money_rate(p, tenor);
        CHECK(r > 0.0);
        CHECK(r < p.long_run_level + 0.005);
        // value of the single coupon paid at T_1 = 2, discounted along a fine Euler path
        std::mt19937_64 rng(3);
        std::normal_distribution<double> normal;
        const int per_year = 100;
        const double dt = 1.0 / per_year;
        oracle::Stat st;
        std::vector<double> g(static_cast<std::size_t>(2 * per_year));
        for (int k = 0; k < 100'000; ++k) {
            for (auto& x : g) x = normal(rng);
            double value = 0.0;
            for (double sign : {1.0, -1.0}) {
                double rate = p.initial_rate;
                double rate_at_t0 = rate;
                double integral = 0.0;
                for (int s = 0; s < 2 * per_year; ++s) {
                    const double next = rate + p.mean_reversion * (p.long_run_level - rate) * dt +
                                        p.volatility * std::sqrt(dt) * sign * g[static_cast<std::size_t>(s)];
                    integral += 0.5 * (rate + next) * dt;
                    rate = next;
                    if (s + 1 == per_year) rate_at_t0 = rate;
                }
                const double payoff = swap_payoff(r, 1.0, bond_price(p, rate_at_t0, 1.0));
                value += 0.5 * std::exp(-integral) * payoff;
            }
            st.add(value);
        }
        CHECK(std::abs(st.mean) <= 4 * st.se() + 2e-5);
    }
}

TEST_CASE("swap_payoff") {
    CHECK(swap_payoff(0.05, 1.0, 1.0 / 1.05) == Approx(0.0).epsilon(1e-15));
    CHECK(swap_payoff(0.0, 1.0, 1.0) == 0.0);
    CHECK(swap_payoff(0.05, 1.0, 0.9) == Approx(0.05 - 1.0 / 0.9 + 1.0).epsilon(1e-15));
    CHECK(swap_payoff(0.05, 1.0, 0.9) == Approx(-0.0611111111).epsilon(1e-9));
    CHECK_THROWS_AS(swap_payoff(0.05, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(swap_payoff(0.05, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("payoff through bonds and through forward rates agree") {
    const VasicekParams p;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> rate(-0.05, 0.15);
    std::uniform_real_distribution<double> acc(0.25, 2.0);
    for (int k = 0; k < 1000; ++k) {
        const double r = rate(rng);
        const double delta = acc(rng);
        const double fixed = rate(rng);
        const double b = bond_price(p, r, delta);
        const double via_forward = fixed * delta - forward_rate(1.0, b, 0.0, delta) * delta;
        CHECK(swap_payoff(fixed, delta, b) == Approx(via_forward).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("tenor and parameter validation") {
    CHECK_THROWS_AS(TenorStructure(0.0, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(TenorStructure(2.0, {1.0, 3.0}), std::invalid_argument);
    CHECK_THROWS_AS(TenorStructure(0.0, {1.0, 1.0}), std::invalid_argument);
    const auto t = TenorStructure::annual(3);
    CHECK(t.num_periods() == 3);
    CHECK(t.date(-1) == 0.0);
    CHECK(t.date(0) == 1.0);
    CHECK(t.date(3) == 4.0);
    CHECK(t.accrual(0) == 1.0);
    CHECK(t.accrual(2) == 1.0);
    CHECK_THROWS_AS(VasicekParams({0.0, 0.05, 0.05, 0.05}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(VasicekParams({0.1, 0.05, -0.01, 0.05}).validate(), std::invalid_argument);
}

TEST_CASE("rate loadings reproduce the simulated rates") {
    const VasicekParams p{0.2, 0.04, 0.03, 0.07};
    const auto tenor = TenorStructure(0.5, {1.0, 1.7, 3.0, 4.2});
    const RateLoadings rl = rate_loadings(p, tenor);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal;
    for (int k = 0; k < 50; ++k) {
        Eigen::VectorXd g(4);
        for (int m = 0; m < 4; ++m) g(m) = normal(rng);
        double r = p.initial_rate;
        for (int m = 0; m < 4; ++m) {
            r = advance_rate(p, r, tenor.accrual(m), g(m));
            CHECK(rl.mean(m) + rl.loading.row(m).dot(g) == Approx(r).epsilon(1e-13));
        }
    }
    CHECK(rl.loading(0, 1) == 0.0);
    CHECK(rl.loading(1, 3) == 0.0);
}
