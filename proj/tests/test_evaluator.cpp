#include <cmath>
#include <random>

#include "doctest.h"
#include "liqhedge/evaluator.hpp"
#include "oracles.hpp"

using namespace liqhedge;
using doctest::Approx;

namespace {

struct Problem {
    VasicekParams params;
    TenorStructure tenor;
    SwapSpec swap;
    PathSimulator sim;
    StrategyBasis basis;

    Problem(int n, int d, VasicekParams p = {})
        : params(p),
          tenor(TenorStructure::annual(n)),
          swap(make_atm_swap(p, tenor)),
          sim(p, swap),
          basis(TruncationScheme{d, n, {}}, p, tenor) {}

    double v_star(std::int64_t samples = 1'000'000, std::uint64_t seed = 1) const {
        return estimate_v(basis, sim, optimal_truncated_strategy(basis, params, swap), CostModel::perfect(),
                          SamplingOptions{samples, seed, 1})
            .mean;
    }
};

// Replays the evaluator's path sequence: batch b draws from stream (seed, b).
template <class F>
void for_each_path(const PathSimulator& sim, std::int64_t samples, std::uint64_t seed, F&& f) {
    GaussianPath path;
    for (std::int64_t start = 0, b = 0; start < samples; start += kPathsPerBatch, ++b) {
        RandomEngine rng = make_stream(seed, static_cast<std::uint64_t>(b));
        for (std::int64_t k = start; k < std::min(samples, start + kPathsPerBatch); ++k) {
            sim.sample(rng, path);
            f(path);
        }
    }
}

// sum_{K>d} s^K/K! summed term by term
double series_tail(double s, int d) {
    double term = 1.0;
    for (int k = 1; k <= d + 1; ++k) term *= s / k;
    double sum = 0.0;
    for (int k = d + 1; k < d + 200; ++k) {
        sum += term;
        term *= s / (k + 1);
    }
    return sum;
}

}  // namespace

TEST_CASE("exact replication has zero second moment") {
    const Problem pb(3, 1);
    const EvalReport r = estimate_second_moment(pb.sim, SamplingOptions{100'000, 2, 1},
                                                [&](const GaussianPath& path, CascadeWorkspace*) {
                                                    return run_cascade(path, CostModel::perfect(),
                                                                       perfect_replication_quantities(pb.swap, path))
                                                        .wealth;
                                                });
    CHECK(r.mean <= 1e-20);
    VasicekParams flat;
    flat.volatility = 0.0;
    const Problem det(3, 0, flat);
    CHECK(det.v_star(10'000) <= 1e-20);
}

TEST_CASE("report statistics agree with a two-pass computation") {
    const Problem pb(2, 1);
    const Coefficients a = optimal_truncated_strategy(pb.basis, pb.params, pb.swap);
    const CostModel m = CostModel::proportional(0.01);
    const std::int64_t n = 20'000;
    const EvalReport r = estimate_v(pb.basis, pb.sim, a, m, SamplingOptions{n, 7, 1});
    std::vector<double> sq;
    for_each_path(pb.sim, n, 7, [&](const GaussianPath& path) {
        const double w = terminal_wealth(pb.basis, a, path, m).wealth;
        sq.push_back(w * w);
    });
    double mean = 0.0;
    for (double x : sq) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : sq) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n - 1);
    CHECK(r.num_samples == n);
    CHECK(r.mean == Approx(mean).epsilon(1e-12));
    CHECK(r.std_error == Approx(std::sqrt(var / n)).epsilon(1e-9));
    CHECK(r.ci99_half_width == Approx(2.5758293 * r.std_error).epsilon(1e-7));
    CHECK_THROWS_AS(estimate_v(pb.basis, pb.sim, a, m, SamplingOptions{999, 7, 1}), std::invalid_argument);
}

TEST_CASE("worker count does not change the estimate") {
    const Problem pb(3, 2);
    const Coefficients a = optimal_truncated_strategy(pb.basis, pb.params, pb.swap);
    const CostModel m = CostModel::threshold(0.03, 0.5);
    const EvalReport one = estimate_v(pb.basis, pb.sim, a, m, SamplingOptions{50'000, 3, 1});
    for (int w : {2, 3, 8}) {
        const EvalReport many = estimate_v(pb.basis, pb.sim, a, m, SamplingOptions{50'000, 3, w});
        CHECK(many.mean == one.mean);
        CHECK(many.std_error == one.std_error);
    }
    CHECK(estimate_v(pb.basis, pb.sim, a, m, SamplingOptions{50'000, 4, 1}).mean != one.mean);
}

TEST_CASE("project_lognormal") {
    SUBCASE("constant variable") {
        const Eigen::VectorXd c = project_lognormal(LogNormalSpec{0.3, Eigen::Vector2d::Zero()}, 3);
        CHECK(c.size() == 10);
        CHECK(c(0) == Approx(std::exp(0.3)).epsilon(1e-15));
        CHECK(c.tail(9).isZero());
    }
    SUBCASE("one factor, second coefficient against Monte Carlo") {
        const Eigen::VectorXd c = project_lognormal(LogNormalSpec{0.0, Eigen::VectorXd::Constant(1, 1.0)}, 2);
        CHECK(c(2) == Approx(std::exp(0.5) / std::sqrt(2.0)).epsilon(1e-14));
        std::mt19937_64 rng(10);
        std::normal_distribution<double> normal;
        oracle::Stat st;
        for (int k = 0; k < 10'000'000; ++k) {
            const double g = normal(rng);
            st.add(std::exp(g) * (g * g - 1.0) / std::sqrt(2.0));
        }
        CHECK(std::abs(st.mean - c(2)) <= 4 * st.se());
    }
    SUBCASE("coefficients follow the product formula") {
        const LogNormalSpec spec{-0.2, Eigen::Vector3d(0.4, -0.7, 0.1)};
        const auto idx = enumerate_multiindices(3, 4);
        const Eigen::VectorXd c = project_lognormal(spec, 4);
        REQUIRE(c.size() == static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            double expected = std::exp(-0.2 + 0.5 * (0.16 + 0.49 + 0.01));
            for (int m = 0; m < 3; ++m)
                expected *= std::pow(spec.loadings(m), idx[k][m]) / std::sqrt(oracle::factorial(idx[k][m]));
            CHECK(c(static_cast<Eigen::Index>(k)) == Approx(expected).epsilon(1e-13));
        }
    }
    SUBCASE("reconstruction error matches the exact tail") {
        for (int d : {0, 1, 2}) {
            const LogNormalSpec spec{0.1, Eigen::Vector2d(0.5, -0.3)};
            const auto idx = enumerate_multiindices(2, d);
            const Eigen::VectorXd c = project_lognormal(spec, d);
            std::mt19937_64 rng(11 + d);
            std::normal_distribution<double> normal;
            oracle::Stat st;
            for (int k = 0; k < 2'000'000; ++k) {
                const Eigen::Vector2d g(normal(rng), normal(rng));
                double approx = 0.0;
                for (std::size_t j = 0; j < idx.size(); ++j) approx += c(static_cast<Eigen::Index>(j)) * basis_eval(idx[j], g);
                const double err = std::exp(0.1 + spec.loadings.dot(g)) - approx;
                st.add(err * err);
            }
            CAPTURE(d);
            CHECK(std::abs(st.mean - tail_norm_exact(spec, d)) <= 4 * st.se());
        }
    }
}

TEST_CASE("tail_norm_exact") {
    CHECK(tail_norm_exact(LogNormalSpec{0.7, Eigen::Vector3d::Zero()}, 0) == 0.0);
    // d = 0 leaves the variance of the log-normal: e^2 - e
    const double e = std::exp(1.0);
    CHECK(tail_norm_exact(LogNormalSpec{0.0, Eigen::VectorXd::Constant(1, 1.0)}, 0) == Approx(e * (e - 1.0)).epsilon(1e-14));
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> mu(-1.0, 1.0), lam(-1.2, 1.2);
    for (int k = 0; k < 300; ++k) {
        const int m = 1 + k % 3;
        LogNormalSpec spec{mu(rng), Eigen::VectorXd(m)};
        for (int i = 0; i < m; ++i) spec.loadings(i) = lam(rng);
        const double s = spec.loadings.squaredNorm();
        for (int d = 0; d <= 6; ++d) {
            const double tail = tail_norm_exact(spec, d);
            CHECK(tail == Approx(std::exp(2 * spec.mu + s) * series_tail(s, d)).epsilon(1e-9).scale(1e-300));
            CHECK(tail <= std::exp(2 * spec.mu + 2 * s) * std::pow(s, d + 1) / oracle::factorial(d + 1) * (1 + 1e-12));
        }
    }
    CHECK_THROWS_AS(tail_norm_exact(LogNormalSpec{}, -1), std::invalid_argument);
}

TEST_CASE("truncation_bound") {
    CHECK(truncation_bound(LogNormalSpec{0.4, Eigen::Vector2d::Zero()}, 2) == 0.0);
    CHECK(truncation_bound(LogNormalSpec{0.0, Eigen::VectorXd::Constant(1, 1.0)}, 3) ==
          Approx(std::exp(1.0) / std::sqrt(24.0)).epsilon(1e-14));
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> mu(-2.0, 2.0), lam(-1.5, 1.5);
    for (int k = 0; k < 1000; ++k) {
        LogNormalSpec spec{mu(rng), Eigen::Vector2d(lam(rng), lam(rng))};
        const int d = k % 8;
        CHECK(truncation_bound(spec, d) >= std::sqrt(tail_norm_exact(spec, d)));
    }
}

TEST_CASE("multinomial identity behind the collapsed tail sum") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int vars = 1; vars <= 4; ++vars) {
        const auto idx = enumerate_multiindices(vars, 6);
        for (int n = 0; n <= 6; ++n) {
            Eigen::VectorXd a(vars);
            for (int m = 0; m < vars; ++m) a(m) = u(rng);
            double rhs = 0.0, magnitude = 0.0;
            for (const auto& k : idx) {
                if (degree(k) != n) continue;
                double term = 1.0;
                for (int m = 0; m < vars; ++m) term *= std::pow(a(m), k[m]) / oracle::factorial(k[m]);
                rhs += term;
                magnitude += std::abs(term);
            }
            CHECK(std::abs(std::pow(a.sum(), n) / oracle::factorial(n) - rhs) <= 1e-14 * magnitude);
        }
    }
}

TEST_CASE("optimal truncated strategy") {
    SUBCASE("reference second moments") {
        const double v20 = Problem(2, 0).v_star();
        CHECK(v20 >= 5.2e-6 / 3);
        CHECK(v20 <= 5.2e-6 * 3);
        const double v31 = Problem(3, 1).v_star();
        CHECK(v31 >= 3.1e-8 / 3);
        CHECK(v31 <= 3.1e-8 * 3);
        CHECK(Problem(2, 3).v_star() <= 1e-14);
    }
    SUBCASE("degree zero is the mean of the replication quantities") {
        const Problem pb(3, 0);
        const Coefficients a = optimal_truncated_strategy(pb.basis, pb.params, pb.swap);
        const auto& layout = pb.basis.layout();
        const Eigen::MatrixXd q0 = perfect_replication_quantities(pb.swap, pb.sim.from_draws(Eigen::VectorXd::Zero(4)));
        for (const auto& b : layout.blocks())
            if (b.date == -1) CHECK(a(b.offset) == Approx(q0(0, b.maturity + 1)).epsilon(1e-14));
        oracle::Stat s01, s12;
        RandomEngine rng = make_stream(30, 0);
        for (int k = 0; k < 1'000'000; ++k) {
            const Eigen::MatrixXd q = perfect_replication_quantities(pb.swap, pb.sim.sample(rng));
            s01.add(q(1, 2));
            s12.add(q(2, 3));
        }
        CHECK(std::abs(a(layout.block(0, 1).offset) - s01.mean) <= 4 * s01.se());
        CHECK(std::abs(a(layout.block(1, 2).offset) - s12.mean) <= 4 * s12.se());
        CHECK(a(layout.block(0, 2).offset) == 0.0);
    }
    SUBCASE("second moment decreases with the degree") {
        for (int n : {2, 3}) {
            double prev = std::numeric_limits<double>::infinity();
            for (int d = 0; d <= 4; ++d) {
                const double v = Problem(n, d).v_star(200'000);
                CAPTURE(n);
                CAPTURE(d);
                CHECK(v < prev);
                prev = v;
            }
        }
    }
}

TEST_CASE("single-coefficient perturbations of the liquid optimum do not help") {
    const Problem pb(2, 1);
    const Coefficients star = optimal_truncated_strategy(pb.basis, pb.params, pb.swap);
    const double delta = 1e-3;
    const Eigen::Index p = star.size();
    std::vector<oracle::Stat> diff(static_cast<std::size_t>(2 * p));
    CascadeWorkspace ws(pb.basis);
    for_each_path(pb.sim, 2'000'000, 31, [&](const GaussianPath& path) {
        ws.load(pb.basis, star, path);
        const double w0 = ws.solve(path, CostModel::perfect());
        Eigen::VectorXd g(p);
        ws.gradient(pb.basis, path, CostModel::perfect(), g);
        for (Eigen::Index c = 0; c < p; ++c)
            for (int s : {0, 1}) {
                // W is affine in alpha under perfect liquidity
                const double w = w0 + (s ? delta : -delta) * g(c);
                diff[static_cast<std::size_t>(2 * c + s)].add(w * w - w0 * w0);
            }
    });
    for (const auto& d : diff) CHECK(d.mean > -2 * d.se());
}

TEST_CASE("least squares optimum") {
    const Problem pb(2, 1);
    const SamplingOptions opts{200'000, 9, 1};
    const LeastSquaresFit fit = least_squares_optimum(pb.basis, pb.sim, opts);
    const EvalReport at_fit = estimate_v(pb.basis, pb.sim, fit.alpha, CostModel::perfect(), opts);
    CHECK(fit.value == Approx(at_fit.mean).epsilon(1e-6));
    const Coefficients star = optimal_truncated_strategy(pb.basis, pb.params, pb.swap);
    CHECK(fit.value <= estimate_v(pb.basis, pb.sim, star, CostModel::perfect(), opts).mean);
    CHECK((fit.alpha - star).cwiseAbs().maxCoeff() < 1e-2);
}
