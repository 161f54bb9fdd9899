// Independent reference computations used only by the tests.
#ifndef LIQHEDGE_TESTS_ORACLES_HPP
#define LIQHEDGE_TESTS_ORACLES_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

/// Running mean and standard error.
struct Stat {
    std::int64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const { return m2 / static_cast<double>(n - 1); }
    double se() const { return std::sqrt(variance() / static_cast<double>(n)); }
};

inline double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

/// He_n from the explicit sum n! sum_m (-1)^m x^{n-2m} / (m! (n-2m)! 2^m).
inline double hermite_explicit(int n, double x) {
    double s = 0.0;
    for (int m = 0; 2 * m <= n; ++m)
        s += (m % 2 ? -1.0 : 1.0) * std::pow(x, n - 2 * m) / (factorial(m) * factorial(n - 2 * m) * std::pow(2.0, m));
    return factorial(n) * s;
}

/// Price of the zero-coupon bond by Euler simulation of the short rate, with
/// trapezoidal integration, antithetic draws and the control variate
/// (I - E I)^2 - Var I, whose moments are exact for the Euler recursion.
inline Stat euler_bond_price(double a, double r_inf, double sigma, double r0, double tau, int steps, int pairs,
                             std::uint64_t seed) {
    const double dt = tau / steps;
    const double phi = 1.0 - a * dt;
    const double s = sigma * std::sqrt(dt);
    // I = dt sum_k w_k R_k; E I and Var I of the AR(1) recursion
    double mean_i = 0.0;
    double dev = r0 - r_inf;
    for (int k = 0; k <= steps; ++k) {
        const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
        mean_i += w * (r_inf + dev) * dt;
        dev *= phi;
    }
    double var_i = 0.0;
    double c = 0.0;  // c_m = sum_{k > m} w_k phi^{k-1-m}, built from the end
    for (int m = steps - 1; m >= 0; --m) {
        const double w = (m + 1 == steps) ? 0.5 : 1.0;
        c = w + phi * c;
        var_i += c * c;
    }
    var_i *= dt * dt * s * s;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> g(static_cast<std::size_t>(steps));
    std::vector<double> ys, cs;
    ys.reserve(static_cast<std::size_t>(pairs));
    cs.reserve(static_cast<std::size_t>(pairs));
    for (int p = 0; p < pairs; ++p) {
        for (auto& x : g) x = normal(rng);
        double price = 0.0;
        double control = 0.0;
        for (double sign : {1.0, -1.0}) {
            double r = r0;
            double integral = 0.5 * r0 * dt;
            for (int k = 0; k < steps; ++k) {
                r = r + a * (r_inf - r) * dt + s * sign * g[static_cast<std::size_t>(k)];
                integral += (k + 1 == steps ? 0.5 : 1.0) * r * dt;
            }
            price += 0.5 * std::exp(-integral);
            control += 0.5 * ((integral - mean_i) * (integral - mean_i) - var_i);
        }
        ys.push_back(price);
        cs.push_back(control);
    }
    Stat y, cv;
    for (std::size_t k = 0; k < ys.size(); ++k) {
        y.add(ys[k]);
        cv.add(cs[k]);
    }
    double cov = 0.0;
    for (std::size_t k = 0; k < ys.size(); ++k) cov += (ys[k] - y.mean) * (cs[k] - cv.mean);
    const double beta = cov / (static_cast<double>(ys.size()) - 1.0) / cv.variance();
    Stat out;
    for (std::size_t k = 0; k < ys.size(); ++k) out.add(ys[k] - beta * cs[k]);
    return out;
}

}  // namespace oracle

#endif
