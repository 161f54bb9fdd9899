#include "liqhedge/liquidity.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace liqhedge {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_lambda(double lambda) {
    if (!(lambda >= 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in [0, 1)");
}

void check_price(double b) {
    if (!(b > 0.0)) throw std::invalid_argument("bond price must be positive");
}

// Excess-trade shape: cost / b = pi + lambda * excess(pi), excess >= 0 convex.
struct Shape {
    double lambda;
    double free_size;
};

Shape shape_of(const PiecewiseCost& c) {
    return std::visit(overloaded{
                          [](const PerfectLiquidity&) { return Shape{0.0, 0.0}; },
                          [](const ProportionalCost& p) { return Shape{p.lambda, 0.0}; },
                          [](const ThresholdCost& t) { return Shape{t.lambda, t.free_size}; },
                      },
                      c);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// E[(x + s Z)^+]
double smoothed_relu(double x, double s) { return x * normal_cdf(x / s) + s * normal_pdf(x / s); }

// excess(pi) = (pi - C)^+ + (-pi - C)^+ and its Gaussian smoothing
double smoothed_excess(const Shape& sh, double pi, double s) {
    return smoothed_relu(pi - sh.free_size, s) + smoothed_relu(-pi - sh.free_size, s);
}

double smoothed_excess_slope(const Shape& sh, double pi, double s) {
    return normal_cdf((pi - sh.free_size) / s) - normal_cdf((-pi - sh.free_size) / s);
}

double piecewise_unit_cost(const Shape& sh, double u) {
    if (u > sh.free_size) return u + sh.lambda * (u - sh.free_size);
    if (u < -sh.free_size) return u + sh.lambda * (-u - sh.free_size);
    return u;
}

double piecewise_unit_inverse(const Shape& sh, double v) {
    if (v > sh.free_size) return sh.free_size + (v - sh.free_size) / (1.0 + sh.lambda);
    if (v < -sh.free_size) return -sh.free_size + (v + sh.free_size) / (1.0 - sh.lambda);
    return v;
}

double piecewise_unit_slope(const Shape& sh, double u) {
    if (sh.lambda == 0.0) return 1.0;
    if (sh.free_size == 0.0 && u == 0.0) return 1.0;
    if (u >= sh.free_size) return 1.0 + sh.lambda;
    if (u < -sh.free_size) return 1.0 - sh.lambda;
    return 1.0;
}

double smoothed_unit_cost(const SmoothedCost& sc, double u) {
    const Shape sh = shape_of(sc.inner);
    if (sh.lambda == 0.0) return u;
    return u + sh.lambda * smoothed_excess(sh, u, std::sqrt(sc.epsilon));
}

double smoothed_unit_inverse(const SmoothedCost& sc, double v) {
    const Shape sh = shape_of(sc.inner);
    if (sh.lambda == 0.0) return v;
    const double s = std::sqrt(sc.epsilon);
    auto f = [&](double u) { return u + sh.lambda * smoothed_excess(sh, u, s) - v; };
    // bracket grown geometrically from |v|
    double width = std::abs(v) + s;
    double lo = -width;
    double hi = width;
    int grow = 0;
    while ((f(lo) > 0.0 || f(hi) < 0.0) && grow < 200) {
        width *= 2.0;
        lo = -width;
        hi = width;
        ++grow;
    }
    if (f(lo) > 0.0 || f(hi) < 0.0) throw std::runtime_error("smoothed cost inverse: bracketing failed");
    constexpr int kMaxIter = 200;
    for (int it = 0; it < kMaxIter; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) return mid;
        if (f(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    const double mid = 0.5 * (lo + hi);
    if (hi - lo > 1e-12 * std::max(1.0, std::abs(mid)))
        throw std::runtime_error("smoothed cost inverse: bisection did not converge");
    return mid;
}

double smoothed_unit_slope(const SmoothedCost& sc, double u) {
    const Shape sh = shape_of(sc.inner);
    if (sh.lambda == 0.0) return 1.0;
    return 1.0 + sh.lambda * smoothed_excess_slope(sh, u, std::sqrt(sc.epsilon));
}

}  // namespace

CostModel::CostModel(Variant v) : v_(std::move(v)) {
    std::visit(overloaded{
                   [](const PerfectLiquidity&) {},
                   [](const ProportionalCost& p) { check_lambda(p.lambda); },
                   [](const ThresholdCost& t) {
                       check_lambda(t.lambda);
                       if (!(t.free_size >= 0.0)) throw std::invalid_argument("threshold size C must be >= 0");
                   },
                   [](const SmoothedCost& s) {
                       if (!(s.epsilon > 0.0)) throw std::invalid_argument("smoothing epsilon must be positive");
                       const Shape sh = shape_of(s.inner);
                       check_lambda(sh.lambda);
                       if (!(sh.free_size >= 0.0)) throw std::invalid_argument("threshold size C must be >= 0");
                   },
               },
               v_);
}

bool CostModel::is_perfect() const {
    return std::visit(overloaded{
                          [](const PerfectLiquidity&) { return true; },
                          [](const ProportionalCost& p) { return p.lambda == 0.0; },
                          [](const ThresholdCost& t) { return t.lambda == 0.0; },
                          [](const SmoothedCost& s) { return shape_of(s.inner).lambda == 0.0; },
                      },
                      v_);
}

std::string CostModel::kind() const {
    return std::visit(overloaded{
                          [](const PerfectLiquidity&) { return std::string("perfect"); },
                          [](const ProportionalCost&) { return std::string("proportional"); },
                          [](const ThresholdCost&) { return std::string("threshold"); },
                          [](const SmoothedCost&) { return std::string("smoothed"); },
                      },
                      v_);
}

namespace {

Shape shape_of(const CostModel::Variant& v) {
    return std::visit(overloaded{
                          [](const SmoothedCost& s) { return shape_of(s.inner); },
                          [](const auto& c) { return shape_of(PiecewiseCost(c)); },
                      },
                      v);
}

}  // namespace

double CostModel::lambda() const { return shape_of(v_).lambda; }

double CostModel::free_size() const { return shape_of(v_).free_size; }

double CostModel::epsilon() const {
    if (const auto* s = std::get_if<SmoothedCost>(&v_)) return s->epsilon;
    return 0.0;
}

std::vector<double> CostModel::kinks() const {
    if (!is_piecewise_linear() || lambda() == 0.0) return {};
    const double c = free_size();
    if (c == 0.0) return {0.0};
    return {-c, c};
}

double cost(const CostModel& m, double b, double pi) {
    check_price(b);
    return std::visit(overloaded{
                          [&](const SmoothedCost& s) { return b * smoothed_unit_cost(s, pi); },
                          [&](const auto& c) { return b * piecewise_unit_cost(shape_of(PiecewiseCost(c)), pi); },
                      },
                      m.variant());
}

double cost_inverse(const CostModel& m, double b, double y) {
    check_price(b);
    return std::visit(overloaded{
                          [&](const SmoothedCost& s) { return smoothed_unit_inverse(s, y / b); },
                          [&](const auto& c) { return piecewise_unit_inverse(shape_of(PiecewiseCost(c)), y / b); },
                      },
                      m.variant());
}

double cost_derivative(const CostModel& m, double b, double pi) {
    check_price(b);
    return std::visit(overloaded{
                          [&](const SmoothedCost& s) { return b * smoothed_unit_slope(s, pi); },
                          [&](const auto& c) { return b * piecewise_unit_slope(shape_of(PiecewiseCost(c)), pi); },
                      },
                      m.variant());
}

CostModel smooth(const CostModel& m, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("smooth: epsilon must be positive");
    return std::visit(overloaded{
                          [](const SmoothedCost&) -> CostModel {
                              throw std::invalid_argument("smooth: model is already smoothed");
                          },
                          [&](const auto& c) -> CostModel { return CostModel(SmoothedCost{PiecewiseCost(c), epsilon}); },
                      },
                      m.variant());
}

double solve_self_financing(const CostModel& m, double b_last, double inflow, std::span<const TradeLeg> legs) {
    double cash = inflow;
    for (const auto& leg : legs) cash -= cost(m, leg.bond_price, leg.quantity);
    return cost_inverse(m, b_last, cash);
}

}  // namespace liqhedge
