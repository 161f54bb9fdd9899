#ifndef LIQHEDGE_LIQUIDITY_HPP
#define LIQHEDGE_LIQUIDITY_HPP

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace liqhedge {

/// Trades at the market price B * pi.
struct PerfectLiquidity {
    bool operator==(const PerfectLiquidity&) const = default;
};

/// (1 + lambda sign(pi)) B pi.
struct ProportionalCost {
    double lambda = 0.0;
    bool operator==(const ProportionalCost&) const = default;
};

/// Free inside [-C, C], slopes 1 +- lambda outside.
struct ThresholdCost {
    double lambda = 0.0;
    double free_size = 0.0;  // C
    bool operator==(const ThresholdCost&) const = default;
};

using PiecewiseCost = std::variant<PerfectLiquidity, ProportionalCost, ThresholdCost>;

/// Exact convolution of a piecewise-linear cost with N(0, epsilon).
struct SmoothedCost {
    PiecewiseCost inner;
    double epsilon = 1e-6;
    bool operator==(const SmoothedCost&) const = default;
};

/// Price function Psi(T, U, pi) of a bond trade, up to the bond price B(T, U).
class CostModel {
public:
    using Variant = std::variant<PerfectLiquidity, ProportionalCost, ThresholdCost, SmoothedCost>;

    CostModel() = default;
    CostModel(Variant v);  // NOLINT: implicit on purpose, variants are the natural spelling

    static CostModel perfect() { return CostModel(PerfectLiquidity{}); }
    static CostModel proportional(double lambda) { return CostModel(ProportionalCost{lambda}); }
    static CostModel threshold(double lambda, double free_size) {
        return CostModel(ThresholdCost{lambda, free_size});
    }

    const Variant& variant() const { return v_; }
    bool is_perfect() const;
    bool is_piecewise_linear() const { return !std::holds_alternative<SmoothedCost>(v_); }

    /// "perfect", "proportional", "threshold" or "smoothed".
    std::string kind() const;
    double lambda() const;
    double free_size() const;
    double epsilon() const;

    /// Trade sizes where the piecewise-linear cost changes slope (empty when smoothed).
    std::vector<double> kinks() const;

    bool operator==(const CostModel&) const = default;

private:
    Variant v_ = PerfectLiquidity{};
};

/// Cash paid for pi bonds of unit price b.
double cost(const CostModel& m, double b, double pi);

/// Trade size whose cost is y.
double cost_inverse(const CostModel& m, double b, double y);

/// Right derivative of cost in pi; b at the central kink of the proportional cost.
double cost_derivative(const CostModel& m, double b, double pi);

/// Gaussian-smoothed version of a piecewise-linear model.
CostModel smooth(const CostModel& m, double epsilon);

/// A bond leg traded at one date: its price and quantity.
struct TradeLeg {
    double bond_price;
    double quantity;
};

/// Quantity of the T_N bond that balances the budget at one date:
/// inflow = sum_legs Psi(leg) + Psi(b_last, pi).
double solve_self_financing(const CostModel& m, double b_last, double inflow, std::span<const TradeLeg> legs);

}  // namespace liqhedge

#endif
