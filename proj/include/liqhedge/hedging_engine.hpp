#ifndef LIQHEDGE_HEDGING_ENGINE_HPP
#define LIQHEDGE_HEDGING_ENGINE_HPP

#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "liqhedge/chaos_basis.hpp"
#include "liqhedge/liquidity.hpp"
#include "liqhedge/parallel.hpp"
#include "liqhedge/yield_model.hpp"

namespace liqhedge {

/// One scenario: the draws G^(0..N) and everything derived from them.
/// Date indices run from -1 (agreement date t) to N.
struct GaussianPath {
    Eigen::VectorXd draws;     // G^(0..N)
    Eigen::VectorXd rates;     // R_{T_k} stored at k + 1, k = -1..N
    Eigen::MatrixXd bonds;     // B(T_j, T_i) stored at (j + 1, i + 1), j < i
    Eigen::VectorXd payoffs;   // P(0..N), P(0) = 0

    int num_periods() const { return static_cast<int>(draws.size()) - 1; }
    double rate(int k) const { return rates(k + 1); }
    double bond(int date, int maturity) const { return bonds(date + 1, maturity + 1); }
    double payoff(int k) const { return payoffs(k); }
};

/// Samples and rebuilds paths for a fixed model and swap.
class PathSimulator {
public:
    PathSimulator(const VasicekParams& params, const SwapSpec& swap);

    const VasicekParams& params() const { return params_; }
    const SwapSpec& swap() const { return swap_; }
    int num_periods() const { return swap_.tenor.num_periods(); }

    void sample(RandomEngine& rng, GaussianPath& path) const;
    GaussianPath sample(RandomEngine& rng) const;
    void from_draws(const Eigen::Ref<const Eigen::VectorXd>& draws, GaussianPath& path) const;
    GaussianPath from_draws(const Eigen::Ref<const Eigen::VectorXd>& draws) const;

private:
    VasicekParams params_;
    SwapSpec swap_;
    Eigen::MatrixXd bond_a_;  // affine coefficients per (date + 1, maturity + 1)
    Eigen::MatrixXd bond_b_;
};

inline GaussianPath sample_path(RandomEngine& rng, const VasicekParams& p, const SwapSpec& swap) {
    return PathSimulator(p, swap).sample(rng);
}

/// Quantities pi(j, i) (stored at (j + 1, i + 1)), terminal wealth and the
/// per-date budget residual of the self-financing equation.
struct WealthBreakdown {
    Eigen::MatrixXd quantities;
    double wealth = 0.0;
    Eigen::VectorXd residuals;  // dates -1..N-1 at index j + 1

    double quantity(int date, int maturity) const { return quantities(date + 1, maturity + 1); }
    double max_abs_residual() const { return residuals.cwiseAbs().maxCoeff(); }
};

/// Runs the self-financing cascade given every pi(j, i) with i <= N-1
/// (entries of the T_N column are ignored and overwritten).
WealthBreakdown run_cascade(const GaussianPath& path, const CostModel& m, Eigen::MatrixXd quantities);

/// Reusable buffers for evaluating many paths under one strategy basis.
class CascadeWorkspace {
public:
    explicit CascadeWorkspace(const StrategyBasis& basis);

    /// Fills basis values and the controlled quantities for this path.
    void load(const StrategyBasis& basis, const Coefficients& alpha, const GaussianPath& path);
    /// Solves the T_N legs and returns W.
    double solve(const GaussianPath& path, const CostModel& m);
    /// dW/dalpha at the last solved state.
    void gradient(const StrategyBasis& basis, const GaussianPath& path, const CostModel& m,
                  Eigen::Ref<Eigen::VectorXd> grad) const;

    const Eigen::MatrixXd& quantities() const { return quantities_; }
    const Eigen::VectorXd& residuals() const { return residuals_; }
    const Eigen::VectorXd& basis_values(int date) const { return phi_[static_cast<std::size_t>(date + 1)]; }

private:
    std::vector<Eigen::VectorXd> phi_;
    Eigen::MatrixXd quantities_;
    Eigen::VectorXd residuals_;
    std::vector<TradeLeg> legs_;
};

WealthBreakdown terminal_wealth(const StrategyBasis& basis, const Coefficients& alpha,
                                const GaussianPath& path, const CostModel& m);

Eigen::VectorXd wealth_gradient(const StrategyBasis& basis, const Coefficients& alpha,
                                const GaussianPath& path, const CostModel& m);

/// Hedging-error functional S with its derivative.
struct Objective {
    std::function<double(double)> value;
    std::function<double(double)> derivative;

    static Objective quadratic();
};

/// S'(W) dW/dalpha.
Eigen::VectorXd objective_gradient(const StrategyBasis& basis, const Coefficients& alpha,
                                   const GaussianPath& path, const CostModel& m, const Objective& s);

/// Static and dynamic legs of exact replication in a liquid market, as a
/// (N + 2) x (N + 2) quantity matrix including the T_N column.
Eigen::MatrixXd perfect_replication_quantities(const SwapSpec& swap, const GaussianPath& path);

/// delta_0: every coefficient zero, so each payoff is rolled into T_N bonds.
Coefficients null_strategy(const TruncationScheme& scheme);

/// Per-leg audit rows: date, maturity, quantity, cash, residual.
void write_audit_csv(std::ostream& os, const GaussianPath& path, const CostModel& m, const WealthBreakdown& w);

}  // namespace liqhedge

#endif
