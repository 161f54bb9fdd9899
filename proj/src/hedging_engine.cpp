#include "liqhedge/hedging_engine.hpp"

#include <ostream>
#include <random>
#include <stdexcept>

namespace liqhedge {

PathSimulator::PathSimulator(const VasicekParams& params, const SwapSpec& swap) : params_(params), swap_(swap) {
    params_.validate();
    const auto& tenor = swap_.tenor;
    const int n = tenor.num_periods();
    bond_a_ = Eigen::MatrixXd::Zero(n + 2, n + 2);
    bond_b_ = Eigen::MatrixXd::Zero(n + 2, n + 2);
    for (int j = -1; j < n; ++j) {
        for (int i = j + 1; i <= n; ++i) {
            const AffineBond ab = affine_bond(params_, tenor.date(i) - tenor.date(j));
            bond_a_(j + 1, i + 1) = ab.a;
            bond_b_(j + 1, i + 1) = ab.b;
        }
    }
}

void PathSimulator::from_draws(const Eigen::Ref<const Eigen::VectorXd>& draws, GaussianPath& path) const {
    const auto& tenor = swap_.tenor;
    const int n = tenor.num_periods();
    if (draws.size() != n + 1) throw std::invalid_argument("from_draws: expected N + 1 draws");
    path.draws = draws;
    path.rates.resize(n + 2);
    path.rates(0) = params_.initial_rate;
    for (int k = 0; k <= n; ++k)
        path.rates(k + 1) = advance_rate(params_, path.rates(k), tenor.accrual(k), draws(k));
    path.bonds.setZero(n + 2, n + 2);
    for (int j = -1; j < n; ++j) {
        const double r = path.rates(j + 1);
        for (int i = j + 1; i <= n; ++i)
            path.bonds(j + 1, i + 1) = std::exp(-bond_a_(j + 1, i + 1) - bond_b_(j + 1, i + 1) * r);
    }
    path.payoffs.setZero(n + 1);
    for (int i = 1; i <= n; ++i)
        path.payoffs(i) = swap_payoff(swap_.fixed_rate, tenor.accrual(i), path.bonds(i, i + 1));
}

GaussianPath PathSimulator::from_draws(const Eigen::Ref<const Eigen::VectorXd>& draws) const {
    GaussianPath path;
    from_draws(draws, path);
    return path;
}

void PathSimulator::sample(RandomEngine& rng, GaussianPath& path) const {
    std::normal_distribution<double> normal;
    Eigen::VectorXd draws(num_periods() + 1);
    for (Eigen::Index k = 0; k < draws.size(); ++k) draws(k) = normal(rng);
    from_draws(draws, path);
}

GaussianPath PathSimulator::sample(RandomEngine& rng) const {
    GaussianPath path;
    sample(rng, path);
    return path;
}

// ---------------------------------------------------------------------------

namespace {

// Solves the T_N column in place; returns W.
double solve_terminal_column(const GaussianPath& path, const CostModel& m, Eigen::MatrixXd& q,
                             Eigen::VectorXd& residuals, std::vector<TradeLeg>& legs) {
    const int n = path.num_periods();
    residuals.resize(n + 1);
    double wealth = path.payoff(n);
    for (int j = -1; j < n; ++j) {
        double inflow = 0.0;
        if (j >= 0) {
            inflow = path.payoff(j);
            for (int k = -1; k < j; ++k) inflow += q(k + 1, j + 1);
        }
        legs.clear();
        for (int i = j + 1; i < n; ++i) legs.push_back({path.bond(j, i), q(j + 1, i + 1)});
        const double b_last = path.bond(j, n);
        const double pi_last = solve_self_financing(m, b_last, inflow, legs);
        q(j + 1, n + 1) = pi_last;
        double spent = cost(m, b_last, pi_last);
        for (const auto& leg : legs) spent += cost(m, leg.bond_price, leg.quantity);
        residuals(j + 1) = inflow - spent;
        wealth += pi_last;
    }
    return wealth;
}

}  // namespace

WealthBreakdown run_cascade(const GaussianPath& path, const CostModel& m, Eigen::MatrixXd quantities) {
    const int n = path.num_periods();
    if (quantities.rows() != n + 2 || quantities.cols() != n + 2)
        throw std::invalid_argument("run_cascade: quantity matrix must be (N + 2) x (N + 2)");
    WealthBreakdown out;
    std::vector<TradeLeg> legs;
    out.wealth = solve_terminal_column(path, m, quantities, out.residuals, legs);
    out.quantities = std::move(quantities);
    return out;
}

CascadeWorkspace::CascadeWorkspace(const StrategyBasis& basis) {
    const int n = basis.scheme().num_periods;
    phi_.resize(static_cast<std::size_t>(n + 1));
    quantities_.setZero(n + 2, n + 2);
    residuals_.setZero(n + 1);
    legs_.reserve(static_cast<std::size_t>(n));
}

void CascadeWorkspace::load(const StrategyBasis& basis, const Coefficients& alpha, const GaussianPath& path) {
    const auto& layout = basis.layout();
    const int n = layout.num_periods();
    if (alpha.size() != layout.dimension()) throw std::invalid_argument("coefficient dimension mismatch");
    if (path.num_periods() != n) throw std::invalid_argument("path and strategy disagree on N");
    for (int j = -1; j <= n - 2; ++j) basis.basis_values_into(j, path.draws, phi_[static_cast<std::size_t>(j + 1)]);
    quantities_.setZero();
    for (const auto& b : layout.blocks())
        quantities_(b.date + 1, b.maturity + 1) =
            alpha.segment(b.offset, b.size).dot(phi_[static_cast<std::size_t>(b.date + 1)]);
}

double CascadeWorkspace::solve(const GaussianPath& path, const CostModel& m) {
    return solve_terminal_column(path, m, quantities_, residuals_, legs_);
}

void CascadeWorkspace::gradient(const StrategyBasis& basis, const GaussianPath& path, const CostModel& m,
                                Eigen::Ref<Eigen::VectorXd> grad) const {
    const auto& layout = basis.layout();
    const int n = layout.num_periods();
    // W = sum_j Psi^{-1}_{j,N}(inflow_j - sum_{i<N} Psi_{j,i}(pi(j,i))) + P(N); each controlled
    // pi(k,i) is paid at date k and received as inflow at date i.
    Eigen::VectorXd inverse_slope(n + 1);
    for (int j = -1; j < n; ++j)
        inverse_slope(j + 1) = 1.0 / cost_derivative(m, path.bond(j, n), quantities_(j + 1, n + 1));
    for (const auto& b : layout.blocks()) {
        const double paid = cost_derivative(m, path.bond(b.date, b.maturity), quantities_(b.date + 1, b.maturity + 1));
        const double factor = inverse_slope(b.maturity + 1) - paid * inverse_slope(b.date + 1);
        grad.segment(b.offset, b.size) = factor * phi_[static_cast<std::size_t>(b.date + 1)];
    }
}

WealthBreakdown terminal_wealth(const StrategyBasis& basis, const Coefficients& alpha, const GaussianPath& path,
                                const CostModel& m) {
    CascadeWorkspace ws(basis);
    ws.load(basis, alpha, path);
    WealthBreakdown out;
    out.wealth = ws.solve(path, m);
    out.quantities = ws.quantities();
    out.residuals = ws.residuals();
    return out;
}

Eigen::VectorXd wealth_gradient(const StrategyBasis& basis, const Coefficients& alpha, const GaussianPath& path,
                                const CostModel& m) {
    CascadeWorkspace ws(basis);
    ws.load(basis, alpha, path);
    ws.solve(path, m);
    Eigen::VectorXd grad(alpha.size());
    ws.gradient(basis, path, m, grad);
    return grad;
}

Objective Objective::quadratic() {
    return {[](double w) { return w * w; }, [](double w) { return 2.0 * w; }};
}

Eigen::VectorXd objective_gradient(const StrategyBasis& basis, const Coefficients& alpha, const GaussianPath& path,
                                   const CostModel& m, const Objective& s) {
    CascadeWorkspace ws(basis);
    ws.load(basis, alpha, path);
    const double w = ws.solve(path, m);
    Eigen::VectorXd grad(alpha.size());
    ws.gradient(basis, path, m, grad);
    return s.derivative(w) * grad;
}

Eigen::MatrixXd perfect_replication_quantities(const SwapSpec& swap, const GaussianPath& path) {
    const int n = swap.tenor.num_periods();
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n + 2, n + 2);
    // at t: fixed coupons sold forward, plus long T_0 / short T_N
    for (int i = 1; i <= n; ++i) q(0, i + 1) = -swap.fixed_rate * swap.tenor.accrual(i);
    q(0, 1) += 1.0;
    q(0, n + 1) -= 1.0;
    // at T_{i-1}: unit cash buys 1/B(T_{i-1}, T_i) bonds to fund the floating coupon
    for (int j = 0; j < n; ++j) q(j + 1, j + 2) = 1.0 / path.bond(j, j + 1);
    return q;
}

Coefficients null_strategy(const TruncationScheme& scheme) {
    return Coefficients::Zero(StrategyLayout(scheme).dimension());
}

void write_audit_csv(std::ostream& os, const GaussianPath& path, const CostModel& m, const WealthBreakdown& w) {
    const int n = path.num_periods();
    os.precision(17);
    os << "date,maturity,quantity,cash,residual\n";
    for (int j = -1; j < n; ++j) {
        for (int i = j + 1; i <= n; ++i) {
            const double q = w.quantity(j, i);
            os << j << ',' << i << ',' << q << ',' << cost(m, path.bond(j, i), q) << ','
               << w.residuals(j + 1) << '\n';
        }
    }
}

}  // namespace liqhedge
