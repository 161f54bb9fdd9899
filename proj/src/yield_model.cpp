#include "liqhedge/yield_model.hpp"

#include <stdexcept>
#include <string>

namespace liqhedge {

void VasicekParams::validate() const {
    if (!(mean_reversion > 0.0))
        throw std::invalid_argument("mean_reversion must be positive");
    if (!(volatility >= 0.0))
        throw std::invalid_argument("volatility must be non-negative");
    if (!std::isfinite(long_run_level) || !std::isfinite(initial_rate))
        throw std::invalid_argument("rates must be finite");
}

TenorStructure::TenorStructure(double agreement_date, std::vector<double> dates)
    : agreement_(agreement_date), dates_(std::move(dates)) {
    if (dates_.size() < 2)
        throw std::invalid_argument("tenor needs at least T_0 and T_1");
    if (agreement_ > dates_.front())
        throw std::invalid_argument("agreement date must not exceed T_0");
    for (std::size_t i = 1; i < dates_.size(); ++i) {
        if (!(dates_[i] > dates_[i - 1]))
            throw std::invalid_argument("tenor dates must be strictly increasing (index " +
                                        std::to_string(i) + ")");
    }
}

TenorStructure TenorStructure::annual(int num_periods) {
    if (num_periods < 1) throw std::invalid_argument("num_periods must be >= 1");
    std::vector<double> dates(static_cast<std::size_t>(num_periods) + 1);
    for (int i = 0; i <= num_periods; ++i) dates[static_cast<std::size_t>(i)] = 1.0 + i;
    return TenorStructure(0.0, std::move(dates));
}

AffineBond affine_bond(const VasicekParams& p, double tau) {
    const double a = p.mean_reversion;
    const double s = p.volatility;
    const double b = detail::bond_duration_factor(a, tau);
    return {(p.long_run_level - s * s / (2 * a * a)) * (tau - b) + s * s * b * b / (4 * a), b};
}

double transition_stddev(const VasicekParams& p, double eta) {
    const double a = p.mean_reversion;
    return p.volatility * std::sqrt(-std::expm1(-2.0 * a * eta) / (2.0 * a));
}

double advance_rate(const VasicekParams& p, double r_prev, double eta, double g) {
    const double decay = std::exp(-p.mean_reversion * eta);
    return p.long_run_level + decay * (r_prev - p.long_run_level) + g * transition_stddev(p, eta);
}

double forward_rate(double b_near, double b_far, double t_begin, double t_end) {
    if (!(b_far > 0.0)) throw std::invalid_argument("forward_rate: far bond price must be positive");
    if (!(t_end > t_begin)) throw std::invalid_argument("forward_rate: empty accrual period");
    return (b_near / b_far - 1.0) / (t_end - t_begin);
}

double at_the_money_rate(const VasicekParams& p, const TenorStructure& tenor) {
    const double t = tenor.agreement_date();
    const int n = tenor.num_periods();
    double annuity = 0.0;
    for (int i = 1; i <= n; ++i)
        annuity += tenor.accrual(i) * bond_price(p, p.initial_rate, tenor.date(i) - t);
    const double first = bond_price(p, p.initial_rate, tenor.date(0) - t);
    const double last = bond_price(p, p.initial_rate, tenor.date(n) - t);
    return (first - last) / annuity;
}

double swap_payoff(double fixed_rate, double accrual, double b_prev) {
    if (!(b_prev > 0.0)) throw std::invalid_argument("swap_payoff: bond price must be positive");
    return fixed_rate * accrual - 1.0 / b_prev + 1.0;
}

RateLoadings rate_loadings(const VasicekParams& p, const TenorStructure& tenor) {
    const int n = tenor.num_periods();
    RateLoadings out{Eigen::VectorXd(n + 1), Eigen::MatrixXd::Zero(n + 1, n + 1)};
    double prev_mean = p.initial_rate;
    for (int k = 0; k <= n; ++k) {
        const double eta = tenor.accrual(k);
        const double decay = std::exp(-p.mean_reversion * eta);
        out.mean(k) = p.long_run_level + decay * (prev_mean - p.long_run_level);
        if (k > 0) out.loading.row(k).head(k) = decay * out.loading.row(k - 1).head(k);
        out.loading(k, k) = transition_stddev(p, eta);
        prev_mean = out.mean(k);
    }
    return out;
}

SwapSpec make_atm_swap(const VasicekParams& p, const TenorStructure& tenor) {
    return SwapSpec{tenor, at_the_money_rate(p, tenor), 1.0};
}

}  // namespace liqhedge
