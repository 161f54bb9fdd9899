#ifndef LIQHEDGE_YIELD_MODEL_HPP
#define LIQHEDGE_YIELD_MODEL_HPP

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace liqhedge {

/// One-factor Vasicek short rate, dR = A (r_inf - R) dt + sigma dB.
struct VasicekParams {
    double mean_reversion = 0.10;  // A, 1/year
    double long_run_level = 0.05;  // r_inf
    double volatility = 0.05;      // sigma
    double initial_rate = 0.05;    // R_t at the agreement date

    void validate() const;
    bool operator==(const VasicekParams&) const = default;
};

/// Agreement date t followed by the payment dates T_0 < ... < T_N.
class TenorStructure {
public:
    TenorStructure(double agreement_date, std::vector<double> dates);

    /// t = 0, T_i = 1 + i for i = 0..N.
    static TenorStructure annual(int num_periods);

    int num_periods() const { return static_cast<int>(dates_.size()) - 1; }
    double agreement_date() const { return agreement_; }
    const std::vector<double>& dates() const { return dates_; }

    /// T_k with T_{-1} = t.
    double date(int k) const { return k < 0 ? agreement_ : dates_[static_cast<std::size_t>(k)]; }
    /// T_k - T_{k-1}; for k = 0 this is T_0 - t.
    double accrual(int k) const { return date(k) - date(k - 1); }

    bool operator==(const TenorStructure&) const = default;

private:
    double agreement_;
    std::vector<double> dates_;
};

struct SwapSpec {
    TenorStructure tenor;
    double fixed_rate;
    double notional = 1.0;
};

namespace detail {

template <typename Scalar>
Scalar bond_duration_factor(Scalar a, Scalar tau) {
    using std::exp;
    using std::expm1;
    return -expm1(-a * tau) / a;
}

}  // namespace detail

/// Affine zero-coupon price exp(-a(tau) - b(tau) r).
template <typename Scalar>
Scalar bond_price(const VasicekParams& p, Scalar r, Scalar tau) {
    using std::exp;
    const Scalar a = p.mean_reversion;
    const Scalar s = p.volatility;
    const Scalar b = detail::bond_duration_factor(a, tau);
    const Scalar level = (p.long_run_level - s * s / (2 * a * a)) * (tau - b) + s * s * b * b / (4 * a);
    return exp(-level - b * r);
}

inline double bond_price(const VasicekParams& p, double r, double tau) { return bond_price<double>(p, r, tau); }

/// Coefficients (a, b) with B = exp(-a - b r).
struct AffineBond {
    double a;
    double b;
};
AffineBond affine_bond(const VasicekParams& p, double tau);

/// Exact OU transition over eta with standard normal g. eta = 0 returns r_prev.
double advance_rate(const VasicekParams& p, double r_prev, double eta, double g);

/// Conditional standard deviation of the transition over eta.
double transition_stddev(const VasicekParams& p, double eta);

/// Simple forward rate (b_near / b_far - 1) / (t_end - t_begin).
double forward_rate(double b_near, double b_far, double t_begin, double t_end);

/// Fixed rate giving the swap zero value at t on the perfect-liquidity curve.
double at_the_money_rate(const VasicekParams& p, const TenorStructure& tenor);

/// Receiver coupon r * accrual - 1 / b_prev + 1 at T_i, with b_prev = B(T_{i-1}, T_i).
double swap_payoff(double fixed_rate, double accrual, double b_prev);

/// Gaussian representation of the rates on the tenor dates:
/// R_{T_k} = mean(k) + sum_{m <= k} loading(k, m) G^(m).
struct RateLoadings {
    Eigen::VectorXd mean;     // size N + 1
    Eigen::MatrixXd loading;  // (N + 1) x (N + 1), lower triangular
};
RateLoadings rate_loadings(const VasicekParams& p, const TenorStructure& tenor);

/// SwapSpec at the at-the-money fixed rate.
SwapSpec make_atm_swap(const VasicekParams& p, const TenorStructure& tenor);

}  // namespace liqhedge

#endif
