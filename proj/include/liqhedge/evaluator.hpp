#ifndef LIQHEDGE_EVALUATOR_HPP
#define LIQHEDGE_EVALUATOR_HPP

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "liqhedge/chaos_basis.hpp"
#include "liqhedge/hedging_engine.hpp"
#include "liqhedge/liquidity.hpp"

namespace liqhedge {

/// Monte Carlo estimate of a second moment.
struct EvalReport {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t num_samples = 0;
    double ci99_half_width = 0.0;
};

struct SamplingOptions {
    std::int64_t num_samples = 1'000'000;
    std::uint64_t seed = 1;
    int workers = 1;
};

/// Paths per random sub-stream. Results depend on it, never on the worker count.
inline constexpr std::int64_t kPathsPerBatch = 4096;

/// Generic estimator of E[f(path)^2]; f receives a per-batch workspace.
EvalReport estimate_second_moment(const PathSimulator& simulator, const SamplingOptions& options,
                                  const std::function<double(const GaussianPath&, CascadeWorkspace*)>& wealth,
                                  const StrategyBasis* basis = nullptr);

/// v(alpha) = E[(W^alpha)^2].
EvalReport estimate_v(const StrategyBasis& basis, const PathSimulator& simulator, const Coefficients& alpha,
                      const CostModel& m, const SamplingOptions& options);

/// X = exp(mu + sum_m loading_m G^(m)).
struct LogNormalSpec {
    double mu = 0.0;
    Eigen::VectorXd loadings;
};

/// Chaos coefficients of X over total degree <= d, in enumerate_multiindices order:
/// exp(mu + |lambda|^2 / 2) prod_m lambda_m^{n_m} / sqrt(n_m!).
Eigen::VectorXd project_lognormal(const LogNormalSpec& spec, int d);

/// |X - X^d|_2^2 = exp(2 mu + s) sum_{K > d} s^K / K!, s = |lambda|^2.
double tail_norm_exact(const LogNormalSpec& spec, int d);

/// Upper bound exp(mu + s) s^{(d+1)/2} / sqrt((d+1)!) on |X - X^d|_2.
double truncation_bound(const LogNormalSpec& spec, int d);

/// Degree-d chaos projection of the exact replication strategy in a liquid market.
Coefficients optimal_truncated_strategy(const StrategyBasis& basis, const VasicekParams& params,
                                        const SwapSpec& swap);

/// Exact minimiser of the sample mean of W^2 when W is affine in alpha
/// (perfect liquidity), via the normal equations.
struct LeastSquaresFit {
    Coefficients alpha;
    double value;  // in-sample mean of W^2 at alpha
};
LeastSquaresFit least_squares_optimum(const StrategyBasis& basis, const PathSimulator& simulator,
                                      const SamplingOptions& options);

}  // namespace liqhedge

#endif
