#ifndef LIQHEDGE_OPTIMIZER_HPP
#define LIQHEDGE_OPTIMIZER_HPP

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "liqhedge/chaos_basis.hpp"
#include "liqhedge/hedging_engine.hpp"
#include "liqhedge/parallel.hpp"

namespace liqhedge {

/// rho_gamma = v1 / (v2 + gamma)^beta.
struct PowerLawSchedule {
    double v1 = 1.0;
    double v2 = 0.0;
    double beta = 1.0;
    bool operator==(const PowerLawSchedule&) const = default;
};

/// rho_gamma = v1. Does not satisfy sum rho^2 < inf; kept for the constant-step study.
struct ConstantSchedule {
    double v1 = 1.0;
    bool operator==(const ConstantSchedule&) const = default;
};

using StepSchedule = std::variant<PowerLawSchedule, ConstantSchedule>;

void validate(const StepSchedule& schedule);

/// Step size for gamma >= 1.
double rho(const StepSchedule& schedule, std::int64_t gamma);

/// True when sum rho = inf and sum rho^2 < inf.
bool satisfies_step_conditions(const StepSchedule& schedule);

/// K_l = { alpha : |alpha|_inf <= base_radius * growth^l }.
struct CompactFamily {
    double base_radius = 10.0;
    double growth = 2.0;

    double radius(int level) const;
    bool contains(const Eigen::Ref<const Eigen::VectorXd>& alpha, int level) const;
    void validate() const;
};

struct TrajectoryPoint {
    std::int64_t step;
    int compact;
    std::int64_t reinitializations;
    Coefficients alpha;
};

struct OptimizerState {
    Coefficients initial;
    Coefficients alpha;
    std::int64_t step = 0;
    int compact = 0;
    std::int64_t reinitializations = 0;
    std::vector<TrajectoryPoint> trajectory;

    static OptimizerState start(const Coefficients& alpha0, const CompactFamily& compacts);
};

/// One Robbins-Monro update with reinitialization on leaving K_l.
void step(OptimizerState& state, const Eigen::Ref<const Eigen::VectorXd>& grad, const StepSchedule& schedule,
          const CompactFamily& compacts);

/// Fresh-sample gradient of S(W) at alpha; writes into grad.
using GradientOracle = std::function<void(const Coefficients& alpha, RandomEngine& rng, Eigen::VectorXd& grad)>;

/// Gradient oracle for a hedging problem: one new path per call.
GradientOracle make_hedging_oracle(const StrategyBasis& basis, const PathSimulator& simulator, const CostModel& m,
                                   Objective s = Objective::quadratic());

struct RunOptions {
    /// Record alpha every `decimation` steps (0 disables the log).
    std::int64_t decimation = 1000;
    /// Called after step gamma for each gamma listed (ascending).
    std::vector<std::int64_t> checkpoints;
    std::function<void(const OptimizerState&)> on_checkpoint;
};

OptimizerState run(const Coefficients& alpha0, std::int64_t steps, const GradientOracle& oracle,
                   const StepSchedule& schedule, const CompactFamily& compacts, RandomEngine& rng,
                   const RunOptions& options = {});

/// Continues an existing state for `steps` more iterations.
void resume(OptimizerState& state, std::int64_t steps, const GradientOracle& oracle, const StepSchedule& schedule,
            const CompactFamily& compacts, RandomEngine& rng, const RunOptions& options = {});

}  // namespace liqhedge

#endif
