#include "liqhedge/optimizer.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace liqhedge {

void validate(const StepSchedule& schedule) {
    if (const auto* p = std::get_if<PowerLawSchedule>(&schedule)) {
        if (!(p->v1 > 0.0)) throw std::invalid_argument("schedule v1 must be positive");
        if (!(p->v2 >= 0.0)) throw std::invalid_argument("schedule v2 must be >= 0");
        if (!(p->beta > 0.0)) throw std::invalid_argument("schedule beta must be positive");
    } else {
        if (!(std::get<ConstantSchedule>(schedule).v1 > 0.0))
            throw std::invalid_argument("schedule v1 must be positive");
    }
}

double rho(const StepSchedule& schedule, std::int64_t gamma) {
    if (gamma < 1) throw std::invalid_argument("rho: gamma must be >= 1");
    if (const auto* p = std::get_if<PowerLawSchedule>(&schedule))
        return p->v1 / std::pow(p->v2 + static_cast<double>(gamma), p->beta);
    return std::get<ConstantSchedule>(schedule).v1;
}

bool satisfies_step_conditions(const StepSchedule& schedule) {
    const auto* p = std::get_if<PowerLawSchedule>(&schedule);
    return p && p->beta > 0.5 && p->beta <= 1.0;
}

double CompactFamily::radius(int level) const { return base_radius * std::pow(growth, level); }

bool CompactFamily::contains(const Eigen::Ref<const Eigen::VectorXd>& alpha, int level) const {
    return alpha.size() == 0 || alpha.cwiseAbs().maxCoeff() <= radius(level);
}

void CompactFamily::validate() const {
    if (!(base_radius > 0.0)) throw std::invalid_argument("compact base radius must be positive");
    if (!(growth > 1.0)) throw std::invalid_argument("compact growth factor must exceed 1");
}

OptimizerState OptimizerState::start(const Coefficients& alpha0, const CompactFamily& compacts) {
    compacts.validate();
    OptimizerState s;
    s.initial = alpha0;
    s.alpha = alpha0;
    while (!compacts.contains(alpha0, s.compact)) ++s.compact;
    return s;
}

void step(OptimizerState& state, const Eigen::Ref<const Eigen::VectorXd>& grad, const StepSchedule& schedule,
          const CompactFamily& compacts) {
    if (grad.size() != state.alpha.size()) throw std::invalid_argument("step: gradient dimension mismatch");
    if (!grad.allFinite()) throw std::runtime_error("step: non-finite gradient at step " + std::to_string(state.step + 1));
    const double r = rho(schedule, state.step + 1);
    state.alpha.noalias() -= r * grad;
    ++state.step;
    if (!compacts.contains(state.alpha, state.compact)) {
        state.alpha = state.initial;
        ++state.compact;
        ++state.reinitializations;
    }
}

GradientOracle make_hedging_oracle(const StrategyBasis& basis, const PathSimulator& simulator, const CostModel& m,
                                   Objective s) {
    struct Buffers {
        CascadeWorkspace ws;
        GaussianPath path;
    };
    auto buffers = std::make_shared<Buffers>(Buffers{CascadeWorkspace(basis), GaussianPath{}});
    return [&basis, &simulator, m, s = std::move(s), buffers](const Coefficients& alpha, RandomEngine& rng,
                                                              Eigen::VectorXd& grad) {
        simulator.sample(rng, buffers->path);
        buffers->ws.load(basis, alpha, buffers->path);
        const double w = buffers->ws.solve(buffers->path, m);
        grad.resize(alpha.size());
        buffers->ws.gradient(basis, buffers->path, m, grad);
        grad *= s.derivative(w);
    };
}

void resume(OptimizerState& state, std::int64_t steps, const GradientOracle& oracle, const StepSchedule& schedule,
            const CompactFamily& compacts, RandomEngine& rng, const RunOptions& options) {
    validate(schedule);
    Eigen::VectorXd grad(state.alpha.size());
    auto checkpoint = options.checkpoints.begin();
    while (checkpoint != options.checkpoints.end() && *checkpoint <= state.step) ++checkpoint;
    const std::int64_t last = state.step + steps;
    while (state.step < last) {
        oracle(state.alpha, rng, grad);
        step(state, grad, schedule, compacts);
        if (options.decimation > 0 && state.step % options.decimation == 0)
            state.trajectory.push_back({state.step, state.compact, state.reinitializations, state.alpha});
        if (checkpoint != options.checkpoints.end() && *checkpoint == state.step) {
            if (options.on_checkpoint) options.on_checkpoint(state);
            ++checkpoint;
        }
    }
}

OptimizerState run(const Coefficients& alpha0, std::int64_t steps, const GradientOracle& oracle,
                   const StepSchedule& schedule, const CompactFamily& compacts, RandomEngine& rng,
                   const RunOptions& options) {
    if (steps < 1) throw std::invalid_argument("run: number of steps must be >= 1");
    OptimizerState state = OptimizerState::start(alpha0, compacts);
    if (options.decimation > 0) state.trajectory.push_back({0, state.compact, 0, state.alpha});
    resume(state, steps, oracle, schedule, compacts, rng, options);
    return state;
}

}  // namespace liqhedge
