#include "liqhedge/evaluator.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "liqhedge/parallel.hpp"

namespace liqhedge {

namespace {

struct Moments {
    std::int64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }

    void merge(const Moments& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double total = static_cast<double>(n + o.n);
        const double delta = o.mean - mean;
        mean += delta * static_cast<double>(o.n) / total;
        m2 += o.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(o.n) / total;
        n += o.n;
    }
};

std::size_t batch_count(std::int64_t samples) {
    return static_cast<std::size_t>((samples + kPathsPerBatch - 1) / kPathsPerBatch);
}

std::int64_t batch_size(std::size_t b, std::int64_t samples) {
    const std::int64_t start = static_cast<std::int64_t>(b) * kPathsPerBatch;
    return std::min(kPathsPerBatch, samples - start);
}

}  // namespace

EvalReport estimate_second_moment(const PathSimulator& simulator, const SamplingOptions& options,
                                  const std::function<double(const GaussianPath&, CascadeWorkspace*)>& wealth,
                                  const StrategyBasis* basis) {
    if (options.num_samples < 2) throw std::invalid_argument("estimate: need at least two samples");
    const std::size_t batches = batch_count(options.num_samples);
    std::vector<Moments> partial(batches);
    parallel_for(batches, options.workers, [&](std::size_t b) {
        RandomEngine rng = make_stream(options.seed, b);
        GaussianPath path;
        std::unique_ptr<CascadeWorkspace> ws;
        if (basis) ws = std::make_unique<CascadeWorkspace>(*basis);
        Moments m;
        const std::int64_t count = batch_size(b, options.num_samples);
        for (std::int64_t k = 0; k < count; ++k) {
            simulator.sample(rng, path);
            const double w = wealth(path, ws.get());
            m.push(w * w);
        }
        partial[b] = m;
    });
    Moments total;
    for (const auto& m : partial) total.merge(m);
    EvalReport r;
    r.num_samples = total.n;
    r.mean = total.mean;
    const double var = total.m2 / static_cast<double>(total.n - 1);
    r.std_error = std::sqrt(var / static_cast<double>(total.n));
    r.ci99_half_width = 2.5758293035489004 * r.std_error;
    return r;
}

EvalReport estimate_v(const StrategyBasis& basis, const PathSimulator& simulator, const Coefficients& alpha,
                      const CostModel& m, const SamplingOptions& options) {
    if (options.num_samples < 1000) throw std::invalid_argument("estimate_v: num_samples must be >= 1000");
    return estimate_second_moment(
        simulator, options,
        [&](const GaussianPath& path, CascadeWorkspace* ws) {
            ws->load(basis, alpha, path);
            return ws->solve(path, m);
        },
        &basis);
}

Eigen::VectorXd project_lognormal(const LogNormalSpec& spec, int d) {
    const auto vars = static_cast<int>(spec.loadings.size());
    const auto indices = enumerate_multiindices(vars, d);
    const double scale = std::exp(spec.mu + 0.5 * spec.loadings.squaredNorm());
    Eigen::VectorXd out(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) {
        double c = scale;
        for (int m = 0; m < vars; ++m) {
            const int e = indices[k][static_cast<std::size_t>(m)];
            c *= std::pow(spec.loadings(m), e) / std::sqrt(std::tgamma(e + 1.0));
        }
        out(static_cast<Eigen::Index>(k)) = c;
    }
    return out;
}

double tail_norm_exact(const LogNormalSpec& spec, int d) {
    if (d < 0) throw std::invalid_argument("tail_norm_exact: negative degree");
    const double s = spec.loadings.squaredNorm();
    if (s == 0.0) return 0.0;
    // s^K / K! from K = d + 1 on
    double term = 1.0;
    for (int k = 1; k <= d + 1; ++k) term *= s / k;
    double sum = 0.0;
    for (int k = d + 1; k < d + 10000; ++k) {
        sum += term;
        if (term < 1e-30 * sum) break;
        term *= s / (k + 1);
    }
    return std::exp(2.0 * spec.mu + s) * sum;
}

double truncation_bound(const LogNormalSpec& spec, int d) {
    if (d < 0) throw std::invalid_argument("truncation_bound: negative degree");
    const double s = spec.loadings.squaredNorm();
    return std::exp(spec.mu + s) * std::pow(s, 0.5 * (d + 1)) / std::sqrt(std::tgamma(d + 2.0));
}

Coefficients optimal_truncated_strategy(const StrategyBasis& basis, const VasicekParams& params,
                                        const SwapSpec& swap) {
    const auto& layout = basis.layout();
    const int n = layout.num_periods();
    if (swap.tenor.num_periods() != n) throw std::invalid_argument("swap and strategy disagree on N");
    Coefficients alpha = Coefficients::Zero(layout.dimension());
    // static legs at t
    alpha(layout.block(-1, 0).offset) = 1.0;
    for (int i = 1; i <= n - 1; ++i) alpha(layout.block(-1, i).offset) = -swap.fixed_rate * swap.tenor.accrual(i);
    // dynamic legs: 1/B(T_j, T_{j+1}) = exp(a + b R_{T_j}) projected on Lambda^(j)
    const RateLoadings rates = rate_loadings(params, swap.tenor);
    const int d = layout.scheme().degree;
    for (int j = 0; j <= n - 2; ++j) {
        const AffineBond ab = affine_bond(params, swap.tenor.accrual(j + 1));
        const VariableMap& map = basis.variable_map(j);
        LogNormalSpec spec;
        spec.mu = ab.a + ab.b * rates.mean(j);
        spec.loadings = ab.b * map.rate_loading.row(map.rate_loading.rows() - 1).transpose();
        const auto& blk = layout.block(j, j + 1);
        alpha.segment(blk.offset, blk.size) = project_lognormal(spec, d);
    }
    return alpha;
}

LeastSquaresFit least_squares_optimum(const StrategyBasis& basis, const PathSimulator& simulator,
                                      const SamplingOptions& options) {
    const Eigen::Index p = basis.layout().dimension();
    const CostModel liquid = CostModel::perfect();
    struct Partial {
        Eigen::MatrixXd gram;
        Eigen::VectorXd cross;
        double base = 0.0;
        std::int64_t n = 0;
    };
    const std::size_t batches = batch_count(options.num_samples);
    std::vector<Partial> partial(batches);
    const Coefficients zero = Coefficients::Zero(p);
    parallel_for(batches, options.workers, [&](std::size_t b) {
        RandomEngine rng = make_stream(options.seed, b);
        GaussianPath path;
        CascadeWorkspace ws(basis);
        Partial acc{Eigen::MatrixXd::Zero(p, p), Eigen::VectorXd::Zero(p), 0.0, 0};
        Eigen::VectorXd g(p);
        const std::int64_t count = batch_size(b, options.num_samples);
        for (std::int64_t k = 0; k < count; ++k) {
            simulator.sample(rng, path);
            ws.load(basis, zero, path);
            const double w0 = ws.solve(path, liquid);
            ws.gradient(basis, path, liquid, g);
            acc.gram.selfadjointView<Eigen::Lower>().rankUpdate(g);
            acc.cross += w0 * g;
            acc.base += w0 * w0;
            ++acc.n;
        }
        partial[b] = std::move(acc);
    });
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd cross = Eigen::VectorXd::Zero(p);
    double base = 0.0;
    std::int64_t n = 0;
    for (const auto& acc : partial) {
        gram += acc.gram;
        cross += acc.cross;
        base += acc.base;
        n += acc.n;
    }
    gram = gram.selfadjointView<Eigen::Lower>();
    const double inv_n = 1.0 / static_cast<double>(n);
    gram *= inv_n;
    cross *= inv_n;
    base *= inv_n;
    LeastSquaresFit fit;
    fit.alpha = -gram.ldlt().solve(cross);
    fit.value = base + 2.0 * cross.dot(fit.alpha) + fit.alpha.dot(gram * fit.alpha);
    return fit;
}

}  // namespace liqhedge
