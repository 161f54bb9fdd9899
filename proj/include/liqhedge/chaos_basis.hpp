#ifndef LIQHEDGE_CHAOS_BASIS_HPP
#define LIQHEDGE_CHAOS_BASIS_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "liqhedge/yield_model.hpp"

namespace liqhedge {

/// Probabilists' Hermite polynomial He_n(x) by the three-term recurrence.
template <typename Scalar>
Scalar hermite(int n, Scalar x) {
    if (n < 0) throw std::invalid_argument("hermite: negative order");
    if (n == 0) return Scalar(1);
    Scalar prev = Scalar(1);
    Scalar cur = x;
    for (int k = 1; k < n; ++k) {
        Scalar next = x * cur - Scalar(k) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

/// He_0(x)/sqrt(0!), ..., He_d(x)/sqrt(d!) written into out[0..d].
template <typename Scalar, typename Derived>
void normalized_hermite_table(int d, Scalar x, Eigen::DenseBase<Derived>& out) {
    out(0) = Scalar(1);
    if (d == 0) return;
    out(1) = x;
    // He_{k+1}/sqrt((k+1)!) = (x He_k/sqrt(k!) - sqrt(k) He_{k-1}/sqrt((k-1)!)) / sqrt(k+1)
    for (int k = 1; k < d; ++k) {
        using std::sqrt;
        out(k + 1) = (x * out(k) - sqrt(Scalar(k)) * out(k - 1)) / sqrt(Scalar(k + 1));
    }
}

using MultiIndex = std::vector<int>;

inline int degree(const MultiIndex& n) {
    int s = 0;
    for (int v : n) s += v;
    return s;
}

/// All multi-indices of length num_vars with total degree <= d, graded,
/// and within each degree ordered lexicographically descending:
/// (0,0) (1,0) (0,1) (2,0) (1,1) (0,2) ...
std::vector<MultiIndex> enumerate_multiindices(int num_vars, int d);

/// C(n + k, k) without overflow for the small sizes used here.
std::int64_t multiindex_count(int num_vars, int d);

/// Product of normalized Hermite values prod_m He_{n_m}(g_m) / sqrt(n_m!).
template <typename Derived>
typename Derived::Scalar basis_eval(const MultiIndex& n, const Eigen::MatrixBase<Derived>& g) {
    using Scalar = typename Derived::Scalar;
    if (static_cast<Eigen::Index>(n.size()) != g.size())
        throw std::invalid_argument("basis_eval: multi-index and draw vector differ in length");
    Scalar out(1);
    for (std::size_t m = 0; m < n.size(); ++m) {
        out *= hermite<Scalar>(n[m], g(static_cast<Eigen::Index>(m))) /
               Scalar(std::sqrt(std::tgamma(n[m] + 1.0)));
    }
    return out;
}

/// Degree d, number of periods N and the optional memory q of reduced strategies.
struct TruncationScheme {
    int degree = 1;
    int num_periods = 2;
    std::optional<int> memory;

    void validate() const;
    /// Number of Gaussian variables visible at date index j (0 for j = -1).
    int num_variables(int date) const;
    bool operator==(const TruncationScheme&) const = default;
};

/// Coefficient vector alpha. Layout: blocks ordered by trading date j
/// ascending (-1 first), then maturity i ascending, each block holding one
/// coefficient per multi-index of Lambda^(j) in graded-lex order.
using Coefficients = Eigen::VectorXd;

class StrategyLayout {
public:
    struct Block {
        int date;
        int maturity;
        Eigen::Index offset;
        Eigen::Index size;
    };

    explicit StrategyLayout(const TruncationScheme& scheme);

    const TruncationScheme& scheme() const { return scheme_; }
    int num_periods() const { return scheme_.num_periods; }
    Eigen::Index dimension() const { return dimension_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    const Block& block(int date, int maturity) const;
    /// Lambda^(j); for j = -1 the single empty index.
    const std::vector<MultiIndex>& indices(int date) const {
        return indices_[static_cast<std::size_t>(date + 1)];
    }

    /// Closed form sum_{j=-1}^{N-2} (N-1-j) |Lambda^(j)|.
    static std::int64_t dimension_formula(const TruncationScheme& scheme);

    /// Coefficient blocks as a (date, maturity) keyed list of vectors.
    std::vector<Eigen::VectorXd> unflatten(const Coefficients& alpha) const;
    Coefficients flatten(const std::vector<Eigen::VectorXd>& blocks) const;

private:
    TruncationScheme scheme_;
    std::vector<std::vector<MultiIndex>> indices_;
    std::vector<Block> blocks_;
    std::vector<std::size_t> block_lookup_;  // (date+1) * (N+1) + maturity -> blocks_ index
    Eigen::Index dimension_ = 0;
};

/// Linear map from the draws G^(0..j) to the orthonormal variables visible at
/// date j, and the loadings of the visible rates on those variables.
struct VariableMap {
    Eigen::MatrixXd whitening;     // visible x (j + 1): Z = whitening * G
    Eigen::MatrixXd rate_loading;  // visible x visible: R_sel - E R_sel = rate_loading * Z
    int first_rate = 0;            // R_sel = (R_{T_first}, ..., R_{T_j})
};

/// Layout plus the model-dependent variable maps; evaluates pi(j, i).
class StrategyBasis {
public:
    StrategyBasis(const TruncationScheme& scheme, const VasicekParams& params,
                  const TenorStructure& tenor);

    const StrategyLayout& layout() const { return layout_; }
    const TruncationScheme& scheme() const { return layout_.scheme(); }
    const VariableMap& variable_map(int date) const { return maps_[static_cast<std::size_t>(date)]; }

    /// Orthonormal variables visible at date j (identity on G for full history).
    Eigen::VectorXd visible_variables(int date, const Eigen::Ref<const Eigen::VectorXd>& draws) const;

    /// Basis values over Lambda^(j) in layout order.
    Eigen::VectorXd basis_values(int date, const Eigen::Ref<const Eigen::VectorXd>& draws) const;
    void basis_values_into(int date, const Eigen::Ref<const Eigen::VectorXd>& draws,
                           Eigen::VectorXd& out) const;

    /// pi(j, i) for -1 <= j < i <= N-1.
    double strategy_quantity(const Coefficients& alpha, int date, int maturity,
                             const Eigen::Ref<const Eigen::VectorXd>& draws) const;

private:
    StrategyLayout layout_;
    std::vector<VariableMap> maps_;
    bool full_history_;
};

/// Flat JSON document {"N", "d", "q", "coefficients"}.
std::string strategy_to_json(const TruncationScheme& scheme, const Coefficients& alpha);
std::pair<TruncationScheme, Coefficients> strategy_from_json(const std::string& text);

/// CSV: "# N=..", "# d=..", "# q=.." header lines, then "index,date,maturity,multi_index,value".
std::string strategy_to_csv(const StrategyLayout& layout, const Coefficients& alpha);
std::pair<TruncationScheme, Coefficients> strategy_from_csv(const std::string& text);

}  // namespace liqhedge

#endif
