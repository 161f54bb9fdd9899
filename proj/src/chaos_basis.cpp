#include "liqhedge/chaos_basis.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace liqhedge {

namespace {

void append_with_degree(int num_vars, int remaining, MultiIndex& prefix, std::vector<MultiIndex>& out) {
    if (static_cast<int>(prefix.size()) == num_vars - 1) {
        prefix.push_back(remaining);
        out.push_back(prefix);
        prefix.pop_back();
        return;
    }
    for (int first = remaining; first >= 0; --first) {
        prefix.push_back(first);
        append_with_degree(num_vars, remaining - first, prefix, out);
        prefix.pop_back();
    }
}

}  // namespace

std::vector<MultiIndex> enumerate_multiindices(int num_vars, int d) {
    if (d < 0) throw std::invalid_argument("enumerate_multiindices: negative degree");
    if (num_vars < 0) throw std::invalid_argument("enumerate_multiindices: negative variable count");
    std::vector<MultiIndex> out;
    if (num_vars == 0) {
        out.emplace_back();
        return out;
    }
    out.reserve(static_cast<std::size_t>(multiindex_count(num_vars, d)));
    MultiIndex prefix;
    prefix.reserve(static_cast<std::size_t>(num_vars));
    for (int k = 0; k <= d; ++k) append_with_degree(num_vars, k, prefix, out);
    return out;
}

std::int64_t multiindex_count(int num_vars, int d) {
    // C(num_vars + d, d), exact at every partial product
    std::int64_t c = 1;
    for (int k = 1; k <= d; ++k) c = c * (num_vars + k) / k;
    return c;
}

void TruncationScheme::validate() const {
    if (degree < 0) throw std::invalid_argument("truncation degree must be >= 0");
    if (num_periods < 1) throw std::invalid_argument("num_periods must be >= 1");
    if (memory && *memory < 0) throw std::invalid_argument("memory must be >= 0");
}

int TruncationScheme::num_variables(int date) const {
    if (date < 0) return 0;
    if (memory) return std::min(date, *memory) + 1;
    return date + 1;
}

StrategyLayout::StrategyLayout(const TruncationScheme& scheme) : scheme_(scheme) {
    scheme_.validate();
    const int n = scheme_.num_periods;
    indices_.reserve(static_cast<std::size_t>(n));
    for (int j = -1; j <= n - 2; ++j)
        indices_.push_back(enumerate_multiindices(scheme_.num_variables(j), j < 0 ? 0 : scheme_.degree));
    // indices(N-1) is never used by a block but keeps indices(date) valid for every trading date
    indices_.push_back(enumerate_multiindices(scheme_.num_variables(n - 1), scheme_.degree));

    block_lookup_.assign(static_cast<std::size_t>((n + 1) * (n + 1)), static_cast<std::size_t>(-1));
    Eigen::Index offset = 0;
    for (int j = -1; j <= n - 2; ++j) {
        const auto size = static_cast<Eigen::Index>(indices(j).size());
        for (int i = j + 1; i <= n - 1; ++i) {
            block_lookup_[static_cast<std::size_t>((j + 1) * (n + 1) + i)] = blocks_.size();
            blocks_.push_back({j, i, offset, size});
            offset += size;
        }
    }
    dimension_ = offset;
}

const StrategyLayout::Block& StrategyLayout::block(int date, int maturity) const {
    const int n = scheme_.num_periods;
    if (date < -1 || maturity <= date || maturity > n - 1)
        throw std::out_of_range("strategy block (" + std::to_string(date) + ", " +
                                std::to_string(maturity) + ") out of range");
    return blocks_[block_lookup_[static_cast<std::size_t>((date + 1) * (n + 1) + maturity)]];
}

std::int64_t StrategyLayout::dimension_formula(const TruncationScheme& scheme) {
    const int n = scheme.num_periods;
    std::int64_t p = n;  // j = -1: N legs, one constant each
    for (int j = 0; j <= n - 2; ++j)
        p += static_cast<std::int64_t>(n - 1 - j) * multiindex_count(scheme.num_variables(j), scheme.degree);
    return p;
}

std::vector<Eigen::VectorXd> StrategyLayout::unflatten(const Coefficients& alpha) const {
    if (alpha.size() != dimension_) throw std::invalid_argument("unflatten: dimension mismatch");
    std::vector<Eigen::VectorXd> out;
    out.reserve(blocks_.size());
    for (const auto& b : blocks_) out.emplace_back(alpha.segment(b.offset, b.size));
    return out;
}

Coefficients StrategyLayout::flatten(const std::vector<Eigen::VectorXd>& blocks) const {
    if (blocks.size() != blocks_.size()) throw std::invalid_argument("flatten: block count mismatch");
    Coefficients alpha(dimension_);
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
        if (blocks[k].size() != blocks_[k].size) throw std::invalid_argument("flatten: block size mismatch");
        alpha.segment(blocks_[k].offset, blocks_[k].size) = blocks[k];
    }
    return alpha;
}

StrategyBasis::StrategyBasis(const TruncationScheme& scheme, const VasicekParams& params,
                             const TenorStructure& tenor)
    : layout_(scheme), full_history_(!scheme.memory) {
    if (tenor.num_periods() != scheme.num_periods)
        throw std::invalid_argument("tenor and truncation scheme disagree on N");
    const RateLoadings rates = rate_loadings(params, tenor);
    const int n = scheme.num_periods;
    maps_.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        VariableMap map;
        const int visible = scheme.num_variables(j);
        map.first_rate = j + 1 - visible;
        const Eigen::MatrixXd sel = rates.loading.block(map.first_rate, 0, visible, j + 1);
        if (full_history_) {
            map.whitening = Eigen::MatrixXd::Identity(visible, j + 1);
            map.rate_loading = sel;
        } else {
            // Gram-Schmidt on (R_{T_first}, ..., R_{T_j}) in L^2, oldest first
            const Eigen::MatrixXd cov = sel * sel.transpose();
            Eigen::LLT<Eigen::MatrixXd> llt(cov);
            if (llt.info() != Eigen::Success || (llt.matrixL().toDenseMatrix().diagonal().array() <= 0).any())
                throw std::invalid_argument("reduced strategy: degenerate rate covariance at date " +
                                            std::to_string(j));
            map.rate_loading = llt.matrixL();
            map.whitening = llt.matrixL().solve(sel);
        }
        maps_.push_back(std::move(map));
    }
}

Eigen::VectorXd StrategyBasis::visible_variables(int date, const Eigen::Ref<const Eigen::VectorXd>& draws) const {
    if (date < 0) return Eigen::VectorXd(0);
    if (full_history_) return draws.head(date + 1);
    return variable_map(date).whitening * draws.head(date + 1);
}

void StrategyBasis::basis_values_into(int date, const Eigen::Ref<const Eigen::VectorXd>& draws,
                                      Eigen::VectorXd& out) const {
    const auto& idx = layout_.indices(date);
    out.resize(static_cast<Eigen::Index>(idx.size()));
    if (date < 0) {
        out(0) = 1.0;
        return;
    }
    const int d = scheme().degree;
    const Eigen::VectorXd z = visible_variables(date, draws);
    Eigen::MatrixXd table(d + 1, z.size());
    for (Eigen::Index m = 0; m < z.size(); ++m) {
        auto col = table.col(m);
        normalized_hermite_table(d, z(m), col);
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
        double v = 1.0;
        for (std::size_t m = 0; m < idx[k].size(); ++m)
            if (idx[k][m] != 0) v *= table(idx[k][m], static_cast<Eigen::Index>(m));
        out(static_cast<Eigen::Index>(k)) = v;
    }
}

Eigen::VectorXd StrategyBasis::basis_values(int date, const Eigen::Ref<const Eigen::VectorXd>& draws) const {
    Eigen::VectorXd out;
    basis_values_into(date, draws, out);
    return out;
}

double StrategyBasis::strategy_quantity(const Coefficients& alpha, int date, int maturity,
                                        const Eigen::Ref<const Eigen::VectorXd>& draws) const {
    if (alpha.size() != layout_.dimension())
        throw std::invalid_argument("strategy_quantity: coefficient dimension mismatch");
    const auto& b = layout_.block(date, maturity);
    return alpha.segment(b.offset, b.size).dot(basis_values(date, draws));
}

// ---------------------------------------------------------------------------

std::string strategy_to_json(const TruncationScheme& scheme, const Coefficients& alpha) {
    nlohmann::json doc;
    doc["N"] = scheme.num_periods;
    doc["d"] = scheme.degree;
    doc["q"] = scheme.memory ? nlohmann::json(*scheme.memory) : nlohmann::json(nullptr);
    doc["coefficients"] = std::vector<double>(alpha.data(), alpha.data() + alpha.size());
    return doc.dump();
}

std::pair<TruncationScheme, Coefficients> strategy_from_json(const std::string& text) {
    const auto doc = nlohmann::json::parse(text);
    TruncationScheme scheme;
    scheme.num_periods = doc.at("N").get<int>();
    scheme.degree = doc.at("d").get<int>();
    if (doc.contains("q") && !doc.at("q").is_null()) scheme.memory = doc.at("q").get<int>();
    const auto values = doc.at("coefficients").get<std::vector<double>>();
    const StrategyLayout layout(scheme);
    if (static_cast<Eigen::Index>(values.size()) != layout.dimension())
        throw std::invalid_argument("strategy JSON: expected " + std::to_string(layout.dimension()) +
                                    " coefficients, got " + std::to_string(values.size()));
    return {scheme, Eigen::Map<const Eigen::VectorXd>(values.data(), layout.dimension())};
}

std::string strategy_to_csv(const StrategyLayout& layout, const Coefficients& alpha) {
    const auto& scheme = layout.scheme();
    std::ostringstream os;
    os.precision(17);
    os << "# N=" << scheme.num_periods << "\n# d=" << scheme.degree << "\n# q="
       << (scheme.memory ? std::to_string(*scheme.memory) : std::string("full")) << '\n';
    os << "index,date,maturity,multi_index,value\n";
    for (const auto& b : layout.blocks()) {
        const auto& idx = layout.indices(b.date);
        for (Eigen::Index k = 0; k < b.size; ++k) {
            os << b.offset + k << ',' << b.date << ',' << b.maturity << ',';
            const auto& n = idx[static_cast<std::size_t>(k)];
            for (std::size_t m = 0; m < n.size(); ++m) os << (m ? ":" : "") << n[m];
            if (n.empty()) os << '0';
            os << ',' << alpha(b.offset + k) << '\n';
        }
    }
    return os.str();
}

std::pair<TruncationScheme, Coefficients> strategy_from_csv(const std::string& text) {
    TruncationScheme scheme;
    std::istringstream is(text);
    std::string line;
    std::vector<double> values;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = line.substr(2, eq - 2);
            const std::string value = line.substr(eq + 1);
            if (key == "N") scheme.num_periods = std::stoi(value);
            else if (key == "d") scheme.degree = std::stoi(value);
            else if (key == "q") {
                if (value == "full") scheme.memory.reset();
                else scheme.memory = std::stoi(value);
            }
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        const auto comma = line.rfind(',');
        values.push_back(std::stod(line.substr(comma + 1)));
    }
    const StrategyLayout layout(scheme);
    if (static_cast<Eigen::Index>(values.size()) != layout.dimension())
        throw std::invalid_argument("strategy CSV: coefficient count does not match header");
    return {scheme, Eigen::Map<const Eigen::VectorXd>(values.data(), layout.dimension())};
}

}  // namespace liqhedge
