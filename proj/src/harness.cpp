#include "liqhedge/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace liqhedge {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"table1",        "step-sweep",         "trajectory",
                                                "lambda-compare", "error-distribution", "threshold-surface",
                                                "init-compare",   "memory-sweep"};
    return names;
}

namespace {

std::vector<double> lambda_range(double first, double last, double step) {
    std::vector<double> out;
    const auto n = static_cast<int>(std::lround((last - first) / step));
    for (int k = 0; k <= n; ++k) out.push_back(std::round((first + k * step) * 1e12) / 1e12);
    return out;
}

}  // namespace

ExperimentConfig default_config(const std::string& experiment) {
    ExperimentConfig c;
    c.experiment = experiment;
    if (experiment == "table1") {
        c.periods = {2, 3};
        c.degrees = {0, 1, 2, 3, 4};
    } else if (experiment == "step-sweep") {
        c.inits = {"null"};
        c.schedules.clear();
        for (double v1 : {1.0, 10.0, 100.0, 1e3, 1e4, 2e4, 1e5, 1e6})
            c.schedules.push_back(PowerLawSchedule{v1, 1000.0, 0.6});
        c.steps = {10'000, 100'000, 1'000'000};
    } else if (experiment == "trajectory") {
        c.inits = {"null"};
        c.schedules = {PowerLawSchedule{1e7, 1.0, 1.0}, PowerLawSchedule{10.0, 1.0, 0.6}};
        c.steps = {10'000};
        c.samples = 10'000;
    } else if (experiment == "lambda-compare") {
        c.periods = {3};
        c.degrees = {3};
        c.cost.kind = "proportional";
        c.cost.lambdas = lambda_range(0.0, 0.09, 0.01);
        c.inits = {"optimal", "null"};
    } else if (experiment == "error-distribution") {
        c.periods = {3};
        c.degrees = {3};
        c.cost.kind = "proportional";
        c.cost.lambdas = lambda_range(0.0, 0.09, 0.01);
        c.schedules = {PowerLawSchedule{1.0, 1.0, 1.0}};
        c.steps = {10'000};
        c.replicas = 200;
        c.samples = 100'000;
    } else if (experiment == "threshold-surface") {
        c.periods = {3};
        c.degrees = {3};
        c.cost.kind = "threshold";
        c.cost.lambdas = lambda_range(0.01, 0.05, 0.01);
        c.cost.free_sizes = {0.0, 0.25, 0.5, 0.75, 1.0};
        c.schedules = {PowerLawSchedule{100.0, 100.0, 0.6}};
        c.steps = {0, 1'000'000};
        c.samples = 200'000;
    } else if (experiment == "init-compare") {
        c.periods = {3};
        c.degrees = {3};
        c.cost.kind = "proportional";
        c.cost.lambdas = lambda_range(0.01, 0.05, 0.01);
        c.inits = {"optimal", "null"};
        c.schedules = {PowerLawSchedule{0.1, 100.0, 0.6}};
        c.steps = {1'000'000};
        c.samples = 200'000;
    } else if (experiment == "memory-sweep") {
        c.periods = {5, 10};
        c.degrees = {3};
        c.memories = {0, 1, 2};
        c.cost.kind = "proportional";
        c.cost.lambdas = lambda_range(0.01, 0.05, 0.01);
        c.schedules = {PowerLawSchedule{0.1, 100.0, 0.6}};
        c.steps = {0, 1'000'000};
        c.samples = 100'000;
    } else {
        throw ConfigError("/experiment", "unknown experiment '" + experiment + "'");
    }
    return c;
}

// ---------------------------------------------------------------------------
// JSON reading with key paths

namespace {

std::string at(const std::string& path, std::string_view key) { return path + "/" + std::string(key); }
std::string at(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

void allow_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> keys) {
    if (!obj.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
    for (const auto& item : obj.items()) {
        if (std::find(keys.begin(), keys.end(), item.key()) == keys.end())
            throw ConfigError(at(path, item.key()), "unknown key");
    }
}

double read_double(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
    return x;
}

std::int64_t read_int(const json& j, const std::string& path) {
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) {
        const double x = j.get<double>();
        if (x == std::floor(x) && std::abs(x) < 9e18) return static_cast<std::int64_t>(x);
    }
    throw ConfigError(path, "expected an integer");
}

std::string read_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

template <typename F>
auto read_list(const json& j, const std::string& path, F item) {
    if (!j.is_array()) throw ConfigError(path, "expected an array");
    std::vector<decltype(item(j, path))> out;
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(item(j[k], at(path, k)));
    return out;
}

int read_small_int(const json& j, const std::string& path) {
    const std::int64_t v = read_int(j, path);
    if (v < -1'000'000 || v > 1'000'000) throw ConfigError(path, "out of range");
    return static_cast<int>(v);
}

StepSchedule read_schedule(const json& j, const std::string& path) {
    allow_keys(j, path, {"type", "v1", "v2", "beta"});
    const std::string type = j.contains("type") ? read_string(j["type"], at(path, "type")) : "power";
    if (type == "constant") {
        if (j.contains("v2") || j.contains("beta")) throw ConfigError(path, "constant schedule takes only v1");
        ConstantSchedule s;
        if (j.contains("v1")) s.v1 = read_double(j["v1"], at(path, "v1"));
        return s;
    }
    if (type != "power") throw ConfigError(at(path, "type"), "expected 'power' or 'constant'");
    PowerLawSchedule s;
    if (j.contains("v1")) s.v1 = read_double(j["v1"], at(path, "v1"));
    if (j.contains("v2")) s.v2 = read_double(j["v2"], at(path, "v2"));
    if (j.contains("beta")) s.beta = read_double(j["beta"], at(path, "beta"));
    return s;
}

void apply_document(const json& doc, ExperimentConfig& c) {
    allow_keys(doc, "", {"experiment", "model", "tenor", "periods", "degrees", "memories", "cost", "inits",
                         "schedules", "steps", "compacts", "replicas", "seed", "samples", "decimation", "workers",
                         "output"});
    if (doc.contains("model")) {
        const json& m = doc["model"];
        allow_keys(m, "/model", {"mean_reversion", "long_run_level", "volatility", "initial_rate"});
        if (m.contains("mean_reversion")) c.model.mean_reversion = read_double(m["mean_reversion"], "/model/mean_reversion");
        if (m.contains("long_run_level")) c.model.long_run_level = read_double(m["long_run_level"], "/model/long_run_level");
        if (m.contains("volatility")) c.model.volatility = read_double(m["volatility"], "/model/volatility");
        if (m.contains("initial_rate")) c.model.initial_rate = read_double(m["initial_rate"], "/model/initial_rate");
    }
    if (doc.contains("tenor")) {
        const json& t = doc["tenor"];
        allow_keys(t, "/tenor", {"agreement_date", "first_date", "spacing"});
        if (t.contains("agreement_date")) c.agreement_date = read_double(t["agreement_date"], "/tenor/agreement_date");
        if (t.contains("first_date")) c.first_date = read_double(t["first_date"], "/tenor/first_date");
        if (t.contains("spacing")) c.spacing = read_double(t["spacing"], "/tenor/spacing");
    }
    if (doc.contains("periods")) c.periods = read_list(doc["periods"], "/periods", read_small_int);
    if (doc.contains("degrees")) c.degrees = read_list(doc["degrees"], "/degrees", read_small_int);
    if (doc.contains("memories")) {
        c.memories = read_list(doc["memories"], "/memories", [](const json& j, const std::string& p) {
            if (j.is_null() || (j.is_string() && j.get<std::string>() == "full")) return std::optional<int>{};
            return std::optional<int>{read_small_int(j, p)};
        });
    }
    if (doc.contains("cost")) {
        const json& k = doc["cost"];
        allow_keys(k, "/cost", {"kind", "lambdas", "free_sizes", "epsilon"});
        if (k.contains("kind")) c.cost.kind = read_string(k["kind"], "/cost/kind");
        if (k.contains("lambdas")) c.cost.lambdas = read_list(k["lambdas"], "/cost/lambdas", read_double);
        if (k.contains("free_sizes")) c.cost.free_sizes = read_list(k["free_sizes"], "/cost/free_sizes", read_double);
        if (k.contains("epsilon")) {
            if (k["epsilon"].is_null()) c.cost.epsilon.reset();
            else c.cost.epsilon = read_double(k["epsilon"], "/cost/epsilon");
        }
    }
    if (doc.contains("inits")) c.inits = read_list(doc["inits"], "/inits", read_string);
    if (doc.contains("schedules")) c.schedules = read_list(doc["schedules"], "/schedules", read_schedule);
    if (doc.contains("steps")) c.steps = read_list(doc["steps"], "/steps", read_int);
    if (doc.contains("compacts")) {
        const json& k = doc["compacts"];
        allow_keys(k, "/compacts", {"base_radius", "growth"});
        if (k.contains("base_radius")) c.compacts.base_radius = read_double(k["base_radius"], "/compacts/base_radius");
        if (k.contains("growth")) c.compacts.growth = read_double(k["growth"], "/compacts/growth");
    }
    if (doc.contains("replicas")) c.replicas = read_small_int(doc["replicas"], "/replicas");
    if (doc.contains("seed")) {
        const json& s = doc["seed"];
        if (s.is_number_unsigned()) c.seed = s.get<std::uint64_t>();
        else if (s.is_number_integer() && s.get<std::int64_t>() >= 0) c.seed = s.get<std::uint64_t>();
        else throw ConfigError("/seed", "expected a non-negative integer");
    }
    if (doc.contains("samples")) c.samples = read_int(doc["samples"], "/samples");
    if (doc.contains("decimation")) c.decimation = read_int(doc["decimation"], "/decimation");
    if (doc.contains("workers")) c.workers = read_small_int(doc["workers"], "/workers");
    if (doc.contains("output")) c.output = read_string(doc["output"], "/output");
}

TenorStructure make_tenor(const ExperimentConfig& c, int n) {
    std::vector<double> dates;
    for (int i = 0; i <= n; ++i) dates.push_back(c.first_date + i * c.spacing);
    return TenorStructure(c.agreement_date, std::move(dates));
}

}  // namespace

ExperimentConfig load_config(std::string_view json_text, const std::string& experiment) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("/", std::string("malformed JSON: ") + e.what());
    }
    if (doc.is_object() && doc.contains("config") && doc.contains("problem_hash")) doc = doc["config"];
    if (!doc.is_object()) throw ConfigError("/", "expected an object");
    std::string name = experiment;
    if (doc.contains("experiment")) {
        const std::string in_doc = read_string(doc["experiment"], "/experiment");
        if (!name.empty() && name != in_doc)
            throw ConfigError("/experiment", "config is for '" + in_doc + "', not '" + name + "'");
        name = in_doc;
    }
    if (name.empty()) throw ConfigError("/experiment", "missing");
    ExperimentConfig c = default_config(name);
    apply_document(doc, c);
    validate(c);
    return c;
}

void validate(const ExperimentConfig& c) {
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), c.experiment) == names.end())
        throw ConfigError("/experiment", "unknown experiment '" + c.experiment + "'");
    try {
        c.model.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("/model", e.what());
    }
    if (!(c.spacing > 0.0)) throw ConfigError("/tenor/spacing", "must be positive");
    if (c.first_date < c.agreement_date) throw ConfigError("/tenor/first_date", "must not precede the agreement date");
    if (c.periods.empty()) throw ConfigError("/periods", "must not be empty");
    for (std::size_t k = 0; k < c.periods.size(); ++k)
        if (c.periods[k] < 1) throw ConfigError(at("/periods", k), "must be >= 1");
    if (c.degrees.empty()) throw ConfigError("/degrees", "must not be empty");
    for (std::size_t k = 0; k < c.degrees.size(); ++k)
        if (c.degrees[k] < 0) throw ConfigError(at("/degrees", k), "must be >= 0");
    if (c.memories.empty()) throw ConfigError("/memories", "must not be empty");
    for (std::size_t k = 0; k < c.memories.size(); ++k)
        if (c.memories[k] && *c.memories[k] < 0) throw ConfigError(at("/memories", k), "must be >= 0 or \"full\"");
    const std::string& kind = c.cost.kind;
    if (kind != "perfect" && kind != "proportional" && kind != "threshold")
        throw ConfigError("/cost/kind", "expected 'perfect', 'proportional' or 'threshold'");
    if (c.cost.lambdas.empty()) throw ConfigError("/cost/lambdas", "must not be empty");
    for (std::size_t k = 0; k < c.cost.lambdas.size(); ++k)
        if (!(c.cost.lambdas[k] >= 0.0 && c.cost.lambdas[k] < 1.0))
            throw ConfigError(at("/cost/lambdas", k), "must lie in [0, 1)");
    if (c.cost.free_sizes.empty()) throw ConfigError("/cost/free_sizes", "must not be empty");
    for (std::size_t k = 0; k < c.cost.free_sizes.size(); ++k)
        if (!(c.cost.free_sizes[k] >= 0.0)) throw ConfigError(at("/cost/free_sizes", k), "must be >= 0");
    if (c.cost.epsilon && !(*c.cost.epsilon > 0.0)) throw ConfigError("/cost/epsilon", "must be positive");
    if (c.inits.empty()) throw ConfigError("/inits", "must not be empty");
    for (std::size_t k = 0; k < c.inits.size(); ++k)
        if (c.inits[k] != "optimal" && c.inits[k] != "null")
            throw ConfigError(at("/inits", k), "expected 'optimal' or 'null'");
    if (c.schedules.empty()) throw ConfigError("/schedules", "must not be empty");
    for (std::size_t k = 0; k < c.schedules.size(); ++k) {
        try {
            liqhedge::validate(c.schedules[k]);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(at("/schedules", k), e.what());
        }
    }
    if (c.steps.empty()) throw ConfigError("/steps", "must not be empty");
    for (std::size_t k = 0; k < c.steps.size(); ++k) {
        if (c.steps[k] < 0) throw ConfigError(at("/steps", k), "must be >= 0");
        if (k > 0 && c.steps[k] <= c.steps[k - 1]) throw ConfigError(at("/steps", k), "must be strictly increasing");
    }
    if (c.experiment == "trajectory" && c.steps.back() < 1) throw ConfigError("/steps", "trajectory needs at least one step");
    try {
        c.compacts.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("/compacts", e.what());
    }
    if (c.replicas < 1) throw ConfigError("/replicas", "must be >= 1");
    if (c.samples < 1000) throw ConfigError("/samples", "must be >= 1000");
    if (c.decimation < 1) throw ConfigError("/decimation", "must be >= 1");
    if (c.workers < 0) throw ConfigError("/workers", "must be >= 0");
    if (c.output.empty()) throw ConfigError("/output", "must not be empty");
}

namespace {

json schedule_json(const StepSchedule& s) {
    if (const auto* p = std::get_if<PowerLawSchedule>(&s))
        return json{{"type", "power"}, {"v1", p->v1}, {"v2", p->v2}, {"beta", p->beta}};
    return json{{"type", "constant"}, {"v1", std::get<ConstantSchedule>(s).v1}};
}

json config_json(const ExperimentConfig& c) {
    json memories = json::array();
    for (const auto& q : c.memories) memories.push_back(q ? json(*q) : json("full"));
    json schedules = json::array();
    for (const auto& s : c.schedules) schedules.push_back(schedule_json(s));
    return json{
        {"experiment", c.experiment},
        {"model",
         {{"mean_reversion", c.model.mean_reversion},
          {"long_run_level", c.model.long_run_level},
          {"volatility", c.model.volatility},
          {"initial_rate", c.model.initial_rate}}},
        {"tenor", {{"agreement_date", c.agreement_date}, {"first_date", c.first_date}, {"spacing", c.spacing}}},
        {"periods", c.periods},
        {"degrees", c.degrees},
        {"memories", memories},
        {"cost",
         {{"kind", c.cost.kind},
          {"lambdas", c.cost.lambdas},
          {"free_sizes", c.cost.free_sizes},
          {"epsilon", c.cost.epsilon ? json(*c.cost.epsilon) : json(nullptr)}}},
        {"inits", c.inits},
        {"schedules", schedules},
        {"steps", c.steps},
        {"compacts", {{"base_radius", c.compacts.base_radius}, {"growth", c.compacts.growth}}},
        {"replicas", c.replicas},
        {"seed", c.seed},
        {"samples", c.samples},
        {"decimation", c.decimation},
        {"workers", c.workers},
        {"output", c.output},
    };
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2); }

std::string problem_hash(const ExperimentConfig& cfg) {
    json j = config_json(cfg);
    j.erase("workers");
    j.erase("output");
    const std::string text = j.dump();
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::uint64_t evaluation_seed(std::uint64_t seed) { return seed ^ 0x5deece66d2545f49ull; }

CostModel make_cost_model(const CostGrid& grid, double lambda, double free_size) {
    CostModel m;
    if (grid.kind == "proportional") m = CostModel::proportional(lambda);
    else if (grid.kind == "threshold") m = CostModel::threshold(lambda, free_size);
    else if (grid.kind != "perfect") throw std::invalid_argument("unknown cost kind '" + grid.kind + "'");
    if (grid.epsilon) m = smooth(m, *grid.epsilon);
    return m;
}

// ---------------------------------------------------------------------------
// Running

namespace {

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

struct Problem {
    TenorStructure tenor;
    SwapSpec swap;
    PathSimulator simulator;
    StrategyBasis basis;

    Problem(const ExperimentConfig& c, int n, int d, std::optional<int> q)
        : tenor(make_tenor(c, n)),
          swap(make_atm_swap(c.model, tenor)),
          simulator(c.model, swap),
          basis(TruncationScheme{d, n, q}, c.model, tenor) {}

    Coefficients initial(const std::string& init) const {
        return init == "optimal" ? optimal_truncated_strategy(basis, simulator.params(), swap)
                                 : null_strategy(basis.scheme());
    }
};

struct GridPoint {
    int periods;
    int degree;
    std::optional<int> memory;
    double lambda;
    double free_size;
    std::string init;
    std::size_t schedule;
    int replica;
};

std::vector<std::pair<double, double>> cost_axis(const CostGrid& g) {
    std::vector<std::pair<double, double>> out;
    if (g.kind == "perfect") return {{0.0, 0.0}};
    for (double l : g.lambdas) {
        if (g.kind == "threshold") {
            for (double c : g.free_sizes) out.emplace_back(l, c);
        } else {
            out.emplace_back(l, 0.0);
        }
    }
    return out;
}

std::vector<GridPoint> grid(const ExperimentConfig& c, bool with_replicas) {
    std::vector<GridPoint> out;
    for (int n : c.periods)
        for (int d : c.degrees)
            for (const auto& q : c.memories)
                for (const auto& [l, fs] : cost_axis(c.cost))
                    for (const auto& init : c.inits)
                        for (std::size_t s = 0; s < c.schedules.size(); ++s)
                            for (int r = 0; r < (with_replicas ? c.replicas : 1); ++r)
                                out.push_back({n, d, q, l, fs, init, s, r});
    return out;
}

std::vector<std::string> schedule_cells(const StepSchedule& s) {
    if (const auto* p = std::get_if<PowerLawSchedule>(&s)) return {"power", num(p->v1), num(p->v2), num(p->beta)};
    return {"constant", num(std::get<ConstantSchedule>(s).v1), "", ""};
}

std::string memory_cell(const std::optional<int>& q) { return q ? std::to_string(*q) : "full"; }

std::string cost_cell(const CostGrid& g) { return g.epsilon ? "smoothed-" + g.kind : g.kind; }

std::string join(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) out += ',';
        out += cells[k];
    }
    return out;
}

std::string metadata(const ExperimentConfig& c, const std::string& table) {
    std::ostringstream os;
    os << "# experiment=" << c.experiment << '\n'
       << "# table=" << table << '\n'
       << "# problem_hash=" << problem_hash(c) << '\n'
       << "# seed=" << c.seed << '\n'
       << "# eval_seed=" << evaluation_seed(c.seed) << '\n'
       << "# samples=" << c.samples << '\n'
       << "# paths_per_batch=" << kPathsPerBatch << '\n'
       << "# replicas=" << c.replicas << '\n'
       << "# mean_reversion=" << num(c.model.mean_reversion) << '\n'
       << "# long_run_level=" << num(c.model.long_run_level) << '\n'
       << "# volatility=" << num(c.model.volatility) << '\n'
       << "# initial_rate=" << num(c.model.initial_rate) << '\n'
       << "# agreement_date=" << num(c.agreement_date) << '\n'
       << "# first_date=" << num(c.first_date) << '\n'
       << "# spacing=" << num(c.spacing) << '\n'
       << "# cost=" << cost_cell(c.cost) << '\n';
    if (c.cost.epsilon) os << "# epsilon=" << num(*c.cost.epsilon) << '\n';
    os << "# compact_radius=" << num(c.compacts.base_radius) << "*" << num(c.compacts.growth) << "^l\n";
    return os.str();
}

/// Single writer appending blocks in index order as workers complete them.
class OrderedCsv {
public:
    OrderedCsv(fs::path final_path, const std::string& header, std::size_t blocks)
        : final_(std::move(final_path)), partial_(final_.string() + ".partial"), total_(blocks) {
        out_.open(partial_, std::ios::binary | std::ios::trunc);
        if (!out_) throw std::runtime_error("cannot open " + partial_.string());
        out_ << header;
        out_.flush();
    }
    OrderedCsv(const OrderedCsv&) = delete;
    OrderedCsv& operator=(const OrderedCsv&) = delete;

    ~OrderedCsv() {
        if (!done_ && out_.is_open()) {
            out_ << "# status=incomplete\n";
            out_.close();
        }
    }

    void put(std::size_t index, std::string block) {
        std::lock_guard lock(mutex_);
        pending_.emplace(index, std::move(block));
        while (!pending_.empty() && pending_.begin()->first == next_) {
            out_ << pending_.begin()->second;
            pending_.erase(pending_.begin());
            ++next_;
        }
        out_.flush();
    }

    std::string finish() {
        if (next_ != total_) throw std::logic_error("OrderedCsv: missing rows");
        out_.close();
        if (!out_) throw std::runtime_error("write failed: " + partial_.string());
        fs::rename(partial_, final_);
        done_ = true;
        return final_.string();
    }

private:
    fs::path final_;
    fs::path partial_;
    std::ofstream out_;
    std::mutex mutex_;
    std::map<std::size_t, std::string> pending_;
    std::size_t next_ = 0;
    std::size_t total_;
    bool done_ = false;
};

void write_atomically(const fs::path& path, const std::string& text) {
    const fs::path partial = path.string() + ".partial";
    {
        std::ofstream out(partial, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + partial.string());
        out << text;
        if (!out) throw std::runtime_error("write failed: " + partial.string());
    }
    fs::rename(partial, path);
}

struct Checkpoint {
    std::int64_t steps = 0;
    EvalReport v;
    std::int64_t reinitializations = 0;
    bool diverged = false;
};

EvalReport evaluate(const Problem& p, const Coefficients& alpha, const CostModel& m, const SamplingOptions& opts,
                    bool& diverged) {
    EvalReport r;
    if (!alpha.allFinite()) {
        diverged = true;
    } else {
        try {
            return estimate_v(p.basis, p.simulator, alpha, m, opts);
        } catch (const std::runtime_error&) {
            diverged = true;
        }
    }
    r.mean = r.std_error = r.ci99_half_width = std::numeric_limits<double>::infinity();
    r.num_samples = opts.num_samples;
    return r;
}

std::vector<Checkpoint> optimize_point(const ExperimentConfig& c, const GridPoint& g, const Problem& p,
                                       const SamplingOptions& eval) {
    const CostModel m = make_cost_model(c.cost, g.lambda, g.free_size);
    const Coefficients alpha0 = p.initial(g.init);
    std::vector<Checkpoint> out;
    std::vector<std::int64_t> positive;
    for (std::int64_t s : c.steps) {
        if (s == 0) {
            Checkpoint cp;
            cp.v = evaluate(p, alpha0, m, eval, cp.diverged);
            out.push_back(cp);
        } else {
            positive.push_back(s);
        }
    }
    if (positive.empty()) return out;

    RandomEngine rng = make_stream(c.seed, static_cast<std::uint64_t>(g.replica));
    const GradientOracle oracle = make_hedging_oracle(p.basis, p.simulator, m);
    OptimizerState state = OptimizerState::start(alpha0, c.compacts);
    RunOptions opts;
    opts.decimation = 0;
    opts.checkpoints = positive;
    opts.on_checkpoint = [&](const OptimizerState& s) {
        Checkpoint cp;
        cp.steps = s.step;
        cp.reinitializations = s.reinitializations;
        cp.v = evaluate(p, s.alpha, m, eval, cp.diverged);
        out.push_back(cp);
    };
    try {
        resume(state, positive.back(), oracle, c.schedules[g.schedule], c.compacts, rng, opts);
    } catch (const std::runtime_error&) {
        // non-finite gradient: the remaining checkpoints are reported as diverged
        for (std::size_t k = out.size(); k < c.steps.size(); ++k) {
            Checkpoint cp;
            cp.steps = c.steps[k];
            cp.reinitializations = state.reinitializations;
            cp.diverged = true;
            cp.v.mean = cp.v.std_error = cp.v.ci99_half_width = std::numeric_limits<double>::infinity();
            out.push_back(cp);
        }
    }
    return out;
}

const std::vector<std::string> kSweepColumns{
    "N",    "d",       "q",         "cost",    "lambda",    "free_size", "init",      "schedule", "v1",
    "v2",   "beta",    "replica",   "dimension", "steps",   "v",         "std_error", "reinitializations",
    "status"};

std::vector<std::string> point_cells(const ExperimentConfig& c, const GridPoint& g, Eigen::Index dim) {
    std::vector<std::string> cells{std::to_string(g.periods), std::to_string(g.degree), memory_cell(g.memory),
                                   cost_cell(c.cost),         num(g.lambda),            num(g.free_size),
                                   g.init};
    for (auto& s : schedule_cells(c.schedules[g.schedule])) cells.push_back(std::move(s));
    cells.push_back(std::to_string(g.replica));
    cells.push_back(std::to_string(dim));
    return cells;
}

struct Parallelism {
    int outer;
    int inner;
};

Parallelism split_workers(const ExperimentConfig& c, std::size_t points) {
    const int w = c.workers == 0 ? default_workers() : c.workers;
    if (points >= static_cast<std::size_t>(w)) return {w, 1};
    return {1, w};
}

void progress(std::ostream* log, const ExperimentConfig& c, std::size_t done, std::size_t total,
              std::chrono::steady_clock::time_point start) {
    if (!log) return;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    static std::mutex log_mutex;
    std::lock_guard lock(log_mutex);
    *log << "[" << c.experiment << "] " << done << "/" << total << " grid points done (" << num(std::round(secs * 10) / 10)
         << " s)\n";
}

std::vector<std::string> run_sweep(const ExperimentConfig& c, std::ostream* log) {
    const fs::path dir(c.output);
    const auto points = grid(c, true);
    const auto par = split_workers(c, points.size());
    const SamplingOptions eval{c.samples, evaluation_seed(c.seed), par.inner};
    std::vector<std::string> written;

    std::vector<std::vector<Checkpoint>> results(points.size());
    std::vector<Eigen::Index> dims(points.size());
    {
        OrderedCsv csv(dir / (c.experiment + ".csv"), metadata(c, "grid") + join(kSweepColumns) + "\n", points.size());
        const auto start = std::chrono::steady_clock::now();
        std::atomic<std::size_t> done{0};
        parallel_for(points.size(), par.outer, [&](std::size_t k) {
            const GridPoint& g = points[k];
            const Problem p(c, g.periods, g.degree, g.memory);
            results[k] = optimize_point(c, g, p, eval);
            dims[k] = p.basis.layout().dimension();
            const auto prefix = point_cells(c, g, dims[k]);
            std::string block;
            for (const auto& cp : results[k]) {
                auto cells = prefix;
                cells.push_back(std::to_string(cp.steps));
                cells.push_back(num(cp.v.mean));
                cells.push_back(num(cp.v.std_error));
                cells.push_back(std::to_string(cp.reinitializations));
                cells.push_back(cp.diverged ? "diverged" : "ok");
                block += join(cells) + '\n';
            }
            csv.put(k, std::move(block));
            progress(log, c, ++done, points.size(), start);
        });
        written.push_back(csv.finish());
    }

    if (c.replicas > 1) {
        std::vector<std::string> columns(kSweepColumns.begin(), kSweepColumns.begin() + 11);
        for (const char* col : {"dimension", "steps", "replicas", "mean", "std_dev", "min", "max", "diverged"})
            columns.emplace_back(col);
        std::string text = metadata(c, "summary") + join(columns) + "\n";
        for (std::size_t first = 0; first < points.size(); first += static_cast<std::size_t>(c.replicas)) {
            auto prefix = point_cells(c, points[first], dims[first]);
            prefix.erase(prefix.begin() + 11);  // replica
            for (std::size_t s = 0; s < c.steps.size(); ++s) {
                std::vector<double> values;
                int diverged = 0;
                for (std::size_t r = 0; r < static_cast<std::size_t>(c.replicas); ++r) {
                    const Checkpoint& cp = results[first + r][s];
                    if (cp.diverged) ++diverged;
                    values.push_back(cp.v.mean);
                }
                double mean = 0.0;
                for (double v : values) mean += v;
                mean /= static_cast<double>(values.size());
                double ss = 0.0;
                for (double v : values) ss += (v - mean) * (v - mean);
                const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
                auto cells = prefix;
                cells.push_back(std::to_string(c.steps[s]));
                cells.push_back(std::to_string(c.replicas));
                cells.push_back(num(mean));
                cells.push_back(num(sd));
                cells.push_back(num(*std::min_element(values.begin(), values.end())));
                cells.push_back(num(*std::max_element(values.begin(), values.end())));
                cells.push_back(std::to_string(diverged));
                text += join(cells) + '\n';
            }
        }
        const fs::path path = dir / (c.experiment + "-summary.csv");
        write_atomically(path, text);
        written.push_back(path.string());
    }
    return written;
}

std::vector<std::string> run_trajectory(const ExperimentConfig& c, std::ostream* log) {
    const fs::path dir(c.output);
    const auto points = grid(c, false);
    const auto par = split_workers(c, points.size());
    const SamplingOptions eval{c.samples, evaluation_seed(c.seed), par.inner};

    const GridPoint& g0 = points.front();
    const Eigen::Index dim = Problem(c, g0.periods, g0.degree, g0.memory).basis.layout().dimension();
    std::vector<std::string> columns(kSweepColumns.begin(), kSweepColumns.begin() + 13);
    for (const char* col : {"step", "compact", "reinitializations", "v", "std_error"}) columns.emplace_back(col);
    for (Eigen::Index k = 0; k < dim; ++k) columns.push_back("alpha_" + std::to_string(k));

    OrderedCsv csv(dir / (c.experiment + ".csv"), metadata(c, "trajectory") + join(columns) + "\n", points.size());
    const auto start = std::chrono::steady_clock::now();
    std::atomic<std::size_t> done{0};
    parallel_for(points.size(), par.outer, [&](std::size_t k) {
        const GridPoint& g = points[k];
        const Problem p(c, g.periods, g.degree, g.memory);
        const CostModel m = make_cost_model(c.cost, g.lambda, g.free_size);
        RandomEngine rng = make_stream(c.seed, static_cast<std::uint64_t>(g.replica));
        const GradientOracle oracle = make_hedging_oracle(p.basis, p.simulator, m);
        OptimizerState state = OptimizerState::start(p.initial(g.init), c.compacts);
        state.trajectory.push_back({0, state.compact, 0, state.alpha});
        RunOptions opts;
        opts.decimation = c.decimation;
        bool failed = false;
        try {
            resume(state, c.steps.back(), oracle, c.schedules[g.schedule], c.compacts, rng, opts);
        } catch (const std::runtime_error&) {
            failed = true;
        }
        const auto prefix = point_cells(c, g, p.basis.layout().dimension());
        std::string block;
        for (const auto& tp : state.trajectory) {
            bool diverged = false;
            const EvalReport v = evaluate(p, tp.alpha, m, eval, diverged);
            auto cells = prefix;
            cells.push_back(std::to_string(tp.step));
            cells.push_back(std::to_string(tp.compact));
            cells.push_back(std::to_string(tp.reinitializations));
            cells.push_back(num(v.mean));
            cells.push_back(num(v.std_error));
            for (Eigen::Index i = 0; i < tp.alpha.size(); ++i) cells.push_back(num(tp.alpha(i)));
            block += join(cells) + '\n';
        }
        if (failed) block += "# diverged after step " + std::to_string(state.step) + " for grid point " +
                             std::to_string(k) + "\n";
        csv.put(k, std::move(block));
        progress(log, c, ++done, points.size(), start);
    });
    return {csv.finish()};
}

}  // namespace

std::vector<std::string> run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
    validate(cfg);
    fs::create_directories(cfg.output);
    auto written = cfg.experiment == "trajectory" ? run_trajectory(cfg, log) : run_sweep(cfg, log);
    json outputs = json::array();
    for (const auto& w : written) outputs.push_back(fs::path(w).filename().string());
    const json manifest{{"config", config_json(cfg)},
                        {"problem_hash", problem_hash(cfg)},
                        {"eval_seed", evaluation_seed(cfg.seed)},
                        {"paths_per_batch", kPathsPerBatch},
                        {"outputs", outputs}};
    const fs::path path = fs::path(cfg.output) / (cfg.experiment + ".manifest.json");
    write_atomically(path, manifest.dump(2) + "\n");
    written.push_back(path.string());
    if (log) *log << "[" << cfg.experiment << "] wrote " << written.size() << " files to " << cfg.output << "\n";
    return written;
}

void write_audit_path(const ExperimentConfig& cfg, const std::optional<Coefficients>& alpha, const std::string& path) {
    validate(cfg);
    const GridPoint g = grid(cfg, false).front();
    const Problem p(cfg, g.periods, g.degree, g.memory);
    const Coefficients a = alpha ? *alpha : p.initial(g.init);
    if (a.size() != p.basis.layout().dimension())
        throw std::invalid_argument("strategy has " + std::to_string(a.size()) + " coefficients, expected " +
                                    std::to_string(p.basis.layout().dimension()));
    const CostModel m = make_cost_model(cfg.cost, g.lambda, g.free_size);
    RandomEngine rng = make_stream(cfg.seed, 0);
    const GaussianPath gp = p.simulator.sample(rng);
    const WealthBreakdown w = terminal_wealth(p.basis, a, gp, m);
    std::ostringstream os;
    os << metadata(cfg, "audit") << "# wealth=" << num(w.wealth) << '\n';
    os << "# draws=";
    for (Eigen::Index k = 0; k < gp.draws.size(); ++k) os << (k ? ";" : "") << num(gp.draws(k));
    os << '\n';
    write_audit_csv(os, gp, m, w);
    const fs::path out(path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_atomically(out, os.str());
}

}  // namespace liqhedge
