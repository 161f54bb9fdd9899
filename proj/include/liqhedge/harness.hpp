#ifndef LIQHEDGE_HARNESS_HPP
#define LIQHEDGE_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "liqhedge/evaluator.hpp"
#include "liqhedge/optimizer.hpp"

namespace liqhedge {

/// Invalid configuration; what() starts with the JSON pointer of the bad key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& message)
        : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Names accepted in "experiment".
const std::vector<std::string>& experiment_names();

struct CostGrid {
    std::string kind = "perfect";  // perfect | proportional | threshold
    std::vector<double> lambdas{0.0};
    std::vector<double> free_sizes{0.0};
    std::optional<double> epsilon;  // Gaussian smoothing when set
};

/// Every run is the product grid
///   periods x degrees x memories x (lambda, C) x inits x schedules x replicas
/// with one output row per entry of `steps`.
struct ExperimentConfig {
    std::string experiment = "table1";
    VasicekParams model;
    double agreement_date = 0.0;
    double first_date = 1.0;  // T_0
    double spacing = 1.0;     // T_i - T_{i-1}
    std::vector<int> periods{2};
    std::vector<int> degrees{1};
    std::vector<std::optional<int>> memories{std::nullopt};
    CostGrid cost;
    std::vector<std::string> inits{"optimal"};  // optimal | null
    std::vector<StepSchedule> schedules{PowerLawSchedule{1.0, 1.0, 1.0}};
    std::vector<std::int64_t> steps{0};
    CompactFamily compacts;
    int replicas = 1;
    std::uint64_t seed = 1;
    std::int64_t samples = 1'000'000;
    std::int64_t decimation = 100;  // trajectory only
    int workers = 1;                // 0 picks the hardware count
    std::string output = ".";
};

/// Defaults of a named experiment.
ExperimentConfig default_config(const std::string& experiment);

/// Parses a JSON document over the defaults of its experiment. The document
/// is either a config object or a manifest with a "config" member. When
/// `experiment` is non-empty it must agree with the document.
ExperimentConfig load_config(std::string_view json_text, const std::string& experiment = "");

void validate(const ExperimentConfig& cfg);

/// Canonical JSON, the inverse of load_config.
std::string config_to_json(const ExperimentConfig& cfg);

/// Hash of everything that determines the numbers (excludes workers and output).
std::string problem_hash(const ExperimentConfig& cfg);

/// Master seed of the evaluation samples, shared by every grid point.
std::uint64_t evaluation_seed(std::uint64_t seed);

CostModel make_cost_model(const CostGrid& grid, double lambda, double free_size);

/// Runs the experiment, writing <experiment>.csv (plus a summary when
/// replicas > 1, or the trajectory file) and <experiment>.manifest.json into
/// cfg.output. Files are written as *.partial and renamed when complete.
/// Returns the paths written. Progress goes to `log` when given.
std::vector<std::string> run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// One simulated path under alpha (or alpha^{*,d} when absent) with the first
/// grid point of cfg, written as an audit CSV to `path`.
void write_audit_path(const ExperimentConfig& cfg, const std::optional<Coefficients>& alpha, const std::string& path);

}  // namespace liqhedge

#endif
