// Command-line runner for the hedging experiments.
//
//   liqhedge_cli <experiment> [--config file] [--seed n] [--workers n]
//                [--out dir] [--samples n] [--steps G] [--replicas n]
//   liqhedge_cli audit-path [same flags] [--strategy file.json]

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "liqhedge/harness.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out;
    std::optional<std::int64_t> samples;
    std::optional<std::int64_t> steps;
    std::optional<int> replicas;
    std::string strategy;
    bool dump = false;
};

void add_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON config or a manifest from an earlier run")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--workers", o.workers, "worker threads (0: all cores)");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--samples", o.samples, "Monte Carlo samples per value estimate");
    cmd->add_option("--steps", o.steps, "optimizer steps; a leading 0 checkpoint is kept");
    cmd->add_option("--replicas", o.replicas, "independent optimizer runs per grid point");
    cmd->add_flag("--dump-config", o.dump, "print the resolved config and exit");
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

liqhedge::ExperimentConfig resolve(const std::string& name, const Overrides& o) {
    liqhedge::ExperimentConfig cfg =
        o.config.empty() ? liqhedge::default_config(name) : liqhedge::load_config(slurp(o.config), name);
    if (o.seed) cfg.seed = *o.seed;
    if (o.workers) cfg.workers = *o.workers;
    if (o.out) cfg.output = *o.out;
    if (o.samples) cfg.samples = *o.samples;
    if (o.replicas) cfg.replicas = *o.replicas;
    if (o.steps) {
        const bool keep_zero = !cfg.steps.empty() && cfg.steps.front() == 0 && *o.steps > 0;
        cfg.steps = keep_zero ? std::vector<std::int64_t>{0, *o.steps} : std::vector<std::int64_t>{*o.steps};
    }
    liqhedge::validate(cfg);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Swap hedging under liquidity costs: experiment runner"};
    app.require_subcommand(1);

    Overrides o;
    std::string chosen;
    for (const auto& name : liqhedge::experiment_names()) {
        auto* cmd = app.add_subcommand(name, "run the " + name + " experiment");
        add_flags(cmd, o);
        cmd->callback([&chosen, name] { chosen = name; });
    }
    auto* audit = app.add_subcommand("audit-path", "trace one simulated path through the trading cascade");
    add_flags(audit, o);
    audit->add_option("--strategy", o.strategy, "strategy JSON (default: the degree-d chaos projection)")
        ->check(CLI::ExistingFile);
    std::string experiment_for_audit = "table1";
    audit->add_option("--experiment", experiment_for_audit, "experiment whose defaults describe the problem");
    audit->callback([&chosen] { chosen = "audit-path"; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (chosen == "audit-path") {
            liqhedge::ExperimentConfig cfg = resolve(experiment_for_audit, o);
            std::optional<liqhedge::Coefficients> alpha;
            if (!o.strategy.empty()) {
                auto [scheme, coeffs] = liqhedge::strategy_from_json(slurp(o.strategy));
                cfg.periods = {scheme.num_periods};
                cfg.degrees = {scheme.degree};
                cfg.memories = {scheme.memory};
                alpha = std::move(coeffs);
            }
            if (o.dump) {
                std::cout << liqhedge::config_to_json(cfg) << '\n';
                return 0;
            }
            const std::string path = cfg.output + "/audit-path.csv";
            liqhedge::write_audit_path(cfg, alpha, path);
            std::cerr << "wrote " << path << '\n';
            return 0;
        }
        const liqhedge::ExperimentConfig cfg = resolve(chosen, o);
        if (o.dump) {
            std::cout << liqhedge::config_to_json(cfg) << '\n';
            return 0;
        }
        for (const auto& path : liqhedge::run_experiment(cfg, &std::cerr)) std::cout << path << '\n';
    } catch (const liqhedge::ConfigError& e) {
        std::cerr << "config error at " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
