// Batch experiment runner. Subcommands are experiment names; every run is a
// pure function of (config, seed), so identical inputs give byte-identical
// artifacts regardless of worker count.
//
// Exit codes: 0 all checks pass, 2 some invariant FAILed, 3 config error.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hitstat/experiments.hpp"

namespace {

int default_workers() {
    if (const char* env = std::getenv("HITSTAT_WORKERS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hitstat: hitting-time statistics experiment runner"};
    app.require_subcommand(0, 1);

    bool list = false;
    app.add_flag("--list", list, "list built-in systems, measures and experiments");

    std::string config_path, out_dir;
    std::uint64_t seed_override = 0;
    bool seed_given = false, workers_given = false;
    int workers_flag = 1;

    const std::vector<CLI::App*> subs = [&] {
        std::vector<CLI::App*> out;
        for (const char* name :
             {"pressure", "gibbs-audit", "records", "entry", "rates", "waiting-tail",
              "certificate", "kac", "induce-compare", "gdms-powerlaw"}) {
            CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
            sub->add_option("--config", config_path, "path to the JSON config")->required();
            sub->add_option("--out", out_dir, "output directory (overrides config)");
            sub->add_option("--seed", seed_override, "seed override")
                ->each([&](const std::string&) { seed_given = true; });
            sub->add_option("--workers", workers_flag, "worker threads (flag > config > env)")
                ->each([&](const std::string&) { workers_given = true; });
            out.push_back(sub);
        }
        return out;
    }();

    CLI11_PARSE(app, argc, argv);

    if (list) {
        std::cout << hitstat::list_builtins();
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cout << app.help();
        return 0;
    }

    try {
        hitstat::ExperimentConfig config = hitstat::ExperimentConfig::parse_file(config_path);
        const std::string subcommand = app.get_subcommands().front()->get_name();
        if (config.experiment != subcommand)
            throw hitstat::ConfigError("config experiment '" + config.experiment +
                                       "' does not match subcommand '" + subcommand + "'");
        if (seed_given) config.seed = seed_override;
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (config.out_dir.empty())
            throw hitstat::ConfigError("no output directory: set \"out\" in the config or pass --out");
        if (workers_given)
            config.workers = workers_flag;
        else if (config.workers < 1)
            config.workers = default_workers();

        const hitstat::ExperimentResult result = hitstat::run_experiment(config);
        hitstat::write_artifacts(result, config.out_dir);
        for (const auto& [name, bytes] : result.artifacts)
            if (name == "report.txt") std::cout << bytes;
        return result.all_pass ? 0 : 2;
    } catch (const hitstat::ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 3;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
}
