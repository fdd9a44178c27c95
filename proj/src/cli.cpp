#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "epnr/config.hpp"

namespace epnr {

namespace {

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        validate_config(config);
        const Network net = build_network(config);
        const auto scenarios = make_scenarios(config, net);
        const auto batch = run_batch(net, scenarios, config.selectors, config.repair, config.reward, config.seed,
                                     config.jobs, config.episode_options());

        std::error_code ec;
        std::filesystem::create_directories(config.out, ec);
        if (ec) throw std::runtime_error("cannot create output directory " + config.out.string() + ": " + ec.message());
        write_batch_outputs(config.out, batch);
        {
            std::ofstream f(config.out / "network.json", std::ios::binary);
            f << to_json(net).dump(2) << '\n';
            if (!f) throw std::runtime_error("failed writing network.json");
        }
        save_scenarios(config.out / "scenarios.jsonl", scenarios);

        for (std::size_t s = 0; s < batch.selectors.size(); ++s) {
            out << batch.selectors[s].name() << ": scenarios=" << scenarios.size();
            if (config.reward.objective == Objective::R1)
                out << " mean_days_to_goal=" << format_number(mean(batch.days_to_goal(s)));
            else
                out << " mean_benefit=" << format_number(mean(batch.benefit(s)));
            out << '\n';
        }
        out << "digest " << batch.config_digest << '\n';
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Post-disaster power network recovery planning with rollout"};
    app.set_version_flag("--version", "0.1.0");

    std::string config_path;
    std::optional<int> scenarios;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> selectors;
    std::string objective;
    std::optional<int> jobs;
    std::string out_dir;
    std::string scenario_file;
    bool deterministic = false;
    std::optional<int> units;

    app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--scenarios", scenarios, "number of damage scenarios");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--selector", selectors, "base | uniform_rollout | linear_belief | adaptive (repeatable)")
        ->check(CLI::IsMember({"base", "uniform_rollout", "linear_belief", "adaptive"}));
    app.add_option("--objective", objective, "r1 | r2")->check(CLI::IsMember({"r1", "r2"}));
    app.add_option("--jobs", jobs, "worker threads");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--scenario-file", scenario_file, "read scenarios from JSONL instead of sampling");
    app.add_flag("--deterministic", deterministic, "mean repair times everywhere (oracle mode)");
    app.add_option("--units", units, "fixed number of repair units");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        nlohmann::json doc = nlohmann::json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            doc = nlohmann::json::parse(in, nullptr, true, true);
        }
        if (scenarios) doc["scenarios"] = *scenarios;
        if (seed) doc["seed"] = *seed;
        if (!selectors.empty()) {
            auto list = nlohmann::json::array();
            // keep per-kind settings from the file when the flag names the same kind
            for (const auto& name : selectors) {
                nlohmann::json entry = name;
                if (doc.contains("selectors") && doc["selectors"].is_array())
                    for (const auto& s : doc["selectors"])
                        if (s.is_object() && s.value("kind", "") == name) entry = s;
                list.push_back(entry);
            }
            doc["selectors"] = list;
        }
        if (!objective.empty()) doc["objective"] = objective;
        if (jobs) doc["jobs"] = *jobs;
        if (!out_dir.empty()) doc["out"] = out_dir;
        if (!scenario_file.empty()) doc["scenario_file"] = scenario_file;
        if (deterministic) doc["deterministic"] = true;
        if (units) doc["n_units"] = *units;
        const RunConfig config = parse_config(doc);
        return run(config, out, err);
    } catch (const nlohmann::json::parse_error& e) {
        err << "error: config file " << config_path << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace epnr
