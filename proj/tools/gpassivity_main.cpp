#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpassivity/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string scenario;
    std::string out_dir;
    std::string format;
    std::vector<std::string> params;  // key=value overrides
    double chi = -1.0;                // lazy-demon convenience flag
    long seed = 0;                    // reserved; every channel is exact
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file");
    cmd->add_option("--scenario", args.scenario,
                    "correlated-heat-flow | heat-leak | dephasing-bounds | lazy-demon | custom");
    cmd->add_option("--out", args.out_dir, "output directory (default: current)");
    cmd->add_option("--format", args.format, "csv | json | both");
    cmd->add_option("--param,-p", args.params, "parameter override key=value (repeatable)");
    cmd->add_option("--chi", args.chi, "lazy-demon feedback strength (same as -p chi=...)")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--seed", args.seed, "reserved; all channels are exact, no sampling");
    cmd->add_option("--threads", args.threads, "worker threads for sweeps");
}

json parse_value(const std::string& text) {
    // Numbers and booleans as JSON, anything else as a string.
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);
    }
}

struct BuiltConfig {
    gpassivity::ScenarioConfig config;
    std::vector<gpassivity::SweepAxis> axes;  // from the config's "sweep" section
};

BuiltConfig build_config(const CommonArgs& args) {
    json doc;
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw gpassivity::Error("cannot open config file " + args.config_path);
        doc = json::parse(in);
    } else {
        doc = json::object();
    }
    if (!args.scenario.empty()) doc["scenario"] = args.scenario;
    if (!doc.contains("parameters")) doc["parameters"] = json::object();
    for (const auto& kv : args.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw gpassivity::Error("--param expects key=value, got '" + kv + "'");
        doc["parameters"][kv.substr(0, eq)] = parse_value(kv.substr(eq + 1));
    }
    if (args.chi >= 0.0) doc["parameters"]["chi"] = args.chi;
    if (!args.out_dir.empty() || !args.format.empty()) {
        if (!doc.contains("output")) doc["output"] = json::object();
        if (!args.out_dir.empty()) doc["output"]["path"] = args.out_dir;
        if (!args.format.empty()) doc["output"]["format"] = args.format;
    }

    BuiltConfig out;
    if (doc.contains("sweep")) {
        if (!doc["sweep"].is_array())
            throw gpassivity::Error("config 'sweep' must be an array of axes");
        for (const auto& axis : doc["sweep"]) {
            gpassivity::SweepAxis spec;
            spec.parameter = axis.at("parameter").get<std::string>();
            spec.from = axis.at("from").get<double>();
            spec.to = axis.at("to").get<double>();
            spec.step = axis.at("step").get<double>();
            if (spec.step <= 0) throw gpassivity::Error("sweep step must be positive");
            out.axes.push_back(spec);
        }
    }
    out.config = gpassivity::parse_config(doc);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"global-passivity thermodynamic inequality toolkit"};
    app.require_subcommand(1);

    CommonArgs run_args, sweep_args, validate_args;
    CLI::App* run_cmd = app.add_subcommand("run", "run one scenario and write its series");
    add_common(run_cmd, run_args);

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a scenario over a parameter grid");
    add_common(sweep_cmd, sweep_args);
    std::vector<std::string> axis_specs;
    sweep_cmd->add_option("--axis", axis_specs,
                          "sweep axis as name=from:to:step (1 or 2; overrides the config)");

    CLI::App* validate_cmd = app.add_subcommand("validate", "parse a config and echo it");
    add_common(validate_cmd, validate_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            const auto config = build_config(run_args).config;
            const auto outcome = gpassivity::run_scenario(config);
            for (const auto& path : gpassivity::write_outputs(config, outcome))
                std::cout << "wrote " << path.string() << '\n';
            if (outcome.exit_code == 2) std::cout << "violations detected\n";
            return outcome.exit_code;
        }
        if (sweep_cmd->parsed()) {
            const auto built = build_config(sweep_args);
            const auto& config = built.config;
            std::vector<gpassivity::SweepAxis> axes = built.axes;
            if (!axis_specs.empty()) {
                axes.clear();
                for (const auto& spec : axis_specs) {
                    const auto eq = spec.find('=');
                    if (eq == std::string::npos)
                        throw gpassivity::Error("--axis expects name=from:to:step");
                    axes.push_back(
                        gpassivity::parse_axis_spec(spec.substr(0, eq), spec.substr(eq + 1)));
                }
            }
            if (axes.empty())
                throw gpassivity::Error("sweep needs --axis flags or a config 'sweep' section");
            const auto outcome = gpassivity::run_sweep(config, axes, sweep_args.threads);
            fs::path dir = config.output_path.empty() ? fs::path(".") : fs::path(config.output_path);
            fs::create_directories(dir);
            const std::string stem = config.scenario + "_sweep";
            if (config.format == "csv" || config.format == "both") {
                std::ofstream out(dir / (stem + ".csv"), std::ios::binary);
                out << outcome.csv;
                std::cout << "wrote " << (dir / (stem + ".csv")).string() << '\n';
            }
            if (config.format == "json" || config.format == "both") {
                std::ofstream out(dir / (stem + ".json"), std::ios::binary);
                out << outcome.report.dump(2) << '\n';
                std::cout << "wrote " << (dir / (stem + ".json")).string() << '\n';
            }
            if (outcome.exit_code == 2) std::cout << "violations detected\n";
            return outcome.exit_code;
        }
        if (validate_cmd->parsed()) {
            const auto built = build_config(validate_args);
            json echo = {{"scenario", built.config.scenario},
                         {"parameters", built.config.parameters},
                         {"output",
                          {{"format", built.config.format}, {"path", built.config.output_path}}}};
            if (!built.axes.empty()) {
                echo["sweep"] = json::array();
                for (const auto& axis : built.axes)
                    echo["sweep"].push_back({{"parameter", axis.parameter},
                                             {"from", axis.from},
                                             {"to", axis.to},
                                             {"step", axis.step}});
            }
            std::cout << echo.dump(2) << '\n';
            return 0;
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}
