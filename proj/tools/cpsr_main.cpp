#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "cpsr/cli.hpp"

namespace {

// Leftover arguments are `--key value` or `--key=value` config overrides.
cpsr::Overrides parse_overrides(const std::vector<std::string>& args) {
    cpsr::Overrides out;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) != 0 || a.size() == 2) throw cpsr::ConfigError(a, "expected --key value");
        const std::string body = a.substr(2);
        if (const auto eq = body.find('='); eq != std::string::npos) {
            out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
            continue;
        }
        if (i + 1 >= args.size()) throw cpsr::ConfigError(body, "missing value");
        out.emplace_back(body, args[++i]);
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw cpsr::ConfigError("config", "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inductive knowledge graph completion with confidence-guided path reasoning"};
    app.require_subcommand(1);
    std::string config_path;
    std::string keys_help = "Config keys (--key value, or key = value in --config):\n";
    for (const auto& k : cpsr::config_keys()) keys_help += "  " + k.name + ": " + k.description + "\n";
    keys_help += "Presets:";
    for (const auto& p : cpsr::preset_names()) keys_help += " " + p;
    app.footer(keys_help);

    const std::map<std::string, std::string> about = {
        {"gen-synth", "write a planted-rule dataset to data_dir and ind_dir"},
        {"mine-rules", "write rule confidences of the training graph to out_dir/rules.csv"},
        {"train", "train, writing checkpoints and train_log.csv to out_dir"},
        {"eval", "rank a split with a checkpoint; writes out_dir/metrics.csv"},
        {"sweep", "train and evaluate once per sweep_values entry of p_e"},
    };
    for (const auto& name : cpsr::cli::command_names()) {
        auto* sub = app.add_subcommand(name, about.at(name));
        sub->add_option("--config", config_path, "config file of key = value lines");
        sub->allow_extras();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        const auto overrides = parse_overrides(sub->remaining());
        std::optional<std::string> env_seed;
        if (const char* s = std::getenv("CPSR_SEED")) env_seed = s;
        const std::string text = config_path.empty() ? std::string() : read_file(config_path);
        const auto config = cpsr::parse_config(text, overrides, env_seed);
        cpsr::cli::run(sub->get_name(), config, std::cout);
    } catch (const std::exception& e) {
        std::cerr << cpsr::cli::error_line(e) << std::endl;
        return 1;
    }
    return 0;
}
