#include "cpsr/cli.hpp"

#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "cpsr/checkpoint.hpp"
#include "cpsr/evaluator.hpp"
#include "cpsr/rule_confidence.hpp"
#include "cpsr/sweep.hpp"

namespace cpsr::cli {

namespace fs = std::filesystem;

namespace {

class CommandError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::ofstream open_output(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    return f;
}

void echo_config(const RunConfig& config) {
    fs::create_directories(config.out_dir);
    auto f = open_output(config.out_dir / "config.resolved");
    f << config.to_text();
}

InductiveSplit load_split(const RunConfig& config) {
    return make_split(load_raw_split(config.data_dir, config.resolved_ind_dir()), config.graph_options());
}

void print_metrics(std::ostream& out, const std::string& label, const RankingMetrics& m) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-8s %8s %8s %8s %8s %8s\n", "split", "queries", "MRR", "Hits@1", "Hits@3",
                  "Hits@10");
    out << buf;
    std::snprintf(buf, sizeof buf, "%-8s %8zu %8.4f %8.4f %8.4f %8.4f\n", label.c_str(), m.count, m.mrr(),
                  m.hits_at(1), m.hits_at(3), m.hits_at(10));
    out << buf;
}

void cmd_gen_synth(const RunConfig& config) {
    oracle::PlantedRuleSpec spec = config.synth;
    spec.seed = config.train.seed;
    write_raw_split(oracle::generate_planted_raw(spec), config.data_dir, config.resolved_ind_dir());
}

void cmd_mine_rules(const RunConfig& config, std::ostream& out) {
    const auto kg = build_graph(load_triples_file(config.data_dir / "train.txt"), config.graph_options());
    const auto table = mine_confidence(kg);
    auto f = open_output(config.out_dir / "rules.csv");
    write_confidence_csv(f, table, kg.relations());
    out << "mined " << kg.num_relations() * kg.num_relations() << " rules over " << kg.num_relations()
        << " relations\n";
}

void cmd_train(const RunConfig& config, std::ostream& out) {
    const auto split = load_split(config);
    const auto result = fit(split, config.train, config.out_dir);
    for (const auto& rec : result.log) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "epoch %u  loss %.6f  valid MRR %.4f\n", rec.epoch, rec.loss, rec.valid.mrr());
        out << buf;
    }
    out << "best epoch " << result.training.best_epoch << ", checkpoints in " << config.out_dir.string() << "\n";
}

void cmd_eval(const RunConfig& config, std::ostream& out) {
    const fs::path ckpt_path = config.resolved_checkpoint();
    if (!fs::exists(ckpt_path)) throw CommandError("checkpoint not found: " + ckpt_path.string());
    const auto ckpt = load_checkpoint(ckpt_path);
    const auto split = load_split(config);

    const bool valid = config.eval_split == "valid";
    const KnowledgeGraph& kg = valid ? split.train : split.inference;
    if (ckpt.params.shape.num_relations != kg.num_relations()) {
        throw CommandError("checkpoint " + ckpt_path.string() + " has " +
                           std::to_string(ckpt.params.shape.num_relations) + " relations, graph has " +
                           std::to_string(kg.num_relations()));
    }
    TrainConfig tc = config.train;
    const auto table = mine_confidence(kg);
    const auto queries = make_ranked_queries(valid ? split.valid : split.test, kg.relations());
    const KnownAnswers known(valid ? split.train_known : split.inference_known, kg.relations());
    const auto m = evaluate(kg, ckpt.params, queries, known, eval_options(tc, &table));

    print_metrics(out, config.eval_split, m);
    auto f = open_output(config.out_dir / "metrics.csv");
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%zu,%.6f,%.6f,%.6f,%.6f\n", config.eval_split.c_str(), m.count, m.mrr(),
                  m.hits_at(1), m.hits_at(3), m.hits_at(10));
    f << "split,queries,mrr,hits1,hits3,hits10\n" << buf;
}

void cmd_sweep(const RunConfig& config, std::ostream& out) {
    const auto split = load_split(config);
    const auto rows = sweep_pe(split, config.train, config.sweep_values);
    auto f = open_output(config.out_dir / "sweep_pe.csv");
    write_sweep_csv(f, rows);
    write_sweep_csv(out, rows);
}

}  // namespace

std::vector<std::string> command_names() { return {"gen-synth", "mine-rules", "train", "eval", "sweep"}; }

void run(const std::string& command, const RunConfig& config, std::ostream& out) {
    omp_set_num_threads(config.workers);
    echo_config(config);
    if (command == "gen-synth") cmd_gen_synth(config);
    else if (command == "mine-rules") cmd_mine_rules(config, out);
    else if (command == "train") cmd_train(config, out);
    else if (command == "eval") cmd_eval(config, out);
    else if (command == "sweep") cmd_sweep(config, out);
    else throw CommandError("unknown command '" + command + "'");
}

std::string error_line(const std::exception& e) {
    std::string kind = "runtime";
    if (dynamic_cast<const ConfigError*>(&e)) kind = "config";
    else if (dynamic_cast<const ParseError*>(&e)) kind = "parse";
    else if (dynamic_cast<const CommandError*>(&e)) kind = "command";
    else if (dynamic_cast<const std::invalid_argument*>(&e)) kind = "invalid-argument";
    else if (dynamic_cast<const fs::filesystem_error*>(&e)) kind = "io";
    std::string msg = e.what();
    for (char& c : msg) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return "error: " + kind + ": " + msg;
}

}  // namespace cpsr::cli
