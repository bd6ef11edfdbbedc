#include "cpsr/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace cpsr {

ConfigError::ConfigError(std::string key, const std::string& message)
    : std::runtime_error(key.empty() ? message : "'" + key + "': " + message), key_(std::move(key)) {}

std::filesystem::path RunConfig::resolved_ind_dir() const {
    if (!ind_dir.empty()) return ind_dir;
    return std::filesystem::path(data_dir.string() + "_ind");
}

std::filesystem::path RunConfig::resolved_checkpoint() const {
    return checkpoint.empty() ? out_dir / "best.ckpt" : checkpoint;
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos == v.size()) return x;
    } catch (const std::exception&) {
    }
    throw ConfigError(key, "expected a number, got '" + v + "'");
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
    }
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key, "expected on/off, got '" + v + "'");
}

std::string on_off(bool b) { return b ? "on" : "off"; }

struct Key {
    const char* name;
    const char* description;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        {"data_dir", "transductive split directory (train/valid/test.txt)",
         [](RunConfig& c, const std::string& v) { c.data_dir = v; }, [](const RunConfig& c) { return c.data_dir.string(); }},
        {"ind_dir", "inductive split directory; default data_dir + \"_ind\"",
         [](RunConfig& c, const std::string& v) { c.ind_dir = v; }, [](const RunConfig& c) { return c.ind_dir.string(); }},
        {"out_dir", "output directory", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
         [](const RunConfig& c) { return c.out_dir.string(); }},
        {"checkpoint", "checkpoint for eval; default out_dir/best.ckpt",
         [](RunConfig& c, const std::string& v) { c.checkpoint = v; }, [](const RunConfig& c) { return c.checkpoint.string(); }},
        {"preset", "named hyper-parameter preset", [](RunConfig& c, const std::string& v) { c.preset = v; },
         [](const RunConfig& c) { return c.preset; }},
        {"eval_split", "split ranked by eval: test or valid",
         [](RunConfig& c, const std::string& v) {
             if (v != "test" && v != "valid") throw ConfigError("eval_split", "expected test or valid, got '" + v + "'");
             c.eval_split = v;
         },
         [](const RunConfig& c) { return c.eval_split; }},
        {"L", "propagation hops", [](RunConfig& c, const std::string& v) {
             const auto x = to_uint("L", v);
             if (x == 0 || x > 64) throw ConfigError("L", "must lie in [1, 64]");
             c.train.reasoner.hops = static_cast<std::uint32_t>(x);
         },
         [](const RunConfig& c) { return std::to_string(c.train.reasoner.hops); }},
        {"K", "entities kept per hop; 'all' for no limit",
         [](RunConfig& c, const std::string& v) {
             if (v == "all") {
                 c.train.reasoner.top_k = ReasonerConfig::kUnlimited;
                 return;
             }
             const auto x = to_uint("K", v);
             if (x == 0) throw ConfigError("K", "must be positive");
             c.train.reasoner.top_k = x;
         },
         [](const RunConfig& c) {
             return c.train.reasoner.top_k == ReasonerConfig::kUnlimited ? std::string("all")
                                                                         : std::to_string(c.train.reasoner.top_k);
         }},
        {"d", "embedding dimension", [](RunConfig& c, const std::string& v) {
             const auto x = to_uint("d", v);
             if (x == 0) throw ConfigError("d", "must be positive");
             c.train.dim = x;
         },
         [](const RunConfig& c) { return std::to_string(c.train.dim); }},
        {"p_e", "drop scale", [](RunConfig& c, const std::string& v) { c.train.mask.p_e = to_double("p_e", v); },
         [](const RunConfig& c) { return fmt_double(c.train.mask.p_e); }},
        {"p_tau", "drop probability cap", [](RunConfig& c, const std::string& v) { c.train.mask.p_tau = to_double("p_tau", v); },
         [](const RunConfig& c) { return fmt_double(c.train.mask.p_tau); }},
        {"batch_size", "queries per optimizer step", [](RunConfig& c, const std::string& v) {
             const auto x = to_uint("batch_size", v);
             if (x == 0) throw ConfigError("batch_size", "must be positive");
             c.train.batch_size = x;
         },
         [](const RunConfig& c) { return std::to_string(c.train.batch_size); }},
        {"lr", "Adam learning rate", [](RunConfig& c, const std::string& v) { c.train.adam.lr = to_double("lr", v); },
         [](const RunConfig& c) { return fmt_double(c.train.adam.lr); }},
        {"beta1", "Adam beta1", [](RunConfig& c, const std::string& v) { c.train.adam.beta1 = to_double("beta1", v); },
         [](const RunConfig& c) { return fmt_double(c.train.adam.beta1); }},
        {"beta2", "Adam beta2", [](RunConfig& c, const std::string& v) { c.train.adam.beta2 = to_double("beta2", v); },
         [](const RunConfig& c) { return fmt_double(c.train.adam.beta2); }},
        {"eps", "Adam epsilon", [](RunConfig& c, const std::string& v) { c.train.adam.eps = to_double("eps", v); },
         [](const RunConfig& c) { return fmt_double(c.train.adam.eps); }},
        {"epochs", "training epochs", [](RunConfig& c, const std::string& v) {
             c.train.epochs = static_cast<std::uint32_t>(to_uint("epochs", v));
         },
         [](const RunConfig& c) { return std::to_string(c.train.epochs); }},
        {"seed", "seed for init, shuffling and masking", [](RunConfig& c, const std::string& v) {
             c.train.seed = to_uint("seed", v);
             c.train.mask.seed = c.train.seed;
         },
         [](const RunConfig& c) { return std::to_string(c.train.seed); }},
        {"workers", "OpenMP threads", [](RunConfig& c, const std::string& v) {
             const auto x = to_uint("workers", v);
             if (x == 0 || x > 4096) throw ConfigError("workers", "must lie in [1, 4096]");
             c.workers = static_cast<int>(x);
         },
         [](const RunConfig& c) { return std::to_string(c.workers); }},
        {"masking", "rule-guided masking during training",
         [](RunConfig& c, const std::string& v) { c.train.masking = to_bool("masking", v); },
         [](const RunConfig& c) { return on_off(c.train.masking); }},
        {"eval_mask", "rule-guided masking at evaluation",
         [](RunConfig& c, const std::string& v) { c.train.eval_mask = to_bool("eval_mask", v); },
         [](const RunConfig& c) { return on_off(c.train.eval_mask); }},
        {"mask_resample", "epoch: new masks every epoch; fixed: one mask per query",
         [](RunConfig& c, const std::string& v) {
             if (v == "epoch") c.train.resample_mask_per_epoch = true;
             else if (v == "fixed") c.train.resample_mask_per_epoch = false;
             else throw ConfigError("mask_resample", "expected epoch or fixed, got '" + v + "'");
         },
         [](const RunConfig& c) { return std::string(c.train.resample_mask_per_epoch ? "epoch" : "fixed"); }},
        {"score_agg", "frontier score aggregation: max or sum",
         [](RunConfig& c, const std::string& v) {
             if (v == "max") c.train.reasoner.score_agg = ScoreAgg::Max;
             else if (v == "sum") c.train.reasoner.score_agg = ScoreAgg::Sum;
             else throw ConfigError("score_agg", "expected max or sum, got '" + v + "'");
         },
         [](const RunConfig& c) { return std::string(c.train.reasoner.score_agg == ScoreAgg::Max ? "max" : "sum"); }},
        {"shared_mix", "one mixing matrix for all query relations",
         [](RunConfig& c, const std::string& v) { c.train.shared_mix = to_bool("shared_mix", v); },
         [](const RunConfig& c) { return on_off(c.train.shared_mix); }},
        {"rectifier", "ReLU on hidden states", [](RunConfig& c, const std::string& v) {
             c.train.reasoner.rectifier = to_bool("rectifier", v);
         },
         [](const RunConfig& c) { return on_off(c.train.reasoner.rectifier); }},
        {"filtered", "filtered ranking", [](RunConfig& c, const std::string& v) { c.train.filtered = to_bool("filtered", v); },
         [](const RunConfig& c) { return on_off(c.train.filtered); }},
        {"inverse", "add inverse relations", [](RunConfig& c, const std::string& v) { c.inverse = to_bool("inverse", v); },
         [](const RunConfig& c) { return on_off(c.inverse); }},
        {"self_loop", "add self-loop relation", [](RunConfig& c, const std::string& v) { c.self_loop = to_bool("self_loop", v); },
         [](const RunConfig& c) { return on_off(c.self_loop); }},
        {"resume", "continue from out_dir/last.ckpt", [](RunConfig& c, const std::string& v) {
             c.train.resume = to_bool("resume", v);
         },
         [](const RunConfig& c) { return on_off(c.train.resume); }},
        {"sweep_values", "comma-separated p_e values for sweep",
         [](RunConfig& c, const std::string& v) {
             std::vector<double> out;
             std::stringstream ss(v);
             std::string item;
             while (std::getline(ss, item, ',')) out.push_back(to_double("sweep_values", trim(item)));
             if (out.empty()) throw ConfigError("sweep_values", "must list at least one value");
             c.sweep_values = std::move(out);
         },
         [](const RunConfig& c) {
             std::string s;
             for (double x : c.sweep_values) s += (s.empty() ? "" : ",") + fmt_double(x);
             return s;
         }},
        {"synth_entities", "gen-synth: training graph entities", [](RunConfig& c, const std::string& v) {
             c.synth.train_entities = to_uint("synth_entities", v);
         },
         [](const RunConfig& c) { return std::to_string(c.synth.train_entities); }},
        {"synth_ind_entities", "gen-synth: inference graph entities", [](RunConfig& c, const std::string& v) {
             c.synth.inference_entities = to_uint("synth_ind_entities", v);
         },
         [](const RunConfig& c) { return std::to_string(c.synth.inference_entities); }},
        {"synth_density", "gen-synth: distractors per rule-body triple", [](RunConfig& c, const std::string& v) {
             c.synth.distractor_density = to_double("synth_density", v);
         },
         [](const RunConfig& c) { return fmt_double(c.synth.distractor_density); }},
        {"synth_distractor_relations", "gen-synth: distractor relation count", [](RunConfig& c, const std::string& v) {
             c.synth.distractor_relations = to_uint("synth_distractor_relations", v);
         },
         [](const RunConfig& c) { return std::to_string(c.synth.distractor_relations); }},
        {"synth_holdout", "gen-synth: fraction of head facts held out", [](RunConfig& c, const std::string& v) {
             c.synth.holdout = to_double("synth_holdout", v);
         },
         [](const RunConfig& c) { return fmt_double(c.synth.holdout); }},
    };
    return table;
}

const Key* find_key(const std::string& name) {
    for (const Key& k : keys()) {
        if (name == k.name) return &k;
    }
    return nullptr;
}

struct Preset {
    std::uint32_t hops;
    std::size_t top_k;
    double p_e;
    std::size_t batch_size;
};

const std::map<std::string, Preset>& presets() {
    static const std::map<std::string, Preset> table = {
        {"wn18rr_v1", {3, 150, 0.5, 100}}, {"wn18rr_v2", {3, 50, 0.3, 50}},
        {"wn18rr_v3", {7, 100, 0.3, 100}}, {"wn18rr_v4", {3, 300, 0.6, 10}},
        {"fb237_v1", {7, 300, 0.3, 20}},   {"fb237_v2", {3, 250, 0.7, 10}},
        {"fb237_v3", {7, 300, 0.3, 20}},   {"fb237_v4", {5, 300, 0.4, 20}},
    };
    return table;
}

Overrides parse_lines(std::string_view text) {
    Overrides out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        std::string line(text.substr(start, end - start));
        start = end + 1;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(trim(line), "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

}  // namespace

RunConfig parse_config(std::string_view file_text, const Overrides& overrides, std::optional<std::string> env_seed,
                       bool require_dataset) {
    Overrides entries = parse_lines(file_text);
    entries.insert(entries.end(), overrides.begin(), overrides.end());
    for (const auto& [k, v] : entries) {
        if (!find_key(k)) throw ConfigError(k, "unknown key");
    }

    RunConfig c;
    std::string preset;
    bool seed_given = false;
    for (const auto& [k, v] : entries) {
        if (k == "preset") preset = v;
        if (k == "seed") seed_given = true;
    }
    if (!preset.empty()) {
        const auto it = presets().find(preset);
        if (it == presets().end()) throw ConfigError("preset", "unknown preset '" + preset + "'");
        c.preset = preset;
        c.train.reasoner.hops = it->second.hops;
        c.train.reasoner.top_k = it->second.top_k;
        c.train.mask.p_e = it->second.p_e;
        c.train.mask.p_tau = 0.5;
        c.train.batch_size = it->second.batch_size;
    }
    if (env_seed && !seed_given) find_key("seed")->set(c, trim(*env_seed));
    for (const auto& [k, v] : entries) find_key(k)->set(c, v);

    if (require_dataset && c.data_dir.empty()) throw ConfigError("data_dir", "is required");
    try {
        c.train.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("", e.what());
    }
    return c;
}

std::string RunConfig::to_text() const {
    std::string out;
    for (const Key& k : keys()) out += std::string(k.name) + " = " + k.get(*this) + "\n";
    return out;
}

std::vector<KeyInfo> config_keys() {
    std::vector<KeyInfo> out;
    for (const Key& k : keys()) out.push_back({k.name, k.description});
    return out;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& [name, p] : presets()) out.push_back(name);
    return out;
}

}  // namespace cpsr
