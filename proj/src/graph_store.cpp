#include "cpsr/graph_store.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

namespace cpsr {

namespace {

std::string parse_message(std::size_t line, const std::string& message) {
    return "line " + std::to_string(line) + ": " + message;
}

struct TripleHash {
    std::size_t operator()(const Triple& t) const {
        std::uint64_t h = t.head;
        h = h * 0x9E3779B97F4A7C15ULL + t.rel;
        h = h * 0x9E3779B97F4A7C15ULL + t.tail;
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

}  // namespace

ParseError::ParseError(std::size_t line, const std::string& message)
    : std::runtime_error(parse_message(line, message)), line_(line), reason_(message) {}

std::vector<RawTriple> load_triples(std::istream& in) {
    std::vector<RawTriple> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 3) {
            throw ParseError(line_no, "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
        }
        for (const auto& f : fields) {
            if (f.empty()) throw ParseError(line_no, "empty field");
        }
        out.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2])});
    }
    return out;
}

std::vector<RawTriple> load_triples_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open triple file: " + path.string());
    try {
        return load_triples(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path.string() + ": " + e.reason());
    }
}

void write_triples(std::ostream& out, std::span<const RawTriple> triples) {
    for (const auto& t : triples) out << t.head << '\t' << t.rel << '\t' << t.tail << '\n';
}

// ---------------------------------------------------------------------------

RelationVocab::RelationVocab(std::vector<std::string> base_names, bool inverse, bool self_loop)
    : names_(std::move(base_names)), inverse_(inverse), self_loop_(self_loop) {
    for (RelationId i = 0; i < names_.size(); ++i) {
        if (!index_.emplace(names_[i], i).second) {
            throw std::invalid_argument("duplicate relation name: " + names_[i]);
        }
    }
}

std::size_t RelationVocab::size() const {
    return names_.size() * (inverse_ ? 2 : 1) + (self_loop_ ? 1 : 0);
}

std::optional<RelationId> RelationVocab::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

RelationKind RelationVocab::kind(RelationId r) const {
    if (r >= size()) throw std::out_of_range("relation id out of range");
    const std::size_t b = names_.size();
    if (r < b) return RelationKind::Base;
    if (inverse_ && r < 2 * b) return RelationKind::Inverse;
    return RelationKind::SelfLoop;
}

RelationId RelationVocab::inverse(RelationId r) const {
    const auto b = static_cast<RelationId>(names_.size());
    switch (kind(r)) {
        case RelationKind::Base:
            if (!inverse_) throw std::logic_error("vocabulary has no inverse relations");
            return r + b;
        case RelationKind::Inverse:
            return r - b;
        case RelationKind::SelfLoop:
            return r;
    }
    return r;
}

RelationId RelationVocab::self_loop() const {
    if (!self_loop_) throw std::logic_error("vocabulary has no self-loop relation");
    return static_cast<RelationId>(size() - 1);
}

std::string RelationVocab::name(RelationId r) const {
    switch (kind(r)) {
        case RelationKind::Base:
            return names_[r];
        case RelationKind::Inverse:
            return names_[r - names_.size()] + "^-1";
        case RelationKind::SelfLoop:
            return "SELF";
    }
    return {};
}

bool RelationVocab::operator==(const RelationVocab& other) const {
    return names_ == other.names_ && inverse_ == other.inverse_ && self_loop_ == other.self_loop_;
}

// ---------------------------------------------------------------------------

std::span<const Triple> KnowledgeGraph::out_edges(EntityId v) const {
    if (v >= num_entities()) throw std::out_of_range("entity id out of range");
    return std::span<const Triple>(adjacency_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
}

std::optional<EdgeId> KnowledgeGraph::find_edge(const Triple& t) const {
    if (t.head >= num_entities()) return std::nullopt;
    for (EdgeId e = offsets_[t.head]; e < offsets_[t.head + 1]; ++e) {
        if (adjacency_[e] == t) return e;
    }
    return std::nullopt;
}

std::span<const RelationId> KnowledgeGraph::incident_relations(EntityId v) const {
    if (v >= num_entities()) throw std::out_of_range("entity id out of range");
    return std::span<const RelationId>(incident_).subspan(incident_offsets_[v],
                                                          incident_offsets_[v + 1] - incident_offsets_[v]);
}

std::optional<EntityId> KnowledgeGraph::find_entity(std::string_view name) const {
    auto it = entity_index_.find(std::string(name));
    if (it == entity_index_.end()) return std::nullopt;
    return it->second;
}

std::vector<RawTriple> KnowledgeGraph::base_raw_triples() const {
    std::vector<RawTriple> out;
    out.reserve(num_base_triples_);
    for (std::size_t i = 0; i < num_base_triples_; ++i) {
        const auto& t = triples_[i];
        out.push_back({entity_names_[t.head], relations_.name(t.rel), entity_names_[t.tail]});
    }
    return out;
}

KnowledgeGraph build_graph_impl(std::span<const RawTriple> facts, RelationVocab vocab,
                                std::span<const RawTriple> vocab_only, bool grow_relations) {
    KnowledgeGraph g;
    auto entity_id = [&g](const std::string& name) {
        auto [it, inserted] = g.entity_index_.emplace(name, static_cast<EntityId>(g.entity_names_.size()));
        if (inserted) g.entity_names_.push_back(name);
        return it->second;
    };

    std::vector<std::string> rel_names;
    std::unordered_map<std::string, RelationId> rel_index;
    auto relation_id = [&](const std::string& name) -> RelationId {
        if (!grow_relations) {
            auto r = vocab.find(name);
            if (!r) throw std::invalid_argument("unknown relation: " + name);
            return *r;
        }
        auto [it, inserted] = rel_index.emplace(name, static_cast<RelationId>(rel_names.size()));
        if (inserted) rel_names.push_back(name);
        return it->second;
    };

    std::vector<Triple> base;
    base.reserve(facts.size());
    std::unordered_set<Triple, TripleHash> seen;
    for (const auto& raw : facts) {
        Triple t{entity_id(raw.head), relation_id(raw.rel), entity_id(raw.tail)};
        if (seen.insert(t).second) base.push_back(t);
    }
    for (const auto& raw : vocab_only) {
        relation_id(raw.rel);
        entity_id(raw.head);
        entity_id(raw.tail);
    }
    if (grow_relations) {
        vocab = RelationVocab(std::move(rel_names), vocab.has_inverse(), vocab.has_self_loop());
    }
    g.relations_ = std::move(vocab);

    const auto& rv = g.relations_;
    g.num_base_triples_ = base.size();
    g.triples_ = std::move(base);
    if (rv.has_inverse()) {
        for (std::size_t i = 0; i < g.num_base_triples_; ++i) {
            const Triple t = g.triples_[i];
            g.triples_.push_back({t.tail, rv.inverse(t.rel), t.head});
        }
    }
    if (rv.has_self_loop()) {
        const RelationId self = rv.self_loop();
        for (EntityId v = 0; v < g.entity_names_.size(); ++v) g.triples_.push_back({v, self, v});
    }

    // Stable counting sort by head keeps triple-list order within each head.
    const std::size_t n = g.entity_names_.size();
    g.offsets_.assign(n + 1, 0);
    for (const auto& t : g.triples_) ++g.offsets_[t.head + 1];
    for (std::size_t v = 0; v < n; ++v) g.offsets_[v + 1] += g.offsets_[v];
    g.adjacency_.resize(g.triples_.size());
    {
        std::vector<EdgeId> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
        for (const auto& t : g.triples_) g.adjacency_[cursor[t.head]++] = t;
    }

    g.incident_offsets_.assign(n + 1, 0);
    std::vector<RelationId> scratch;
    for (EntityId v = 0; v < n; ++v) {
        scratch.clear();
        for (EdgeId e = g.offsets_[v]; e < g.offsets_[v + 1]; ++e) scratch.push_back(g.adjacency_[e].rel);
        std::sort(scratch.begin(), scratch.end());
        scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
        g.incident_.insert(g.incident_.end(), scratch.begin(), scratch.end());
        g.incident_offsets_[v + 1] = g.incident_.size();
    }
    return g;
}

KnowledgeGraph build_graph(std::span<const RawTriple> raw, GraphOptions options) {
    return build_graph_impl(raw, RelationVocab({}, options.add_inverse, options.add_self_loop), {}, true);
}

KnowledgeGraph build_graph(std::span<const RawTriple> facts, const RelationVocab& shared,
                           std::span<const RawTriple> vocab_only) {
    return build_graph_impl(facts, shared, vocab_only, false);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<RawTriple> load_optional(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return {};
    return load_triples_file(path);
}

void write_file(const std::filesystem::path& path, std::span<const RawTriple> triples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_triples(out, triples);
}

std::vector<Triple> resolve(const KnowledgeGraph& g, std::span<const RawTriple> raw, const char* what) {
    std::vector<Triple> out;
    out.reserve(raw.size());
    for (const auto& t : raw) {
        auto h = g.find_entity(t.head);
        auto r = g.relations().find(t.rel);
        auto o = g.find_entity(t.tail);
        if (!r) throw std::invalid_argument(std::string(what) + ": unknown relation " + t.rel);
        if (!h || !o) throw std::invalid_argument(std::string(what) + ": unknown entity");
        out.push_back({*h, *r, *o});
    }
    return out;
}

std::vector<RawTriple> concat(std::span<const RawTriple> a, std::span<const RawTriple> b) {
    std::vector<RawTriple> out(a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

}  // namespace

RawSplit load_raw_split(const std::filesystem::path& data_dir, const std::filesystem::path& ind_dir) {
    RawSplit s;
    s.train = load_triples_file(data_dir / "train.txt");
    s.valid = load_optional(data_dir / "valid.txt");
    s.test = load_optional(data_dir / "test.txt");
    s.ind_train = load_triples_file(ind_dir / "train.txt");
    s.ind_valid = load_optional(ind_dir / "valid.txt");
    s.ind_test = load_triples_file(ind_dir / "test.txt");
    return s;
}

void write_raw_split(const RawSplit& split, const std::filesystem::path& data_dir,
                     const std::filesystem::path& ind_dir) {
    std::filesystem::create_directories(data_dir);
    std::filesystem::create_directories(ind_dir);
    write_file(data_dir / "train.txt", split.train);
    write_file(data_dir / "valid.txt", split.valid);
    write_file(data_dir / "test.txt", split.test);
    write_file(ind_dir / "train.txt", split.ind_train);
    write_file(ind_dir / "valid.txt", split.ind_valid);
    write_file(ind_dir / "test.txt", split.ind_test);
}

InductiveSplit make_split(const RawSplit& raw, GraphOptions options) {
    InductiveSplit s;
    const auto train_queries = concat(raw.valid, raw.test);
    const auto ind_queries = concat(raw.ind_valid, raw.ind_test);

    const RelationVocab vocab = build_graph(raw.train, options).relations();
    s.train = build_graph(raw.train, vocab, train_queries);
    s.inference = build_graph(raw.ind_train, vocab, ind_queries);

    for (const auto& name : s.inference.entity_names()) {
        if (s.train.find_entity(name)) {
            throw std::invalid_argument("inference entity also in training graph: " + name);
        }
    }

    s.valid = resolve(s.train, raw.valid, "valid.txt");
    s.test = resolve(s.inference, raw.ind_test, "ind test.txt");

    auto base_of = [](const KnowledgeGraph& g) {
        auto t = g.triples();
        return std::vector<Triple>(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(g.num_base_triples()));
    };
    s.train_known = base_of(s.train);
    for (const auto& t : resolve(s.train, train_queries, "train-side queries")) s.train_known.push_back(t);
    s.inference_known = base_of(s.inference);
    for (const auto& t : resolve(s.inference, ind_queries, "inference-side queries")) s.inference_known.push_back(t);
    return s;
}

}  // namespace cpsr
