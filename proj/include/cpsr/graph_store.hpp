#pragma once
// Immutable triple store with dense id vocabularies.
//
// Relation id layout for a vocabulary with B base relations:
//   [0, B)        base relations, first-appearance order
//   [B, 2B)       inverses (r + B), when inverse augmentation is on
//   last id       SELF, when self-loop augmentation is on
//
// Out-adjacency is a CSR index over the triple list grouped by head entity;
// an edge id is a position in that index.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cpsr {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using EdgeId = std::size_t;

struct RawTriple {
    std::string head;
    std::string rel;
    std::string tail;

    bool operator==(const RawTriple&) const = default;
};

struct Triple {
    EntityId head = 0;
    RelationId rel = 0;
    EntityId tail = 0;

    auto operator<=>(const Triple&) const = default;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& message);
    std::size_t line() const { return line_; }
    const std::string& reason() const { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

// Order-preserving parse of `head<TAB>rel<TAB>tail` lines. Blank lines are
// skipped; duplicates are kept.
std::vector<RawTriple> load_triples(std::istream& in);
std::vector<RawTriple> load_triples_file(const std::filesystem::path& path);
void write_triples(std::ostream& out, std::span<const RawTriple> triples);

enum class RelationKind : std::uint8_t { Base, Inverse, SelfLoop };

class RelationVocab {
public:
    RelationVocab() = default;
    RelationVocab(std::vector<std::string> base_names, bool inverse, bool self_loop);

    std::size_t size() const;
    std::size_t base_count() const { return names_.size(); }
    bool has_inverse() const { return inverse_; }
    bool has_self_loop() const { return self_loop_; }

    // Base relations only.
    std::optional<RelationId> find(std::string_view name) const;
    RelationKind kind(RelationId r) const;
    // Base <-> inverse; SELF maps to itself.
    RelationId inverse(RelationId r) const;
    RelationId self_loop() const;
    std::string name(RelationId r) const;

    bool operator==(const RelationVocab& other) const;

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, RelationId> index_;
    bool inverse_ = false;
    bool self_loop_ = false;
};

struct GraphOptions {
    bool add_inverse = true;
    bool add_self_loop = false;
};

class KnowledgeGraph {
public:
    std::size_t num_entities() const { return entity_names_.size(); }
    std::size_t num_relations() const { return relations_.size(); }
    std::size_t num_triples() const { return triples_.size(); }
    std::size_t num_base_triples() const { return num_base_triples_; }

    const RelationVocab& relations() const { return relations_; }
    // Base triples first (input order, deduplicated), then inverses, then
    // self loops in entity order.
    std::span<const Triple> triples() const { return triples_; }

    std::span<const Triple> out_edges(EntityId v) const;
    EdgeId first_edge(EntityId v) const { return offsets_[v]; }
    const Triple& edge(EdgeId e) const { return adjacency_[e]; }
    std::size_t num_edges() const { return adjacency_.size(); }
    std::optional<EdgeId> find_edge(const Triple& t) const;

    // R(v): sorted relation ids on the out-edges of v. Throws std::out_of_range.
    std::span<const RelationId> incident_relations(EntityId v) const;

    std::optional<EntityId> find_entity(std::string_view name) const;
    const std::string& entity_name(EntityId v) const { return entity_names_.at(v); }
    std::span<const std::string> entity_names() const { return entity_names_; }

    std::vector<RawTriple> base_raw_triples() const;

private:
    friend KnowledgeGraph build_graph_impl(std::span<const RawTriple>, RelationVocab,
                                           std::span<const RawTriple>, bool);

    RelationVocab relations_;
    std::vector<std::string> entity_names_;
    std::unordered_map<std::string, EntityId> entity_index_;
    std::vector<Triple> triples_;
    std::size_t num_base_triples_ = 0;
    std::vector<EdgeId> offsets_;
    std::vector<Triple> adjacency_;
    std::vector<std::size_t> incident_offsets_;
    std::vector<RelationId> incident_;
};

// Fresh relation vocabulary in first-appearance order.
KnowledgeGraph build_graph(std::span<const RawTriple> raw, GraphOptions options);

// Shares an existing relation vocabulary; an unknown relation name throws.
// Entities of `vocab_only` triples join the entity vocabulary without edges.
KnowledgeGraph build_graph(std::span<const RawTriple> facts, const RelationVocab& shared,
                           std::span<const RawTriple> vocab_only = {});

// Raw files of an inductive benchmark: the original graph directory and its
// `_ind` sibling, each holding train.txt / valid.txt / test.txt.
struct RawSplit {
    std::vector<RawTriple> train;
    std::vector<RawTriple> valid;
    std::vector<RawTriple> test;
    std::vector<RawTriple> ind_train;
    std::vector<RawTriple> ind_valid;
    std::vector<RawTriple> ind_test;
};

RawSplit load_raw_split(const std::filesystem::path& data_dir, const std::filesystem::path& ind_dir);
void write_raw_split(const RawSplit& split, const std::filesystem::path& data_dir,
                     const std::filesystem::path& ind_dir);

struct InductiveSplit {
    KnowledgeGraph train;
    KnowledgeGraph inference;
    std::vector<Triple> valid;  // ids of `train`
    std::vector<Triple> test;   // ids of `inference`
    // Every true triple known on each side (facts plus held-out queries),
    // base ids only; used to filter rankings.
    std::vector<Triple> train_known;
    std::vector<Triple> inference_known;
};

// Throws if an inference entity also appears in the training graph or a
// query uses an unknown relation.
InductiveSplit make_split(const RawSplit& raw, GraphOptions options);

}  // namespace cpsr
