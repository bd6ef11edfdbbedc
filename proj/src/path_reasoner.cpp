#include "cpsr/path_reasoner.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace cpsr {

namespace {

void check_relation(const ModelParams& params, RelationId r) {
    if (r >= params.shape.num_relations) throw std::invalid_argument("relation id outside the model");
}

// out = W^T [a; b], W row-major 2d x d.
void mix_into(std::span<const double> w, std::span<const double> a, std::span<const double> b,
              std::span<double> out) {
    const std::size_t d = out.size();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double ai = a[i];
        const double* row = w.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) out[j] += row[j] * ai;
    }
    for (std::size_t i = 0; i < d; ++i) {
        const double bi = b[i];
        const double* row = w.data() + (d + i) * d;
        for (std::size_t j = 0; j < d; ++j) out[j] += row[j] * bi;
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void hash_block(std::uint64_t& h, std::span<const double> block) {
    for (double x : block) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof bits);
        h = (h ^ bits) * 0x100000001B3ULL;
    }
}

}  // namespace

std::vector<EntityId> Frontier::selected_entities() const {
    std::vector<EntityId> out;
    out.reserve(selected.size());
    for (auto i : selected) out.push_back(entities[i]);
    return out;
}

std::optional<std::size_t> Frontier::index_of(EntityId v) const {
    auto it = std::lower_bound(entities.begin(), entities.end(), v);
    if (it == entities.end() || *it != v) return std::nullopt;
    return static_cast<std::size_t>(it - entities.begin());
}

double ScoreMap::score(EntityId v) const {
    auto it = std::lower_bound(entities.begin(), entities.end(), v);
    if (it == entities.end() || *it != v) return 0.0;
    return scores[static_cast<std::size_t>(it - entities.begin())];
}

std::vector<double> ScoreMap::dense() const {
    std::vector<double> out(num_entities, 0.0);
    for (std::size_t i = 0; i < entities.size(); ++i) out[entities[i]] = scores[i];
    return out;
}

std::vector<double> edge_message(const ModelParams& params, RelationId query_rel, RelationId rel,
                                 std::optional<std::span<const double>> h_pred) {
    check_relation(params, query_rel);
    check_relation(params, rel);
    const std::size_t d = params.dim();
    std::vector<double> out(d);
    mix_into(params.mix_matrix(query_rel), params.relation(query_rel), params.relation(rel), out);
    if (h_pred) {
        if (h_pred->size() != d) throw std::invalid_argument("edge_message: predecessor embedding has wrong length");
        for (std::size_t j = 0; j < d; ++j) out[j] = (*h_pred)[j] + out[j];
    }
    return out;
}

std::vector<double> message_table(const ModelParams& params, RelationId query_rel) {
    check_relation(params, query_rel);
    const std::size_t d = params.dim();
    const std::size_t nr = params.shape.num_relations;
    std::vector<double> table(nr * d);
    const auto w = params.mix_matrix(query_rel);
    const auto hq = params.relation(query_rel);
    for (RelationId r = 0; r < nr; ++r) {
        mix_into(w, hq, params.relation(r), std::span<double>(table).subspan(r * d, d));
    }
    return table;
}

double node_score(const ModelParams& params, std::span<const double> h, std::uint32_t hop) {
    if (hop == 0) return 0.0;
    return dot(params.w_path, h);
}

Frontier origin_frontier(EntityId head, std::size_t dim) {
    Frontier f;
    f.hop = 0;
    f.entities = {head};
    f.embedding.assign(dim, 0.0);
    f.acc = {0.0};
    f.walks = {1.0};
    f.best_pred = {0};
    f.selected = {0};
    return f;
}

namespace {

// `slot` has one entry per entity, all -1 on entry and on exit.
HopRecord propagate_impl(const KnowledgeGraph& kg, const ModelParams& params, std::span<const double> messages,
                         const Query& query, const Frontier& prev, const HopMask* mask,
                         const ReasonerConfig& config, std::vector<std::int32_t>& slot) {
    const std::size_t d = params.dim();
    const std::uint32_t hop = prev.hop + 1;
    HopRecord rec;
    rec.frontier.hop = hop;

    std::vector<char> retained;
    if (mask) {
        rec.masked = true;
        rec.mask = *mask;
        retained.assign(kg.num_relations(), 0);
        for (RelationId r : mask->retained) retained[r] = 1;
    }

    std::vector<EntityId> targets;
    std::vector<EntityId> edge_tail;
    for (std::uint32_t i : prev.selected) {
        const EntityId x = prev.entities[i];
        const EdgeId end = kg.first_edge(x + 1);
        for (EdgeId e = kg.first_edge(x); e < end; ++e) {
            const Triple& t = kg.edge(e);
            if (mask && !retained[t.rel]) continue;
            if (!query.excluded_edges.empty() &&
                std::find(query.excluded_edges.begin(), query.excluded_edges.end(), e) != query.excluded_edges.end()) {
                continue;
            }
            rec.edge_src.push_back(i);
            rec.edge_rel.push_back(t.rel);
            edge_tail.push_back(t.tail);
            if (slot[t.tail] < 0) {
                slot[t.tail] = 0;
                targets.push_back(t.tail);
            }
        }
    }

    std::sort(targets.begin(), targets.end());
    for (std::size_t k = 0; k < targets.size(); ++k) slot[targets[k]] = static_cast<std::int32_t>(k);
    rec.edge_dst.resize(edge_tail.size());
    for (std::size_t k = 0; k < edge_tail.size(); ++k) rec.edge_dst[k] = static_cast<std::uint32_t>(slot[edge_tail[k]]);
    for (EntityId v : targets) slot[v] = -1;

    Frontier& f = rec.frontier;
    const std::size_t n = targets.size();
    f.entities = std::move(targets);
    std::vector<double> pre(n * d, 0.0);
    f.walks.assign(n, 0.0);
    for (std::size_t k = 0; k < rec.edge_src.size(); ++k) {
        double* out = pre.data() + rec.edge_dst[k] * d;
        const double* phi = messages.data() + rec.edge_rel[k] * d;
        const double walks = prev.walks[rec.edge_src[k]];
        f.walks[rec.edge_dst[k]] += walks;
        if (hop == 1) {
            for (std::size_t j = 0; j < d; ++j) out[j] += phi[j];
        } else {
            const double* h = prev.embedding.data() + rec.edge_src[k] * d;
            for (std::size_t j = 0; j < d; ++j) out[j] += h[j] + walks * phi[j];
        }
    }
    if (config.rectifier) {
        f.embedding.resize(n * d);
        for (std::size_t k = 0; k < n * d; ++k) f.embedding[k] = pre[k] > 0.0 ? pre[k] : 0.0;
        f.pre_activation = std::move(pre);
    } else {
        f.embedding = std::move(pre);
    }

    // Predecessor aggregation; edges are grouped by source so a source
    // contributes once per target under Sum.
    std::vector<double> pred_score(n, 0.0);
    std::vector<char> seen(n, 0);
    std::vector<std::uint32_t> last_src(n, std::numeric_limits<std::uint32_t>::max());
    f.best_pred.assign(n, 0);
    for (std::size_t k = 0; k < rec.edge_src.size(); ++k) {
        const auto dst = rec.edge_dst[k];
        const auto src = rec.edge_src[k];
        const double a = prev.acc[src];
        if (!seen[dst]) {
            seen[dst] = 1;
            pred_score[dst] = a;
            f.best_pred[dst] = src;
            last_src[dst] = src;
            continue;
        }
        if (a > prev.acc[f.best_pred[dst]]) f.best_pred[dst] = src;
        if (config.score_agg == ScoreAgg::Max) {
            pred_score[dst] = std::max(pred_score[dst], a);
        } else if (last_src[dst] != src) {
            pred_score[dst] += a;
        }
        last_src[dst] = src;
    }
    f.acc.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        f.acc[k] = cumulative_score(pred_score[k], node_score(params, f.emb(k, d), hop));
    }
    return rec;
}

}  // namespace

HopRecord propagate_hop(const KnowledgeGraph& kg, const ModelParams& params, std::span<const double> messages,
                        const Query& query, const Frontier& prev, const HopMask* mask,
                        const ReasonerConfig& config) {
    std::vector<std::int32_t> slot(kg.num_entities(), -1);
    return propagate_impl(kg, params, messages, query, prev, mask, config, slot);
}

std::vector<std::uint32_t> select_topk(const Frontier& frontier, std::size_t k) {
    if (k == 0) throw std::invalid_argument("select_topk: K must be at least 1");
    std::vector<std::uint32_t> idx(frontier.size());
    for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (idx.size() <= k) return idx;
    // Entities are ascending, so a smaller index means a smaller entity id.
    auto better = [&frontier](std::uint32_t a, std::uint32_t b) {
        if (frontier.acc[a] != frontier.acc[b]) return frontier.acc[a] > frontier.acc[b];
        return a < b;
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(), better);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::uint64_t params_fingerprint(const ModelParams& params, RelationId query_rel) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    hash_block(h, params.rel_emb);
    hash_block(h, params.mix_matrix(query_rel));
    hash_block(h, params.w_path);
    hash_block(h, params.w_out);
    return h;
}

ForwardResult forward(const KnowledgeGraph& kg, const ModelParams& params, const Query& query,
                      const ReasonerConfig& config, const MaskContext& mask) {
    if (query.head >= kg.num_entities()) throw std::invalid_argument("query head is not in the graph");
    if (config.hops == 0) throw std::invalid_argument("at least one hop is required");
    if (params.shape.num_relations != kg.num_relations()) {
        throw std::invalid_argument("model and graph disagree on the relation count");
    }
    const std::size_t d = params.dim();

    ForwardResult out;
    ForwardTrace& trace = out.trace;
    trace.shape = params.shape;
    trace.fingerprint = params_fingerprint(params, query.relation);
    trace.num_entities = kg.num_entities();
    trace.head = query.head;
    trace.query_rel = query.relation;
    trace.hops_requested = config.hops;
    trace.rectifier = config.rectifier;
    trace.origin = origin_frontier(query.head, d);

    const auto messages = message_table(params, query.relation);
    std::vector<std::int32_t> slot(kg.num_entities(), -1);
    for (std::uint32_t l = 1; l <= config.hops; ++l) {
        const Frontier& prev = trace.hops.empty() ? trace.origin : trace.hops.back().frontier;
        std::optional<HopMask> hop_mask;
        if (mask.table) {
            const auto candidates = candidate_relations(kg, prev.selected_entities());
            KeyedStream rng(mask.config.seed, mask.epoch, mask.query_index, l);
            hop_mask = build_hop_mask(*mask.table, query.relation, candidates, mask.config, rng, l);
        }
        HopRecord rec =
            propagate_impl(kg, params, messages, query, prev, hop_mask ? &*hop_mask : nullptr, config, slot);
        if (rec.frontier.empty()) break;
        rec.frontier.selected = select_topk(rec.frontier, config.top_k);
        trace.hops.push_back(std::move(rec));
    }

    out.scores.num_entities = kg.num_entities();
    if (trace.reached_final_hop()) {
        const Frontier& last = trace.hops.back().frontier;
        out.scores.entities = last.entities;
        out.scores.scores.resize(last.size());
        for (std::size_t i = 0; i < last.size(); ++i) out.scores.scores[i] = dot(params.w_out, last.emb(i, d));
    }
    return out;
}

}  // namespace cpsr
