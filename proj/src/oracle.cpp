#include "cpsr/oracle.hpp"

#include <stdexcept>

namespace cpsr::oracle {

namespace {

void extend(const KnowledgeGraph& kg, EntityId at, EntityId target, std::uint32_t remaining, const EdgeFilter& keep,
            Walk& walk, PathList& out) {
    if (remaining == 0) {
        if (at == target) out.push_back(walk);
        return;
    }
    for (const Triple& t : kg.triples()) {
        if (t.head != at) continue;
        if (keep && !keep(t)) continue;
        walk.push_back(t);
        extend(kg, t.tail, target, remaining - 1, keep, walk, out);
        walk.pop_back();
    }
}

}  // namespace

PathList enumerate_paths(const KnowledgeGraph& kg, EntityId source, EntityId target, std::uint32_t length,
                         const EdgeFilter& retained) {
    if (length > kMaxWalkLength) throw std::invalid_argument("walk enumeration is limited to length 4");
    PathList out;
    Walk walk;
    extend(kg, source, target, length, retained, walk, out);
    return out;
}

std::vector<double> brute_embedding(const KnowledgeGraph& kg, const ModelParams& params, RelationId query_rel,
                                    EntityId source, EntityId target, std::uint32_t length,
                                    const EdgeFilter& retained) {
    const std::size_t d = params.dim();
    const auto w = params.mix_matrix(query_rel);
    auto message = [&](RelationId r) {
        std::vector<double> concat(2 * d);
        for (std::size_t i = 0; i < d; ++i) {
            concat[i] = params.rel_emb[query_rel * d + i];
            concat[d + i] = params.rel_emb[r * d + i];
        }
        std::vector<double> phi(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t i = 0; i < 2 * d; ++i) phi[j] += w[i * d + j] * concat[i];
        }
        return phi;
    };

    std::vector<double> h(d, 0.0);
    for (const Walk& walk : enumerate_paths(kg, source, target, length, retained)) {
        for (const Triple& t : walk) {
            const auto phi = message(t.rel);
            for (std::size_t j = 0; j < d; ++j) h[j] += phi[j];
        }
    }
    return h;
}

Gradients finite_diff_gradients(const std::function<double(const ModelParams&)>& loss, const ModelParams& params,
                                double step) {
    if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    Gradients g = Gradients::zeros_like(params);
    ModelParams probe = params;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double x = params.at(k);
        probe.at(k) = x + step;
        const double up = loss(probe);
        probe.at(k) = x - step;
        const double down = loss(probe);
        probe.at(k) = x;
        g.at(k) = (up - down) / (2.0 * step);
    }
    return g;
}

}  // namespace cpsr::oracle
