#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>

#include "cpsr/oracle.hpp"

namespace cpsr::oracle {

namespace {

struct SideFacts {
    std::vector<RawTriple> facts;
    std::vector<RawTriple> held_out;
};

// Distractors cycle through the first `relation_limit` distractor relations
// before choosing at random, so each of them occurs when there is room.
SideFacts generate_side(const PlantedRuleSpec& spec, std::size_t n, const std::string& prefix,
                        std::size_t relation_limit, std::mt19937_64& rng) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    auto name = [&prefix](std::size_t i) { return prefix + std::to_string(i); };

    const std::size_t na = n / 3, nb = n / 3;
    const std::vector<std::size_t> layer_a(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(na));
    const std::vector<std::size_t> layer_b(perm.begin() + static_cast<std::ptrdiff_t>(na),
                                           perm.begin() + static_cast<std::ptrdiff_t>(na + nb));
    const std::vector<std::size_t> layer_c(perm.begin() + static_cast<std::ptrdiff_t>(na + nb), perm.end());

    // Round-robin over the shuffled layers keeps in-degrees balanced.
    std::vector<RawTriple> body;
    std::vector<std::size_t> first_hop(n, n);
    for (std::size_t i = 0; i < layer_a.size(); ++i) {
        const std::size_t a = layer_a[i], b = layer_b[i % layer_b.size()];
        first_hop[a] = b;
        body.push_back({name(a), spec.body_first, name(b)});
    }
    std::vector<std::vector<std::size_t>> second_hop(n);
    std::bernoulli_distribution two(0.5);
    for (std::size_t j = 0; j < layer_b.size(); ++j) {
        const std::size_t b = layer_b[j];
        second_hop[b].push_back(layer_c[j % layer_c.size()]);
        if (layer_c.size() > 1 && two(rng)) second_hop[b].push_back(layer_c[(j + 1) % layer_c.size()]);
        for (std::size_t c : second_hop[b]) body.push_back({name(b), spec.body_second, name(c)});
    }

    std::vector<RawTriple> heads;
    for (std::size_t a : layer_a) {
        for (std::size_t c : second_hop[first_hop[a]]) heads.push_back({name(a), spec.head, name(c)});
    }

    std::vector<RawTriple> distractors;
    const auto n_distract = static_cast<std::size_t>(std::llround(spec.distractor_density * static_cast<double>(body.size())));
    if (n_distract > 0 && relation_limit > 0 && n > 1) {
        std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
        std::uniform_int_distribution<std::size_t> ent(0, n - 1), rel(0, relation_limit - 1);
        while (distractors.size() < n_distract) {
            const std::size_t u = ent(rng), v = ent(rng);
            const std::size_t k = distractors.size() < relation_limit ? distractors.size() : rel(rng);
            if (u == v || !seen.emplace(u, k, v).second) continue;
            distractors.push_back({name(u), "d" + std::to_string(k), name(v)});
        }
    }

    std::shuffle(heads.begin(), heads.end(), rng);
    auto n_hold = static_cast<std::size_t>(std::llround(spec.holdout * static_cast<double>(heads.size())));
    n_hold = std::clamp<std::size_t>(n_hold, 1, heads.size());

    SideFacts out;
    out.held_out.assign(heads.begin(), heads.begin() + static_cast<std::ptrdiff_t>(n_hold));
    out.facts = body;
    out.facts.insert(out.facts.end(), heads.begin() + static_cast<std::ptrdiff_t>(n_hold), heads.end());
    out.facts.insert(out.facts.end(), distractors.begin(), distractors.end());
    std::shuffle(out.facts.begin(), out.facts.end(), rng);
    return out;
}

}  // namespace

void PlantedRuleSpec::validate() const {
    if (train_entities < 6 || inference_entities < 6) throw std::invalid_argument("planted graphs need at least 6 entities");
    if (!(distractor_density >= 0.0)) throw std::invalid_argument("distractor density must be non-negative");
    if (!(holdout > 0.0 && holdout < 1.0)) throw std::invalid_argument("holdout must lie in (0, 1)");
    if (body_first == body_second || body_first == head || body_second == head) {
        throw std::invalid_argument("body and head relations must be distinct");
    }
}

RawSplit generate_planted_raw(const PlantedRuleSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    auto train = generate_side(spec, spec.train_entities, "t", spec.distractor_relations, rng);
    std::set<std::string> train_relations;
    for (const auto& t : train.facts) train_relations.insert(t.rel);
    std::size_t shared = 0;
    while (shared < spec.distractor_relations && train_relations.count("d" + std::to_string(shared))) ++shared;
    auto ind = generate_side(spec, spec.inference_entities, "i", shared, rng);

    RawSplit s;
    s.train = std::move(train.facts);
    s.valid = std::move(train.held_out);
    s.ind_train = std::move(ind.facts);
    s.ind_test = std::move(ind.held_out);
    return s;
}

InductiveSplit generate_planted_kg(const PlantedRuleSpec& spec, GraphOptions options) {
    return make_split(generate_planted_raw(spec), options);
}

}  // namespace cpsr::oracle
