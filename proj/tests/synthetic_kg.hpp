#pragma once

// Synthetic ground-truth KG for end-to-end checks.
//
// The hidden translational model places entities in tight groups at the
// cells of a 4x4x4x4 lattice embedded in a random 4-dimensional subspace of
// the ambient space; predicates are lattice steps. Consistent edges are
// translations that stay on the lattice, so the ground-truth model itself
// ranks them near-perfectly under the filtered protocol, and the geometry
// is exactly representable by a trained translational model. Uniform noise
// edges are mixed in on top.

#include <array>
#include <set>
#include <vector>

#include "kgf/model.hpp"
#include "kgf/rng.hpp"
#include "kgf/view.hpp"

namespace kgf::test {

struct SyntheticKg {
    GraphView full;     // consistent + noise edges
    SplitResult split;  // 80/10/10 of full
    EmbeddingModel truth;
};

inline SyntheticKg make_synthetic_kg(std::uint64_t seed,
                                     std::uint64_t n_consistent = 20000,
                                     double noise_rate = 0.05,
                                     std::uint32_t dim = 32,
                                     double spacing = 0.28,
                                     double sigma = 0.02) {
    constexpr std::uint32_t kLatent = 4;
    constexpr std::uint64_t kEntities = 1000, kPredicates = 10;
    constexpr std::uint64_t kUsedCells = 250;

    EmbeddingModel truth(Scorer::Translational, dim, kEntities, kPredicates);
    Rng grng(stream_seed({seed, 0x9e0}));

    std::vector<double> basis(kLatent * dim);
    for (double& b : basis) b = grng.uniform(-1, 1);
    for (std::uint32_t l = 0; l < kLatent; ++l) {
        double sq = 0;
        for (std::uint32_t i = 0; i < dim; ++i)
            sq += basis[l * dim + i] * basis[l * dim + i];
        for (std::uint32_t i = 0; i < dim; ++i)
            basis[l * dim + i] /= std::sqrt(sq);
    }
    auto to_ambient = [&](const std::vector<double>& z, float* row) {
        for (std::uint32_t i = 0; i < dim; ++i) {
            double x = 0;
            for (std::uint32_t l = 0; l < kLatent; ++l)
                x += z[l] * basis[l * dim + i];
            row[i] = static_cast<float>(x);
        }
    };

    std::vector<std::array<int, 4>> cells;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int e = 0; e < 4; ++e) cells.push_back({a, b, c, e});

    std::vector<double> z(kLatent);
    std::vector<std::uint32_t> cell_of(kEntities);
    for (EntityId e = 0; e < kEntities; ++e) {
        std::uint32_t cell = static_cast<std::uint32_t>(e % kUsedCells);
        cell_of[e] = cell;
        for (std::uint32_t l = 0; l < kLatent; ++l)
            z[l] = (cells[cell][l] - 1.5) * spacing + grng.uniform(-sigma, sigma);
        to_ambient(z, truth.entity_matrix().data() + e * dim);
        project_to_unit_ball(truth.entity_matrix().data() + e * dim, dim);
    }

    const std::array<std::array<int, 4>, 10> steps{{{1, 0, 0, 0},
                                                    {-1, 0, 0, 0},
                                                    {0, 1, 0, 0},
                                                    {0, -1, 0, 0},
                                                    {0, 0, 1, 0},
                                                    {0, 0, -1, 0},
                                                    {0, 0, 0, 1},
                                                    {0, 0, 0, -1},
                                                    {1, 1, 0, 0},
                                                    {0, 0, 1, -1}}};
    for (PredicateId r = 0; r < kPredicates; ++r) {
        for (std::uint32_t l = 0; l < kLatent; ++l)
            z[l] = steps[r][l] * spacing;
        to_ambient(z, truth.predicate_matrix().data() + r * dim);
    }

    auto stepped_cell = [&](std::uint32_t cell, PredicateId r) -> long {
        std::array<int, 4> g = cells[cell];
        for (int l = 0; l < 4; ++l) {
            g[l] += steps[r][l];
            if (g[l] < 0 || g[l] > 3) return -1;
        }
        long idx = ((g[0] * 4 + g[1]) * 4 + g[2]) * 4 + g[3];
        return idx < static_cast<long>(kUsedCells) ? idx : -1;
    };

    std::vector<std::vector<EntityId>> members(kUsedCells);
    for (EntityId e = 0; e < kEntities; ++e) members[cell_of[e]].push_back(e);
    std::vector<Triple> candidates;
    for (EntityId h = 0; h < kEntities; ++h) {
        for (PredicateId r = 0; r < kPredicates; ++r) {
            long target = stepped_cell(cell_of[h], r);
            if (target < 0) continue;
            for (EntityId t : members[static_cast<std::size_t>(target)])
                candidates.push_back({h, r, ObjectRef::entity(t)});
        }
    }

    Rng rng(stream_seed({seed, 0xfacade}));
    rng.shuffle(candidates);
    if (candidates.size() < n_consistent)
        throw InvalidArgument("synthetic KG cannot supply that many edges");
    std::set<Triple> edges(candidates.begin(),
                           candidates.begin() + static_cast<long>(n_consistent));
    std::uint64_t n_noise = static_cast<std::uint64_t>(
        noise_rate * static_cast<double>(n_consistent));
    while (n_noise > 0) {
        Triple t{rng.bounded(kEntities), rng.bounded(kPredicates),
                 ObjectRef::entity(rng.bounded(kEntities))};
        if (t.head == t.tail.id || edges.count(t)) continue;
        edges.insert(t);
        --n_noise;
    }

    SyntheticKg kg;
    kg.truth = std::move(truth);
    kg.full.entity_count = kEntities;
    kg.full.predicate_count = kPredicates;
    kg.full.edges.assign(edges.begin(), edges.end());
    kg.split = split_view(kg.full, {0.8, 0.1, 0.1}, stream_seed({seed, 0x5eed}));
    return kg;
}

}  // namespace kgf::test
