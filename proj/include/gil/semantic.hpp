#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gil/errors.hpp"

namespace gil::semantic {

/// Per-class semantic vectors, unit Euclidean norm, uniform dimension.
/// `source` is "random" or "loaded".
struct EmbeddingTable {
    int dim = 0;
    std::string source;
    std::map<int, std::vector<double>> vecs;

    const std::vector<double>& at(int class_id) const;
    bool has(int class_id) const { return vecs.count(class_id) > 0; }
    std::vector<int> class_ids() const;
};

/// Near-orthogonal random unit vectors, one per class. When dim >= 4 * n the
/// whole table is rejection-sampled until every pairwise |cosine| < 0.3.
EmbeddingTable random_embeddings(const std::vector<int>& class_ids, int dim, uint64_t seed);

/// GILE file: magic "GILE", u32 version=1, u32 count, u32 dim, then per
/// entry u32 class id + dim x f32. Vectors are renormalized on load.
void save_embeddings(const EmbeddingTable& table, const std::string& path);
EmbeddingTable load_embeddings(const std::string& path);

/// CSV import: one row per class, `class_id,v0,...,v{s-1}`, no header.
EmbeddingTable load_embeddings_csv(const std::string& path);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

} // namespace gil::semantic
