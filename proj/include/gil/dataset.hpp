#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gil/semantic.hpp"
#include "gil/tensor.hpp"

namespace gil::data {

/// Class-conditional feature collection. Features live in one flat row-major
/// block; the class index maps class id -> row positions. Immutable once
/// built.
struct Dataset {
    int dim = 0;
    std::vector<int> instance_ids;
    std::vector<int> class_ids;
    std::vector<double> feats;
    std::map<int, std::vector<int>> index;

    int size() const { return static_cast<int>(class_ids.size()); }
    std::span<const double> row(int i) const {
        return {feats.data() + static_cast<size_t>(i) * dim, static_cast<size_t>(dim)};
    }
    std::vector<int> classes() const;
    const std::vector<int>& rows_of(int class_id) const;

    void add(int instance_id, int class_id, std::span<const double> feature);
    void rebuild_index();

    /// Deterministic per-class holdout; `fraction` of each class's rows (at
    /// least one when the class has >= 2) go to the second dataset.
    std::pair<Dataset, Dataset> split_holdout(double fraction, uint64_t seed) const;

    Dataset subset_classes(const std::vector<int>& keep) const;
};

/// Seen/unseen class partition.
struct SplitSpec {
    std::vector<int> seen;
    std::vector<int> unseen;
    uint64_t seed = 0;
};

SplitSpec split(const std::vector<int>& classes, double seen_fraction, uint64_t seed);

/// Frozen-backbone surrogate: features are x = W a_y + b + eps with a fixed
/// seed-derived linear map shared across classes and eps ~ N(0, sigma_f^2 I).
struct SynthConfig {
    int n_classes = 10;
    int samples_min = 20;
    int samples_max = 40;
    int feature_dim = 64;
    int semantic_dim = 64;
    double sigma_f = 0.5;
    uint64_t seed = 1;
};

/// The ground-truth semantic-to-visual map derived from config.seed alone.
struct SemanticMap {
    nn::Tensor w; // semantic_dim x feature_dim
    std::vector<double> b;
};

SemanticMap ground_truth_map(const SynthConfig& cfg);

/// Noise-free feature of one class under the map, rounded to f32 like every
/// stored feature.
std::vector<double> map_feature(const SemanticMap& map, const std::vector<double>& embedding);

/// `sample_salt` selects an independent sampling stream over the same map
/// (0 = training draw, other values give disjoint draws for test sets).
Dataset synth_dataset(const SynthConfig& cfg, const semantic::EmbeddingTable& embeddings,
                      uint64_t sample_salt = 0);

/// GILF file: magic "GILF", u32 version=1, u32 item count, u32 dim, then per
/// item u32 class id + dim x f32. Instance ids are positional.
void save_features(const Dataset& ds, const std::string& path);
Dataset load_features(const std::string& path);

/// Header `instance_id,class_id,f0,...,f{d-1}`.
void export_csv(const Dataset& ds, const std::string& path);

} // namespace gil::data
