#include "gil/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gil/io.hpp"
#include "gil/rng.hpp"

namespace gil::data {

std::vector<int> Dataset::classes() const {
    std::vector<int> out;
    out.reserve(index.size());
    for (const auto& [id, rows] : index) out.push_back(id);
    return out;
}

const std::vector<int>& Dataset::rows_of(int class_id) const {
    auto it = index.find(class_id);
    if (it == index.end())
        throw InputError("dataset: no items for class " + std::to_string(class_id));
    return it->second;
}

void Dataset::add(int instance_id, int class_id, std::span<const double> feature) {
    if (dim == 0) dim = static_cast<int>(feature.size());
    if (static_cast<int>(feature.size()) != dim)
        throw DimensionError("dataset: feature dim " + std::to_string(feature.size()) +
                             " does not match " + std::to_string(dim));
    index[class_id].push_back(size());
    instance_ids.push_back(instance_id);
    class_ids.push_back(class_id);
    feats.insert(feats.end(), feature.begin(), feature.end());
}

void Dataset::rebuild_index() {
    index.clear();
    for (int i = 0; i < size(); ++i) index[class_ids[i]].push_back(i);
}

std::pair<Dataset, Dataset> Dataset::split_holdout(double fraction, uint64_t seed) const {
    if (fraction < 0.0 || fraction >= 1.0)
        throw InputError("split_holdout: fraction must be in [0,1)");
    Dataset kept, held;
    kept.dim = held.dim = dim;
    Rng rng(seed);
    for (const auto& [cls, rows] : index) {
        std::vector<int> order = rows;
        std::shuffle(order.begin(), order.end(), rng.engine());
        int n_held = static_cast<int>(std::floor(fraction * order.size() + 0.5));
        if (fraction > 0.0 && n_held == 0 && order.size() >= 2) n_held = 1;
        if (n_held >= static_cast<int>(order.size())) n_held = static_cast<int>(order.size()) - 1;
        for (size_t i = 0; i < order.size(); ++i) {
            Dataset& dst = (i < static_cast<size_t>(n_held)) ? held : kept;
            dst.add(instance_ids[order[i]], cls, row(order[i]));
        }
    }
    return {std::move(kept), std::move(held)};
}

Dataset Dataset::subset_classes(const std::vector<int>& keep) const {
    Dataset out;
    out.dim = dim;
    for (int cls : keep) {
        auto it = index.find(cls);
        if (it == index.end()) continue;
        for (int r : it->second) out.add(instance_ids[r], cls, row(r));
    }
    return out;
}

SplitSpec split(const std::vector<int>& classes, double seen_fraction, uint64_t seed) {
    if (classes.size() < 2) throw InputError("split: need at least 2 classes");
    if (!(seen_fraction > 0.0 && seen_fraction < 1.0))
        throw InputError("split: seen_fraction must be in (0,1)");
    std::vector<int> order = classes;
    std::sort(order.begin(), order.end());
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng.engine());
    int n_seen = static_cast<int>(std::floor(seen_fraction * order.size() + 0.5));
    SplitSpec s;
    s.seed = seed;
    s.seen.assign(order.begin(), order.begin() + n_seen);
    s.unseen.assign(order.begin() + n_seen, order.end());
    std::sort(s.seen.begin(), s.seen.end());
    std::sort(s.unseen.begin(), s.unseen.end());
    return s;
}

SemanticMap ground_truth_map(const SynthConfig& cfg) {
    if (cfg.feature_dim <= 0 || cfg.semantic_dim <= 0 || cfg.n_classes <= 0 ||
        cfg.samples_min <= 0 || cfg.samples_max < cfg.samples_min)
        throw InputError("synth config: dims and sample counts must be positive, min <= max");
    if (cfg.sigma_f < 0.0) throw InputError("synth config: sigma_f must be >= 0");
    Rng rng = Rng(cfg.seed).fork(0x6d6170); // "map"
    SemanticMap m;
    m.w = nn::Tensor::zeros({cfg.semantic_dim, cfg.feature_dim});
    for (double& v : m.w.data) v = rng.normal();
    m.b.resize(cfg.feature_dim);
    for (double& v : m.b) v = 0.5 * rng.normal();
    return m;
}

std::vector<double> map_feature(const SemanticMap& map, const std::vector<double>& embedding) {
    int s = map.w.shape[0];
    int d = map.w.shape[1];
    if (static_cast<int>(embedding.size()) != s)
        throw DimensionError("map_feature: embedding dim " + std::to_string(embedding.size()) +
                             " does not match map " + std::to_string(s));
    std::vector<double> x(map.b);
    for (int i = 0; i < s; ++i) {
        double a = embedding[i];
        if (a == 0.0) continue;
        const double* wrow = map.w.data.data() + static_cast<size_t>(i) * d;
        for (int j = 0; j < d; ++j) x[j] += a * wrow[j];
    }
    nn::quantize_f32(x);
    return x;
}

Dataset synth_dataset(const SynthConfig& cfg, const semantic::EmbeddingTable& embeddings,
                      uint64_t sample_salt) {
    SemanticMap map = ground_truth_map(cfg);
    std::vector<int> ids = embeddings.class_ids();
    if (static_cast<int>(ids.size()) < cfg.n_classes)
        throw InputError("synth_dataset: config wants " + std::to_string(cfg.n_classes) +
                         " classes but embeddings cover " + std::to_string(ids.size()));
    ids.resize(cfg.n_classes);

    Rng rng = Rng(cfg.seed).fork(mix_seed(0x73616d70, sample_salt)); // "samp"
    Dataset ds;
    ds.dim = cfg.feature_dim;
    int next_instance = 0;
    for (int cls : ids) {
        const std::vector<double>& a = embeddings.at(cls);
        if (static_cast<int>(a.size()) != cfg.semantic_dim)
            throw InputError("synth_dataset: embedding dim " + std::to_string(a.size()) +
                             " does not match config semantic_dim " +
                             std::to_string(cfg.semantic_dim));
        std::vector<double> center(cfg.feature_dim, 0.0);
        for (int i = 0; i < cfg.semantic_dim; ++i) {
            const double* wrow = map.w.data.data() + static_cast<size_t>(i) * cfg.feature_dim;
            for (int j = 0; j < cfg.feature_dim; ++j) center[j] += a[i] * wrow[j];
        }
        for (int j = 0; j < cfg.feature_dim; ++j) center[j] += map.b[j];

        int count = cfg.samples_min == cfg.samples_max
                        ? cfg.samples_min
                        : rng.uniform_int(cfg.samples_min, cfg.samples_max);
        std::vector<double> x(cfg.feature_dim);
        for (int k = 0; k < count; ++k) {
            for (int j = 0; j < cfg.feature_dim; ++j)
                x[j] = center[j] + cfg.sigma_f * rng.normal();
            nn::quantize_f32(x);
            ds.add(next_instance++, cls, x);
        }
    }
    return ds;
}

void save_features(const Dataset& ds, const std::string& path) {
    io::Writer w;
    w.magic("GILF");
    w.u32(1);
    w.u32(static_cast<uint32_t>(ds.size()));
    w.u32(static_cast<uint32_t>(ds.dim));
    for (int i = 0; i < ds.size(); ++i) {
        w.u32(static_cast<uint32_t>(ds.class_ids[i]));
        for (double v : ds.row(i)) w.f32_from(v);
    }
    io::write_file(path, w.bytes);
}

Dataset load_features(const std::string& path) {
    io::Reader r(io::read_file(path), path);
    r.expect_magic("GILF");
    uint32_t version = r.u32();
    if (version != 1)
        throw FormatError(path + ": unsupported version " + std::to_string(version) + " at byte 4");
    uint32_t count = r.u32();
    uint32_t dim = r.u32();
    if (dim == 0) throw FormatError(path + ": zero dimension at byte 12");
    Dataset ds;
    ds.dim = static_cast<int>(dim);
    std::vector<double> x(dim);
    for (uint32_t i = 0; i < count; ++i) {
        int cls = static_cast<int>(r.u32());
        for (uint32_t j = 0; j < dim; ++j) x[j] = static_cast<double>(r.f32());
        ds.add(static_cast<int>(i), cls, x);
    }
    r.expect_end();
    return ds;
}

void export_csv(const Dataset& ds, const std::string& path) {
    std::ostringstream out;
    out << "instance_id,class_id";
    for (int j = 0; j < ds.dim; ++j) out << ",f" << j;
    out << "\n";
    out.precision(9);
    for (int i = 0; i < ds.size(); ++i) {
        out << ds.instance_ids[i] << "," << ds.class_ids[i];
        for (double v : ds.row(i)) out << "," << v;
        out << "\n";
    }
    io::write_text_file(path, out.str());
}

} // namespace gil::data
