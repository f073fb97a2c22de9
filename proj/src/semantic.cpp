#include "gil/semantic.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

#include "gil/io.hpp"
#include "gil/rng.hpp"
#include "gil/tensor.hpp"

namespace gil::semantic {

const std::vector<double>& EmbeddingTable::at(int class_id) const {
    auto it = vecs.find(class_id);
    if (it == vecs.end())
        throw InputError("embedding table: no entry for class " + std::to_string(class_id));
    return it->second;
}

std::vector<int> EmbeddingTable::class_ids() const {
    std::vector<int> ids;
    ids.reserve(vecs.size());
    for (const auto& [id, v] : vecs) ids.push_back(id);
    return ids;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimensionError("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

void normalize(std::vector<double>& v, const std::string& what) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n == 0.0) throw InputError("cannot normalize zero vector: " + what);
    for (double& x : v) x /= n;
}

} // namespace

EmbeddingTable random_embeddings(const std::vector<int>& class_ids, int dim, uint64_t seed) {
    if (class_ids.empty()) throw InputError("random_embeddings: no class ids");
    if (dim <= 0) throw InputError("random_embeddings: dimension must be positive");
    for (size_t i = 0; i < class_ids.size(); ++i)
        for (size_t j = i + 1; j < class_ids.size(); ++j)
            if (class_ids[i] == class_ids[j])
                throw InputError("random_embeddings: duplicate class id " +
                                 std::to_string(class_ids[i]));
    if (dim < static_cast<int>(class_ids.size()))
        std::cerr << "warning: embedding dim " << dim << " below class count "
                  << class_ids.size() << "; vectors cannot be linearly independent\n";

    const int n = static_cast<int>(class_ids.size());
    const bool enforce = dim >= 4 * n && n > 1;
    const int max_attempts = 1000;
    Rng rng(seed);

    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        std::vector<std::vector<double>> vs(n);
        for (int i = 0; i < n; ++i) {
            vs[i].resize(dim);
            for (double& x : vs[i]) x = rng.normal();
            normalize(vs[i], "random embedding");
        }
        bool ok = true;
        if (enforce) {
            for (int i = 0; i < n && ok; ++i)
                for (int j = i + 1; j < n && ok; ++j)
                    if (std::fabs(cosine(vs[i], vs[j])) >= 0.3) ok = false;
        }
        if (ok) {
            EmbeddingTable t;
            t.dim = dim;
            t.source = "random";
            for (int i = 0; i < n; ++i) t.vecs[class_ids[i]] = std::move(vs[i]);
            return t;
        }
    }
    throw GenerationError("random_embeddings: could not satisfy pairwise |cosine| < 0.3 after " +
                          std::to_string(max_attempts) + " attempts; increase the embedding dim (s >= 4 * n_classes recommended)");
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
    io::Writer w;
    w.magic("GILE");
    w.u32(1);
    w.u32(static_cast<uint32_t>(table.vecs.size()));
    w.u32(static_cast<uint32_t>(table.dim));
    for (const auto& [id, v] : table.vecs) {
        w.u32(static_cast<uint32_t>(id));
        for (double x : v) w.f32_from(x);
    }
    io::write_file(path, w.bytes);
}

EmbeddingTable load_embeddings(const std::string& path) {
    io::Reader r(io::read_file(path), path);
    r.expect_magic("GILE");
    uint32_t version = r.u32();
    if (version != 1)
        throw FormatError(path + ": unsupported version " + std::to_string(version) + " at byte 4");
    uint32_t count = r.u32();
    uint32_t dim = r.u32();
    if (dim == 0) throw FormatError(path + ": zero dimension at byte 12");
    EmbeddingTable t;
    t.dim = static_cast<int>(dim);
    t.source = "loaded";
    for (uint32_t i = 0; i < count; ++i) {
        size_t at = r.offset();
        int id = static_cast<int>(r.u32());
        if (t.vecs.count(id))
            throw FormatError(path + ": duplicate class id " + std::to_string(id) + " at byte " +
                              std::to_string(at));
        std::vector<double> v(dim);
        for (uint32_t j = 0; j < dim; ++j) v[j] = static_cast<double>(r.f32());
        normalize(v, path + " class " + std::to_string(id));
        t.vecs[id] = std::move(v);
    }
    r.expect_end();
    return t;
}

EmbeddingTable load_embeddings_csv(const std::string& path) {
    std::istringstream in(io::read_text_file(path));
    EmbeddingTable t;
    t.source = "loaded";
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() < 2)
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected class_id,v0,...");
        int id;
        std::vector<double> v;
        try {
            id = std::stoi(cells[0]);
            for (size_t i = 1; i < cells.size(); ++i) v.push_back(std::stod(cells[i]));
        } catch (const std::exception&) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": unparsable number");
        }
        if (t.dim == 0) t.dim = static_cast<int>(v.size());
        if (static_cast<int>(v.size()) != t.dim)
            throw FormatError(path + ":" + std::to_string(lineno) + ": row dimension " +
                              std::to_string(v.size()) + " differs from " + std::to_string(t.dim));
        if (t.vecs.count(id))
            throw FormatError(path + ":" + std::to_string(lineno) + ": duplicate class id " +
                              std::to_string(id));
        normalize(v, path + " class " + std::to_string(id));
        t.vecs[id] = std::move(v);
    }
    if (t.vecs.empty()) throw FormatError(path + ": no rows");
    return t;
}

} // namespace gil::semantic
