#include "gil/replay.hpp"

#include <algorithm>
#include <cmath>

#include "gil/graph.hpp"
#include "gil/io.hpp"

namespace gil::replay {

bool ReplayBuffer::contains(int class_id) const {
    for (const ClassRecord& r : records)
        if (r.class_id == class_id) return true;
    return false;
}

const ClassRecord& ReplayBuffer::at(int class_id) const {
    for (const ClassRecord& r : records)
        if (r.class_id == class_id) return r;
    throw InputError("replay buffer: no record for class " + std::to_string(class_id));
}

std::pair<std::vector<double>, std::vector<double>> compute_prototype(
    const std::vector<std::span<const double>>& features) {
    if (features.empty()) throw InputError("compute_prototype: empty class");
    const size_t d = features[0].size();
    for (const auto& f : features)
        if (f.size() != d) throw DimensionError("compute_prototype: mixed feature dims");

    // Welford's running mean/M2; the tests check it against a two-pass oracle.
    std::vector<double> mean(d, 0.0), m2(d, 0.0);
    double n = 0.0;
    for (const auto& f : features) {
        n += 1.0;
        for (size_t j = 0; j < d; ++j) {
            double delta = f[j] - mean[j];
            mean[j] += delta / n;
            m2[j] += delta * (f[j] - mean[j]);
        }
    }
    std::vector<double> sigma(d, 0.0);
    for (size_t j = 0; j < d; ++j) sigma[j] = std::sqrt(m2[j] / n);
    return {std::move(mean), std::move(sigma)};
}

std::pair<std::vector<double>, std::vector<double>> class_prototype(const data::Dataset& ds,
                                                                    int class_id) {
    std::vector<std::span<const double>> rows;
    for (int r : ds.rows_of(class_id)) rows.push_back(ds.row(r));
    return compute_prototype(rows);
}

void buffer_insert(ReplayBuffer& buffer, ClassRecord record) {
    if (buffer.contains(record.class_id))
        throw ConsistencyError("replay buffer: class " + std::to_string(record.class_id) +
                               " already buffered");
    if (buffer.feat_dim == 0) buffer.feat_dim = static_cast<int>(record.mu.size());
    if (buffer.sem_dim == 0) buffer.sem_dim = static_cast<int>(record.embedding.size());
    if (static_cast<int>(record.mu.size()) != buffer.feat_dim ||
        record.mu.size() != record.sigma.size())
        throw DimensionError("replay buffer: mu/sigma dims do not match buffer feat dim");
    if (static_cast<int>(record.embedding.size()) != buffer.sem_dim)
        throw DimensionError("replay buffer: embedding dim does not match buffer sem dim");
    for (double s : record.sigma)
        if (s < 0.0) throw InputError("replay buffer: negative sigma coordinate");
    buffer.records.push_back(std::move(record));
}

void save_buffer(const ReplayBuffer& buffer, const std::string& path) {
    io::Writer w;
    w.magic("GILB");
    w.u32(1);
    w.u32(static_cast<uint32_t>(buffer.records.size()));
    w.u32(static_cast<uint32_t>(buffer.feat_dim));
    w.u32(static_cast<uint32_t>(buffer.sem_dim));
    for (const ClassRecord& r : buffer.records) {
        w.u32(static_cast<uint32_t>(r.class_id));
        for (double v : r.mu) w.f32_from(v);
        for (double v : r.sigma) w.f32_from(v);
        for (double v : r.embedding) w.f32_from(v);
    }
    io::write_file(path, w.bytes);
}

ReplayBuffer load_buffer(const std::string& path) {
    io::Reader r(io::read_file(path), path);
    r.expect_magic("GILB");
    uint32_t version = r.u32();
    if (version != 1)
        throw FormatError(path + ": unsupported version " + std::to_string(version) + " at byte 4");
    uint32_t count = r.u32();
    uint32_t d = r.u32();
    uint32_t s = r.u32();
    ReplayBuffer buf;
    buf.feat_dim = static_cast<int>(d);
    buf.sem_dim = static_cast<int>(s);
    for (uint32_t i = 0; i < count; ++i) {
        ClassRecord rec;
        rec.class_id = static_cast<int>(r.u32());
        rec.mu.resize(d);
        for (uint32_t j = 0; j < d; ++j) rec.mu[j] = static_cast<double>(r.f32());
        rec.sigma.resize(d);
        for (uint32_t j = 0; j < d; ++j) rec.sigma[j] = static_cast<double>(r.f32());
        rec.embedding.resize(s);
        for (uint32_t j = 0; j < s; ++j) rec.embedding[j] = static_cast<double>(r.f32());
        buffer_insert(buf, std::move(rec));
    }
    r.expect_end();
    return buf;
}

Cvae make_cvae(int sem_dim, int feat_dim, const CvaeConfig& cfg, Rng& rng) {
    if (sem_dim <= 0 || feat_dim <= 0 || cfg.hidden <= 0 || cfg.latent <= 0)
        throw InputError("make_cvae: dims must be positive");
    Cvae m;
    m.sem_dim = sem_dim;
    m.feat_dim = feat_dim;
    m.latent_dim = cfg.latent;
    using nn::Act;
    m.encoder = nn::make_mlp({sem_dim, cfg.hidden, cfg.hidden, cfg.latent},
                             {Act::leaky_relu, Act::leaky_relu, Act::linear}, rng);
    m.out_head = nn::make_mlp({cfg.latent, 2 * feat_dim}, {Act::linear}, rng);
    nn::zero_final_layer(m.out_head);
    m.decoder = nn::make_mlp({cfg.latent, cfg.hidden, cfg.hidden, sem_dim},
                             {Act::leaky_relu, Act::leaky_relu, Act::linear}, rng);
    return m;
}

namespace {

struct BufferBatch {
    nn::Tensor inputs;  // n x s
    nn::Tensor targets; // n x 2d
};

BufferBatch batch_of(const std::vector<const ClassRecord*>& records, int sem_dim, int feat_dim) {
    int n = static_cast<int>(records.size());
    BufferBatch b;
    b.inputs = nn::Tensor::zeros({n, sem_dim});
    b.targets = nn::Tensor::zeros({n, 2 * feat_dim});
    for (int i = 0; i < n; ++i) {
        const ClassRecord& r = *records[i];
        for (int j = 0; j < sem_dim; ++j) b.inputs.at(i, j) = r.embedding[j];
        for (int j = 0; j < feat_dim; ++j) {
            b.targets.at(i, j) = r.mu[j];
            b.targets.at(i, feat_dim + j) = r.sigma[j];
        }
    }
    return b;
}

} // namespace

double cvae_loss(const Cvae& model, const std::vector<const ClassRecord*>& records) {
    if (records.empty()) throw InputError("cvae_loss: no records");
    BufferBatch b = batch_of(records, model.sem_dim, model.feat_dim);
    nn::Tensor latent = nn::mlp_apply(model.encoder, b.inputs);
    nn::Tensor pred = nn::mlp_apply(model.out_head, latent);
    double se = 0.0;
    for (long long i = 0; i < pred.numel(); ++i) {
        double e = pred.data[i] - b.targets.data[i];
        se += e * e;
    }
    return se / static_cast<double>(pred.numel());
}

CvaeTrainResult train_cvae(Cvae& model, const ReplayBuffer& buffer, int epochs,
                           const CvaeConfig& cfg, Rng& rng) {
    (void)rng; // training is full-batch and deterministic
    if (buffer.records.empty()) throw InputError("train_cvae: buffer is empty");
    if (buffer.feat_dim != model.feat_dim || buffer.sem_dim != model.sem_dim)
        throw DimensionError("train_cvae: buffer dims do not match model");

    std::vector<const ClassRecord*> records;
    for (const ClassRecord& r : buffer.records) records.push_back(&r);
    BufferBatch batch = batch_of(records, model.sem_dim, model.feat_dim);

    CvaeTrainResult res;
    if (epochs <= 0) {
        res.final_loss = cvae_loss(model, records);
        return res;
    }

    nn::AdamConfig opt{cfg.lr, cfg.beta1, cfg.beta2, 1e-8};
    nn::AdamState enc_state = nn::make_adam(model.encoder, opt);
    nn::AdamState head_state = nn::make_adam(model.out_head, opt);
    nn::AdamState dec_state = nn::make_adam(model.decoder, opt);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        try {
            nn::Graph g;
            nn::MlpRef enc = nn::bind(g, model.encoder);
            nn::MlpRef head = nn::bind(g, model.out_head);
            nn::MlpRef dec = nn::bind(g, model.decoder);
            int in = g.constant(batch.inputs);
            int target = g.constant(batch.targets);
            int latent = nn::mlp_forward(g, enc, in).out;
            int pred = nn::mlp_forward(g, head, latent).out;
            int pred_mse = g.mean_all(g.square(g.sub(pred, target)));
            int total = pred_mse;
            if (cfg.recon_weight > 0.0) {
                int recon = nn::mlp_forward(g, dec, latent).out;
                total = g.add(total, g.scale(g.mean_all(g.square(g.sub(recon, in))),
                                             cfg.recon_weight));
            }
            if (cfg.kl_weight > 0.0)
                total = g.add(total, g.scale(g.mean_all(g.square(latent)), 0.5 * cfg.kl_weight));

            res.loss_history.push_back(g.val(pred_mse).data[0]);
            g.backward(total);
            nn::adam_step(model.encoder, nn::grads_of(g, enc), enc_state);
            nn::adam_step(model.out_head, nn::grads_of(g, head), head_state);
            if (cfg.recon_weight > 0.0)
                nn::adam_step(model.decoder, nn::grads_of(g, dec), dec_state);
        } catch (const NumericError& e) {
            throw NumericError("train_cvae: diverged at epoch " + std::to_string(epoch) + ": " +
                               e.what());
        }
    }
    res.final_loss = cvae_loss(model, records);
    return res;
}

std::pair<std::vector<double>, std::vector<double>> cvae_encode(
    const Cvae& model, const std::vector<double>& embedding) {
    if (static_cast<int>(embedding.size()) != model.sem_dim)
        throw InputError("cvae_encode: embedding dim " + std::to_string(embedding.size()) +
                         " does not match model sem dim " + std::to_string(model.sem_dim));
    nn::Tensor in({1, model.sem_dim}, embedding);
    nn::Tensor pred = nn::mlp_apply(model.out_head, nn::mlp_apply(model.encoder, in));
    std::vector<double> mu(model.feat_dim), sigma(model.feat_dim);
    for (int j = 0; j < model.feat_dim; ++j) {
        mu[j] = pred.data[j];
        sigma[j] = std::fabs(pred.data[model.feat_dim + j]);
    }
    return {std::move(mu), std::move(sigma)};
}

} // namespace gil::replay
