#include "gil/gan.hpp"

#include <algorithm>
#include <cmath>

#include "gil/graph.hpp"

namespace gil::gan {

using nn::Act;
using nn::Graph;
using nn::Mlp;
using nn::MlpRef;
using nn::Tensor;

namespace {

/// Insert a network's parameters as constants: values flow, gradients to the
/// parameters are not computed. Used for networks another step owns.
MlpRef bind_frozen(Graph& g, const Mlp& net) {
    MlpRef ref;
    ref.net = &net;
    for (const nn::Layer& l : net.layers) {
        ref.w.push_back(g.constant(l.w));
        ref.b.push_back(g.constant(l.b));
    }
    return ref;
}

constexpr double kNormEps = 1e-12; // under the sqrt so a zero gradient stays differentiable

} // namespace

int GanModels::f_input_dim() const {
    if (cond_mode == CondMode::embedding) return sem_dim + noise_dim;
    return synth_noise == SynthNoiseMode::scaled ? 2 * feat_dim : 2 * feat_dim + noise_dim;
}

GanModels make_gan_models(int feat_dim, int sem_dim, const GanConfig& cfg, Rng& rng) {
    if (feat_dim <= 0 || sem_dim <= 0 || cfg.hidden <= 0 || cfg.noise_dim <= 0)
        throw InputError("make_gan_models: dims must be positive");
    if (cfg.alpha < 0.0 || cfg.lambda_cls < 0.0 || cfg.lambda_mi < 0.0 || cfg.n_critic < 1)
        throw InputError("make_gan_models: alpha/lambdas must be >= 0, n_critic >= 1");
    GanModels m;
    m.cond_mode = cfg.cond_mode;
    m.synth_noise = cfg.synth_noise;
    m.feat_dim = feat_dim;
    m.sem_dim = sem_dim;
    m.noise_dim = cfg.noise_dim;
    int f_in = m.f_input_dim();
    m.f = nn::make_mlp({f_in, cfg.hidden, cfg.hidden, feat_dim},
                       {Act::leaky_relu, Act::leaky_relu, Act::linear}, rng);
    m.g = nn::make_mlp({feat_dim + sem_dim, cfg.hidden, 1}, {Act::leaky_relu, Act::linear}, rng);
    m.h = nn::make_mlp({feat_dim, cfg.hidden, cfg.hidden, sem_dim},
                       {Act::leaky_relu, Act::leaky_relu, Act::linear}, rng);
    m.t = nn::make_mlp({feat_dim + sem_dim, cfg.hidden, 1}, {Act::leaky_relu, Act::linear}, rng);
    return m;
}

CriticLossNodes critic_loss(Graph& g, const MlpRef& critic, const MlpRef& proj, int x, int xhat,
                            int a_fake, int pen_x, int feat_dim, double alpha) {
    CriticLossNodes out;
    int a_hat = nn::mlp_forward(g, proj, x).out;
    out.wass_real = g.mean_all(nn::mlp_forward(g, critic, g.concat_cols(x, a_hat)).out);
    out.wass_fake = g.mean_all(nn::mlp_forward(g, critic, g.concat_cols(xhat, a_fake)).out);

    nn::Trace pen_trace = nn::mlp_forward(g, critic, g.concat_cols(pen_x, a_fake));
    int grad_full = nn::input_gradient_node(g, critic, pen_trace);
    int grad_x = g.slice_cols(grad_full, 0, feat_dim);
    int norm = g.sqrt_op(g.add_scalar(g.rowsum(g.square(grad_x)), kNormEps));
    out.penalty = g.scale(g.mean_all(g.square(g.add_scalar(norm, -1.0))), alpha);

    out.total = g.sub(g.sub(out.wass_real, out.wass_fake), out.penalty);
    return out;
}

int projection_loss(Graph& g, const MlpRef& proj, int x, int a) {
    return g.mean_all(g.square(g.sub(nn::mlp_forward(g, proj, x).out, a)));
}

int cls_regularizer(Graph& g, const MlpRef& frozen_classifier, int xhat,
                    const std::vector<int>& labels) {
    int logits = nn::mlp_forward(g, frozen_classifier, xhat).out;
    return g.mean_all(g.softmax_xent(logits, labels));
}

int mi_lower_bound(Graph& g, const MlpRef& stats, int xhat, int a, int a_shuffled) {
    int joint = nn::mlp_forward(g, stats, g.concat_cols(xhat, a)).out;
    int marginal = nn::mlp_forward(g, stats, g.concat_cols(xhat, a_shuffled)).out;
    return g.sub(g.mean_all(joint), g.log_mean_exp(marginal));
}

nn::Mlp train_softmax_classifier(const data::Dataset& ds, const std::vector<int>& class_order,
                                 int hidden, int epochs, int batch, const nn::AdamConfig& opt,
                                 Rng& rng) {
    if (ds.size() == 0) throw InputError("train_softmax_classifier: empty dataset");
    std::map<int, int> label_of;
    for (size_t i = 0; i < class_order.size(); ++i) label_of[class_order[i]] = static_cast<int>(i);
    Mlp cls = nn::make_mlp({ds.dim, hidden, static_cast<int>(class_order.size())},
                           {Act::leaky_relu, Act::linear}, rng);
    nn::AdamState state = nn::make_adam(cls, opt);
    batch = std::min(batch, ds.size());
    for (int epoch = 0; epoch < epochs; ++epoch) {
        Tensor X = Tensor::zeros({batch, ds.dim});
        std::vector<int> y(batch);
        for (int i = 0; i < batch; ++i) {
            int r = rng.uniform_int(0, ds.size() - 1);
            auto row = ds.row(r);
            std::copy(row.begin(), row.end(), X.data.begin() + static_cast<size_t>(i) * ds.dim);
            auto it = label_of.find(ds.class_ids[r]);
            if (it == label_of.end())
                throw InputError("train_softmax_classifier: class " +
                                 std::to_string(ds.class_ids[r]) + " missing from class order");
            y[i] = it->second;
        }
        Graph g;
        MlpRef ref = nn::bind(g, cls);
        int loss = g.mean_all(g.softmax_xent(nn::mlp_forward(g, ref, g.constant(X)).out, y));
        g.backward(loss);
        nn::adam_step(cls, nn::grads_of(g, ref), state);
    }
    return cls;
}

namespace {

struct Batch {
    Tensor x;    // batch x d real features
    Tensor a;    // batch x s embeddings of the labels
    Tensor f_in; // batch x f_input_dim generator input
    std::vector<int> labels; // classifier label indices
};

/// One sampled batch, with every random draw taken from `rng` in a fixed
/// order so runs replay exactly.
Batch sample_batch(const data::Dataset& ds, const semantic::EmbeddingTable& emb,
                   const replay::ReplayBuffer* buffer, const GanModels& m,
                   const std::map<int, int>& label_of, int batch, Rng& rng) {
    Batch b;
    b.x = Tensor::zeros({batch, m.feat_dim});
    b.a = Tensor::zeros({batch, m.sem_dim});
    b.f_in = Tensor::zeros({batch, m.f_input_dim()});
    b.labels.resize(batch);
    for (int i = 0; i < batch; ++i) {
        int r = rng.uniform_int(0, ds.size() - 1);
        int cls = ds.class_ids[r];
        auto row = ds.row(r);
        std::copy(row.begin(), row.end(), b.x.data.begin() + static_cast<size_t>(i) * m.feat_dim);
        const std::vector<double>& a = emb.at(cls);
        std::copy(a.begin(), a.end(), b.a.data.begin() + static_cast<size_t>(i) * m.sem_dim);
        b.labels[i] = label_of.at(cls);

        double* f_row = b.f_in.data.data() + static_cast<size_t>(i) * m.f_input_dim();
        if (m.cond_mode == CondMode::embedding) {
            std::copy(a.begin(), a.end(), f_row);
            for (int j = 0; j < m.noise_dim; ++j) f_row[m.sem_dim + j] = rng.normal();
        } else {
            const replay::ClassRecord& rec = buffer->at(cls);
            std::copy(rec.mu.begin(), rec.mu.end(), f_row);
            if (m.synth_noise == SynthNoiseMode::scaled) {
                for (int j = 0; j < m.feat_dim; ++j)
                    f_row[m.feat_dim + j] = rec.sigma[j] * rng.normal();
            } else {
                std::copy(rec.sigma.begin(), rec.sigma.end(), f_row + m.feat_dim);
                for (int j = 0; j < m.noise_dim; ++j)
                    f_row[2 * m.feat_dim + j] = rng.normal();
            }
        }
    }
    return b;
}

} // namespace

GanTrainResult train_gan(const data::Dataset& seen, const semantic::EmbeddingTable& embeddings,
                         const replay::ReplayBuffer* buffer, const GanConfig& cfg) {
    if (seen.size() == 0) throw InputError("train_gan: empty dataset");
    if (cfg.cond_mode == CondMode::prototype && buffer == nullptr)
        throw InputError("train_gan: prototype conditioning needs a replay buffer");
    for (int cls : seen.classes()) {
        if (!embeddings.has(cls))
            throw InputError("train_gan: no embedding for class " + std::to_string(cls));
        if (cfg.cond_mode == CondMode::prototype && !buffer->contains(cls))
            throw InputError("train_gan: no buffered prototype for class " + std::to_string(cls));
    }

    Rng root(cfg.seed);
    Rng init_rng = root.fork(1);
    Rng data_rng = root.fork(2);
    Rng cls_rng = root.fork(3);
    Rng shuf_rng = root.fork(4);

    GanTrainResult res;
    res.models = make_gan_models(seen.dim, embeddings.dim, cfg, init_rng);
    GanModels& m = res.models;

    std::vector<int> class_order = seen.classes();
    std::map<int, int> label_of;
    for (size_t i = 0; i < class_order.size(); ++i) label_of[class_order[i]] = static_cast<int>(i);

    if (cfg.lambda_cls > 0.0) {
        res.frozen_classifier = train_softmax_classifier(seen, class_order, cfg.hidden,
                                                         cfg.cls_epochs, cfg.batch, cfg.aux_opt,
                                                         cls_rng);
        res.classifier_classes = class_order;
    }

    nn::AdamState g_state = nn::make_adam(m.g, cfg.adv_opt);
    nn::AdamState f_state = nn::make_adam(m.f, cfg.adv_opt);
    nn::AdamState h_state = nn::make_adam(m.h, cfg.aux_opt);
    nn::AdamState t_state = nn::make_adam(m.t, cfg.aux_opt);

    int batch = std::min(cfg.batch, seen.size());

    for (int step = 0; step < cfg.steps; ++step) {
        StepLog log;
        log.step = step;
        const char* phase = "critic_loss";
        try {
            for (int ic = 0; ic < cfg.n_critic; ++ic) {
                phase = "critic_loss";
                Batch b = sample_batch(seen, embeddings, buffer, m, label_of, batch, data_rng);
                Tensor xhat = nn::mlp_apply(m.f, b.f_in);

                Tensor pen_x = xhat;
                if (cfg.penalty_point == PenaltyPoint::interpolated) {
                    for (int i = 0; i < batch; ++i) {
                        double u = data_rng.uniform();
                        for (int j = 0; j < m.feat_dim; ++j)
                            pen_x.at(i, j) = u * b.x.at(i, j) + (1.0 - u) * xhat.at(i, j);
                    }
                }

                Graph g;
                MlpRef critic = nn::bind(g, m.g);
                MlpRef proj = bind_frozen(g, m.h);
                int xn = g.constant(b.x);
                int xhn = g.constant(xhat);
                int an = g.constant(b.a);
                int pn = cfg.penalty_point == PenaltyPoint::generated ? xhn
                                                                      : g.constant(pen_x);
                CriticLossNodes cl =
                    critic_loss(g, critic, proj, xn, xhn, an, pn, m.feat_dim, cfg.alpha);
                log.critic_obj = g.val(cl.total).data[0];
                log.wass_real = g.val(cl.wass_real).data[0];
                log.wass_fake = g.val(cl.wass_fake).data[0];
                log.penalty = g.val(cl.penalty).data[0];
                g.backward(g.scale(cl.total, -1.0));
                nn::adam_step(m.g, nn::grads_of(g, critic), g_state);
            }

            {
                phase = "projection_loss";
                Batch b = sample_batch(seen, embeddings, buffer, m, label_of, batch, data_rng);
                Graph g;
                MlpRef proj = nn::bind(g, m.h);
                int loss = projection_loss(g, proj, g.constant(b.x), g.constant(b.a));
                log.h_mse = g.val(loss).data[0];
                g.backward(loss);
                nn::adam_step(m.h, nn::grads_of(g, proj), h_state);
            }

            {
                phase = "mi_bound";
                Batch b = sample_batch(seen, embeddings, buffer, m, label_of, batch, data_rng);
                Tensor xhat = nn::mlp_apply(m.f, b.f_in);
                Tensor a_shuf = b.a;
                std::vector<int> perm(batch);
                for (int i = 0; i < batch; ++i) perm[i] = i;
                std::shuffle(perm.begin(), perm.end(), shuf_rng.engine());
                for (int i = 0; i < batch; ++i)
                    for (int j = 0; j < m.sem_dim; ++j) a_shuf.at(i, j) = b.a.at(perm[i], j);

                Graph g;
                MlpRef stats = nn::bind(g, m.t);
                int est = mi_lower_bound(g, stats, g.constant(xhat), g.constant(b.a),
                                         g.constant(a_shuf));
                log.mi_estimate = g.val(est).data[0];
                g.backward(g.scale(est, -1.0));
                nn::adam_step(m.t, nn::grads_of(g, stats), t_state);
            }

            {
                phase = "generator_loss";
                Batch b = sample_batch(seen, embeddings, buffer, m, label_of, batch, data_rng);
                Tensor a_shuf = b.a;
                std::vector<int> perm(batch);
                for (int i = 0; i < batch; ++i) perm[i] = i;
                std::shuffle(perm.begin(), perm.end(), shuf_rng.engine());
                for (int i = 0; i < batch; ++i)
                    for (int j = 0; j < m.sem_dim; ++j) a_shuf.at(i, j) = b.a.at(perm[i], j);

                Graph g;
                MlpRef gen = nn::bind(g, m.f);
                MlpRef critic = bind_frozen(g, m.g);
                int an = g.constant(b.a);
                int xhat = nn::mlp_forward(g, gen, g.constant(b.f_in)).out;
                int adv = g.scale(g.mean_all(nn::mlp_forward(g, critic, g.concat_cols(xhat, an)).out),
                                  -1.0);
                log.gen_adv = g.val(adv).data[0];
                int total = adv;
                if (cfg.lambda_cls > 0.0) {
                    MlpRef cls = bind_frozen(g, res.frozen_classifier);
                    int cls_loss = cls_regularizer(g, cls, xhat, b.labels);
                    log.gen_cls = g.val(cls_loss).data[0];
                    total = g.add(total, g.scale(cls_loss, cfg.lambda_cls));
                }
                if (cfg.lambda_mi > 0.0) {
                    MlpRef stats = bind_frozen(g, m.t);
                    int est = mi_lower_bound(g, stats, xhat, an, g.constant(a_shuf));
                    int mi_loss = g.scale(est, -1.0);
                    log.gen_mi = g.val(mi_loss).data[0];
                    total = g.add(total, g.scale(mi_loss, cfg.lambda_mi));
                }
                log.gen_total = g.val(total).data[0];
                g.backward(total);
                nn::adam_step(m.f, nn::grads_of(g, gen), f_state);
            }
        } catch (const NumericError& e) {
            throw NumericError("train_gan: step " + std::to_string(step) + ", " + phase + ": " +
                               e.what());
        }
        res.history.push_back(log);
    }
    return res;
}

namespace {

Tensor apply_generator(const GanModels& m, const Tensor& f_in) {
    return nn::mlp_apply(m.f, f_in);
}

} // namespace

Tensor synthesize(const GanModels& m, const std::vector<double>& mu,
                  const std::vector<double>& sigma, int count, uint64_t seed) {
    if (m.cond_mode != CondMode::prototype)
        throw ContractError("synthesize: generator is not prototype-conditioned");
    if (count < 1) throw InputError("synthesize: count must be >= 1");
    if (static_cast<int>(mu.size()) != m.feat_dim || mu.size() != sigma.size())
        throw InputError("synthesize: mu/sigma dims " + std::to_string(mu.size()) + "/" +
                         std::to_string(sigma.size()) + " do not match feature dim " +
                         std::to_string(m.feat_dim));
    Rng rng(seed);
    Tensor f_in = Tensor::zeros({count, m.f_input_dim()});
    for (int i = 0; i < count; ++i) {
        double* row = f_in.data.data() + static_cast<size_t>(i) * m.f_input_dim();
        std::copy(mu.begin(), mu.end(), row);
        if (m.synth_noise == SynthNoiseMode::scaled) {
            for (int j = 0; j < m.feat_dim; ++j) row[m.feat_dim + j] = sigma[j] * rng.normal();
        } else {
            std::copy(sigma.begin(), sigma.end(), row + m.feat_dim);
            for (int j = 0; j < m.noise_dim; ++j) row[2 * m.feat_dim + j] = rng.normal();
        }
    }
    return apply_generator(m, f_in);
}

Tensor synthesize_from_embedding(const GanModels& m, const std::vector<double>& embedding,
                                 int count, uint64_t seed) {
    if (m.cond_mode != CondMode::embedding)
        throw ContractError("synthesize_from_embedding: generator is not embedding-conditioned");
    if (count < 1) throw InputError("synthesize_from_embedding: count must be >= 1");
    if (static_cast<int>(embedding.size()) != m.sem_dim)
        throw InputError("synthesize_from_embedding: embedding dim " +
                         std::to_string(embedding.size()) + " does not match " +
                         std::to_string(m.sem_dim));
    Rng rng(seed);
    Tensor f_in = Tensor::zeros({count, m.f_input_dim()});
    for (int i = 0; i < count; ++i) {
        double* row = f_in.data.data() + static_cast<size_t>(i) * m.f_input_dim();
        std::copy(embedding.begin(), embedding.end(), row);
        for (int j = 0; j < m.noise_dim; ++j) row[m.sem_dim + j] = rng.normal();
    }
    return apply_generator(m, f_in);
}

} // namespace gil::gan
