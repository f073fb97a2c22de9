#pragma once

#include <cstdint>
#include <vector>

#include "gil/adam.hpp"
#include "gil/dataset.hpp"
#include "gil/replay.hpp"
#include "gil/semantic.hpp"

namespace gil::gan {

/// What the generator is conditioned on: class embeddings (vanilla
/// feature-generation pipeline) or buffered class prototypes.
enum class CondMode { embedding, prototype };

/// Where the gradient penalty is evaluated: at generated samples (the
/// written objective) or at real/fake interpolates (the common stabilizer).
enum class PenaltyPoint { generated, interpolated };

/// How prototype noise enters the generator: sigma scales injected unit
/// noise, or (mu, sigma, z) are concatenated raw.
enum class SynthNoiseMode { scaled, concat };

struct GanConfig {
    double alpha = 10.0;      // gradient penalty coefficient
    double lambda_cls = 0.01; // classification regularizer weight
    double lambda_mi = 0.001; // mutual information regularizer weight
    int n_critic = 5;
    int batch = 64;
    int steps = 1000; // generator steps
    int noise_dim = 64;
    int hidden = 256;
    PenaltyPoint penalty_point = PenaltyPoint::generated;
    CondMode cond_mode = CondMode::embedding;
    SynthNoiseMode synth_noise = SynthNoiseMode::scaled;
    nn::AdamConfig adv_opt{1e-4, 0.5, 0.999, 1e-8};
    nn::AdamConfig aux_opt{1e-3, 0.9, 0.999, 1e-8};
    int cls_epochs = 150; // frozen-classifier pretraining epochs
    uint64_t seed = 0;
};

/// Generator F, critic G, projection H, statistics network T. The critic
/// uses piecewise-linear activations only so its input gradient is an
/// explicit graph.
struct GanModels {
    nn::Mlp f, g, h, t;
    CondMode cond_mode = CondMode::embedding;
    SynthNoiseMode synth_noise = SynthNoiseMode::scaled;
    int feat_dim = 0;
    int sem_dim = 0;
    int noise_dim = 0;

    int f_input_dim() const;
};

GanModels make_gan_models(int feat_dim, int sem_dim, const GanConfig& cfg, Rng& rng);

/// Critic objective for one batch:
///   E[G(x, H(x))] - E[G(xhat, a)] - alpha E[(||grad_xhat G(xhat, a)|| - 1)^2]
/// The critic maximizes this; its optimizer minimizes the negation.
/// `pen_x` is the node the penalty gradient is taken at (equal to `xhat`
/// for PenaltyPoint::generated).
struct CriticLossNodes {
    int total = -1;
    int wass_real = -1;
    int wass_fake = -1;
    int penalty = -1;
};

CriticLossNodes critic_loss(nn::Graph& g, const nn::MlpRef& critic, const nn::MlpRef& proj,
                            int x, int xhat, int a_fake, int pen_x, int feat_dim, double alpha);

/// Mean squared error between H(x) and a.
int projection_loss(nn::Graph& g, const nn::MlpRef& proj, int x, int a);

/// Mean negative log-likelihood of `labels` under the frozen classifier's
/// softmax on xhat.
int cls_regularizer(nn::Graph& g, const nn::MlpRef& frozen_classifier, int xhat,
                    const std::vector<int>& labels);

/// Donsker-Varadhan lower bound: mean[T(xhat,a)] - log(mean[exp T(xhat,a')]),
/// with a' a within-batch permutation of a. The exp-mean is computed in
/// log-sum-exp form. The generator minimizes the negation.
int mi_lower_bound(nn::Graph& g, const nn::MlpRef& stats, int xhat, int a, int a_shuffled);

struct StepLog {
    int step = 0;
    double critic_obj = 0.0;
    double wass_real = 0.0;
    double wass_fake = 0.0;
    double penalty = 0.0;
    double h_mse = 0.0;
    double mi_estimate = 0.0;
    double gen_adv = 0.0;
    double gen_cls = 0.0;
    double gen_mi = 0.0;
    double gen_total = 0.0;
};

struct GanTrainResult {
    GanModels models;
    std::vector<StepLog> history;
    nn::Mlp frozen_classifier;          // empty when lambda_cls == 0
    std::vector<int> classifier_classes;
};

/// Alternating optimization: n_critic critic updates, one projection update,
/// one statistics update, one generator update per step. `buffer` supplies
/// prototype conditions and must be non-null in prototype mode.
GanTrainResult train_gan(const data::Dataset& seen, const semantic::EmbeddingTable& embeddings,
                         const replay::ReplayBuffer* buffer, const GanConfig& cfg);

/// Softmax classifier on real features (the frozen L_CLS scorer). Classes
/// are indexed by their position in `class_order`.
nn::Mlp train_softmax_classifier(const data::Dataset& ds, const std::vector<int>& class_order,
                                 int hidden, int epochs, int batch, const nn::AdamConfig& opt,
                                 Rng& rng);

/// J class-conditional features from a prototype: row j is
/// F(mu ++ sigma * eps_j) (scaled mode) or F(mu ++ sigma ++ z_j) (concat).
nn::Tensor synthesize(const GanModels& m, const std::vector<double>& mu,
                      const std::vector<double>& sigma, int count, uint64_t seed);

/// J features from a semantic embedding: row j is F(a ++ z_j).
nn::Tensor synthesize_from_embedding(const GanModels& m, const std::vector<double>& embedding,
                                     int count, uint64_t seed);

} // namespace gil::gan
