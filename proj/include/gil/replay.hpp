#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gil/adam.hpp"
#include "gil/dataset.hpp"
#include "gil/mlp.hpp"
#include "gil/semantic.hpp"

namespace gil::replay {

/// One buffered class: prototype, per-dimension spread, and the semantic
/// embedding it answers to.
struct ClassRecord {
    int class_id = -1;
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> embedding;
    int origin_stage = 0;
};

/// Append-only store of class records, one per class id.
struct ReplayBuffer {
    int feat_dim = 0;
    int sem_dim = 0;
    std::vector<ClassRecord> records;
    std::vector<std::pair<int, std::vector<int>>> stage_log; // (stage, classes added)

    bool contains(int class_id) const;
    const ClassRecord& at(int class_id) const;
    int size() const { return static_cast<int>(records.size()); }
};

/// Mean and population (divide by N) standard deviation per dimension.
/// A single sample yields sigma = 0.
std::pair<std::vector<double>, std::vector<double>> compute_prototype(
    const std::vector<std::span<const double>>& features);

std::pair<std::vector<double>, std::vector<double>> class_prototype(const data::Dataset& ds,
                                                                    int class_id);

void buffer_insert(ReplayBuffer& buffer, ClassRecord record);

/// GILB file: magic "GILB", u32 version=1, u32 record count, u32 d, u32 s,
/// then per record u32 class id + d x f32 mu + d x f32 sigma + s x f32
/// embedding. Origin stages are checkpoint-manifest data, not part of this
/// format; bare loads set them to 0.
void save_buffer(const ReplayBuffer& buffer, const std::string& path);
ReplayBuffer load_buffer(const std::string& path);

struct CvaeConfig {
    int hidden = 256;
    int latent = 128;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double recon_weight = 1.0; // decoder reconstruction of the input embedding
    double kl_weight = 0.0;    // latent pull toward N(0, I); off by default
};

/// Semantic-to-prototype encoder: a bottleneck MLP that reads an embedding
/// and predicts mu ++ sigma through a dedicated output head; the decoder
/// reconstructs the embedding from the latent code. Encoding is
/// deterministic (no latent sampling) and the sigma half is rectified by
/// absolute value.
struct Cvae {
    nn::Mlp encoder;  // s -> hidden -> hidden -> latent
    nn::Mlp out_head; // latent -> 2d, final layer zero-initialized
    nn::Mlp decoder;  // latent -> hidden -> hidden -> s
    int feat_dim = 0;
    int sem_dim = 0;
    int latent_dim = 0;
};

Cvae make_cvae(int sem_dim, int feat_dim, const CvaeConfig& cfg, Rng& rng);

struct CvaeTrainResult {
    std::vector<double> loss_history; // prediction MSE per epoch, before that epoch's update
    double final_loss = 0.0;          // prediction MSE after the last update
};

/// Full-batch Adam over the buffer records. The reported loss is the mean
/// squared error between predicted and stored mu ++ sigma.
CvaeTrainResult train_cvae(Cvae& model, const ReplayBuffer& buffer, int epochs,
                           const CvaeConfig& cfg, Rng& rng);

std::pair<std::vector<double>, std::vector<double>> cvae_encode(const Cvae& model,
                                                                const std::vector<double>& embedding);

/// Prediction MSE of the current model on a set of records.
double cvae_loss(const Cvae& model, const std::vector<const ClassRecord*>& records);

} // namespace gil::replay
