#pragma once

#include "shelterfl/rng.hpp"
#include "shelterfl/types.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace shelterfl {

/// Layer widths for the classifier: input -> hidden... -> 3 classes. The
/// production architecture is hidden = {512, 128, 16}; tests use smaller
/// configurations.
struct MlpArchitecture {
    int input_dim = 0;
    std::vector<int> hidden = {512, 128, 16};
    int outputs = kNumClasses;
};

/// He-uniform weights, zero biases; deterministic given the seed.
ModelParameters init_model(const MlpArchitecture& arch, std::uint64_t seed);
ModelParameters init_model(int input_dim, std::uint64_t seed);

/// Inference-mode class probabilities (no dropout, rows sum to 1).
Eigen::MatrixXd predict_proba(
    const ModelParameters& params, const Eigen::MatrixXd& batch,
    OutputActivation activation = OutputActivation::Softmax);

/// Argmax of predict_proba; exact ties resolve in label order.
std::vector<Label> predict(
    const ModelParameters& params, const Eigen::MatrixXd& batch,
    OutputActivation activation = OutputActivation::Softmax);

/// Training-mode forward pass (inverted dropout driven by `dropout_rng`).
Eigen::MatrixXd forward_training(const ModelParameters& params,
                                 const Eigen::MatrixXd& batch,
                                 const TrainConfig& cfg, RngStream& dropout_rng);

struct LossGrads {
    double loss = 0.0;
    ModelParameters grads;
};

/// Mean categorical cross-entropy over the batch plus backpropagated
/// gradients, sharing one dropout draw between the forward and backward
/// passes. `onehot` is row-per-sample over the 3 classes.
LossGrads loss_and_grads(const ModelParameters& params,
                         const Eigen::MatrixXd& batch,
                         const Eigen::MatrixXd& onehot, const TrainConfig& cfg,
                         RngStream& dropout_rng);

struct AdamState {
    ModelParameters first_moment;
    ModelParameters second_moment;
    long step = 0;

    static AdamState like(const ModelParameters& shape);
};

void adam_update(ModelParameters& params, AdamState& state,
                 const ModelParameters& grads, const TrainConfig& cfg);

struct TrainStats {
    std::vector<double> epoch_mean_loss;  // one entry per epoch
};

/// Mini-batch local training: for each epoch, shuffle (seeded), split into
/// batches of cfg.batch_size (last batch short, kept) and apply one Adam
/// update per batch. Adam state is fresh for every invocation. With
/// cfg.use_float32 the arithmetic runs in 32-bit.
ModelParameters agency_training(ModelParameters model, const Eigen::MatrixXd& x,
                                const std::vector<Label>& y,
                                const TrainConfig& cfg,
                                TrainStats* stats = nullptr);

Eigen::MatrixXd one_hot(const std::vector<Label>& labels);

/// Versioned binary container: magic, layer count, shapes, row-major 64-bit
/// little-endian values.
void save_parameters(std::ostream& out, const ModelParameters& params);
ModelParameters load_parameters(std::istream& in);
void save_parameters_file(const std::string& path, const ModelParameters& params);
ModelParameters load_parameters_file(const std::string& path);

/// Lossless text form for diffing (round-trips exactly).
void export_parameters_text(std::ostream& out, const ModelParameters& params);
ModelParameters import_parameters_text(std::istream& in);

}  // namespace shelterfl
