#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "voxelnet/tensor.hpp"

namespace voxelnet {

// 3-layer fully connected network: sigmoid hidden layer, softmax output with
// 2 or 3 units. The convolutional features feeding it are frozen, so this is
// the only trainable part of the classification stage.
struct MlpClassifier {
    Matrix w1;               // hidden * input
    std::vector<double> b1;  // hidden
    Matrix w2;               // classes * hidden
    std::vector<double> b2;  // classes

    std::size_t input_size() const { return w1.cols(); }
    std::size_t hidden_size() const { return w1.rows(); }
    std::size_t num_classes() const { return w2.rows(); }
};

// Labeled feature vectors, one row per example.
struct Dataset {
    Matrix x;
    std::vector<int> y;

    std::size_t size() const { return y.size(); }
    bool empty() const { return y.empty(); }
};

struct MomentumState {
    Matrix vw1;
    std::vector<double> vb1;
    Matrix vw2;
    std::vector<double> vb2;
    double mu = 0.9;
};

struct FitConfig {
    double learning_rate = 0.01;
    double mu = 0.9;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 200;
    std::uint64_t seed = 0;
    std::size_t eval_every = 1;  // validation cadence in epochs
};

// Hidden weights uniform on [-r, r] with r = sqrt(6/(input+hidden)), hidden
// bias zero; softmax layer weights and bias exactly zero.
MlpClassifier init_network(std::size_t input_dim, std::size_t hidden_dim,
                           std::size_t classes, std::uint64_t seed);

// Class probabilities softmax(W2 sigmoid(W1 x + b1) + b2), computed with
// max-subtraction.
std::vector<double> forward(const MlpClassifier& net, std::span<const double> x);

// Argmax class of forward(net, x); ties resolve to the lowest class index.
int predict(const MlpClassifier& net, std::span<const double> x);

// Mean negative log-probability of the true labels, evaluated through
// log-sum-exp rather than a stored probability. No weight decay term.
double cross_entropy(const MlpClassifier& net, const Dataset& batch);

struct MlpGradients {
    Matrix dw1;
    std::vector<double> db1;
    Matrix dw2;
    std::vector<double> db2;
};

// Analytic gradient of cross_entropy for all four parameter groups.
MlpGradients gradient(const MlpClassifier& net, const Dataset& batch);

MomentumState make_momentum_state(const MlpClassifier& net, double mu);

// v <- mu*v - lr*g; theta <- theta + v, per parameter group.
void sgd_momentum_step(MlpClassifier& net, const MlpGradients& grads,
                       MomentumState& state, double learning_rate);

struct EpochStats {
    std::size_t epoch = 0;    // 1-based
    double train_cost = 0.0;  // mean minibatch cross-entropy over the epoch
    double val_error = 0.0;   // misclassification rate on the validation set
};

struct FitResult {
    MlpClassifier best;      // snapshot at the lowest recorded validation error
    std::size_t best_epoch = 0;
    double best_val_error = 0.0;
    std::vector<EpochStats> history;  // one entry per evaluation point
};

// Override hook for the validation metric; receives the current parameters
// and the 1-based epoch.
using ValMetric = std::function<double(const MlpClassifier&, std::size_t)>;

// Minibatch momentum SGD with validation early stopping, starting from the
// given network. Validation misclassification error is measured every
// eval_every epochs (and at the final epoch); the returned snapshot is the
// argmin over those measurements, earliest epoch winning ties. With
// max_epochs = 0 the initial network is returned untouched.
FitResult train_with_early_stopping(MlpClassifier net, const Dataset& train,
                                    const Dataset& val, const FitConfig& cfg,
                                    ValMetric val_metric = {});

struct Metrics {
    double accuracy = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

Metrics evaluate(const MlpClassifier& net, const Dataset& test);

// Misclassification rate (1 - accuracy).
double misclassification_error(const MlpClassifier& net, const Dataset& data);

// VXMC checkpoint: magic "VXMC", version u32, input/hidden/classes u32, then
// W1, b1, W2, b2 as little-endian f64. Round trips are bit-exact.
void save_classifier(const MlpClassifier& net, const std::filesystem::path& path);
MlpClassifier load_classifier(const std::filesystem::path& path);

}  // namespace voxelnet
