#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "voxelnet/tensor.hpp"

namespace voxelnet {

// Tied-weight sparse autoencoder. The encoder is h = sigmoid(W x + b); the
// decoder is x_hat = W^T h + b_star with an identity output activation, so
// decoder weights are never stored separately.
struct SparseAutoencoder {
    Matrix W;                    // hidden * input encoder weights
    std::vector<double> b;       // hidden bias
    std::vector<double> b_star;  // input-sized decoder bias

    std::size_t input_size() const { return W.cols(); }
    std::size_t hidden_size() const { return W.rows(); }
};

struct SparsityConfig {
    double target = 0.05;       // desired mean activation of each hidden unit
    double beta = 3.0;          // weight of the KL sparsity penalty
    double weight_decay = 3e-3; // coefficient on sum of squared encoder weights
};

struct AeTrainConfig {
    std::size_t hidden_size = 150;
    std::size_t batch_size = 100;
    double learning_rate = 0.1;
    std::size_t epochs = 50;
    std::uint64_t seed = 0;
    double init_scale = 1.0;  // multiplies the sqrt(6/(n+p)) init bound
};

// Mean activations below this are clamped before the KL penalty is evaluated,
// keeping the cost finite at saturated units.
inline constexpr double kKlClampEpsilon = 1e-6;

// Fresh autoencoder with W uniform on [-r, r], r = init_scale * sqrt(6/(n+p)),
// and zero biases.
SparseAutoencoder make_autoencoder(std::size_t input_size, std::size_t hidden_size,
                                   std::uint64_t seed, double init_scale = 1.0);

// h = sigmoid(W x + b)
std::vector<double> encode(const SparseAutoencoder& ae, std::span<const double> x);

// x_hat = W^T h + b_star
std::vector<double> decode(const SparseAutoencoder& ae, std::span<const double> h);

// (1/N) * sum_i 0.5 * ||x_hat_i - x_i||^2
double reconstruction_cost(const SparseAutoencoder& ae,
                           std::span<const std::vector<double>> batch);

// Per-unit activation means over the batch.
std::vector<double> mean_activations(const SparseAutoencoder& ae,
                                     std::span<const std::vector<double>> batch);

// sum_j [ s*ln(s/s_hat_j) + (1-s)*ln((1-s)/(1-s_hat_j)) ], entries of s_hat
// clamped into [kKlClampEpsilon, 1-kKlClampEpsilon] first.
double kl_penalty(double target, std::span<const double> s_hat);

// reconstruction + beta * KL + weight_decay * sum W^2 (encoder W only; the
// tied decoder reuse is not double-counted and biases are excluded).
double total_cost(const SparseAutoencoder& ae, std::span<const std::vector<double>> batch,
                  const SparsityConfig& sp);

struct AeGradients {
    Matrix dW;
    std::vector<double> db;
    std::vector<double> db_star;
};

// Analytic gradient of total_cost. dW accumulates the encoder use of W, the
// tied decoder use of W^T, and the weight-decay term; the KL term is
// differentiated through the batch mean activations.
AeGradients cost_gradient(const SparseAutoencoder& ae,
                          std::span<const std::vector<double>> batch,
                          const SparsityConfig& sp);

struct AeEpochStats {
    std::size_t epoch = 0;    // 1-based
    double train_cost = 0.0;  // mean minibatch total cost over the epoch
    double val_cost = 0.0;    // reconstruction cost on the validation patches
};

struct AeTrainResult {
    SparseAutoencoder ae;
    std::vector<AeEpochStats> history;
};

// Minibatch gradient descent on total_cost. Patches are reshuffled each epoch
// with a seed derived from (cfg.seed, epoch); validation patches, when given,
// are only monitored. Throws DivergedError naming the epoch/batch if the cost
// goes non-finite.
AeTrainResult train_autoencoder(std::span<const std::vector<double>> train_patches,
                                std::span<const std::vector<double>> val_patches,
                                const AeTrainConfig& cfg, const SparsityConfig& sp);

// Row j of W reshaped to the patch shape in canonical order, paired with b_j.
// The products of the shape dims must equal the input size.
std::vector<std::pair<Tensor3, double>> extract_bases_3d(const SparseAutoencoder& ae,
                                                         std::size_t a, std::size_t b,
                                                         std::size_t c);
std::vector<std::pair<Matrix, double>> extract_bases_2d(const SparseAutoencoder& ae,
                                                        std::size_t a, std::size_t b);

// VXAE checkpoint: magic "VXAE", version u32, n u32, p u32, then W row-major,
// b, b_star as little-endian f64. Round trips are bit-exact.
void save_autoencoder(const SparseAutoencoder& ae, const std::filesystem::path& path);
SparseAutoencoder load_autoencoder(const std::filesystem::path& path);

}  // namespace voxelnet
