#include "voxelnet/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "voxelnet/ops.hpp"
#include "voxelnet/rng.hpp"
#include "voxelnet/serialize.hpp"

namespace voxelnet {

namespace {

Matrix pack_batch(std::span<const std::vector<double>> batch, std::size_t n) {
    if (batch.empty()) throw ParameterError("autoencoder: batch must be non-empty");
    Matrix x(batch.size(), n);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i].size() != n)
            throw DimensionError("autoencoder: patch " + std::to_string(i) +
                                 " has length " + std::to_string(batch[i].size()) +
                                 ", expected " + std::to_string(n));
        std::copy(batch[i].begin(), batch[i].end(), x.row(i).begin());
    }
    return x;
}

// H = sigmoid(X W^T + b), rows are examples.
Matrix encode_batch(const SparseAutoencoder& ae, const Matrix& x) {
    Matrix h = matmul_bt(x, ae.W);
    for (std::size_t i = 0; i < h.rows(); ++i) {
        double* row = h.row(i).data();
        for (std::size_t j = 0; j < h.cols(); ++j) row[j] = sigmoid(row[j] + ae.b[j]);
    }
    return h;
}

// Residuals D = (H W + b_star) - X.
Matrix residuals(const SparseAutoencoder& ae, const Matrix& x, const Matrix& h) {
    Matrix d = matmul(h, ae.W);
    for (std::size_t i = 0; i < d.rows(); ++i) {
        double* drow = d.row(i).data();
        const double* xrow = x.row(i).data();
        for (std::size_t k = 0; k < d.cols(); ++k) drow[k] += ae.b_star[k] - xrow[k];
    }
    return d;
}

std::vector<double> column_means(const Matrix& m) {
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row(i).data();
        for (std::size_t j = 0; j < m.cols(); ++j) out[j] += row[j];
    }
    const double inv = 1.0 / static_cast<double>(m.rows());
    for (auto& v : out) v *= inv;
    return out;
}

double squared_sum(std::span<const double> v) {
    double acc = 0.0;
    for (const double x : v) acc += x * x;
    return acc;
}

struct ForwardPass {
    Matrix x, h, d;
    std::vector<double> s_hat;
};

ForwardPass run_forward(const SparseAutoencoder& ae,
                        std::span<const std::vector<double>> batch) {
    ForwardPass f;
    f.x = pack_batch(batch, ae.input_size());
    f.h = encode_batch(ae, f.x);
    f.d = residuals(ae, f.x, f.h);
    f.s_hat = column_means(f.h);
    return f;
}

double cost_from_forward(const ForwardPass& f, const SparsityConfig& sp, const Matrix& w) {
    const double n_inv = 1.0 / static_cast<double>(f.x.rows());
    double cost = 0.5 * n_inv * squared_sum(f.d.data());
    if (sp.beta != 0.0) cost += sp.beta * kl_penalty(sp.target, f.s_hat);
    if (sp.weight_decay != 0.0) cost += sp.weight_decay * squared_sum(w.data());
    return cost;
}

AeGradients gradient_from_forward(const SparseAutoencoder& ae, const ForwardPass& f,
                                  const SparsityConfig& sp) {
    const std::size_t n = ae.input_size(), p = ae.hidden_size();
    const double n_inv = 1.0 / static_cast<double>(f.x.rows());

    // d(beta*KL)/d(s_hat_j); zero where the clamp is active
    std::vector<double> kl_grad(p, 0.0);
    if (sp.beta != 0.0) {
        for (std::size_t j = 0; j < p; ++j) {
            const double sj = f.s_hat[j];
            if (sj < kKlClampEpsilon || sj > 1.0 - kKlClampEpsilon) continue;
            kl_grad[j] = sp.beta * (-sp.target / sj + (1.0 - sp.target) / (1.0 - sj));
        }
    }

    // delta_z = (D W^T / N + beta_term / N) .* h(1-h)
    Matrix delta_z = matmul_bt(f.d, ae.W);
    for (std::size_t i = 0; i < delta_z.rows(); ++i) {
        double* zrow = delta_z.row(i).data();
        const double* hrow = f.h.row(i).data();
        for (std::size_t j = 0; j < p; ++j) {
            const double hj = hrow[j];
            zrow[j] = (zrow[j] + kl_grad[j]) * n_inv * hj * (1.0 - hj);
        }
    }

    AeGradients g;
    // encoder use of W plus the tied decoder use of W^T
    g.dW = matmul_at(delta_z, f.x);
    {
        Matrix dec = matmul_at(f.h, f.d);  // p x n
        for (std::size_t i = 0; i < g.dW.size(); ++i)
            g.dW.data()[i] += n_inv * dec.data()[i];
    }
    if (sp.weight_decay != 0.0)
        for (std::size_t i = 0; i < g.dW.size(); ++i)
            g.dW.data()[i] += 2.0 * sp.weight_decay * ae.W.data()[i];

    g.db.assign(p, 0.0);
    for (std::size_t i = 0; i < delta_z.rows(); ++i) {
        const double* zrow = delta_z.row(i).data();
        for (std::size_t j = 0; j < p; ++j) g.db[j] += zrow[j];
    }

    g.db_star.assign(n, 0.0);
    for (std::size_t i = 0; i < f.d.rows(); ++i) {
        const double* drow = f.d.row(i).data();
        for (std::size_t k = 0; k < n; ++k) g.db_star[k] += n_inv * drow[k];
    }
    return g;
}

}  // namespace

SparseAutoencoder make_autoencoder(std::size_t input_size, std::size_t hidden_size,
                                   std::uint64_t seed, double init_scale) {
    if (input_size == 0 || hidden_size == 0)
        throw ParameterError("make_autoencoder: sizes must be positive");
    if (!(init_scale > 0.0))
        throw ParameterError("make_autoencoder: init_scale must be positive");

    const double bound =
        init_scale * std::sqrt(6.0 / static_cast<double>(input_size + hidden_size));
    Rng rng(seed);
    SparseAutoencoder ae;
    ae.W = Matrix(hidden_size, input_size, rng.uniform_vec(-bound, bound, hidden_size * input_size));
    ae.b.assign(hidden_size, 0.0);
    ae.b_star.assign(input_size, 0.0);
    return ae;
}

std::vector<double> encode(const SparseAutoencoder& ae, std::span<const double> x) {
    if (x.size() != ae.input_size())
        throw DimensionError("encode: input length does not match autoencoder");
    std::vector<double> h = matvec(ae.W, x);
    for (std::size_t j = 0; j < h.size(); ++j) h[j] = sigmoid(h[j] + ae.b[j]);
    return h;
}

std::vector<double> decode(const SparseAutoencoder& ae, std::span<const double> h) {
    if (h.size() != ae.hidden_size())
        throw DimensionError("decode: hidden length does not match autoencoder");
    std::vector<double> x = matvec_t(ae.W, h);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += ae.b_star[k];
    return x;
}

double reconstruction_cost(const SparseAutoencoder& ae,
                           std::span<const std::vector<double>> batch) {
    ForwardPass f = run_forward(ae, batch);
    return 0.5 * squared_sum(f.d.data()) / static_cast<double>(f.x.rows());
}

std::vector<double> mean_activations(const SparseAutoencoder& ae,
                                     std::span<const std::vector<double>> batch) {
    ForwardPass f = run_forward(ae, batch);
    return f.s_hat;
}

double kl_penalty(double target, std::span<const double> s_hat) {
    if (!(target > 0.0 && target < 1.0))
        throw ParameterError("kl_penalty: target must lie in (0,1)");
    double acc = 0.0;
    for (double sj : s_hat) {
        sj = std::clamp(sj, kKlClampEpsilon, 1.0 - kKlClampEpsilon);
        acc += target * std::log(target / sj) +
               (1.0 - target) * std::log((1.0 - target) / (1.0 - sj));
    }
    return acc;
}

double total_cost(const SparseAutoencoder& ae, std::span<const std::vector<double>> batch,
                  const SparsityConfig& sp) {
    ForwardPass f = run_forward(ae, batch);
    return cost_from_forward(f, sp, ae.W);
}

AeGradients cost_gradient(const SparseAutoencoder& ae,
                          std::span<const std::vector<double>> batch,
                          const SparsityConfig& sp) {
    ForwardPass f = run_forward(ae, batch);
    return gradient_from_forward(ae, f, sp);
}

AeTrainResult train_autoencoder(std::span<const std::vector<double>> train_patches,
                                std::span<const std::vector<double>> val_patches,
                                const AeTrainConfig& cfg, const SparsityConfig& sp) {
    if (train_patches.empty())
        throw ParameterError("train_autoencoder: no training patches");
    if (cfg.batch_size == 0)
        throw ParameterError("train_autoencoder: batch_size must be positive");
    if (!(cfg.learning_rate > 0.0))
        throw ParameterError("train_autoencoder: learning_rate must be positive");

    const std::size_t n = train_patches[0].size();
    AeTrainResult result;
    result.ae = make_autoencoder(n, cfg.hidden_size, derive_seed(cfg.seed, "ae-init"),
                                 cfg.init_scale);
    SparseAutoencoder& ae = result.ae;

    std::vector<std::size_t> order(train_patches.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::vector<double>> minibatch;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, "ae-shuffle", epoch));
        shuffle_rng.shuffle(order);

        double epoch_cost = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(start + cfg.batch_size, order.size());
            minibatch.assign(stop - start, {});
            for (std::size_t i = start; i < stop; ++i) minibatch[i - start] = train_patches[order[i]];

            ForwardPass f = run_forward(ae, minibatch);
            const double cost = cost_from_forward(f, sp, ae.W);
            if (!std::isfinite(cost))
                throw DivergedError("train_autoencoder: non-finite cost at epoch " +
                                    std::to_string(epoch) + ", batch " +
                                    std::to_string(batches + 1));
            AeGradients g = gradient_from_forward(ae, f, sp);

            for (std::size_t i = 0; i < ae.W.size(); ++i)
                ae.W.data()[i] -= cfg.learning_rate * g.dW.data()[i];
            for (std::size_t j = 0; j < ae.b.size(); ++j)
                ae.b[j] -= cfg.learning_rate * g.db[j];
            for (std::size_t k = 0; k < ae.b_star.size(); ++k)
                ae.b_star[k] -= cfg.learning_rate * g.db_star[k];

            epoch_cost += cost;
            ++batches;
        }

        AeEpochStats stats;
        stats.epoch = epoch;
        stats.train_cost = epoch_cost / static_cast<double>(batches);
        stats.val_cost =
            val_patches.empty() ? std::numeric_limits<double>::quiet_NaN()
                                : reconstruction_cost(ae, val_patches);
        result.history.push_back(stats);
    }
    return result;
}

namespace {

void check_patch_shape(const SparseAutoencoder& ae, std::size_t product) {
    if (product != ae.input_size())
        throw DimensionError("extract_bases: patch shape product " + std::to_string(product) +
                             " does not match input size " + std::to_string(ae.input_size()));
}

}  // namespace

std::vector<std::pair<Tensor3, double>> extract_bases_3d(const SparseAutoencoder& ae,
                                                         std::size_t a, std::size_t b,
                                                         std::size_t c) {
    check_patch_shape(ae, a * b * c);
    std::vector<std::pair<Tensor3, double>> bases;
    bases.reserve(ae.hidden_size());
    for (std::size_t j = 0; j < ae.hidden_size(); ++j) {
        const auto row = ae.W.row(j);
        bases.emplace_back(Tensor3(a, b, c, {row.begin(), row.end()}), ae.b[j]);
    }
    return bases;
}

std::vector<std::pair<Matrix, double>> extract_bases_2d(const SparseAutoencoder& ae,
                                                        std::size_t a, std::size_t b) {
    check_patch_shape(ae, a * b);
    std::vector<std::pair<Matrix, double>> bases;
    bases.reserve(ae.hidden_size());
    for (std::size_t j = 0; j < ae.hidden_size(); ++j) {
        const auto row = ae.W.row(j);
        bases.emplace_back(Matrix(a, b, {row.begin(), row.end()}), ae.b[j]);
    }
    return bases;
}

void save_autoencoder(const SparseAutoencoder& ae, const std::filesystem::path& path) {
    ByteWriter w(path);
    w.magic("VXAE");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(ae.input_size()));
    w.u32(static_cast<std::uint32_t>(ae.hidden_size()));
    w.f64_array(ae.W.data());
    w.f64_array(ae.b);
    w.f64_array(ae.b_star);
    w.finish();
}

SparseAutoencoder load_autoencoder(const std::filesystem::path& path) {
    ByteReader r(path);
    r.expect_magic("VXAE");
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw FormatError(path.string() + ": unsupported VXAE version " +
                          std::to_string(version));
    const std::size_t n = r.u32();
    const std::size_t p = r.u32();
    if (n == 0 || p == 0) throw FormatError(path.string() + ": zero dimension in header");
    SparseAutoencoder ae;
    ae.W = Matrix(p, n, r.f64_array(p * n));
    ae.b = r.f64_array(p);
    ae.b_star = r.f64_array(n);
    r.expect_eof();
    return ae;
}

}  // namespace voxelnet
