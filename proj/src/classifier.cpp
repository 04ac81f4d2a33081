#include "voxelnet/classifier.hpp"

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

void check_labels(const Dataset& d, std::size_t classes) {
    if (d.x.rows() != d.y.size())
        throw DimensionError("classifier: feature rows and label count disagree");
    for (const int label : d.y)
        if (label < 0 || static_cast<std::size_t>(label) >= classes)
            throw ParameterError("classifier: label " + std::to_string(label) +
                                 " outside [0," + std::to_string(classes) + ")");
}

// A1 = sigmoid(X W1^T + b1)
Matrix hidden_batch(const MlpClassifier& net, const Matrix& x) {
    Matrix a1 = matmul_bt(x, net.w1);
    for (std::size_t i = 0; i < a1.rows(); ++i) {
        double* row = a1.row(i).data();
        for (std::size_t j = 0; j < a1.cols(); ++j) row[j] = sigmoid(row[j] + net.b1[j]);
    }
    return a1;
}

// Z2 = A1 W2^T + b2 (logits, not yet normalized)
Matrix logits_batch(const MlpClassifier& net, const Matrix& a1) {
    Matrix z2 = matmul_bt(a1, net.w2);
    for (std::size_t i = 0; i < z2.rows(); ++i) {
        double* row = z2.row(i).data();
        for (std::size_t j = 0; j < z2.cols(); ++j) row[j] += net.b2[j];
    }
    return z2;
}

// Mean cross-entropy from logits via log-sum-exp; optionally turns the logit
// rows into probabilities in place for the backward pass.
double cross_entropy_from_logits(Matrix& z2, std::span<const int> labels,
                                 bool to_probabilities) {
    double total = 0.0;
    for (std::size_t i = 0; i < z2.rows(); ++i) {
        double* row = z2.row(i).data();
        const std::size_t c = z2.cols();
        const double zmax = *std::max_element(row, row + c);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) sum += std::exp(row[j] - zmax);
        const double log_norm = zmax + std::log(sum);
        total -= row[static_cast<std::size_t>(labels[i])] - log_norm;
        if (to_probabilities)
            for (std::size_t j = 0; j < c; ++j) row[j] = std::exp(row[j] - log_norm);
    }
    return total / static_cast<double>(z2.rows());
}

struct BatchGrad {
    double cost = 0.0;
    MlpGradients g;
};

BatchGrad cost_and_gradient(const MlpClassifier& net, const Matrix& x,
                            std::span<const int> labels) {
    const std::size_t n = x.rows();
    const double n_inv = 1.0 / static_cast<double>(n);

    Matrix a1 = hidden_batch(net, x);
    Matrix p = logits_batch(net, a1);
    BatchGrad out;
    out.cost = cross_entropy_from_logits(p, labels, true);

    // delta2 = (P - onehot)/N
    for (std::size_t i = 0; i < n; ++i) {
        double* row = p.row(i).data();
        row[static_cast<std::size_t>(labels[i])] -= 1.0;
        for (std::size_t j = 0; j < p.cols(); ++j) row[j] *= n_inv;
    }

    out.g.dw2 = matmul_at(p, a1);
    out.g.db2.assign(p.cols(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = p.row(i).data();
        for (std::size_t j = 0; j < p.cols(); ++j) out.g.db2[j] += row[j];
    }

    // delta1 = (delta2 W2) .* a1 (1 - a1)
    Matrix delta1 = matmul(p, net.w2);
    for (std::size_t i = 0; i < n; ++i) {
        double* drow = delta1.row(i).data();
        const double* arow = a1.row(i).data();
        for (std::size_t j = 0; j < delta1.cols(); ++j)
            drow[j] *= arow[j] * (1.0 - arow[j]);
    }

    out.g.dw1 = matmul_at(delta1, x);
    out.g.db1.assign(delta1.cols(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* drow = delta1.row(i).data();
        for (std::size_t j = 0; j < delta1.cols(); ++j) out.g.db1[j] += drow[j];
    }
    return out;
}

Matrix pack_rows(const Matrix& x, std::span<const std::size_t> idx) {
    Matrix out(idx.size(), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy(x.row(idx[i]).begin(), x.row(idx[i]).end(), out.row(i).begin());
    return out;
}

}  // namespace

MlpClassifier init_network(std::size_t input_dim, std::size_t hidden_dim,
                           std::size_t classes, std::uint64_t seed) {
    if (input_dim == 0 || hidden_dim == 0)
        throw ParameterError("init_network: dimensions must be positive");
    if (classes != 2 && classes != 3)
        throw ParameterError("init_network: classes must be 2 or 3");

    const double bound = std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim));
    Rng rng(seed);
    MlpClassifier net;
    net.w1 = Matrix(hidden_dim, input_dim,
                    rng.uniform_vec(-bound, bound, hidden_dim * input_dim));
    net.b1.assign(hidden_dim, 0.0);
    net.w2 = Matrix(classes, hidden_dim);  // softmax layer starts at zero
    net.b2.assign(classes, 0.0);
    return net;
}

std::vector<double> forward(const MlpClassifier& net, std::span<const double> x) {
    if (x.size() != net.input_size())
        throw DimensionError("forward: input length does not match network");
    std::vector<double> a1 = matvec(net.w1, x);
    for (std::size_t j = 0; j < a1.size(); ++j) a1[j] = sigmoid(a1[j] + net.b1[j]);
    std::vector<double> z2 = matvec(net.w2, a1);
    for (std::size_t j = 0; j < z2.size(); ++j) z2[j] += net.b2[j];

    const double zmax = *std::max_element(z2.begin(), z2.end());
    double sum = 0.0;
    for (auto& z : z2) {
        z = std::exp(z - zmax);
        sum += z;
    }
    for (auto& z : z2) z /= sum;
    return z2;
}

int predict(const MlpClassifier& net, std::span<const double> x) {
    const std::vector<double> p = forward(net, x);
    std::size_t best = 0;
    for (std::size_t j = 1; j < p.size(); ++j)
        if (p[j] > p[best]) best = j;  // strict: ties keep the lowest index
    return static_cast<int>(best);
}

double cross_entropy(const MlpClassifier& net, const Dataset& batch) {
    if (batch.empty()) throw ParameterError("cross_entropy: batch must be non-empty");
    check_labels(batch, net.num_classes());
    Matrix a1 = hidden_batch(net, batch.x);
    Matrix z2 = logits_batch(net, a1);
    return cross_entropy_from_logits(z2, batch.y, false);
}

MlpGradients gradient(const MlpClassifier& net, const Dataset& batch) {
    if (batch.empty()) throw ParameterError("gradient: batch must be non-empty");
    check_labels(batch, net.num_classes());
    return cost_and_gradient(net, batch.x, batch.y).g;
}

MomentumState make_momentum_state(const MlpClassifier& net, double mu) {
    if (!(mu >= 0.0 && mu < 1.0))
        throw ParameterError("make_momentum_state: mu must lie in [0,1)");
    MomentumState s;
    s.vw1 = Matrix(net.w1.rows(), net.w1.cols());
    s.vb1.assign(net.b1.size(), 0.0);
    s.vw2 = Matrix(net.w2.rows(), net.w2.cols());
    s.vb2.assign(net.b2.size(), 0.0);
    s.mu = mu;
    return s;
}

void sgd_momentum_step(MlpClassifier& net, const MlpGradients& grads,
                       MomentumState& state, double learning_rate) {
    if (!net.w1.same_shape(state.vw1) || !net.w2.same_shape(state.vw2))
        throw DimensionError("sgd_momentum_step: velocity shapes do not match network");

    auto step = [&](double* theta, double* v, const double* g, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            v[i] = state.mu * v[i] - learning_rate * g[i];
            theta[i] += v[i];
        }
    };
    step(net.w1.data().data(), state.vw1.data().data(), grads.dw1.data().data(),
         net.w1.size());
    step(net.b1.data(), state.vb1.data(), grads.db1.data(), net.b1.size());
    step(net.w2.data().data(), state.vw2.data().data(), grads.dw2.data().data(),
         net.w2.size());
    step(net.b2.data(), state.vb2.data(), grads.db2.data(), net.b2.size());
}

FitResult train_with_early_stopping(MlpClassifier net, const Dataset& train,
                                    const Dataset& val, const FitConfig& cfg,
                                    ValMetric val_metric) {
    if (train.empty() || val.empty())
        throw ParameterError("train_with_early_stopping: train and val must be non-empty");
    if (!(cfg.learning_rate > 0.0))
        throw ParameterError("train_with_early_stopping: learning_rate must be positive");
    if (cfg.batch_size == 0 || cfg.eval_every == 0)
        throw ParameterError(
            "train_with_early_stopping: batch_size and eval_every must be positive");
    check_labels(train, net.num_classes());
    check_labels(val, net.num_classes());
    if (train.x.cols() != net.input_size())
        throw DimensionError("train_with_early_stopping: feature width does not match network");

    FitResult result;
    result.best = net;
    result.best_epoch = 0;
    result.best_val_error = std::numeric_limits<double>::infinity();

    MomentumState state = make_momentum_state(net, cfg.mu);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::size_t> idx;
    std::vector<int> labels;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, "mlp-shuffle", epoch));
        shuffle_rng.shuffle(order);

        double epoch_cost = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(start + cfg.batch_size, order.size());
            idx.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                       order.begin() + static_cast<std::ptrdiff_t>(stop));
            labels.resize(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = train.y[idx[i]];

            const Matrix xb = pack_rows(train.x, idx);
            BatchGrad bg = cost_and_gradient(net, xb, labels);
            if (!std::isfinite(bg.cost))
                throw DivergedError("train_with_early_stopping: non-finite cost at epoch " +
                                    std::to_string(epoch) + ", batch " +
                                    std::to_string(batches + 1));
            sgd_momentum_step(net, bg.g, state, cfg.learning_rate);
            epoch_cost += bg.cost;
            ++batches;
        }

        if (epoch % cfg.eval_every == 0 || epoch == cfg.max_epochs) {
            EpochStats stats;
            stats.epoch = epoch;
            stats.train_cost = epoch_cost / static_cast<double>(batches);
            stats.val_error =
                val_metric ? val_metric(net, epoch) : misclassification_error(net, val);
            result.history.push_back(stats);
            if (stats.val_error < result.best_val_error) {
                result.best = net;
                result.best_epoch = epoch;
                result.best_val_error = stats.val_error;
            }
        }
    }
    return result;
}

Metrics evaluate(const MlpClassifier& net, const Dataset& test) {
    if (test.empty()) throw ParameterError("evaluate: test set must be non-empty");
    check_labels(test, net.num_classes());
    const std::size_t c = net.num_classes();
    Metrics m;
    m.confusion.assign(c, std::vector<std::size_t>(c, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const int pred = predict(net, test.x.row(i));
        m.confusion[static_cast<std::size_t>(test.y[i])][static_cast<std::size_t>(pred)]++;
        if (pred == test.y[i]) ++correct;
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    return m;
}

double misclassification_error(const MlpClassifier& net, const Dataset& data) {
    return 1.0 - evaluate(net, data).accuracy;
}

void save_classifier(const MlpClassifier& net, const std::filesystem::path& path) {
    ByteWriter w(path);
    w.magic("VXMC");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(net.input_size()));
    w.u32(static_cast<std::uint32_t>(net.hidden_size()));
    w.u32(static_cast<std::uint32_t>(net.num_classes()));
    w.f64_array(net.w1.data());
    w.f64_array(net.b1);
    w.f64_array(net.w2.data());
    w.f64_array(net.b2);
    w.finish();
}

MlpClassifier load_classifier(const std::filesystem::path& path) {
    ByteReader r(path);
    r.expect_magic("VXMC");
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw FormatError(path.string() + ": unsupported VXMC version " +
                          std::to_string(version));
    const std::size_t input = r.u32();
    const std::size_t hidden = r.u32();
    const std::size_t classes = r.u32();
    if (input == 0 || hidden == 0 || (classes != 2 && classes != 3))
        throw FormatError(path.string() + ": bad dimensions in header");
    MlpClassifier net;
    net.w1 = Matrix(hidden, input, r.f64_array(hidden * input));
    net.b1 = r.f64_array(hidden);
    net.w2 = Matrix(classes, hidden, r.f64_array(classes * hidden));
    net.b2 = r.f64_array(classes);
    r.expect_eof();
    return net;
}

}  // namespace voxelnet
