#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "oracle.hpp"
#include "voxelnet/autoencoder.hpp"
#include "voxelnet/ops.hpp"
#include "voxelnet/rng.hpp"

using namespace voxelnet;

namespace {

std::vector<std::vector<double>> random_batch(Rng& rng, std::size_t count,
                                              std::size_t dim, double lo = -1.0,
                                              double hi = 1.0) {
    std::vector<std::vector<double>> batch;
    for (std::size_t i = 0; i < count; ++i) batch.push_back(rng.uniform_vec(lo, hi, dim));
    return batch;
}

SparseAutoencoder random_ae(Rng& rng, std::size_t n, std::size_t p, double scale = 0.5) {
    SparseAutoencoder ae;
    ae.W = Matrix(p, n, rng.uniform_vec(-scale, scale, p * n));
    ae.b = rng.uniform_vec(-scale, scale, p);
    ae.b_star = rng.uniform_vec(-scale, scale, n);
    return ae;
}

// Central finite differences of total_cost over every parameter.
AeGradients fd_gradient(const SparseAutoencoder& ae,
                        std::span<const std::vector<double>> batch,
                        const SparsityConfig& sp, double step = 1e-5) {
    AeGradients g;
    g.dW = Matrix(ae.W.rows(), ae.W.cols());
    g.db.assign(ae.b.size(), 0.0);
    g.db_star.assign(ae.b_star.size(), 0.0);

    SparseAutoencoder probe = ae;
    auto central = [&](double* slot) {
        const double saved = *slot;
        *slot = saved + step;
        const double up = total_cost(probe, batch, sp);
        *slot = saved - step;
        const double down = total_cost(probe, batch, sp);
        *slot = saved;
        return (up - down) / (2.0 * step);
    };

    for (std::size_t i = 0; i < probe.W.size(); ++i)
        g.dW.data()[i] = central(&probe.W.data()[i]);
    for (std::size_t j = 0; j < probe.b.size(); ++j) g.db[j] = central(&probe.b[j]);
    for (std::size_t k = 0; k < probe.b_star.size(); ++k)
        g.db_star[k] = central(&probe.b_star[k]);
    return g;
}

double max_rel_err(const AeGradients& got, const AeGradients& want) {
    double worst = 0.0;
    for (std::size_t i = 0; i < got.dW.size(); ++i)
        worst = std::max(worst, oracle::rel_err(got.dW.data()[i], want.dW.data()[i]));
    for (std::size_t j = 0; j < got.db.size(); ++j)
        worst = std::max(worst, oracle::rel_err(got.db[j], want.db[j]));
    for (std::size_t k = 0; k < got.db_star.size(); ++k)
        worst = std::max(worst, oracle::rel_err(got.db_star[k], want.db_star[k]));
    return worst;
}

// Plain tied-weight MSE backprop (beta = lambda = 0), coded example-by-example
// with explicit loops; independent of the batched implementation.
AeGradients mse_backprop_oracle(const SparseAutoencoder& ae,
                                std::span<const std::vector<double>> batch) {
    const std::size_t n = ae.input_size(), p = ae.hidden_size();
    const double n_inv = 1.0 / static_cast<double>(batch.size());
    AeGradients g;
    g.dW = Matrix(p, n);
    g.db.assign(p, 0.0);
    g.db_star.assign(n, 0.0);

    for (const auto& x : batch) {
        std::vector<double> h(p), d(n);
        for (std::size_t j = 0; j < p; ++j) {
            double z = ae.b[j];
            for (std::size_t k = 0; k < n; ++k) z += ae.W(j, k) * x[k];
            h[j] = sigmoid(z);
        }
        for (std::size_t k = 0; k < n; ++k) {
            double xh = ae.b_star[k];
            for (std::size_t j = 0; j < p; ++j) xh += ae.W(j, k) * h[j];
            d[k] = xh - x[k];
        }
        for (std::size_t j = 0; j < p; ++j) {
            double dh = 0.0;
            for (std::size_t k = 0; k < n; ++k) dh += ae.W(j, k) * d[k];
            const double dz = n_inv * dh * h[j] * (1.0 - h[j]);
            g.db[j] += dz;
            for (std::size_t k = 0; k < n; ++k)
                g.dW(j, k) += dz * x[k] + n_inv * h[j] * d[k];
        }
        for (std::size_t k = 0; k < n; ++k) g.db_star[k] += n_inv * d[k];
    }
    return g;
}

}  // namespace

TEST_CASE("encode: zero parameters, overcomplete sizes, dot-product oracle") {
    SparseAutoencoder zero;
    zero.W = Matrix(4, 3);
    zero.b.assign(4, 0.0);
    zero.b_star.assign(3, 0.0);
    for (const double h : encode(zero, std::vector<double>{1.0, -2.0, 3.0}))
        CHECK(h == 0.5);

    Rng rng(21);
    const SparseAutoencoder wide = random_ae(rng, 125, 150, 0.1);
    CHECK(encode(wide, rng.uniform_vec(-1.0, 1.0, 125)).size() == 150);

    const SparseAutoencoder ae = random_ae(rng, 6, 9);
    const std::vector<double> x = rng.uniform_vec(-1.0, 1.0, 6);
    const std::vector<double> h = encode(ae, x);
    for (std::size_t j = 0; j < 9; ++j) {
        double z = ae.b[j];
        for (std::size_t k = 0; k < 6; ++k) z += ae.W(j, k) * x[k];
        CHECK(h[j] == doctest::Approx(sigmoid(z)).epsilon(1e-14));
        CHECK(h[j] > 0.0);
        CHECK(h[j] < 1.0);
    }

    CHECK_THROWS_AS(encode(ae, std::vector<double>(5)), DimensionError);
}

TEST_CASE("decode: zero hidden gives bias, identity weights, transpose oracle") {
    Rng rng(22);
    SparseAutoencoder ae = random_ae(rng, 5, 7);
    const std::vector<double> zero_h(7, 0.0);
    CHECK(decode(ae, zero_h) == ae.b_star);

    SparseAutoencoder ident;
    ident.W = Matrix(4, 4);
    for (std::size_t i = 0; i < 4; ++i) ident.W(i, i) = 1.0;
    ident.b.assign(4, 0.0);
    ident.b_star.assign(4, 0.0);
    const std::vector<double> h = rng.uniform_vec(-2.0, 2.0, 4);
    const std::vector<double> xh = decode(ident, h);
    for (std::size_t k = 0; k < 4; ++k) CHECK(xh[k] == doctest::Approx(h[k]));

    const std::vector<double> hr = rng.uniform_vec(-1.0, 1.0, 7);
    const std::vector<double> got = decode(ae, hr);
    for (std::size_t k = 0; k < 5; ++k) {
        double want = ae.b_star[k];
        for (std::size_t j = 0; j < 7; ++j) want += ae.W(j, k) * hr[j];
        CHECK(got[k] == doctest::Approx(want).epsilon(1e-14));
    }

    CHECK_THROWS_AS(decode(ae, std::vector<double>(6)), DimensionError);
}

TEST_CASE("reconstruction_cost: fixed point, unit residual, summation oracle") {
    // at the sigmoid fixed point z* = sigmoid(z*), identity weights reconstruct
    // exactly
    double fixed_point = 0.5;
    for (int i = 0; i < 200; ++i) fixed_point = sigmoid(fixed_point);

    SparseAutoencoder ident;
    ident.W = Matrix(3, 3);
    for (std::size_t i = 0; i < 3; ++i) ident.W(i, i) = 1.0;
    ident.b.assign(3, 0.0);
    ident.b_star.assign(3, 0.0);
    const std::vector<std::vector<double>> fp_batch{{fixed_point, fixed_point, fixed_point}};
    CHECK(reconstruction_cost(ident, fp_batch) < 1e-25);

    // residual of exactly (1,0,...,0) costs one half
    SparseAutoencoder shifted;
    shifted.W = Matrix(4, 3);
    shifted.b.assign(4, 0.0);
    shifted.b_star = {1.0, 0.0, 0.0};
    const std::vector<std::vector<double>> zeros{{0.0, 0.0, 0.0}};
    CHECK(reconstruction_cost(shifted, zeros) == doctest::Approx(0.5).epsilon(1e-14));

    Rng rng(23);
    const SparseAutoencoder ae = random_ae(rng, 5, 6);
    const auto batch = random_batch(rng, 7, 5);
    double want = 0.0;
    for (const auto& x : batch) {
        const std::vector<double> xh = decode(ae, encode(ae, x));
        double sq = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) sq += (xh[k] - x[k]) * (xh[k] - x[k]);
        want += 0.5 * sq;
    }
    want /= static_cast<double>(batch.size());
    CHECK(reconstruction_cost(ae, batch) == doctest::Approx(want).epsilon(1e-12));

    CHECK_THROWS_AS(reconstruction_cost(ae, std::vector<std::vector<double>>{}),
                    ParameterError);
}

TEST_CASE("mean_activations: half at zero weights, single input, loop oracle") {
    SparseAutoencoder zero;
    zero.W = Matrix(5, 3);
    zero.b.assign(5, 0.0);
    zero.b_star.assign(3, 0.0);
    Rng rng(24);
    for (const double s : mean_activations(zero, random_batch(rng, 4, 3))) CHECK(s == 0.5);

    const SparseAutoencoder ae = random_ae(rng, 4, 6);
    const auto one = random_batch(rng, 1, 4);
    CHECK(mean_activations(ae, one) == encode(ae, one[0]));

    const auto batch = random_batch(rng, 9, 4);
    const std::vector<double> got = mean_activations(ae, batch);
    for (std::size_t j = 0; j < 6; ++j) {
        double acc = 0.0;
        for (const auto& x : batch) acc += encode(ae, x)[j];
        CHECK(got[j] == doctest::Approx(acc / 9.0).epsilon(1e-13));
        CHECK(got[j] > 0.0);
        CHECK(got[j] < 1.0);
    }
}

TEST_CASE("kl_penalty: zero at target, two-term formula, clamping, domain") {
    const std::vector<double> at_target(7, 0.05);
    CHECK(kl_penalty(0.05, at_target) == 0.0);

    // s = 0.05 against a single unit at 0.5, checked against an
    // extended-precision evaluation of the two-term formula
    const long double s = 0.05L, sj = 0.5L;
    const double want = static_cast<double>(s * std::log(s / sj) +
                                            (1.0L - s) * std::log((1.0L - s) / (1.0L - sj)));
    const std::vector<double> one{0.5};
    CHECK(kl_penalty(0.05, one) == doctest::Approx(want).epsilon(1e-14));

    const std::vector<double> raw_zero{0.0};
    CHECK(std::isfinite(kl_penalty(0.05, raw_zero)));
    const std::vector<double> raw_one{1.0};
    CHECK(std::isfinite(kl_penalty(0.05, raw_one)));

    CHECK_THROWS_AS(kl_penalty(0.0, one), ParameterError);
    CHECK_THROWS_AS(kl_penalty(1.0, one), ParameterError);

    // non-negativity over a sweep
    for (double sj_val = 0.01; sj_val < 1.0; sj_val += 0.007) {
        const std::vector<double> v{sj_val};
        CHECK(kl_penalty(0.05, v) >= 0.0);
    }
}

TEST_CASE("total_cost: reduces to reconstruction, counts W decay once, oracle") {
    Rng rng(25);
    const SparseAutoencoder ae = random_ae(rng, 5, 8);
    const auto batch = random_batch(rng, 6, 5);

    CHECK(total_cost(ae, batch, {0.05, 0.0, 0.0}) ==
          doctest::Approx(reconstruction_cost(ae, batch)).epsilon(1e-14));

    SparseAutoencoder two;
    two.W = Matrix(2, 3);
    two.W(0, 0) = 2.0;
    two.b.assign(2, 0.0);
    two.b_star.assign(3, 0.0);
    const std::vector<std::vector<double>> zeros{{0.0, 0.0, 0.0}};
    const double j_only = reconstruction_cost(two, zeros);
    CHECK(total_cost(two, zeros, {0.05, 0.0, 1.0}) ==
          doctest::Approx(j_only + 4.0).epsilon(1e-14));

    const SparsityConfig sp{0.07, 2.5, 0.01};
    double w2 = 0.0;
    for (const double v : ae.W.data()) w2 += v * v;
    const double want = reconstruction_cost(ae, batch) +
                        sp.beta * kl_penalty(sp.target, mean_activations(ae, batch)) +
                        sp.weight_decay * w2;
    CHECK(total_cost(ae, batch, sp) == doctest::Approx(want).epsilon(1e-13));

    // J2 dominates J whenever the penalties are non-negative
    CHECK(total_cost(ae, batch, sp) >= reconstruction_cost(ae, batch));
}

TEST_CASE("cost_gradient: stationary points are exactly zero") {
    SparseAutoencoder flat;
    flat.W = Matrix(4, 3);
    flat.b.assign(4, 0.0);
    flat.b_star.assign(3, 0.0);
    const std::vector<std::vector<double>> zeros{{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};

    const AeGradients g0 = cost_gradient(flat, zeros, {0.05, 0.0, 0.0});
    for (const double v : g0.dW.data()) CHECK(v == 0.0);
    for (const double v : g0.db) CHECK(v == 0.0);
    for (const double v : g0.db_star) CHECK(v == 0.0);

    // with target 0.5 the KL term is also stationary at zero weights
    const AeGradients g1 = cost_gradient(flat, zeros, {0.5, 3.0, 0.0});
    for (const double v : g1.dW.data()) CHECK(v == 0.0);
    for (const double v : g1.db) CHECK(v == 0.0);
}

TEST_CASE("cost_gradient matches central finite differences") {
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        Rng rng(1000 + trial);
        const std::size_t n = 2 + rng.below(7);   // <= 8
        const std::size_t p = 2 + rng.below(11);  // <= 12
        const std::size_t count = 1 + rng.below(5);
        const SparseAutoencoder ae = random_ae(rng, n, p);
        const auto batch = random_batch(rng, count, n);
        const SparsityConfig sp{0.05 + 0.4 * rng.uniform01(), 3.0 * rng.uniform01(),
                                0.01 * rng.uniform01()};
        const AeGradients analytic = cost_gradient(ae, batch, sp);
        const AeGradients numeric = fd_gradient(ae, batch, sp);
        CHECK(max_rel_err(analytic, numeric) < 1e-6);
    }
}

TEST_CASE("cost_gradient with beta=lambda=0 matches the tied-MSE backprop oracle") {
    Rng rng(26);
    const SparseAutoencoder ae = random_ae(rng, 6, 5);
    const auto batch = random_batch(rng, 4, 6);
    const AeGradients got = cost_gradient(ae, batch, {0.05, 0.0, 0.0});
    const AeGradients want = mse_backprop_oracle(ae, batch);
    CHECK(max_rel_err(got, want) < 1e-12);
}

TEST_CASE("train_autoencoder: full-scale pretraining configuration runs to completion") {
    // 100 small scans x 1000 patches = 100,000 patches of size 125, hidden 150
    Rng rng(27);
    std::vector<std::vector<double>> patches = random_batch(rng, 100000, 125, -0.5, 0.5);

    AeTrainConfig cfg;
    cfg.hidden_size = 150;
    cfg.batch_size = 100;
    cfg.learning_rate = 0.05;
    cfg.epochs = 1;
    cfg.seed = 7;
    const std::span<const std::vector<double>> all(patches);
    const AeTrainResult result =
        train_autoencoder(all.subspan(0, 80000), all.subspan(80000, 10000), cfg,
                          {0.05, 3.0, 3e-3});
    CHECK(result.ae.input_size() == 125);
    CHECK(result.ae.hidden_size() == 150);
    CHECK(result.history.size() == 1);
    CHECK(std::isfinite(result.history[0].train_cost));
    CHECK(std::isfinite(result.history[0].val_cost));
}

TEST_CASE("train_autoencoder: one small step descends, reruns are bitwise equal") {
    Rng rng(28);
    const auto patches = random_batch(rng, 32, 6, -0.5, 0.5);
    const SparsityConfig sp{0.05, 1.0, 1e-3};

    AeTrainConfig cfg;
    cfg.hidden_size = 9;
    cfg.batch_size = 32;  // single full batch
    cfg.learning_rate = 0.01;
    cfg.seed = 11;

    cfg.epochs = 0;
    const SparseAutoencoder initial = train_autoencoder(patches, {}, cfg, sp).ae;
    const double before = total_cost(initial, patches, sp);

    cfg.epochs = 1;
    const SparseAutoencoder stepped = train_autoencoder(patches, {}, cfg, sp).ae;
    const double after = total_cost(stepped, patches, sp);
    CHECK(after <= before);

    const SparseAutoencoder again = train_autoencoder(patches, {}, cfg, sp).ae;
    CHECK(stepped.W.data() == again.W.data());
    CHECK(stepped.b == again.b);
    CHECK(stepped.b_star == again.b_star);
}

TEST_CASE("train_autoencoder: exploding rate reports the diverging epoch") {
    Rng rng(29);
    const auto patches = random_batch(rng, 16, 4, -1.0, 1.0);
    AeTrainConfig cfg;
    cfg.hidden_size = 6;
    cfg.batch_size = 8;
    cfg.learning_rate = 1e14;
    cfg.epochs = 25;  // the cost overflows to infinity within a few batches
    cfg.seed = 1;
    CHECK_THROWS_WITH_AS(
        static_cast<void>(train_autoencoder(patches, {}, cfg, {0.05, 3.0, 3e-3})),
        doctest::Contains("epoch"), DivergedError);
}

TEST_CASE("training with the sparsity penalty pulls activations toward the target") {
    Rng rng(30);
    const auto patches = random_batch(rng, 400, 12, -0.5, 0.5);

    AeTrainConfig cfg;
    cfg.hidden_size = 16;
    cfg.batch_size = 50;
    cfg.learning_rate = 0.3;
    cfg.epochs = 20;
    cfg.seed = 3;

    const double target = 0.05;
    const SparseAutoencoder with_penalty =
        train_autoencoder(patches, {}, cfg, {target, 3.0, 0.0}).ae;
    const SparseAutoencoder without =
        train_autoencoder(patches, {}, cfg, {target, 0.0, 0.0}).ae;

    auto mean_dev = [&](const SparseAutoencoder& ae) {
        double acc = 0.0;
        const std::vector<double> s_hat = mean_activations(ae, patches);
        for (const double s : s_hat) acc += std::abs(s - target);
        return acc / static_cast<double>(s_hat.size());
    };
    CHECK(mean_dev(with_penalty) < mean_dev(without));
}

TEST_CASE("extract_bases: 150 cubic filters, round trip, encode equivalence") {
    Rng rng(31);
    SparseAutoencoder wide = random_ae(rng, 125, 150, 0.2);
    const auto bases = extract_bases_3d(wide, 5, 5, 5);
    CHECK(bases.size() == 150);
    for (const auto& [filter, bias] : bases) {
        CHECK(filter.depth() == 5);
        CHECK(filter.height() == 5);
        CHECK(filter.width() == 5);
        (void)bias;
    }

    // reshape then flatten reproduces the original row
    for (const std::size_t j : {std::size_t{0}, std::size_t{77}, std::size_t{149}}) {
        const auto row = wide.W.row(j);
        CHECK(std::equal(row.begin(), row.end(), bases[j].first.data().begin()));
        CHECK(bases[j].second == wide.b[j]);
    }

    // per-unit encode equals sigmoid(sum filter .* patch + bias)
    const SparseAutoencoder small = random_ae(rng, 24, 7);
    const auto small_bases = extract_bases_3d(small, 2, 3, 4);
    const std::vector<double> patch = rng.uniform_vec(-1.0, 1.0, 24);
    const std::vector<double> h = encode(small, patch);
    for (std::size_t j = 0; j < 7; ++j) {
        double acc = small_bases[j].second;
        for (std::size_t i = 0; i < 24; ++i)
            acc += small_bases[j].first.data()[i] * patch[i];
        CHECK(h[j] == doctest::Approx(sigmoid(acc)).epsilon(1e-13));
    }

    const auto bases2d = extract_bases_2d(small, 4, 6);
    CHECK(bases2d.size() == 7);
    CHECK(bases2d[0].first.rows() == 4);
    CHECK(bases2d[0].first.cols() == 6);

    CHECK_THROWS_AS(extract_bases_3d(small, 2, 3, 5), DimensionError);
    CHECK_THROWS_AS(extract_bases_2d(small, 5, 5), DimensionError);
}

TEST_CASE("VXAE checkpoint round trip is bit-exact") {
    Rng rng(32);
    SparseAutoencoder ae = random_ae(rng, 10, 14);
    const auto dir = std::filesystem::temp_directory_path() / "voxelnet_test_ae";
    std::filesystem::create_directories(dir);
    const auto path = dir / "roundtrip.vxae";

    save_autoencoder(ae, path);
    const SparseAutoencoder back = load_autoencoder(path);
    CHECK(back.W.data() == ae.W.data());
    CHECK(back.b == ae.b);
    CHECK(back.b_star == ae.b_star);

    // the header names the error offset on corruption
    {
        std::ofstream bad(dir / "bad.vxae", std::ios::binary);
        bad << "NOPE";
    }
    CHECK_THROWS_WITH_AS(static_cast<void>(load_autoencoder(dir / "bad.vxae")),
                         doctest::Contains("bad magic"), FormatError);

    // truncation never yields a partial autoencoder
    std::filesystem::resize_file(path, 24);
    CHECK_THROWS_WITH_AS(static_cast<void>(load_autoencoder(path)),
                         doctest::Contains("truncated"), FormatError);
    std::filesystem::remove_all(dir);
}
