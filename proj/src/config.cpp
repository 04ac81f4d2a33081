#include "voxelnet/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "voxelnet/error.hpp"

namespace voxelnet {

std::string_view task_name(Task t) {
    switch (t) {
        case Task::ThreeWay: return "3way";
        case Task::AdHc: return "ad-hc";
        case Task::AdMci: return "ad-mci";
        case Task::HcMci: return "hc-mci";
    }
    throw ParameterError("task_name: invalid task");
}

Task parse_task(std::string_view name) {
    if (name == "3way") return Task::ThreeWay;
    if (name == "ad-hc") return Task::AdHc;
    if (name == "ad-mci") return Task::AdMci;
    if (name == "hc-mci") return Task::HcMci;
    throw ParameterError("unknown task '" + std::string(name) +
                         "', expected 3way|ad-hc|ad-mci|hc-mci");
}

std::string_view mode_name(ConvMode m) {
    return m == ConvMode::ThreeD ? "3d" : "2d";
}

ConvMode parse_mode(std::string_view name) {
    if (name == "3d") return ConvMode::ThreeD;
    if (name == "2d") return ConvMode::TwoD;
    throw ParameterError("unknown mode '" + std::string(name) + "', expected 3d|2d");
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw ParameterError("config: bad integer for " + std::string(key) + ": '" +
                             std::string(v) + "'");
    return out;
}

double parse_f64(std::string_view key, std::string_view v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out))
        throw ParameterError("config: bad number for " + std::string(key) + ": '" +
                             std::string(v) + "'");
    return out;
}

std::array<std::size_t, 3> parse_shape(std::string_view key, std::string_view v) {
    std::array<std::size_t, 3> out{};
    std::size_t field = 0, start = 0;
    for (std::size_t i = 0; i <= v.size(); ++i) {
        if (i == v.size() || v[i] == 'x') {
            if (field >= 3) throw ParameterError("config: bad shape for " + std::string(key));
            out[field++] = parse_u64(key, trim(v.substr(start, i - start)));
            start = i + 1;
        }
    }
    if (field != 3)
        throw ParameterError("config: shape for " + std::string(key) +
                             " must be DxHxW, got '" + std::string(v) + "'");
    return out;
}

std::string format_f64(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        std::string_view line = trim(text.substr(pos, eol - pos));
        pos = eol + 1;
        ++lineno;
        if (line.empty() || line.front() == '#') continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParameterError("config line " + std::to_string(lineno) +
                                 ": expected key = value");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));

        if (key == "mode") cfg.mode = parse_mode(value);
        else if (key == "task") cfg.task = parse_task(value);
        else if (key == "seed") cfg.seed = parse_u64(key, value);
        else if (key == "data_dir") cfg.data_dir = std::string(value);
        else if (key == "out_dir") cfg.out_dir = std::string(value);
        else if (key == "threads") cfg.threads = static_cast<unsigned>(parse_u64(key, value));
        else if (key == "synth_shape") cfg.synth_shape = parse_shape(key, value);
        else if (key == "synth_count_per_class")
            cfg.synth_count_per_class = parse_u64(key, value);
        else if (key == "synth_noise_sd") cfg.synth_noise_sd = parse_f64(key, value);
        else if (key == "split_train") cfg.split_train = parse_f64(key, value);
        else if (key == "split_val") cfg.split_val = parse_f64(key, value);
        else if (key == "split_test") cfg.split_test = parse_f64(key, value);
        else if (key == "ae_hidden") cfg.ae_hidden = parse_u64(key, value);
        else if (key == "ae_patch_3d") cfg.ae_patch_3d = parse_u64(key, value);
        else if (key == "ae_patch_2d") cfg.ae_patch_2d = parse_u64(key, value);
        else if (key == "ae_patches_per_scan")
            cfg.ae_patches_per_scan = parse_u64(key, value);
        else if (key == "ae_max_scans") cfg.ae_max_scans = parse_u64(key, value);
        else if (key == "ae_sparsity_target")
            cfg.ae_sparsity_target = parse_f64(key, value);
        else if (key == "ae_sparsity_weight")
            cfg.ae_sparsity_weight = parse_f64(key, value);
        else if (key == "ae_weight_decay") cfg.ae_weight_decay = parse_f64(key, value);
        else if (key == "ae_batch_size") cfg.ae_batch_size = parse_u64(key, value);
        else if (key == "ae_learning_rate") cfg.ae_learning_rate = parse_f64(key, value);
        else if (key == "ae_epochs") cfg.ae_epochs = parse_u64(key, value);
        else if (key == "ae_init_scale") cfg.ae_init_scale = parse_f64(key, value);
        else if (key == "pool_3d") cfg.pool_3d = parse_u64(key, value);
        else if (key == "pool_2d") cfg.pool_2d = parse_u64(key, value);
        else if (key == "mlp_hidden") cfg.mlp_hidden = parse_u64(key, value);
        else if (key == "mlp_learning_rate") cfg.mlp_learning_rate = parse_f64(key, value);
        else if (key == "mlp_momentum") cfg.mlp_momentum = parse_f64(key, value);
        else if (key == "mlp_batch_size") cfg.mlp_batch_size = parse_u64(key, value);
        else if (key == "mlp_epochs") cfg.mlp_epochs = parse_u64(key, value);
        else if (key == "mlp_eval_every") cfg.mlp_eval_every = parse_u64(key, value);
        else
            throw ParameterError("config line " + std::to_string(lineno) +
                                 ": unknown key '" + std::string(key) + "'");
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open for reading: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "mode = " << mode_name(cfg.mode) << "\n";
    out << "task = " << task_name(cfg.task) << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "data_dir = " << cfg.data_dir << "\n";
    out << "out_dir = " << cfg.out_dir << "\n";
    out << "threads = " << cfg.threads << "\n";
    out << "synth_shape = " << cfg.synth_shape[0] << "x" << cfg.synth_shape[1] << "x"
        << cfg.synth_shape[2] << "\n";
    out << "synth_count_per_class = " << cfg.synth_count_per_class << "\n";
    out << "synth_noise_sd = " << format_f64(cfg.synth_noise_sd) << "\n";
    out << "split_train = " << format_f64(cfg.split_train) << "\n";
    out << "split_val = " << format_f64(cfg.split_val) << "\n";
    out << "split_test = " << format_f64(cfg.split_test) << "\n";
    out << "ae_hidden = " << cfg.ae_hidden << "\n";
    out << "ae_patch_3d = " << cfg.ae_patch_3d << "\n";
    out << "ae_patch_2d = " << cfg.ae_patch_2d << "\n";
    out << "ae_patches_per_scan = " << cfg.ae_patches_per_scan << "\n";
    out << "ae_max_scans = " << cfg.ae_max_scans << "\n";
    out << "ae_sparsity_target = " << format_f64(cfg.ae_sparsity_target) << "\n";
    out << "ae_sparsity_weight = " << format_f64(cfg.ae_sparsity_weight) << "\n";
    out << "ae_weight_decay = " << format_f64(cfg.ae_weight_decay) << "\n";
    out << "ae_batch_size = " << cfg.ae_batch_size << "\n";
    out << "ae_learning_rate = " << format_f64(cfg.ae_learning_rate) << "\n";
    out << "ae_epochs = " << cfg.ae_epochs << "\n";
    out << "ae_init_scale = " << format_f64(cfg.ae_init_scale) << "\n";
    out << "pool_3d = " << cfg.pool_3d << "\n";
    out << "pool_2d = " << cfg.pool_2d << "\n";
    out << "mlp_hidden = " << cfg.mlp_hidden << "\n";
    out << "mlp_learning_rate = " << format_f64(cfg.mlp_learning_rate) << "\n";
    out << "mlp_momentum = " << format_f64(cfg.mlp_momentum) << "\n";
    out << "mlp_batch_size = " << cfg.mlp_batch_size << "\n";
    out << "mlp_epochs = " << cfg.mlp_epochs << "\n";
    out << "mlp_eval_every = " << cfg.mlp_eval_every << "\n";
    return out.str();
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out << serialize_config(cfg);
    if (!out) throw FormatError("write failed: " + path.string());
}

void validate_config(const RunConfig& cfg) {
    if (cfg.split_train < 0.0 || cfg.split_val < 0.0 || cfg.split_test < 0.0 ||
        std::abs(cfg.split_train + cfg.split_val + cfg.split_test - 1.0) > 1e-9)
        throw ParameterError("config: split fractions must be non-negative and sum to 1");
    if (!(cfg.ae_sparsity_target > 0.0 && cfg.ae_sparsity_target < 1.0))
        throw ParameterError("config: ae_sparsity_target must lie in (0,1)");
    if (cfg.ae_sparsity_weight < 0.0 || cfg.ae_weight_decay < 0.0)
        throw ParameterError("config: ae penalty coefficients must be non-negative");
    if (!(cfg.ae_learning_rate > 0.0) || !(cfg.mlp_learning_rate > 0.0))
        throw ParameterError("config: learning rates must be positive");
    if (!(cfg.ae_init_scale > 0.0))
        throw ParameterError("config: ae_init_scale must be positive");
    if (!(cfg.mlp_momentum >= 0.0 && cfg.mlp_momentum < 1.0))
        throw ParameterError("config: mlp_momentum must lie in [0,1)");
    if (cfg.ae_hidden == 0 || cfg.mlp_hidden == 0)
        throw ParameterError("config: hidden sizes must be positive");
    if (cfg.ae_patch_3d == 0 || cfg.ae_patch_2d == 0 || cfg.pool_3d == 0 ||
        cfg.pool_2d == 0)
        throw ParameterError("config: patch and pool sizes must be positive");
    if (cfg.ae_batch_size == 0 || cfg.mlp_batch_size == 0 || cfg.mlp_eval_every == 0)
        throw ParameterError("config: batch sizes and eval cadence must be positive");
}

}  // namespace voxelnet
