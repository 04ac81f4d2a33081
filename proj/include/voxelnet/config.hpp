#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "voxelnet/convnet.hpp"

namespace voxelnet {

enum class Task { ThreeWay, AdHc, AdMci, HcMci };

std::string_view task_name(Task t);    // "3way" / "ad-hc" / "ad-mci" / "hc-mci"
Task parse_task(std::string_view name);

std::string_view mode_name(ConvMode m);  // "3d" / "2d"
ConvMode parse_mode(std::string_view name);

// Whole-workflow configuration. The on-disk form is flat UTF-8 "key = value"
// text: '#' lines are comments, unknown keys are rejected, and every field
// below is the documented default. Values shown by serialize_config parse
// back to the identical struct.
struct RunConfig {
    ConvMode mode = ConvMode::ThreeD;
    Task task = Task::ThreeWay;
    std::uint64_t seed = 42;
    std::string data_dir = "data";
    std::string out_dir = "out";
    unsigned threads = 0;  // 0 = all hardware threads; VOXELNET_THREADS caps

    std::array<std::size_t, 3> synth_shape{20, 24, 20};
    std::size_t synth_count_per_class = 100;
    double synth_noise_sd = 0.4;

    double split_train = 0.7;
    double split_val = 0.15;
    double split_test = 0.15;

    std::size_t ae_hidden = 32;
    std::size_t ae_patch_3d = 5;    // cubic patch edge for 3D pretraining
    std::size_t ae_patch_2d = 11;   // square patch edge for 2D pretraining
    std::size_t ae_patches_per_scan = 200;
    std::size_t ae_max_scans = 100;
    double ae_sparsity_target = 0.05;
    double ae_sparsity_weight = 3.0;
    double ae_weight_decay = 3e-3;
    std::size_t ae_batch_size = 100;
    double ae_learning_rate = 0.1;
    std::size_t ae_epochs = 30;
    double ae_init_scale = 1.0;

    std::size_t pool_3d = 5;   // cubic pooling window
    std::size_t pool_2d = 10;  // square pooling window

    std::size_t mlp_hidden = 800;
    double mlp_learning_rate = 0.01;
    double mlp_momentum = 0.9;
    std::size_t mlp_batch_size = 32;
    std::size_t mlp_epochs = 60;
    std::size_t mlp_eval_every = 1;
};

// Parses "key = value" text; rejects unknown keys and malformed values.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

// Canonical serialization: fixed key order, shortest round-trip number
// formatting. parse_config(serialize_config(cfg)) reproduces cfg exactly.
std::string serialize_config(const RunConfig& cfg);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

// Range checks shared by every command (fractions sum to 1, sparsity target
// in (0,1), positive rates, ...). Throws ParameterError on violation.
void validate_config(const RunConfig& cfg);

}  // namespace voxelnet
