#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "voxelnet/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"voxelnet: two-stage volumetric classification workflow "
                 "(sparse-autoencoder pretraining + frozen 3D/2D convolutional "
                 "features + softmax classifier head)"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string mode_str, task_str, data_dir, out_dir;
    unsigned threads = 0;
    app.add_option("--config", config_path, "Run configuration file (key = value lines)");
    auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides config)");
    auto* mode_opt =
        app.add_option("--mode", mode_str, "Convolution mode: 3d|2d (overrides config)");
    auto* task_opt = app.add_option(
        "--task", task_str, "Classification task: 3way|ad-hc|ad-mci|hc-mci (overrides config)");
    auto* data_opt = app.add_option("--data-dir", data_dir, "Dataset directory (overrides config)");
    auto* out_opt = app.add_option("--out-dir", out_dir, "Output directory (overrides config)");
    auto* threads_opt = app.add_option(
        "--threads", threads, "Worker threads, 0 = all cores; VOXELNET_THREADS caps");

    auto* synth = app.add_subcommand("synth", "Generate the synthetic labeled dataset");
    auto* pretrain =
        app.add_subcommand("pretrain", "Train the sparse autoencoder on random patches");
    auto* featurize =
        app.add_subcommand("featurize", "Extract frozen convolutional features per scan");
    auto* train = app.add_subcommand("train", "Train the classifier head with early stopping");
    auto* eval = app.add_subcommand("eval", "Evaluate on the test split and write metrics");
    bool table = false;
    eval->add_flag("--table", table, "Render a text table of all completed accuracies");
    auto* export_slice =
        app.add_subcommand("export-slice", "Write one feature-map slice as a PGM image");
    std::size_t filter_index = 0, slice_index = 0;
    std::string subject;
    export_slice->add_option("--filter-index", filter_index, "Filter (basis) index")
        ->required();
    export_slice->add_option("--slice-index", slice_index, "Depth slice index")->required();
    export_slice->add_option("--subject", subject,
                             "Subject id (default: first manifest entry)");

    for (auto* sub : {synth, pretrain, featurize, train, eval, export_slice})
        sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        voxelnet::RunConfig cfg;
        if (!config_path.empty()) cfg = voxelnet::load_config(config_path);
        if (seed_opt->count() > 0) cfg.seed = seed;
        if (mode_opt->count() > 0) cfg.mode = voxelnet::parse_mode(mode_str);
        if (task_opt->count() > 0) cfg.task = voxelnet::parse_task(task_str);
        if (data_opt->count() > 0) cfg.data_dir = data_dir;
        if (out_opt->count() > 0) cfg.out_dir = out_dir;
        if (threads_opt->count() > 0) cfg.threads = threads;

        if (synth->parsed()) voxelnet::cmd_synth(cfg, std::cout);
        else if (pretrain->parsed()) voxelnet::cmd_pretrain(cfg, std::cout);
        else if (featurize->parsed()) voxelnet::cmd_featurize(cfg, std::cout);
        else if (train->parsed()) voxelnet::cmd_train(cfg, std::cout);
        else if (eval->parsed()) voxelnet::cmd_eval(cfg, table, std::cout);
        else if (export_slice->parsed())
            voxelnet::cmd_export_slice(cfg, filter_index, slice_index, subject, std::cout);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
