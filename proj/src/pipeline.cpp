#include "voxelnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <json.hpp>

#include "voxelnet/autoencoder.hpp"
#include "voxelnet/convnet.hpp"
#include "voxelnet/parallel.hpp"
#include "voxelnet/rng.hpp"

namespace voxelnet {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string mode_tag(const RunConfig& cfg) { return std::string(mode_name(cfg.mode)); }

std::string task_tag(const RunConfig& cfg) { return std::string(task_name(cfg.task)); }

std::vector<std::size_t> entries_with_split(const DatasetManifest& m, Split split) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < m.entries.size(); ++i)
        if (m.entries[i].split == split) idx.push_back(i);
    return idx;
}

Tensor3 load_normalized(const RunConfig& cfg, const ManifestEntry& entry) {
    return normalize_volume(load_volume(fs::path(cfg.data_dir) / entry.path));
}

ConvFeatureBank build_bank(const RunConfig& cfg, const SparseAutoencoder& ae,
                           const std::array<std::size_t, 3>& input_shape) {
    if (cfg.mode == ConvMode::ThreeD) {
        const std::size_t e = cfg.ae_patch_3d;
        return make_bank_3d(extract_bases_3d(ae, e, e, e),
                            {cfg.pool_3d, cfg.pool_3d, cfg.pool_3d}, input_shape);
    }
    const std::size_t e = cfg.ae_patch_2d;
    return make_bank_2d(extract_bases_2d(ae, e, e), {cfg.pool_2d, cfg.pool_2d},
                        input_shape);
}

std::array<std::size_t, 3> volume_shape(const Tensor3& v) {
    return {v.depth(), v.height(), v.width()};
}

// Manifest entries participating in cfg.task, with their relabeled classes.
std::vector<std::pair<std::size_t, int>> task_entries(const DatasetManifest& m,
                                                      Task task, Split split) {
    const auto binary = task_binary_labels(task);
    std::vector<std::pair<std::size_t, int>> out;
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        const auto& e = m.entries[i];
        if (e.split != split) continue;
        if (!binary) {
            out.emplace_back(i, e.label);
        } else if (e.label == binary->first) {
            out.emplace_back(i, 0);
        } else if (e.label == binary->second) {
            out.emplace_back(i, 1);
        }
    }
    return out;
}

Dataset load_feature_dataset(const RunConfig& cfg, const DatasetManifest& m,
                             Split split) {
    const auto selected = task_entries(m, cfg.task, split);
    if (selected.empty())
        throw ParameterError("no " + std::string(split_name(split)) +
                             " entries for task " + task_tag(cfg));

    std::vector<double> first =
        load_features(feature_path(cfg, m.entries[selected.front().first].subject_id));
    Dataset d;
    d.x = Matrix(selected.size(), first.size());
    d.y.resize(selected.size());
    std::copy(first.begin(), first.end(), d.x.row(0).begin());
    d.y[0] = selected.front().second;
    for (std::size_t i = 1; i < selected.size(); ++i) {
        const std::vector<double> v =
            load_features(feature_path(cfg, m.entries[selected[i].first].subject_id));
        if (v.size() != first.size())
            throw DimensionError("feature caches disagree in length; re-run featurize");
        std::copy(v.begin(), v.end(), d.x.row(i).begin());
        d.y[i] = selected[i].second;
    }
    return d;
}

ordered_json history_to_json(const std::vector<EpochStats>& history) {
    ordered_json arr = ordered_json::array();
    for (const auto& h : history)
        arr.push_back({{"epoch", h.epoch},
                       {"train_cost", h.train_cost},
                       {"val_error", h.val_error}});
    return arr;
}

void write_json(const ordered_json& j, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw FormatError("write failed: " + path.string());
}

}  // namespace

fs::path manifest_path(const RunConfig& cfg) {
    return fs::path(cfg.data_dir) / "manifest.csv";
}
fs::path autoencoder_path(const RunConfig& cfg) {
    return fs::path(cfg.out_dir) / ("ae_" + mode_tag(cfg) + ".vxae");
}
fs::path patch_cache_path(const RunConfig& cfg) {
    return fs::path(cfg.out_dir) / ("patches_" + mode_tag(cfg) + ".vxpc");
}
fs::path features_dir(const RunConfig& cfg) {
    return fs::path(cfg.out_dir) / ("features_" + mode_tag(cfg));
}
fs::path feature_path(const RunConfig& cfg, const std::string& subject_id) {
    return features_dir(cfg) / (subject_id + ".vxfv");
}
fs::path model_path(const RunConfig& cfg) {
    return fs::path(cfg.out_dir) / ("model_" + task_tag(cfg) + "_" + mode_tag(cfg) + ".vxmc");
}
fs::path history_path(const RunConfig& cfg) {
    return fs::path(cfg.out_dir) /
           ("history_" + task_tag(cfg) + "_" + mode_tag(cfg) + ".json");
}
fs::path metrics_path(const RunConfig& cfg) {
    return fs::path(cfg.out_dir) /
           ("metrics_" + task_tag(cfg) + "_" + mode_tag(cfg) + ".json");
}

std::optional<std::pair<int, int>> task_binary_labels(Task task) {
    switch (task) {
        case Task::ThreeWay: return std::nullopt;
        case Task::AdHc: return std::make_pair(kLabelAD, kLabelHC);
        case Task::AdMci: return std::make_pair(kLabelAD, kLabelMCI);
        case Task::HcMci: return std::make_pair(kLabelHC, kLabelMCI);
    }
    throw ParameterError("task_binary_labels: invalid task");
}

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", fraction * 100.0);
    return buf;
}

void cmd_synth(const RunConfig& cfg, std::ostream& log) {
    validate_config(cfg);

    SynthConfig synth;
    synth.shape = cfg.synth_shape;
    synth.noise_sd = cfg.synth_noise_sd;
    synth.count_per_class = cfg.synth_count_per_class;
    synth.seed = derive_seed(cfg.seed, "synth");
    std::vector<VolumeRecord> records = synth_generate(synth);

    const std::vector<Split> splits =
        split_by_fractions(records.size(), cfg.split_train, cfg.split_val,
                           cfg.split_test, derive_seed(cfg.seed, "split"));

    fs::create_directories(cfg.data_dir);
    DatasetManifest manifest;
    manifest.entries.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::string file = records[i].subject_id + ".vxv";
        save_volume(records[i].volume, fs::path(cfg.data_dir) / file);
        manifest.entries.push_back(
            {file, records[i].label, records[i].subject_id, splits[i]});
    }
    save_manifest(manifest, manifest_path(cfg));

    for (int label = 0; label < kNumClasses; ++label) {
        const auto count = static_cast<std::size_t>(
            std::count_if(records.begin(), records.end(),
                          [&](const VolumeRecord& r) { return r.label == label; }));
        log << "synth: class " << label_name(label) << ": " << count << " volumes\n";
    }
    log << "synth: wrote " << records.size() << " volumes and " << manifest_path(cfg)
        << "\n";
}

void cmd_pretrain(const RunConfig& cfg, std::ostream& log) {
    validate_config(cfg);
    const DatasetManifest manifest = load_manifest(manifest_path(cfg));

    std::vector<std::size_t> train_idx = entries_with_split(manifest, Split::Train);
    if (train_idx.empty()) throw ParameterError("pretrain: no training entries in manifest");
    if (train_idx.size() > cfg.ae_max_scans) train_idx.resize(cfg.ae_max_scans);

    std::vector<Tensor3> scans;
    scans.reserve(train_idx.size());
    for (const std::size_t i : train_idx)
        scans.push_back(load_normalized(cfg, manifest.entries[i]));

    std::vector<std::vector<double>> patches;
    if (cfg.mode == ConvMode::ThreeD) {
        const std::size_t e = cfg.ae_patch_3d;
        patches = extract_patches_3d(scans, cfg.ae_patches_per_scan, {e, e, e},
                                     derive_seed(cfg.seed, "patches-3d"));
    } else {
        const std::size_t e = cfg.ae_patch_2d;
        patches = extract_patches_2d(scans, cfg.ae_patches_per_scan, {e, e},
                                     derive_seed(cfg.seed, "patches-2d"));
    }
    if (patches.empty()) throw ParameterError("pretrain: no patches extracted");

    fs::create_directories(cfg.out_dir);
    save_patches(patches, patch_cache_path(cfg));

    // 80/10/10 split of the patch pool; val is monitored, test left untouched
    const std::vector<Split> psplit = split_by_fractions(
        patches.size(), 0.8, 0.1, 0.1, derive_seed(cfg.seed, "patch-split"));
    std::vector<std::vector<double>> train, val;
    for (std::size_t i = 0; i < patches.size(); ++i) {
        if (psplit[i] == Split::Train) train.push_back(std::move(patches[i]));
        else if (psplit[i] == Split::Val) val.push_back(std::move(patches[i]));
    }

    AeTrainConfig train_cfg;
    train_cfg.hidden_size = cfg.ae_hidden;
    train_cfg.batch_size = cfg.ae_batch_size;
    train_cfg.learning_rate = cfg.ae_learning_rate;
    train_cfg.epochs = cfg.ae_epochs;
    train_cfg.seed = derive_seed(cfg.seed, "ae-train");
    train_cfg.init_scale = cfg.ae_init_scale;
    SparsityConfig sparsity{cfg.ae_sparsity_target, cfg.ae_sparsity_weight,
                            cfg.ae_weight_decay};

    const AeTrainResult result = train_autoencoder(train, val, train_cfg, sparsity);
    save_autoencoder(result.ae, autoencoder_path(cfg));

    const double train_cost = reconstruction_cost(result.ae, train);
    log << "pretrain[" << mode_tag(cfg) << "]: " << train.size() << " train / "
        << val.size() << " val patches, " << cfg.ae_epochs << " epochs\n";
    log << "pretrain[" << mode_tag(cfg) << "]: final reconstruction cost: train "
        << train_cost;
    if (!val.empty()) log << ", val " << reconstruction_cost(result.ae, val);
    log << "\n";
    log << "pretrain[" << mode_tag(cfg) << "]: wrote " << autoencoder_path(cfg) << "\n";
}

void cmd_featurize(const RunConfig& cfg, std::ostream& log) {
    validate_config(cfg);
    const DatasetManifest manifest = load_manifest(manifest_path(cfg));
    if (manifest.entries.empty()) throw ParameterError("featurize: empty manifest");
    const SparseAutoencoder ae = load_autoencoder(autoencoder_path(cfg));

    const Tensor3 first = load_normalized(cfg, manifest.entries.front());
    const ConvFeatureBank bank = build_bank(cfg, ae, volume_shape(first));
    fs::create_directories(features_dir(cfg));

    const unsigned threads = effective_threads(cfg.threads);
    parallel_for(manifest.entries.size(), threads, [&](std::size_t i) {
        const auto& entry = manifest.entries[i];
        const Tensor3 scan = i == 0 ? first : load_normalized(cfg, entry);
        const std::vector<double> features =
            cfg.mode == ConvMode::ThreeD ? featurize3d(scan, bank) : featurize2d(scan, bank);
        save_features(features, feature_path(cfg, entry.subject_id));
    });

    log << "featurize[" << mode_tag(cfg) << "]: " << manifest.entries.size()
        << " volumes -> vectors of length " << feature_length(bank) << " in "
        << features_dir(cfg) << "\n";
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
    validate_config(cfg);
    const DatasetManifest manifest = load_manifest(manifest_path(cfg));
    const Dataset train = load_feature_dataset(cfg, manifest, Split::Train);
    const Dataset val = load_feature_dataset(cfg, manifest, Split::Val);

    const std::size_t classes = task_binary_labels(cfg.task) ? 2 : 3;
    MlpClassifier net = init_network(train.x.cols(), cfg.mlp_hidden, classes,
                                     derive_seed(cfg.seed, "mlp-init"));

    FitConfig fit_cfg;
    fit_cfg.learning_rate = cfg.mlp_learning_rate;
    fit_cfg.mu = cfg.mlp_momentum;
    fit_cfg.batch_size = cfg.mlp_batch_size;
    fit_cfg.max_epochs = cfg.mlp_epochs;
    fit_cfg.seed = derive_seed(cfg.seed, "mlp-train");
    fit_cfg.eval_every = cfg.mlp_eval_every;

    const FitResult fit = train_with_early_stopping(std::move(net), train, val, fit_cfg);

    fs::create_directories(cfg.out_dir);
    save_classifier(fit.best, model_path(cfg));

    ordered_json j;
    j["task"] = task_tag(cfg);
    j["mode"] = mode_tag(cfg);
    j["best_epoch"] = fit.best_epoch;
    j["best_val_error"] =
        std::isfinite(fit.best_val_error) ? ordered_json(fit.best_val_error) : ordered_json();
    j["history"] = history_to_json(fit.history);
    write_json(j, history_path(cfg));

    log << "train[" << task_tag(cfg) << "," << mode_tag(cfg) << "]: " << train.size()
        << " train / " << val.size() << " val examples, best epoch " << fit.best_epoch
        << ", val error " << fit.best_val_error << "\n";
    log << "train[" << task_tag(cfg) << "," << mode_tag(cfg) << "]: wrote "
        << model_path(cfg) << "\n";
}

namespace {

void render_table(const RunConfig& cfg, std::ostream& log) {
    static constexpr Task kTasks[] = {Task::ThreeWay, Task::AdHc, Task::AdMci,
                                      Task::HcMci};
    static constexpr const char* kRowNames[] = {"3-way", "AD vs. HC", "AD vs. MCI",
                                                "HC vs. MCI"};
    log << std::left << std::setw(16) << "Classification" << std::right << std::setw(14)
        << "Accuracy (2D)" << std::setw(15) << "Accuracy (3D)" << "\n";
    for (std::size_t row = 0; row < 4; ++row) {
        log << std::left << std::setw(16) << kRowNames[row];
        for (const ConvMode mode : {ConvMode::TwoD, ConvMode::ThreeD}) {
            RunConfig probe = cfg;
            probe.task = kTasks[row];
            probe.mode = mode;
            std::string cell = "-";
            const fs::path path = metrics_path(probe);
            if (fs::exists(path)) {
                std::ifstream in(path);
                ordered_json j;
                in >> j;
                cell = format_percent(j.at("accuracy").get<double>());
            }
            log << std::right << std::setw(mode == ConvMode::TwoD ? 14 : 15) << cell;
        }
        log << "\n";
    }
}

}  // namespace

void cmd_eval(const RunConfig& cfg, bool table, std::ostream& log) {
    validate_config(cfg);
    const DatasetManifest manifest = load_manifest(manifest_path(cfg));
    const Dataset test = load_feature_dataset(cfg, manifest, Split::Test);
    const MlpClassifier net = load_classifier(model_path(cfg));
    const Metrics metrics = evaluate(net, test);

    ordered_json j;
    j["task"] = task_tag(cfg);
    j["mode"] = mode_tag(cfg);
    j["accuracy"] = metrics.accuracy;
    j["confusion_matrix"] = metrics.confusion;
    j["history"] = ordered_json::array();
    if (fs::exists(history_path(cfg))) {
        std::ifstream in(history_path(cfg));
        ordered_json h;
        in >> h;
        j["history"] = h.at("history");
    }
    write_json(j, metrics_path(cfg));

    std::size_t correct = 0;
    for (std::size_t c = 0; c < metrics.confusion.size(); ++c)
        correct += metrics.confusion[c][c];
    log << "eval[" << task_tag(cfg) << "," << mode_tag(cfg) << "]: accuracy "
        << format_percent(metrics.accuracy) << " (" << correct << "/" << test.size()
        << ")\n";
    if (table) render_table(cfg, log);
}

void cmd_export_slice(const RunConfig& cfg, std::size_t filter_index,
                      std::size_t slice_index, const std::string& subject_id,
                      std::ostream& log) {
    validate_config(cfg);
    const DatasetManifest manifest = load_manifest(manifest_path(cfg));
    if (manifest.entries.empty()) throw ParameterError("export-slice: empty manifest");

    const ManifestEntry* entry = &manifest.entries.front();
    if (!subject_id.empty()) {
        const auto it = std::find_if(
            manifest.entries.begin(), manifest.entries.end(),
            [&](const ManifestEntry& e) { return e.subject_id == subject_id; });
        if (it == manifest.entries.end())
            throw ParameterError("export-slice: subject '" + subject_id +
                                 "' not in manifest");
        entry = &*it;
    }

    const SparseAutoencoder ae = load_autoencoder(autoencoder_path(cfg));
    const Tensor3 scan = load_normalized(cfg, *entry);
    const ConvFeatureBank bank = build_bank(cfg, ae, volume_shape(scan));

    fs::create_directories(cfg.out_dir);
    char name[128];
    std::snprintf(name, sizeof(name), "slice_%s_f%03zu_s%03zu_%s.pgm",
                  entry->subject_id.c_str(), filter_index, slice_index,
                  mode_tag(cfg).c_str());
    const fs::path out = fs::path(cfg.out_dir) / name;
    export_feature_slice(scan, bank, filter_index, slice_index, out);
    log << "export-slice: wrote " << out << "\n";
}

}  // namespace voxelnet
