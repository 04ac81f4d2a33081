#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "voxelnet/classifier.hpp"
#include "voxelnet/config.hpp"
#include "voxelnet/dataio.hpp"

namespace voxelnet {

// Output locations under cfg.out_dir / cfg.data_dir. Every command derives
// its file names from here so reruns overwrite deterministically.
std::filesystem::path manifest_path(const RunConfig& cfg);
std::filesystem::path autoencoder_path(const RunConfig& cfg);
std::filesystem::path patch_cache_path(const RunConfig& cfg);
std::filesystem::path features_dir(const RunConfig& cfg);
std::filesystem::path feature_path(const RunConfig& cfg, const std::string& subject_id);
std::filesystem::path model_path(const RunConfig& cfg);
std::filesystem::path history_path(const RunConfig& cfg);
std::filesystem::path metrics_path(const RunConfig& cfg);

// The two labels of a binary task in relabeling order (first-named class
// becomes 0); empty for the 3-way task.
std::optional<std::pair<int, int>> task_binary_labels(Task task);

// Generates the synthetic dataset, assigns splits, writes volumes plus the
// manifest, and prints per-class counts.
void cmd_synth(const RunConfig& cfg, std::ostream& log);

// Extracts patches from training scans, trains the sparse autoencoder,
// writes the patch cache and VXAE checkpoint, and prints final train/val
// reconstruction costs.
void cmd_pretrain(const RunConfig& cfg, std::ostream& log);

// Builds the frozen feature bank from the checkpoint and writes one VXFV
// feature cache per manifest entry.
void cmd_featurize(const RunConfig& cfg, std::ostream& log);

// Trains the classifier head on cached features for cfg.task with early
// stopping; writes the VXMC checkpoint and the training-history JSON.
void cmd_train(const RunConfig& cfg, std::ostream& log);

// Evaluates the trained classifier on the test split, writes the metrics
// JSON, and prints the accuracy. With table=true also renders a text table of
// all completed task/mode accuracies.
void cmd_eval(const RunConfig& cfg, bool table, std::ostream& log);

// Writes one slice of one feature map as a PGM image; subject_id empty means
// the first manifest entry.
void cmd_export_slice(const RunConfig& cfg, std::size_t filter_index,
                      std::size_t slice_index, const std::string& subject_id,
                      std::ostream& log);

// "93.33%" formatting used in reports (two decimals).
std::string format_percent(double fraction);

}  // namespace voxelnet
