#pragma once

// Experiment orchestration: persisted-artifact pipeline behind the command
// line tool. Every stage reads its inputs from files and writes its outputs
// to the run directory, so composing train -> fit -> derive -> score ->
// report reproduces `full` byte for byte.

#include "actprof/dataset.hpp"
#include "actprof/network.hpp"
#include "actprof/profiles.hpp"
#include "actprof/stats.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace actprof::cli {

struct experiment_config {
    std::filesystem::path train_images;
    std::filesystem::path train_labels;
    std::filesystem::path test_images;
    std::filesystem::path test_labels;
    std::filesystem::path out_dir = "out";

    std::string arch = "784:256:relu,256:64:relu,64:10:softmax";
    int epochs = 10;
    int batch_size = 64;
    double learning_rate = 0.05;

    std::uint64_t seed = 0;
    bool seed_set = false; // the seed is mandatory; no wall-clock default

    double c = 1.0;
    double floor_probability = 0.0; // 0 selects the default 0.5 / (|X| * |K|)
    bool paper_literal_std = false;
    bool per_class_norm = false;

    double rotation_step = 5.0;
    double rotation_max = 40.0;
    std::size_t random_count = 0; // 0 -> same size as the (possibly quick) train set

    bool quick = false; // 600 train / 100 test images per class, 3 epochs
    int threads = 0;    // 0 -> hardware concurrency
};

/// Flat key=value config file; keys use the same names as the CLI flags.
experiment_config load_config_file(const std::filesystem::path& path);
void apply_config_line(experiment_config& cfg, const std::string& key,
                       const std::string& value);

/// Canonical serialization (sorted keys) used for the config digest and the
/// manifest snapshot.
std::string canonical_config(const experiment_config& cfg);
std::string config_digest(const experiment_config& cfg);

/// Header lines ("tool version, config digest") prepended to every artifact.
std::vector<std::string> artifact_header(const experiment_config& cfg);

/// Effective hyperparameters after quick-mode adjustment.
int effective_epochs(const experiment_config& cfg);

/// Verify all dataset paths resolve; throws data_error naming the first
/// missing path.
void check_paths(const experiment_config& cfg);

/// Load train/test data, applying the stratified quick subsample when
/// requested (first 600/100 images of each class in file order).
data::labeled_dataset load_train_set(const experiment_config& cfg);
data::labeled_dataset load_test_set(const experiment_config& cfg);

data::labeled_dataset stratified_subset(const data::labeled_dataset& ds,
                                        std::size_t per_class, int num_classes);

// Conventional artifact names inside the run directory.
namespace artifact {
inline constexpr const char* model = "model.txt";
inline constexpr const char* train_metrics = "train_metrics.csv";
inline constexpr const char* profiles = "profiles.txt";
inline constexpr const char* random_images = "random_images.idx";
inline constexpr const char* rotation_images = "rotation_images.idx";
inline constexpr const char* rotation_labels = "rotation_labels.idx";
inline constexpr const char* rotation_outcomes = "rotation_outcomes.csv";
inline constexpr const char* manifest = "manifest.txt";
std::string records(data::category cat);
std::string summary(data::category cat);
std::string compare(data::category against);
} // namespace artifact

// Pipeline stages (the `train`, `fit`, `derive`, `score`, `report`, `full`
// subcommands call straight into these).
void cmd_train(const experiment_config& cfg);
void cmd_fit(const experiment_config& cfg);
void cmd_derive(const experiment_config& cfg);
void cmd_score(const experiment_config& cfg);
void cmd_report(const experiment_config& cfg);
void cmd_full(const experiment_config& cfg);

// Record file round-trip (used by report, tests and the acceptance suite).
void write_records_csv(const std::filesystem::path& path,
                       std::span<const prof::distance_record> records,
                       std::span<const std::string> header_lines);
std::vector<prof::distance_record> read_records_csv(const std::filesystem::path& path);

} // namespace actprof::cli
